#pragma once

#include "sensor/env.hpp"
#include "sensor/nn.hpp"

namespace sensor {

/// Viewpoint-paired image sets: row i of `a` and row i of `e` are renders of
/// the identical motor state under the probe viewpoint and the expert
/// viewpoint respectively.
struct PairedTrajectorySet {
  int count = 0;   // trajectories
  int length = 0;  // steps per trajectory
  int dim_a = 0, dim_e = 0;
  std::vector<double> a;  // [count*length, dim_a]
  std::vector<double> e;  // [count*length, dim_e]

  int rows() const { return count * length; }
};

struct MineConfig {
  int hidden = 64;
  int train_steps = 1500;
  int batch = 128;
  double lr = 1e-3;
  double ema_decay = 0.99;  // moving average for the log-term gradient
  std::uint64_t seed = 0;
};

/// Donsker-Varadhan lower bound trained with the standard moving-average
/// bias correction; the returned estimate (nats) is computed on the full
/// sample set and floored at zero. Needs at least 200 pairs.
double estimate_mi(const PairedTrajectorySet& pairs, const MineConfig& cfg);

/// MI estimate on generic paired rows (used by the closed-form Gaussian
/// sanity check).
double estimate_mi_rows(const std::vector<double>& a, int dim_a, const std::vector<double>& e,
                        int dim_e, int rows, const MineConfig& cfg);

/// Random-motor-policy trajectories (sensor frozen), shared across viewpoints
/// so the paired sets differ only in the probe camera.
std::vector<std::vector<MotorState>> sample_motor_trajectories(int count, int length,
                                                               std::uint64_t seed);

PairedTrajectorySet render_paired_set(const std::vector<std::vector<MotorState>>& trajectories,
                                      const SensorState& probe_view, const SensorState& expert_view,
                                      int resolution, Lookat lookat = Lookat::pivot);

/// Euclidean distance in normalized (d/10, a/180, e/90) coordinates.
double viewpoint_distance(const SensorState& a, const SensorState& b);

struct MiSweepRow {
  SensorState viewpoint;
  double mi = 0.0;
  double distance = 0.0;  // to the expert viewpoint
};

struct MiSweepResult {
  std::vector<MiSweepRow> rows;
  double spearman_distance_mi = 0.0;
};

MiSweepResult mi_viewpoint_sweep(const std::vector<SensorState>& viewpoints,
                                 const SensorState& expert_view, int resolution, int count,
                                 int length, const MineConfig& cfg);

/// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sensor
