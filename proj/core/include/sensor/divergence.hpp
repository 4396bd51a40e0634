#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sensor/rng.hpp"

namespace sensor {

/// f-divergence generator: convex f with f(1) = 0, plus its boundary
/// behaviour f(0+) and f'(inf) = lim f(t)/t for the singular conventions
/// q=0/p>0 and p=0/q>0.
struct FDivergence {
  std::string name;
  std::function<double(double)> f;
  double f_at_zero = 0.0;
  double f_prime_inf = 0.0;
};

/// Jensen-Shannon generator in the 1/2-convention, so
/// D_f(P||Q) = 0.5 KL(P||M) + 0.5 KL(Q||M) with M = (P+Q)/2.
FDivergence jensen_shannon();

/// Definition-based D_f(p||q) = sum q f(p/q), with q=0 cells contributing
/// f'(inf) * p and p=0 cells contributing f(0) * q.
double f_divergence(std::span<const double> p, std::span<const double> q, const FDivergence& fd);

/// Factored occupancy pair over small finite supports, following the
/// factorization rho(z, a_z, c, a_c) = rho(z) pi(a_z|z) p(c|z) pi(a_c|c)
/// with a channel p(c|z) shared by agent and expert. Sensor action index 0
/// is the zero action; the expert sensor policy must be its point mass.
struct FactoredOccupancy {
  int nz = 0, naz = 0, nc = 0, nac = 0;
  std::vector<double> channel;            // [nz, nc] shared p(c|z), rows sum to 1
  std::vector<double> expert_z;           // [nz]
  std::vector<double> expert_az_given_z;  // [nz, naz]
  std::vector<double> expert_ac_given_c;  // [nc, nac]; must be delta at index 0
  std::vector<double> agent_z;            // [nz]
  std::vector<double> agent_az_given_z;   // [nz, naz]
  std::vector<double> agent_ac_given_c;   // [nc, nac]

  std::vector<double> agent_joint() const;   // [nz*naz*nc*nac]
  std::vector<double> expert_joint() const;
  std::vector<double> agent_motor_marginal() const;   // over (z, a_z)
  std::vector<double> expert_motor_marginal() const;
  std::vector<double> agent_sensor_marginal() const;  // over (c, a_c)
  std::vector<double> expert_sensor_marginal() const;
};

struct StepCheck {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  bool ok = false;
};

struct Prop1Report {
  double lhs = 0.0;  // D_f over the full (z, a_z, c, a_c) joints
  double rhs = 0.0;  // 0.5 * (motor divergence + sensor divergence)
  double motor_divergence = 0.0;
  double sensor_divergence = 0.0;
  bool holds = false;  // lhs <= rhs + 1e-10
  std::vector<StepCheck> steps;
};

/// Validates the structural assumptions (normalization, expert sensor point
/// mass, agent sensor policy values <= 1, the z/c-marginal symmetry the
/// proof uses between its middle steps) and throws ConfigError naming the
/// violated assumption otherwise. On valid instances, computes both sides by
/// exact summation and a verdict per intermediate step.
Prop1Report check_proposition1(const FactoredOccupancy& inst, const FDivergence& fd);

/// Random instance satisfying every structural assumption exactly: the
/// channel is a random bijection, expert policies are point masses, and the
/// agent's sensor policy mirrors its motor policy across the bijection.
FactoredOccupancy random_mirror_instance(Rng& rng, int max_support);

/// Mirror instance with the agent distributions equal to the expert's.
FactoredOccupancy identical_mirror_instance(Rng& rng, int max_support);

inline constexpr double kProp1Tolerance = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-9;

}  // namespace sensor
