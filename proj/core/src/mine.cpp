#include "sensor/mine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

Tensor gather_rows(const std::vector<double>& src, int dim, const std::vector<int>& idx) {
  std::vector<double> out(idx.size() * static_cast<std::size_t>(dim));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* s = src.data() + static_cast<std::size_t>(idx[r]) * dim;
    std::copy(s, s + dim, out.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(dim)));
  }
  return Tensor::leaf({static_cast<int>(idx.size()), dim}, std::move(out), false);
}

}  // namespace

double estimate_mi_rows(const std::vector<double>& a, int dim_a, const std::vector<double>& e,
                        int dim_e, int rows, const MineConfig& cfg) {
  if (rows < 200) {
    throw FatalError("mine: need at least 200 sample pairs, got " + std::to_string(rows));
  }
  Rng rng(cfg.seed);
  Mlp net({dim_a + dim_e, cfg.hidden, cfg.hidden, 1}, rng);
  NamedParams params;
  net.collect("mine", params);
  AdamW opt(params.tensors(), {cfg.lr, 0.9, 0.999, 1e-8, 0.0, 100.0});

  double ema = -1.0;
  const int batch = std::min(cfg.batch, rows);
  for (int step = 0; step < cfg.train_steps; ++step) {
    std::vector<int> ji(static_cast<std::size_t>(batch)), mi(static_cast<std::size_t>(batch)),
        mj(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
      ji[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(rows)));
      mi[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(rows)));
      mj[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(rows)));
    }
    Tape t;
    Tensor joint = concat(t, {gather_rows(a, dim_a, ji), gather_rows(e, dim_e, ji)});
    Tensor marg = concat(t, {gather_rows(a, dim_a, mi), gather_rows(e, dim_e, mj)});
    Tensor t_joint = net.forward(t, joint);
    Tensor t_marg = clamp(t, net.forward(t, marg), -20.0, 20.0);
    Tensor mean_exp = mean(t, exp(t, t_marg));
    if (ema < 0.0) ema = mean_exp.item();
    ema = cfg.ema_decay * ema + (1.0 - cfg.ema_decay) * mean_exp.item();
    // d/dx [E[e^T]/ema] reproduces the bias-corrected MINE gradient
    Tensor loss = add(t, scale(t, mean(t, t_joint), -1.0), scale(t, mean_exp, 1.0 / ema));
    opt.zero_grad();
    t.backward(loss);
    opt.step();
  }

  // full-set estimate with a fixed shuffled pairing for the marginal term
  std::vector<int> all(static_cast<std::size_t>(rows));
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> shuffled = all;
  for (int i = rows - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(shuffled[static_cast<std::size_t>(i)], shuffled[static_cast<std::size_t>(j)]);
  }
  Tape t(false);
  Tensor joint = concat(t, {gather_rows(a, dim_a, all), gather_rows(e, dim_e, all)});
  Tensor marg = concat(t, {gather_rows(a, dim_a, all), gather_rows(e, dim_e, shuffled)});
  const double e_joint = mean(t, net.forward(t, joint)).item();
  const double e_marg = mean(t, exp(t, clamp(t, net.forward(t, marg), -20.0, 20.0))).item();
  const double estimate = e_joint - std::log(e_marg);
  return std::max(0.0, estimate);
}

double estimate_mi(const PairedTrajectorySet& pairs, const MineConfig& cfg) {
  return estimate_mi_rows(pairs.a, pairs.dim_a, pairs.e, pairs.dim_e, pairs.rows(), cfg);
}

std::vector<std::vector<MotorState>> sample_motor_trajectories(int count, int length,
                                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<MotorState>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    std::vector<MotorState> traj;
    traj.reserve(static_cast<std::size_t>(length));
    const double mag = rng.uniform(3.141592653589793 - 0.1, 3.141592653589793);
    MotorState s{rng.uniform() < 0.5 ? mag : -mag, rng.uniform(-0.5, 0.5)};
    for (int t = 0; t < length; ++t) {
      const double u = rng.uniform(-1.0, 1.0);
      s = motor_substep(motor_substep(s, u), u);  // matches the env action repeat of 2
      traj.push_back(s);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

PairedTrajectorySet render_paired_set(const std::vector<std::vector<MotorState>>& trajectories,
                                      const SensorState& probe_view, const SensorState& expert_view,
                                      int resolution, Lookat lookat) {
  PairedTrajectorySet set;
  set.count = static_cast<int>(trajectories.size());
  set.length = set.count > 0 ? static_cast<int>(trajectories[0].size()) : 0;
  set.dim_a = set.dim_e = resolution * resolution;
  set.a.reserve(static_cast<std::size_t>(set.rows()) * set.dim_a);
  set.e.reserve(static_cast<std::size_t>(set.rows()) * set.dim_e);
  for (const auto& traj : trajectories) {
    for (const auto& s : traj) {
      const auto scene = pendulum_scene(s.theta, lookat);
      Image ia = render(scene, probe_view, resolution);
      Image ie = render(scene, expert_view, resolution);
      set.a.insert(set.a.end(), ia.pixels.begin(), ia.pixels.end());
      set.e.insert(set.e.end(), ie.pixels.begin(), ie.pixels.end());
    }
  }
  return set;
}

double viewpoint_distance(const SensorState& a, const SensorState& b) {
  const double dd = (a.d - b.d) / 10.0;
  const double da = (a.a - b.a) / 180.0;
  const double de = (a.e - b.e) / 90.0;
  return std::sqrt(dd * dd + da * da + de * de);
}

MiSweepResult mi_viewpoint_sweep(const std::vector<SensorState>& viewpoints,
                                 const SensorState& expert_view, int resolution, int count,
                                 int length, const MineConfig& cfg) {
  if (viewpoints.size() < 3) throw ConfigError("mi sweep: need at least 3 viewpoints");
  const auto trajectories = sample_motor_trajectories(count, length, cfg.seed);
  MiSweepResult res;
  std::vector<double> dist, mi;
  for (const auto& vp : viewpoints) {
    auto pairs = render_paired_set(trajectories, vp, expert_view, resolution);
    MineConfig mc = cfg;
    mc.seed = cfg.seed + 0x9e37;  // same net seed per viewpoint, distinct from data seed
    MiSweepRow row;
    row.viewpoint = vp;
    row.mi = estimate_mi(pairs, mc);
    row.distance = viewpoint_distance(vp, expert_view);
    dist.push_back(row.distance);
    mi.push_back(row.mi);
    res.rows.push_back(row);
  }
  res.spearman_distance_mi = spearman(dist, mi);
  return res;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman: need matched inputs, n >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace sensor
