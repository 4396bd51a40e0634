#include "sensor/divergence.hpp"

#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

constexpr double kHalfLog2 = 0.34657359027997264;

void check_normalized(std::span<const double> p, const std::string& what) {
  double s = 0.0;
  for (double v : p) {
    if (v < 0.0) throw ConfigError("occupancy: negative probability in " + what);
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) {
    throw ConfigError("occupancy: " + what + " sums to " + std::to_string(s) + ", not 1");
  }
}

void check_rows_normalized(const std::vector<double>& table, int rows, int cols,
                           const std::string& what) {
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double v = table[static_cast<std::size_t>(r) * cols + c];
      if (v < 0.0) throw ConfigError("occupancy: negative probability in " + what);
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) {
      throw ConfigError("occupancy: row " + std::to_string(r) + " of " + what + " sums to " +
                        std::to_string(s) + ", not 1");
    }
  }
}

}  // namespace

FDivergence jensen_shannon() {
  FDivergence fd;
  fd.name = "jensen-shannon";
  fd.f = [](double t) {
    if (t <= 0.0) return kHalfLog2;
    return 0.5 * (t * std::log(2.0 * t / (1.0 + t)) + std::log(2.0 / (1.0 + t)));
  };
  fd.f_at_zero = kHalfLog2;
  fd.f_prime_inf = kHalfLog2;
  return fd;
}

double f_divergence(std::span<const double> p, std::span<const double> q, const FDivergence& fd) {
  if (p.size() != q.size()) throw ConfigError("f_divergence: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] > 0.0) {
      acc += q[i] * fd.f(p[i] / q[i]);
    } else if (p[i] > 0.0) {
      acc += fd.f_prime_inf * p[i];
    }
  }
  return acc;
}

std::vector<double> FactoredOccupancy::agent_joint() const {
  std::vector<double> out(static_cast<std::size_t>(nz) * naz * nc * nac, 0.0);
  for (int z = 0; z < nz; ++z) {
    for (int az = 0; az < naz; ++az) {
      for (int c = 0; c < nc; ++c) {
        for (int ac = 0; ac < nac; ++ac) {
          out[((static_cast<std::size_t>(z) * naz + az) * nc + c) * nac + ac] =
              agent_z[static_cast<std::size_t>(z)] *
              agent_az_given_z[static_cast<std::size_t>(z) * naz + az] *
              channel[static_cast<std::size_t>(z) * nc + c] *
              agent_ac_given_c[static_cast<std::size_t>(c) * nac + ac];
        }
      }
    }
  }
  return out;
}

std::vector<double> FactoredOccupancy::expert_joint() const {
  std::vector<double> out(static_cast<std::size_t>(nz) * naz * nc * nac, 0.0);
  for (int z = 0; z < nz; ++z) {
    for (int az = 0; az < naz; ++az) {
      for (int c = 0; c < nc; ++c) {
        for (int ac = 0; ac < nac; ++ac) {
          out[((static_cast<std::size_t>(z) * naz + az) * nc + c) * nac + ac] =
              expert_z[static_cast<std::size_t>(z)] *
              expert_az_given_z[static_cast<std::size_t>(z) * naz + az] *
              channel[static_cast<std::size_t>(z) * nc + c] *
              expert_ac_given_c[static_cast<std::size_t>(c) * nac + ac];
        }
      }
    }
  }
  return out;
}

std::vector<double> FactoredOccupancy::agent_motor_marginal() const {
  std::vector<double> out(static_cast<std::size_t>(nz) * naz, 0.0);
  for (int z = 0; z < nz; ++z) {
    for (int az = 0; az < naz; ++az) {
      out[static_cast<std::size_t>(z) * naz + az] =
          agent_z[static_cast<std::size_t>(z)] *
          agent_az_given_z[static_cast<std::size_t>(z) * naz + az];
    }
  }
  return out;
}

std::vector<double> FactoredOccupancy::expert_motor_marginal() const {
  std::vector<double> out(static_cast<std::size_t>(nz) * naz, 0.0);
  for (int z = 0; z < nz; ++z) {
    for (int az = 0; az < naz; ++az) {
      out[static_cast<std::size_t>(z) * naz + az] =
          expert_z[static_cast<std::size_t>(z)] *
          expert_az_given_z[static_cast<std::size_t>(z) * naz + az];
    }
  }
  return out;
}

std::vector<double> FactoredOccupancy::agent_sensor_marginal() const {
  std::vector<double> out(static_cast<std::size_t>(nc) * nac, 0.0);
  for (int z = 0; z < nz; ++z) {
    for (int c = 0; c < nc; ++c) {
      const double pc = agent_z[static_cast<std::size_t>(z)] * channel[static_cast<std::size_t>(z) * nc + c];
      for (int ac = 0; ac < nac; ++ac) {
        out[static_cast<std::size_t>(c) * nac + ac] +=
            pc * agent_ac_given_c[static_cast<std::size_t>(c) * nac + ac];
      }
    }
  }
  return out;
}

std::vector<double> FactoredOccupancy::expert_sensor_marginal() const {
  std::vector<double> out(static_cast<std::size_t>(nc) * nac, 0.0);
  for (int z = 0; z < nz; ++z) {
    for (int c = 0; c < nc; ++c) {
      const double pc = expert_z[static_cast<std::size_t>(z)] * channel[static_cast<std::size_t>(z) * nc + c];
      for (int ac = 0; ac < nac; ++ac) {
        out[static_cast<std::size_t>(c) * nac + ac] +=
            pc * expert_ac_given_c[static_cast<std::size_t>(c) * nac + ac];
      }
    }
  }
  return out;
}

Prop1Report check_proposition1(const FactoredOccupancy& inst, const FDivergence& fd) {
  if (inst.nz < 1 || inst.naz < 1 || inst.nc < 1 || inst.nac < 1) {
    throw ConfigError("occupancy: empty support");
  }
  check_normalized(std::span<const double>(inst.expert_z), "expert z marginal");
  check_normalized(std::span<const double>(inst.agent_z), "agent z marginal");
  check_rows_normalized(inst.channel, inst.nz, inst.nc, "channel p(c|z)");
  check_rows_normalized(inst.expert_az_given_z, inst.nz, inst.naz, "expert motor policy");
  check_rows_normalized(inst.agent_az_given_z, inst.nz, inst.naz, "agent motor policy");
  check_rows_normalized(inst.expert_ac_given_c, inst.nc, inst.nac, "expert sensor policy");
  check_rows_normalized(inst.agent_ac_given_c, inst.nc, inst.nac, "agent sensor policy");

  // structural assumption: the expert sensor policy is the point mass at the
  // zero action (index 0)
  for (int c = 0; c < inst.nc; ++c) {
    if (std::abs(inst.expert_ac_given_c[static_cast<std::size_t>(c) * inst.nac] - 1.0) > 1e-12) {
      throw ConfigError(
          "occupancy: structural assumption violated: expert sensor policy must be the point "
          "mass at the zero action");
    }
  }
  // pi_c(a_c | c) <= 1 holds for any row-stochastic table; checked anyway
  // since the proof's middle step relies on it
  for (double v : inst.agent_ac_given_c) {
    if (v > 1.0 + 1e-12) {
      throw ConfigError("occupancy: structural assumption violated: agent sensor policy value > 1");
    }
  }

  const auto agent_joint = inst.agent_joint();
  const auto expert_joint = inst.expert_joint();
  const auto agent_motor = inst.agent_motor_marginal();
  const auto expert_motor = inst.expert_motor_marginal();
  const auto agent_sensor = inst.agent_sensor_marginal();
  const auto expert_sensor = inst.expert_sensor_marginal();

  // expectation-form quantities over the expert support, as the proof's chain
  // writes them
  double chain_a = 0.0;    // E_expert[ f(r_z * pi_c(0|c)) ]
  double on_support = 0.0; // sum over expert support of q f(p/q)
  double b_motor = 0.0;    // E_expert[ f(r_z) ]
  double b_sensor = 0.0;   // E_expert[ f(r_c) ]
  for (int z = 0; z < inst.nz; ++z) {
    for (int az = 0; az < inst.naz; ++az) {
      const double qe = expert_motor[static_cast<std::size_t>(z) * inst.naz + az];
      if (qe <= 0.0) continue;
      const double rz = agent_motor[static_cast<std::size_t>(z) * inst.naz + az] / qe;
      b_motor += qe * fd.f(rz);
      for (int c = 0; c < inst.nc; ++c) {
        const double w = qe * inst.channel[static_cast<std::size_t>(z) * inst.nc + c];
        if (w <= 0.0) continue;
        const double pic0 = inst.agent_ac_given_c[static_cast<std::size_t>(c) * inst.nac];
        chain_a += w * fd.f(rz * pic0);
      }
    }
  }
  for (std::size_t i = 0; i < expert_joint.size(); ++i) {
    if (expert_joint[i] > 0.0) on_support += expert_joint[i] * fd.f(agent_joint[i] / expert_joint[i]);
  }
  for (int c = 0; c < inst.nc; ++c) {
    const double qe = expert_sensor[static_cast<std::size_t>(c) * inst.nac];  // a_c = 0 column
    if (qe <= 0.0) continue;
    const double rc = agent_sensor[static_cast<std::size_t>(c) * inst.nac] / qe;
    b_sensor += qe * fd.f(rc);
  }

  // structural assumption used between the proof's middle steps: the motor
  // and sensor expectation terms coincide
  if (std::abs(b_motor - b_sensor) > kSymmetryTolerance) {
    throw ConfigError(
        "occupancy: structural assumption violated: z/c marginal symmetry (motor term " +
        std::to_string(b_motor) + " vs sensor term " + std::to_string(b_sensor) + ")");
  }

  Prop1Report rep;
  rep.lhs = f_divergence(std::span<const double>(agent_joint), std::span<const double>(expert_joint), fd);
  rep.motor_divergence =
      f_divergence(std::span<const double>(agent_motor), std::span<const double>(expert_motor), fd);
  rep.sensor_divergence =
      f_divergence(std::span<const double>(agent_sensor), std::span<const double>(expert_sensor), fd);
  rep.rhs = 0.5 * (rep.motor_divergence + rep.sensor_divergence);
  rep.holds = rep.lhs <= rep.rhs + kProp1Tolerance;

  const double tol = kProp1Tolerance;
  rep.steps.push_back({"eq8-10 factorized expectation matches the on-support joint term", chain_a,
                       on_support, std::abs(chain_a - on_support) <= 1e-9});
  rep.steps.push_back({"eq11 drop pi_c(a_c|c) <= 1", chain_a, b_motor, chain_a <= b_motor + tol});
  rep.steps.push_back({"eq12 z/c interchange", b_motor, b_sensor,
                       std::abs(b_motor - b_sensor) <= kSymmetryTolerance});
  rep.steps.push_back({"eq13 average of the two bounds", chain_a, 0.5 * (b_motor + b_sensor),
                       chain_a <= 0.5 * (b_motor + b_sensor) + tol});
  rep.steps.push_back({"eq14-15 expectation terms vs marginal divergences", 0.5 * (b_motor + b_sensor),
                       rep.rhs, 0.5 * (b_motor + b_sensor) <= rep.rhs + tol});
  rep.steps.push_back({"proposition lhs <= rhs", rep.lhs, rep.rhs, rep.holds});
  return rep;
}

namespace {

std::vector<double> random_simplex(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  double s = 0.0;
  for (auto& x : v) {
    x = 0.05 + rng.uniform();  // bounded away from zero for full support
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

FactoredOccupancy random_mirror_instance(Rng& rng, int max_support) {
  if (max_support < 2) throw ConfigError("mirror instance: max_support must be >= 2");
  FactoredOccupancy inst;
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_support)));
  const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_support - 1)));
  inst.nz = inst.nc = n;
  inst.naz = inst.nac = k;

  // deterministic bijection channel c = sigma(z)
  std::vector<int> sigma(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(sigma[static_cast<std::size_t>(i)], sigma[static_cast<std::size_t>(j)]);
  }
  inst.channel.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int z = 0; z < n; ++z) inst.channel[static_cast<std::size_t>(z) * n + sigma[static_cast<std::size_t>(z)]] = 1.0;

  // the bijection channel carries any v/w marginal ratio to the sensor side
  // unchanged, so the mirror symmetry below holds for independent marginals
  inst.expert_z = random_simplex(rng, n);
  inst.agent_z = random_simplex(rng, n);

  // expert point-mass policies: motor at a random action per state, sensor at 0
  inst.expert_az_given_z.assign(static_cast<std::size_t>(n) * k, 0.0);
  std::vector<int> m0(static_cast<std::size_t>(n));
  for (int z = 0; z < n; ++z) {
    m0[static_cast<std::size_t>(z)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    inst.expert_az_given_z[static_cast<std::size_t>(z) * k + m0[static_cast<std::size_t>(z)]] = 1.0;
  }
  inst.expert_ac_given_c.assign(static_cast<std::size_t>(n) * k, 0.0);
  for (int c = 0; c < n; ++c) inst.expert_ac_given_c[static_cast<std::size_t>(c) * k] = 1.0;

  // agent policies: random rows, with the sensor zero-action probability at
  // c = sigma(z) mirroring the motor probability of the expert action at z
  inst.agent_az_given_z.assign(static_cast<std::size_t>(n) * k, 0.0);
  inst.agent_ac_given_c.assign(static_cast<std::size_t>(n) * k, 0.0);
  for (int z = 0; z < n; ++z) {
    const auto row = random_simplex(rng, k);
    for (int a = 0; a < k; ++a) inst.agent_az_given_z[static_cast<std::size_t>(z) * k + a] = row[static_cast<std::size_t>(a)];
    const double beta = row[static_cast<std::size_t>(m0[static_cast<std::size_t>(z)])];
    const int c = sigma[static_cast<std::size_t>(z)];
    inst.agent_ac_given_c[static_cast<std::size_t>(c) * k] = beta;
    // spread the rest uniformly over the nonzero sensor actions
    for (int a = 1; a < k; ++a) {
      inst.agent_ac_given_c[static_cast<std::size_t>(c) * k + a] = (1.0 - beta) / (k - 1);
    }
  }
  return inst;
}

FactoredOccupancy identical_mirror_instance(Rng& rng, int max_support) {
  FactoredOccupancy inst = random_mirror_instance(rng, max_support);
  inst.agent_z = inst.expert_z;
  inst.agent_az_given_z = inst.expert_az_given_z;
  inst.agent_ac_given_c = inst.expert_ac_given_c;
  return inst;
}

}  // namespace sensor
