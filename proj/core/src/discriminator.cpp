#include "sensor/discriminator.hpp"

#include <algorithm>
#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

double epsilon_reward(std::span<const double> probs, double eps) {
  if (probs.empty()) throw ConfigError("epsilon_reward: need at least one probability");
  double mu = 0.0;
  for (double p : probs) mu += p;
  mu /= static_cast<double>(probs.size());
  double var = 0.0;
  for (double p : probs) var += (p - mu) * (p - mu);
  var /= static_cast<double>(probs.size());
  const double f = mu + eps * std::sqrt(var);
  return std::clamp(f, kRewardClampLo, kRewardClampHi);
}

double epsilon_schedule(double eps0, int epoch, int total_epochs) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
    throw ConfigError("epsilon_schedule: epoch " + std::to_string(epoch) + " outside 0.." +
                      std::to_string(total_epochs - 1));
  }
  if (total_epochs == 1) return eps0;
  const double frac = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return eps0 * (1.0 - 2.0 * frac);
}

DiscriminatorEnsemble::DiscriminatorEnsemble(int input_dim, const EnsembleConfig& cfg, Rng& rng)
    : input_dim_(input_dim), cfg_(cfg) {
  if (cfg_.n1 < 1 || cfg_.n2 < 1 || cfg_.n2 > cfg_.n1) {
    throw ConfigError("ensemble: need 1 <= n2 <= n1, got n1=" + std::to_string(cfg_.n1) +
                      " n2=" + std::to_string(cfg_.n2));
  }
  AdamW::Config oc;
  oc.lr = cfg_.lr;
  oc.weight_decay = cfg_.weight_decay;
  oc.clip_norm = cfg_.clip_norm;
  for (int i = 0; i < cfg_.n1; ++i) {
    members_.emplace_back(std::vector<int>{input_dim, cfg_.hidden, cfg_.hidden, 1}, rng);
    NamedParams p;
    members_.back().collect("m", p);
    opts_.emplace_back(p.tensors(), oc);
  }
}

Tensor DiscriminatorEnsemble::log_reward(Tape& t, const Tensor& state_action, double eps) const {
  std::vector<Tensor> probs;
  probs.reserve(members_.size());
  for (const auto& m : members_) probs.push_back(sigmoid(t, m.forward(t, state_action)));
  Tensor p = concat(t, std::span<const Tensor>(probs.data(), probs.size()));  // [rows, n1]
  Tensor avg = Tensor::full({cfg_.n1, 1}, 1.0 / cfg_.n1);
  Tensor mu = matmul(t, p, avg);                      // [rows, 1]
  Tensor ex2 = matmul(t, mul(t, p, p), avg);          // E[p^2]
  Tensor var = clamp(t, sub(t, ex2, mul(t, mu, mu)), 0.0, 1.0);
  Tensor sigma = sqrt(t, add_scalar(t, var, 1e-12));
  Tensor f = clamp(t, add(t, mu, scale(t, sigma, eps)), kRewardClampLo, kRewardClampHi);
  return log(t, f);
}

std::vector<double> DiscriminatorEnsemble::member_probs(const std::vector<double>& row) const {
  if (static_cast<int>(row.size()) != input_dim_) {
    throw ConfigError("ensemble: row size " + std::to_string(row.size()) + " != input dim " +
                      std::to_string(input_dim_));
  }
  Tape t(false);
  Tensor x = Tensor::leaf({1, input_dim_}, row, false);
  std::vector<double> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(sigmoid(t, m.forward(t, x)).item());
  return out;
}

DiscriminatorEnsemble::UpdateStats DiscriminatorEnsemble::update(const Tensor& agent_rows,
                                                                 const Tensor& expert_rows,
                                                                 Rng& rng) {
  if (agent_rows.dim(0) < 1 || expert_rows.dim(0) < 1) {
    throw ConfigError("ensemble: update needs non-empty agent and expert batches");
  }
  if (agent_rows.dim(1) != input_dim_ || expert_rows.dim(1) != input_dim_) {
    throw ConfigError("ensemble: update row width does not match input dim");
  }
  // uniform draw of n2 distinct member indices
  std::vector<int> idx(static_cast<std::size_t>(cfg_.n1));
  for (int i = 0; i < cfg_.n1; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < cfg_.n2; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg_.n1 - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(cfg_.n2));
  std::sort(idx.begin(), idx.end());

  UpdateStats stats;
  stats.selected = idx;
  for (int i : idx) {
    Tape t;
    Tensor le = members_[static_cast<std::size_t>(i)].forward(t, expert_rows);
    Tensor la = members_[static_cast<std::size_t>(i)].forward(t, agent_rows);
    // -log D(expert) - log(1 - D(agent))
    Tensor loss = add(t, mean(t, softplus(t, scale(t, le, -1.0))), mean(t, softplus(t, la)));
    stats.bce_loss += loss.item();
    double pe = 0.0, pa = 0.0;
    for (double v : le.value()) pe += 1.0 / (1.0 + std::exp(-v));
    for (double v : la.value()) pa += 1.0 / (1.0 + std::exp(-v));
    stats.expert_prob += pe / le.size();
    stats.agent_prob += pa / la.size();
    opts_[static_cast<std::size_t>(i)].zero_grad();
    t.backward(loss);
    opts_[static_cast<std::size_t>(i)].step();
  }
  stats.bce_loss /= cfg_.n2;
  stats.expert_prob /= cfg_.n2;
  stats.agent_prob /= cfg_.n2;
  return stats;
}

void DiscriminatorEnsemble::collect(NamedParams& out) const {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    members_[i].collect("disc." + std::to_string(i), out);
  }
}

}  // namespace sensor
