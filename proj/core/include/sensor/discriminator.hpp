#pragma once

#include <span>

#include "sensor/nn.hpp"

namespace sensor {

struct EnsembleConfig {
  int n1 = 5;  // ensemble size
  int n2 = 3;  // members trained per update, drawn without replacement
  double eps0 = 0.1;
  int hidden = 64;
  double lr = 8e-5;
  double weight_decay = 0.0;
  double clip_norm = 100.0;
};

// Reward probabilities are clamped away from {0, 1} so log-rewards stay finite.
inline constexpr double kRewardClampLo = 1e-5;
inline constexpr double kRewardClampHi = 1.0 - 1e-5;

/// f_eps = mu + eps * sigma over member probabilities (population sigma),
/// clamped to [1e-5, 1-1e-5].
double epsilon_reward(std::span<const double> probs, double eps);

/// Linear from +eps0 at epoch 0 to -eps0 at epoch total_epochs-1.
double epsilon_schedule(double eps0, int epoch, int total_epochs);

/// N1 independently parameterized MLP classifiers of (latent feature, action)
/// rows. A random N2-subset takes one gradient step per update; the reward
/// reduces all N1 member probabilities with f_eps.
class DiscriminatorEnsemble {
 public:
  DiscriminatorEnsemble(int input_dim, const EnsembleConfig& cfg, Rng& rng);

  int n1() const { return cfg_.n1; }
  int n2() const { return cfg_.n2; }
  int input_dim() const { return input_dim_; }
  double eps0() const { return cfg_.eps0; }

  /// log f_eps over all members, [rows, 1]; differentiable w.r.t. the input
  /// rows (member parameters receive no optimizer step here).
  Tensor log_reward(Tape& t, const Tensor& state_action, double eps) const;

  /// Member probabilities for one input row (evaluation helper).
  std::vector<double> member_probs(const std::vector<double>& row) const;

  struct UpdateStats {
    double bce_loss = 0.0;       // mean over updated members
    double expert_prob = 0.0;    // mean D on expert rows
    double agent_prob = 0.0;     // mean D on agent rows
    std::vector<int> selected;
  };

  /// GAIL step on a random N2-subset: expert rows labeled 1, agent rows 0.
  /// Inputs must be detached [n, input_dim] tensors.
  UpdateStats update(const Tensor& agent_rows, const Tensor& expert_rows, Rng& rng);

  void collect(NamedParams& out) const;  // disc.{i}.*

 private:
  int input_dim_;
  EnsembleConfig cfg_;
  std::vector<Mlp> members_;
  std::vector<AdamW> opts_;
};

}  // namespace sensor
