#pragma once

#include "sensor/discriminator.hpp"
#include "sensor/env.hpp"
#include "sensor/rssm.hpp"

namespace sensor {

enum class ActorMode { separate, single_actor, frozen_sensor };

struct PolicyConfig {
  int z_code = 24;
  int c_code = 8;
  int head_hidden = 32;
  int v_hidden = 64;
  double gamma = 0.99;
  int k = -1;  // critic target horizon; -1 means imagination horizon - 1
  ActorMode mode = ActorMode::separate;
  double actor_lr = 8e-5;
  double critic_lr = 8e-5;
  double weight_decay = 0.0;
  double clip_norm = 100.0;
};

/// n-step value target v_t^K = sum_{tau=t}^{t+K-1} gamma^{tau-t} r_tau +
/// gamma^K v_{t+K}, for t = 0..H-K-1.
std::vector<double> critic_target(const std::vector<double>& rewards,
                                  const std::vector<double>& values, double gamma, int k);

/// State-splitting encoders, motor/sensor policies (tanh-squashed Gaussians),
/// and the value head.
class PolicyHeads {
 public:
  PolicyHeads(const WorldModel& model, const PolicyConfig& cfg, Rng& rng);

  ActorMode mode() const { return cfg_.mode; }
  const PolicyConfig& config() const { return cfg_; }

  /// Full 4-dim action batch for imagination rollouts; reparameterized and
  /// differentiable through encoders and heads.
  Tensor policy_action(Tape& t, const WorldModel& model, const ModelState& state, Rng& rng) const;

  /// Single-environment action. stochastic=false takes tanh(mean).
  EnvAction act(Tape& t, const WorldModel& model, const ModelState& state, bool stochastic,
                Rng& rng) const;

  Tensor value(Tape& t, const Tensor& feat) const;  // [rows, 1]

  NamedParams actor_params() const;
  NamedParams critic_params() const;
  void collect(NamedParams& out) const;

 private:
  struct GaussHead {
    Mlp net;  // code -> 2 * act_dim
    int act_dim = 0;

    Tensor sample(Tape& t, const Tensor& code, Rng& rng) const;
    Tensor mode_action(Tape& t, const Tensor& code) const;
  };

  PolicyConfig cfg_;
  Mlp g_z_, g_c_;           // separate / frozen_sensor modes
  GaussHead pi_z_, pi_c_;   // separate / frozen_sensor (pi_c only in separate)
  GaussHead pi_all_;        // single_actor mode
  Mlp v_;
};

struct ActorCriticStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_log_reward = 0.0;
  double mean_value = 0.0;
};

/// Actor and critic updates on an imagined trajectory (Algorithm steps: get
/// rewards and values, form v^K targets, minimize the critic gap, maximize
/// the summed targets through rewards and dynamics). Discriminator and critic
/// parameters receive no optimizer step from the actor pass; the critic pass
/// runs on detached states and targets.
ActorCriticStats update_actor_critic(Tape& t, const WorldModel& model, PolicyHeads& heads,
                                     const DiscriminatorEnsemble& disc,
                                     const ImaginedTrajectory& traj, double eps,
                                     AdamW& actor_opt, AdamW& critic_opt);

}  // namespace sensor
