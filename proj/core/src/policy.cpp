#include "sensor/policy.hpp"

#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

std::vector<double> critic_target(const std::vector<double>& rewards,
                                  const std::vector<double>& values, double gamma, int k) {
  const int h = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != h) {
    throw ConfigError("critic_target: rewards and values must have equal length");
  }
  if (k < 1 || k >= h) {
    throw ConfigError("critic_target: need 1 <= K < H, got K=" + std::to_string(k) +
                      " H=" + std::to_string(h));
  }
  std::vector<double> targets(static_cast<std::size_t>(h - k));
  for (int t = 0; t + k < h; ++t) {
    double acc = 0.0;
    double g = 1.0;
    for (int i = 0; i < k; ++i) {
      acc += g * rewards[static_cast<std::size_t>(t + i)];
      g *= gamma;
    }
    acc += g * values[static_cast<std::size_t>(t + k)];
    targets[static_cast<std::size_t>(t)] = acc;
  }
  return targets;
}

Tensor PolicyHeads::GaussHead::sample(Tape& t, const Tensor& code, Rng& rng) const {
  Tensor raw = net.forward(t, code);
  Tensor mean_part = slice_last(t, raw, 0, act_dim);
  Tensor log_std = clamp(t, slice_last(t, raw, act_dim, 2 * act_dim), kLogStdMin, kLogStdMax);
  std::vector<double> nv(static_cast<std::size_t>(code.dim(0)) * act_dim);
  for (auto& v : nv) v = rng.normal();
  Tensor noise = Tensor::leaf({code.dim(0), act_dim}, std::move(nv), false);
  return tanh(t, gaussian_sample(t, mean_part, log_std, noise));
}

Tensor PolicyHeads::GaussHead::mode_action(Tape& t, const Tensor& code) const {
  Tensor raw = net.forward(t, code);
  return tanh(t, slice_last(t, raw, 0, act_dim));
}

PolicyHeads::PolicyHeads(const WorldModel& model, const PolicyConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg_.mode == ActorMode::single_actor) {
    pi_all_.net = Mlp({model.feat_dim(), cfg_.head_hidden, 8}, rng);
    pi_all_.act_dim = 4;
  } else {
    g_z_ = Mlp({model.motor_feat_dim(), cfg_.z_code}, rng);
    pi_z_.net = Mlp({cfg_.z_code, cfg_.head_hidden, 2}, rng);
    pi_z_.act_dim = 1;
    if (cfg_.mode == ActorMode::separate) {
      g_c_ = Mlp({model.sensor_feat_dim(), cfg_.c_code}, rng);
      pi_c_.net = Mlp({cfg_.c_code, cfg_.head_hidden, 6}, rng);
      pi_c_.act_dim = 3;
    }
  }
  v_ = Mlp({model.feat_dim(), cfg_.v_hidden, cfg_.v_hidden, 1}, rng);
}

Tensor PolicyHeads::policy_action(Tape& t, const WorldModel& model, const ModelState& state,
                                  Rng& rng) const {
  if (cfg_.mode == ActorMode::single_actor) {
    return pi_all_.sample(t, model.feat(t, state), rng);
  }
  Tensor az = pi_z_.sample(t, tanh(t, g_z_.forward(t, model.motor_feat(t, state))), rng);
  if (cfg_.mode == ActorMode::frozen_sensor) {
    return concat(t, {az, Tensor::zeros({state.batch, 3})});
  }
  Tensor ac = pi_c_.sample(t, tanh(t, g_c_.forward(t, model.sensor_feat(t, state))), rng);
  return concat(t, {az, ac});
}

EnvAction PolicyHeads::act(Tape& t, const WorldModel& model, const ModelState& state,
                           bool stochastic, Rng& rng) const {
  Tensor flat;
  if (stochastic) {
    flat = policy_action(t, model, state, rng);
  } else if (cfg_.mode == ActorMode::single_actor) {
    flat = pi_all_.mode_action(t, model.feat(t, state));
  } else {
    Tensor az = pi_z_.mode_action(t, tanh(t, g_z_.forward(t, model.motor_feat(t, state))));
    Tensor ac = cfg_.mode == ActorMode::frozen_sensor
                    ? Tensor::zeros({state.batch, 3})
                    : pi_c_.mode_action(t, tanh(t, g_c_.forward(t, model.sensor_feat(t, state))));
    flat = concat(t, {az, ac});
  }
  if (flat.dim(0) != 1) throw FatalError("policy: act() expects a single-row state");
  const auto& v = flat.value();
  return {v[0], {v[1], v[2], v[3]}};
}

Tensor PolicyHeads::value(Tape& t, const Tensor& feat) const { return v_.forward(t, feat); }

NamedParams PolicyHeads::actor_params() const {
  NamedParams p;
  if (cfg_.mode == ActorMode::single_actor) {
    pi_all_.net.collect("policy.all", p);
    return p;
  }
  g_z_.collect("enc.gz", p);
  pi_z_.net.collect("policy.z", p);
  if (cfg_.mode == ActorMode::separate) {
    g_c_.collect("enc.gc", p);
    pi_c_.net.collect("policy.c", p);
  }
  return p;
}

NamedParams PolicyHeads::critic_params() const {
  NamedParams p;
  v_.collect("critic.v", p);
  return p;
}

void PolicyHeads::collect(NamedParams& out) const {
  out.merge(actor_params());
  out.merge(critic_params());
}

ActorCriticStats update_actor_critic(Tape& t, const WorldModel& model, PolicyHeads& heads,
                                     const DiscriminatorEnsemble& disc,
                                     const ImaginedTrajectory& traj, double eps,
                                     AdamW& actor_opt, AdamW& critic_opt) {
  const int h = static_cast<int>(traj.actions.size());
  if (h < 1 || traj.states.size() != static_cast<std::size_t>(h) + 1) {
    throw ConfigError("update_actor_critic: malformed imagined trajectory");
  }
  const int b = traj.states[0].batch;
  const double gamma = heads.config().gamma;
  int k = heads.config().k;
  if (k < 0) k = h > 1 ? h - 1 : 1;
  if (k > h) throw ConfigError("update_actor_critic: K exceeds imagination horizon");

  // rewards log f_eps(s_t, a_t) for t = 0..h-1, one ensemble pass
  std::vector<Tensor> pair_rows;
  pair_rows.reserve(static_cast<std::size_t>(h));
  for (int s = 0; s < h; ++s) {
    pair_rows.push_back(concat(t, {model.feat(t, traj.states[static_cast<std::size_t>(s)]),
                                   traj.actions[static_cast<std::size_t>(s)]}));
  }
  Tensor pairs = concat_rows(t, std::span<const Tensor>(pair_rows.data(), pair_rows.size()));
  Tensor log_r = disc.log_reward(t, pairs, eps);  // [h*b, 1]

  // values V(s_t) for t = 0..h, one pass
  std::vector<Tensor> feat_rows;
  feat_rows.reserve(traj.states.size());
  for (const auto& st : traj.states) feat_rows.push_back(model.feat(t, st));
  Tensor feats_all = concat_rows(t, std::span<const Tensor>(feat_rows.data(), feat_rows.size()));
  Tensor values_all = heads.value(t, feats_all);  // [(h+1)*b, 1]

  std::vector<Tensor> rewards, values;
  for (int s = 0; s < h; ++s) rewards.push_back(slice_rows(t, log_r, s * b, (s + 1) * b));
  for (int s = 0; s <= h; ++s) values.push_back(slice_rows(t, values_all, s * b, (s + 1) * b));

  // v_t^K with the window truncated near the end of the trajectory
  std::vector<Tensor> targets;
  targets.reserve(static_cast<std::size_t>(h));
  for (int s = 0; s < h; ++s) {
    const int kt = std::min(k, h - s);
    double g = 1.0;
    Tensor acc;
    for (int i = 0; i < kt; ++i) {
      Tensor term = scale(t, rewards[static_cast<std::size_t>(s + i)], g);
      acc = acc.defined() ? add(t, acc, term) : term;
      g *= gamma;
    }
    acc = add(t, acc, scale(t, values[static_cast<std::size_t>(s + kt)], g));
    targets.push_back(acc);
  }

  Tensor target_all = concat_rows(t, std::span<const Tensor>(targets.data(), targets.size()));
  Tensor actor_loss = scale(t, sum(t, target_all), -1.0 / (h * b));

  ActorCriticStats stats;
  stats.actor_loss = actor_loss.item();
  {
    double m = 0.0;
    for (double v : log_r.value()) m += v;
    stats.mean_log_reward = m / log_r.size();
    m = 0.0;
    for (double v : values_all.value()) m += v;
    stats.mean_value = m / values_all.size();
  }
  if (!std::isfinite(stats.actor_loss)) {
    throw FatalError("update_actor_critic: non-finite actor loss");
  }

  actor_opt.zero_grad();
  t.backward(actor_loss);
  actor_opt.step();

  // critic regression toward the frozen targets on detached states
  Tape ct;
  Tensor feats_detached = detach(feats_all);
  Tensor pred = heads.value(ct, slice_rows(ct, feats_detached, 0, h * b));
  Tensor gap = sub(ct, pred, detach(target_all));
  Tensor critic_loss = mean(ct, mul(ct, gap, gap));
  stats.critic_loss = critic_loss.item();
  if (!std::isfinite(stats.critic_loss)) {
    throw FatalError("update_actor_critic: non-finite critic loss");
  }
  critic_opt.zero_grad();
  ct.backward(critic_loss);
  critic_opt.step();
  return stats;
}

}  // namespace sensor
