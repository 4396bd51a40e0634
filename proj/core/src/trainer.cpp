#include "sensor/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "sensor/bc.hpp"
#include "sensor/checkpoint.hpp"
#include "sensor/errors.hpp"
#include "sensor/expert.hpp"

namespace sensor {

Variant variant_from_string(const std::string& name) {
  if (name == "sensor") return Variant::sensor;
  if (name == "vmail") return Variant::vmail;
  if (name == "vmail_as") return Variant::vmail_as;
  if (name == "bc") return Variant::bc;
  if (name == "sensor_decoupled") return Variant::sensor_decoupled;
  throw ConfigError("unknown variant '" + name +
                    "' (expected sensor, vmail, vmail_as, bc, sensor_decoupled)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::sensor: return "sensor";
    case Variant::vmail: return "vmail";
    case Variant::vmail_as: return "vmail_as";
    case Variant::bc: return "bc";
    case Variant::sensor_decoupled: return "sensor_decoupled";
  }
  return "?";
}

SensorState parse_viewpoint(const std::string& name) {
  const auto bad = [&]() {
    return ConfigError("viewpoint '" + name + "' does not match d{D}a{A}e{E}");
  };
  if (name.empty() || name[0] != 'd') throw bad();
  const auto apos = name.find('a', 1);
  if (apos == std::string::npos) throw bad();
  const auto epos = name.find('e', apos + 1);
  if (epos == std::string::npos) throw bad();
  SensorState c;
  try {
    std::size_t used = 0;
    const std::string ds = name.substr(1, apos - 1);
    c.d = std::stod(ds, &used);
    if (used != ds.size()) throw bad();
    const std::string as = name.substr(apos + 1, epos - apos - 1);
    c.a = std::stod(as, &used);
    if (used != as.size()) throw bad();
    const std::string es = name.substr(epos + 1);
    c.e = std::stod(es, &used);
    if (used != es.size()) throw bad();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
  if (!c.valid()) throw ConfigError("viewpoint '" + name + "' outside sensor ranges");
  return c;
}

std::string viewpoint_name(const SensorState& c) {
  const auto num = [](double v) {
    std::string s = format_metric(v);
    return s;
  };
  return "d" + num(c.d) + "a" + num(c.a) + "e" + num(c.e);
}

std::string TrainConfig::metrics_path() const {
  return (std::filesystem::path(out_dir) / (run_name + "_metrics.csv")).string();
}

std::string TrainConfig::checkpoint_path() const {
  return (std::filesystem::path(out_dir) / (run_name + ".ckpt")).string();
}

void apply_variant(TrainConfig& cfg) {
  switch (cfg.variant) {
    case Variant::sensor:
      cfg.env.sensor_enabled = true;
      cfg.policy.mode = ActorMode::separate;
      cfg.model.decoupled = false;
      break;
    case Variant::vmail:
      cfg.env.sensor_enabled = false;
      cfg.policy.mode = ActorMode::frozen_sensor;
      cfg.model.decoupled = false;
      break;
    case Variant::vmail_as:
      cfg.env.sensor_enabled = true;
      cfg.policy.mode = ActorMode::single_actor;
      cfg.model.decoupled = false;
      break;
    case Variant::sensor_decoupled:
      cfg.env.sensor_enabled = true;
      cfg.policy.mode = ActorMode::separate;
      cfg.model.decoupled = true;
      break;
    case Variant::bc:
      break;
  }
  cfg.model.obs_dim = cfg.env.resolution * cfg.env.resolution;
  if (cfg.run_name.empty()) {
    cfg.run_name = to_string(cfg.variant) + "_seed" + std::to_string(cfg.seed);
  }
}

TrainConfig parse_train_config(const KeyValueConfig& kv) {
  TrainConfig cfg;
  cfg.variant = variant_from_string(kv.get_string("train.variant", "sensor"));
  cfg.seed = kv.get_u64("train.seed", 0);
  cfg.total_env_steps = kv.get_int("train.total_env_steps", cfg.total_env_steps);
  cfg.collect_steps = kv.get_int("train.collect_steps", cfg.collect_steps);
  cfg.updates_per_collect = kv.get_int("train.updates_per_collect", cfg.updates_per_collect);
  cfg.eval_every = kv.get_int("train.eval_every", cfg.eval_every);
  cfg.eval_episodes = kv.get_int("train.eval_episodes", cfg.eval_episodes);
  cfg.seed_episodes = kv.get_int("train.seed_episodes", cfg.seed_episodes);
  cfg.batch = kv.get_int("train.batch", cfg.batch);
  cfg.seq_len = kv.get_int("train.seq_len", cfg.seq_len);
  cfg.horizon = kv.get_int("train.horizon", cfg.horizon);
  cfg.replay_capacity = kv.get_int("train.replay_capacity", cfg.replay_capacity);
  cfg.model_lr = kv.get_double("train.model_lr", cfg.model_lr);
  cfg.weight_decay = kv.get_double("train.weight_decay", cfg.weight_decay);
  cfg.demos_path = kv.get_string("train.demos", cfg.demos_path);
  cfg.out_dir = kv.get_string("train.out_dir", cfg.out_dir);
  cfg.run_name = kv.get_string("train.run_name", cfg.run_name);
  cfg.bc_steps = kv.get_int("train.bc_steps", cfg.bc_steps);
  cfg.bc_batch = kv.get_int("train.bc_batch", cfg.bc_batch);
  cfg.bc_lr = kv.get_double("train.bc_lr", cfg.bc_lr);

  cfg.env.resolution = kv.get_int("env.resolution", cfg.env.resolution);
  cfg.env.action_repeat = kv.get_int("env.action_repeat", cfg.env.action_repeat);
  cfg.env.episode_len = kv.get_int("env.episode_len", cfg.env.episode_len);
  cfg.env.expert_viewpoint = parse_viewpoint(kv.get_string("env.expert_viewpoint", "d3a90e-45"));
  cfg.env.agent_init_viewpoint =
      parse_viewpoint(kv.get_string("env.agent_init_viewpoint", "d3a90e-45"));
  const std::string lookat = kv.get_string("env.lookat", "pivot");
  if (lookat == "pivot") {
    cfg.env.lookat = Lookat::pivot;
  } else if (lookat == "bob") {
    cfg.env.lookat = Lookat::bob;
  } else {
    throw ConfigError("env.lookat must be pivot or bob, got '" + lookat + "'");
  }

  cfg.model.det_dim = kv.get_int("model.det_dim", cfg.model.det_dim);
  cfg.model.stoch_dim = kv.get_int("model.stoch_dim", cfg.model.stoch_dim);
  cfg.model.embed_dim = kv.get_int("model.embed_dim", cfg.model.embed_dim);
  cfg.model.enc_hidden = kv.get_int("model.enc_hidden", cfg.model.enc_hidden);
  cfg.model.dec_hidden = kv.get_int("model.dec_hidden", cfg.model.dec_hidden);
  cfg.model.head_hidden = kv.get_int("model.head_hidden", cfg.model.head_hidden);
  cfg.model.beta = kv.get_double("model.beta", cfg.model.beta);
  cfg.model.free_nats = kv.get_double("model.free_nats", cfg.model.free_nats);
  cfg.model.sensor_det_dim = kv.get_int("model.sensor_det_dim", cfg.model.sensor_det_dim);
  cfg.model.sensor_stoch_dim = kv.get_int("model.sensor_stoch_dim", cfg.model.sensor_stoch_dim);
  const std::string kld = kv.get_string("model.kl_direction", "posterior_prior");
  if (kld == "posterior_prior") {
    cfg.model.kl_direction = KlDirection::posterior_to_prior;
  } else if (kld == "prior_posterior") {
    cfg.model.kl_direction = KlDirection::prior_to_posterior;
  } else {
    throw ConfigError("model.kl_direction must be posterior_prior or prior_posterior");
  }

  cfg.disc.n1 = kv.get_int("disc.n1", cfg.disc.n1);
  cfg.disc.n2 = kv.get_int("disc.n2", cfg.disc.n2);
  cfg.disc.eps0 = kv.get_double("disc.eps0", cfg.disc.eps0);
  cfg.disc.hidden = kv.get_int("disc.hidden", cfg.disc.hidden);
  cfg.disc.lr = kv.get_double("disc.lr", cfg.disc.lr);
  cfg.disc.weight_decay = kv.get_double("disc.weight_decay", cfg.weight_decay);

  cfg.policy.z_code = kv.get_int("policy.z_code", cfg.policy.z_code);
  cfg.policy.c_code = kv.get_int("policy.c_code", cfg.policy.c_code);
  cfg.policy.head_hidden = kv.get_int("policy.head_hidden", cfg.policy.head_hidden);
  cfg.policy.v_hidden = kv.get_int("policy.v_hidden", cfg.policy.v_hidden);
  cfg.policy.gamma = kv.get_double("policy.gamma", cfg.policy.gamma);
  cfg.policy.k = kv.get_int("policy.k", cfg.policy.k);
  cfg.policy.actor_lr = kv.get_double("policy.actor_lr", cfg.policy.actor_lr);
  cfg.policy.critic_lr = kv.get_double("policy.critic_lr", cfg.policy.critic_lr);
  cfg.policy.weight_decay = kv.get_double("policy.weight_decay", cfg.weight_decay);

  const auto unused = kv.unused_keys();
  if (!unused.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
  }

  apply_variant(cfg);
  return cfg;
}

namespace {

class ModelAgent : public Agent {
 public:
  ModelAgent(const WorldModel& model, const PolicyHeads& heads) : model_(model), heads_(heads) {}

  void begin_episode() override {
    state_ = model_.initial_state(1);
    prev_action_ = Tensor::zeros({1, 4});
  }

  EnvAction act(const Image& obs, bool stochastic, Rng& rng) override {
    Tape t(false);
    std::vector<double> ov(obs.pixels.begin(), obs.pixels.end());
    Tensor o = Tensor::leaf({1, static_cast<int>(ov.size())}, std::move(ov), false);
    state_ = model_.posterior_step(t, state_, prev_action_, o, rng);
    EnvAction a = heads_.act(t, model_, state_, stochastic, rng);
    prev_action_ = Tensor::leaf({1, 4}, {a.motor, a.sensor[0], a.sensor[1], a.sensor[2]}, false);
    return a;
  }

 private:
  const WorldModel& model_;
  const PolicyHeads& heads_;
  ModelState state_;
  Tensor prev_action_;
};

double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

struct MetaInfo {
  Variant variant;
  int resolution;
  int feat_dim;
};

void add_meta(NamedParams& params, const MetaInfo& info) {
  params.add(kMetaVariant, Tensor::scalar(static_cast<double>(static_cast<int>(info.variant))));
  params.add(kMetaResolution, Tensor::scalar(static_cast<double>(info.resolution)));
  params.add(kMetaFeatDim, Tensor::scalar(static_cast<double>(info.feat_dim)));
}

}  // namespace

std::unique_ptr<Agent> make_model_agent(const WorldModel& model, const PolicyHeads& heads) {
  return std::make_unique<ModelAgent>(model, heads);
}

EvalStats evaluate_agent(Agent& agent, const EnvConfig& env_cfg, int episodes, std::uint64_t seed,
                         bool stochastic) {
  PendulumEnv env(env_cfg);
  Rng rng(seed);
  EvalStats stats;
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    EvalEpisode ep;
    Image obs = env.reset(rng.next_u64());
    agent.begin_episode();
    while (!env.done()) {
      EnvAction a = agent.act(obs, stochastic, rng);
      auto res = env.step(a);
      ep.true_return += res.true_reward;
      ep.viewpoints.push_back(env.sensor_state());
      obs = std::move(res.obs);
    }
    returns.push_back(ep.true_return);
    stats.episodes.push_back(std::move(ep));
  }
  stats.mean_return = mean_of(returns);
  stats.std_return = std_of(returns, stats.mean_return);
  double d = 0.0, a = 0.0, el = 0.0;
  for (const auto& ep : stats.episodes) {
    d += ep.viewpoints.back().d;
    a += ep.viewpoints.back().a;
    el += ep.viewpoints.back().e;
  }
  const double n = static_cast<double>(stats.episodes.size());
  stats.mean_final_viewpoint = {d / n, a / n, el / n};
  return stats;
}

TrainResult train(const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  apply_variant(cfg);
  if (cfg.variant == Variant::bc) return train_bc(cfg);

  const int steps_per_epoch = cfg.collect_steps * cfg.env.action_repeat;
  const int epochs = cfg.total_env_steps / steps_per_epoch;
  if (epochs < 1) throw ConfigError("train: total_env_steps too small for one epoch");
  if (cfg.collect_steps < 1 || cfg.updates_per_collect < 1) {
    throw ConfigError("train: collect_steps and updates_per_collect must be positive");
  }

  Rng rng(cfg.seed);
  Rng eval_rng(cfg.seed ^ 0x5eed5eedULL);

  // expert buffer
  auto demos = read_demos(cfg.demos_path);
  if (demos.empty()) throw FatalError("train: demo file " + cfg.demos_path + " holds no episodes");
  for (const auto& d : demos) {
    if (d.resolution != cfg.env.resolution) {
      throw ConfigError("train: demo resolution " + std::to_string(d.resolution) +
                        " != env.resolution " + std::to_string(cfg.env.resolution));
    }
  }
  ReplayBuffer expert_buf(static_cast<int>(demos.size()));
  for (auto& d : demos) expert_buf.add(std::move(d));

  ReplayBuffer agent_buf(cfg.replay_capacity);

  auto model = make_world_model(cfg.model, rng);
  PolicyHeads heads(*model, cfg.policy, rng);
  DiscriminatorEnsemble disc(model->feat_dim() + 4, cfg.disc, rng);

  NamedParams model_params;
  model->collect(model_params);
  AdamW model_opt(model_params.tensors(),
                  {cfg.model_lr, 0.9, 0.999, 1e-8, cfg.weight_decay, 100.0});
  AdamW actor_opt(heads.actor_params().tensors(),
                  {cfg.policy.actor_lr, 0.9, 0.999, 1e-8, cfg.policy.weight_decay,
                   cfg.policy.clip_norm});
  AdamW critic_opt(heads.critic_params().tensors(),
                   {cfg.policy.critic_lr, 0.9, 0.999, 1e-8, cfg.policy.weight_decay,
                    cfg.policy.clip_norm});

  PendulumEnv env(cfg.env);

  // random-policy warmup so the first model batches exist
  for (int e = 0; e < cfg.seed_episodes; ++e) {
    EpisodeRecord ep;
    ep.resolution = cfg.env.resolution;
    Image obs = env.reset(rng.next_u64());
    ep.observations.push_back(std::move(obs.pixels));
    while (!env.done()) {
      EnvAction a;
      a.motor = rng.uniform(-1.0, 1.0);
      for (auto& s : a.sensor) s = rng.uniform(-1.0, 1.0);
      auto res = env.step(a);
      ep.true_return += res.true_reward;
      ep.observations.push_back(std::move(res.obs.pixels));
      ep.actions.push_back({static_cast<float>(a.motor), static_cast<float>(a.sensor[0]),
                            static_cast<float>(a.sensor[1]), static_cast<float>(a.sensor[2])});
    }
    agent_buf.add(std::move(ep));
  }

  MetricsWriter metrics(cfg.metrics_path());
  MetricsRow last_row;

  // collector state persists across epochs
  Image cur_obs = env.reset(rng.next_u64());
  EpisodeRecord cur_ep;
  cur_ep.resolution = cfg.env.resolution;
  cur_ep.observations.push_back(cur_obs.pixels);
  ModelState col_state = model->initial_state(1);
  Tensor col_prev_action = Tensor::zeros({1, 4});

  long env_steps = 0;
  int evals_done = 0;
  const std::array<const ReplayBuffer*, 2> union_bufs{&expert_buf, &agent_buf};

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double eps = epsilon_schedule(cfg.disc.eps0, epoch, epochs);

    // -- collect --
    for (int step = 0; step < cfg.collect_steps; ++step) {
      Tape t(false);
      std::vector<double> ov(cur_obs.pixels.begin(), cur_obs.pixels.end());
      Tensor o = Tensor::leaf({1, cfg.model.obs_dim}, std::move(ov), false);
      col_state = model->posterior_step(t, col_state, col_prev_action, o, rng);
      EnvAction a = heads.act(t, *model, col_state, true, rng);
      auto res = env.step(a);
      env_steps += cfg.env.action_repeat;
      cur_ep.true_return += res.true_reward;
      cur_ep.observations.push_back(res.obs.pixels);
      cur_ep.actions.push_back({static_cast<float>(a.motor), static_cast<float>(a.sensor[0]),
                                static_cast<float>(a.sensor[1]), static_cast<float>(a.sensor[2])});
      col_prev_action = Tensor::leaf({1, 4}, {a.motor, a.sensor[0], a.sensor[1], a.sensor[2]}, false);
      cur_obs = std::move(res.obs);
      if (env.done()) {
        agent_buf.add(std::move(cur_ep));
        cur_ep = EpisodeRecord{};
        cur_ep.resolution = cfg.env.resolution;
        cur_obs = env.reset(rng.next_u64());
        cur_ep.observations.push_back(cur_obs.pixels);
        col_state = model->initial_state(1);
        col_prev_action = Tensor::zeros({1, 4});
      }
    }

    // -- update --
    double model_loss_acc = 0.0, kl_acc = 0.0, disc_acc = 0.0, actor_acc = 0.0, critic_acc = 0.0;
    for (int m = 0; m < cfg.updates_per_collect; ++m) {
      auto batch = sample_sequences(
          std::span<const ReplayBuffer* const>(union_bufs.data(), union_bufs.size()), cfg.batch,
          cfg.seq_len, rng);

      Tape t1;
      auto obs_res = model->observe_sequence(t1, batch, rng);
      const double model_loss = obs_res.loss.item();
      if (!std::isfinite(model_loss)) {
        throw FatalError("train: non-finite model loss at epoch " + std::to_string(epoch) +
                         " update " + std::to_string(m));
      }
      model_opt.zero_grad();
      t1.backward(obs_res.loss);
      model_opt.step();
      model_loss_acc += model_loss;
      kl_acc += obs_res.kl_term;

      ModelState starts = detach_state(obs_res.stacked_posterior);

      Tape t2;
      auto policy_fn = [&](Tape& tp, const ModelState& st) {
        return heads.policy_action(tp, *model, st, rng);
      };
      auto traj = imagine(t2, *model, starts, cfg.horizon, policy_fn, rng);

      // detached (state, action) rows of the imagined rollout for the
      // discriminator step
      const int sb = starts.batch;
      const int fd = model->feat_dim();
      Tensor agent_rows;
      {
        Tape tv(false);
        std::vector<double> rows(static_cast<std::size_t>(cfg.horizon) * sb * (fd + 4));
        for (int s = 0; s < cfg.horizon; ++s) {
          Tensor f = model->feat(tv, traj.states[static_cast<std::size_t>(s)]);
          const auto& fv = f.value();
          const auto& av = traj.actions[static_cast<std::size_t>(s)].value();
          for (int b = 0; b < sb; ++b) {
            double* dst = rows.data() + (static_cast<std::size_t>(s) * sb + b) * (fd + 4);
            std::copy(fv.begin() + static_cast<std::ptrdiff_t>(b) * fd,
                      fv.begin() + static_cast<std::ptrdiff_t>(b + 1) * fd, dst);
            std::copy(av.begin() + static_cast<std::ptrdiff_t>(b) * 4,
                      av.begin() + static_cast<std::ptrdiff_t>(b + 1) * 4, dst + fd);
          }
        }
        agent_rows = Tensor::leaf({cfg.horizon * sb, fd + 4}, std::move(rows), false);
      }

      Tensor expert_rows;
      {
        auto ebatch = sample_sequences(std::span<const ReplayBuffer* const>(&union_bufs[0], 1),
                                       cfg.batch, cfg.seq_len, rng);
        Tape te(false);
        auto eres = model->observe_sequence(te, ebatch, rng);
        Tensor efeat = model->feat(te, eres.stacked_posterior);  // [L*B, fd] step-major
        const auto& fv = efeat.value();
        const int L = cfg.seq_len, B = cfg.batch;
        std::vector<double> rows(static_cast<std::size_t>(L - 1) * B * (fd + 4));
        for (int s = 0; s < L - 1; ++s) {
          for (int b = 0; b < B; ++b) {
            double* dst = rows.data() + (static_cast<std::size_t>(s) * B + b) * (fd + 4);
            const double* src = fv.data() + (static_cast<std::size_t>(s) * B + b) * fd;
            std::copy(src, src + fd, dst);
            const double* act =
                ebatch.actions.data() + (static_cast<std::size_t>(b) * (L - 1) + s) * 4;
            std::copy(act, act + 4, dst + fd);
          }
        }
        expert_rows = Tensor::leaf({(L - 1) * B, fd + 4}, std::move(rows), false);
      }

      auto dstats = disc.update(agent_rows, expert_rows, rng);
      disc_acc += dstats.bce_loss;

      auto acs = update_actor_critic(t2, *model, heads, disc, traj, eps, actor_opt, critic_opt);
      actor_acc += acs.actor_loss;
      critic_acc += acs.critic_loss;
    }

    // -- evaluate --
    if (env_steps / cfg.eval_every > evals_done) {
      ++evals_done;
      auto agent = make_model_agent(*model, heads);
      auto stats = evaluate_agent(*agent, cfg.env, cfg.eval_episodes, eval_rng.next_u64(), false);
      MetricsRow row;
      row.env_step = env_steps;
      row.epoch = epoch;
      row.eval_return_mean = stats.mean_return;
      row.eval_return_std = stats.std_return;
      row.model_loss = model_loss_acc / cfg.updates_per_collect;
      row.kl_term = kl_acc / cfg.updates_per_collect;
      row.disc_loss = disc_acc / cfg.updates_per_collect;
      row.actor_loss = actor_acc / cfg.updates_per_collect;
      row.critic_loss = critic_acc / cfg.updates_per_collect;
      row.eps = eps;
      row.sensor_d = stats.mean_final_viewpoint.d;
      row.sensor_a = stats.mean_final_viewpoint.a;
      row.sensor_e = stats.mean_final_viewpoint.e;
      metrics.append(row);
      last_row = row;
    }
  }

  NamedParams all;
  model->collect(all);
  heads.collect(all);
  disc.collect(all);
  add_meta(all, {cfg.variant, cfg.env.resolution, model->feat_dim()});
  save_checkpoint(cfg.checkpoint_path(), all);

  TrainResult result;
  result.metrics_path = cfg.metrics_path();
  result.checkpoint_path = cfg.checkpoint_path();
  result.final_eval_mean = last_row.eval_return_mean;
  result.final_eval_std = last_row.eval_return_std;
  result.final_viewpoint = {last_row.sensor_d, last_row.sensor_a, last_row.sensor_e};
  result.env_steps = env_steps;
  return result;
}

std::vector<ViewpointEval> evaluate_checkpoint(const std::string& checkpoint_path,
                                               const TrainConfig& cfg_in,
                                               const std::vector<SensorState>& viewpoints,
                                               int episodes, std::uint64_t seed) {
  TrainConfig cfg = cfg_in;
  apply_variant(cfg);

  const auto meta_variant = peek_checkpoint_tensor(checkpoint_path, kMetaVariant);
  const auto meta_res = peek_checkpoint_tensor(checkpoint_path, kMetaResolution);
  if (static_cast<int>(meta_variant.at(0)) != static_cast<int>(cfg.variant)) {
    throw FatalError("eval: checkpoint variant " +
                     to_string(static_cast<Variant>(static_cast<int>(meta_variant.at(0)))) +
                     " does not match configured variant " + to_string(cfg.variant));
  }
  if (static_cast<int>(meta_res.at(0)) != cfg.env.resolution) {
    throw FatalError("eval: checkpoint resolution " + std::to_string(static_cast<int>(meta_res.at(0))) +
                     " does not match env.resolution " + std::to_string(cfg.env.resolution));
  }

  Rng rng(cfg.seed);
  std::unique_ptr<WorldModel> model;
  std::unique_ptr<PolicyHeads> heads;
  std::unique_ptr<BcPolicy> bc;
  std::unique_ptr<Agent> agent;
  NamedParams all;
  if (cfg.variant == Variant::bc) {
    bc = std::make_unique<BcPolicy>(cfg.model.obs_dim, rng);
    bc->collect(all);
    agent = make_bc_agent(*bc);
  } else {
    model = make_world_model(cfg.model, rng);
    heads = std::make_unique<PolicyHeads>(*model, cfg.policy, rng);
    DiscriminatorEnsemble disc(model->feat_dim() + 4, cfg.disc, rng);
    model->collect(all);
    heads->collect(all);
    disc.collect(all);
    const auto meta_feat = peek_checkpoint_tensor(checkpoint_path, kMetaFeatDim);
    if (static_cast<int>(meta_feat.at(0)) != model->feat_dim()) {
      throw FatalError("eval: checkpoint feature dim does not match configured model dims");
    }
    agent = make_model_agent(*model, *heads);
  }
  add_meta(all, {cfg.variant, cfg.env.resolution,
                 model ? model->feat_dim() : cfg.model.obs_dim});
  load_checkpoint(checkpoint_path, all);

  std::vector<ViewpointEval> out;
  Rng eval_rng(seed);
  for (const auto& vp : viewpoints) {
    EnvConfig env_cfg = cfg.env;
    env_cfg.agent_init_viewpoint = vp;
    ViewpointEval ve;
    ve.viewpoint = vp;
    ve.stats = evaluate_agent(*agent, env_cfg, episodes, eval_rng.next_u64(), false);
    out.push_back(std::move(ve));
  }
  return out;
}

}  // namespace sensor
