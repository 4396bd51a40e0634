#include "sensor/bc.hpp"

#include <cmath>

#include "sensor/checkpoint.hpp"
#include "sensor/errors.hpp"

namespace sensor {

BcPolicy::BcPolicy(int obs_dim, Rng& rng)
    : obs_dim_(obs_dim), net_({obs_dim, 256, 64, 4}, rng) {}

Tensor BcPolicy::forward(Tape& t, const Tensor& obs) const { return tanh(t, net_.forward(t, obs)); }

void BcPolicy::collect(NamedParams& out) const { net_.collect("bc.net", out); }

namespace {

class BcAgent : public Agent {
 public:
  explicit BcAgent(const BcPolicy& policy) : policy_(policy) {}
  void begin_episode() override {}
  EnvAction act(const Image& obs, bool, Rng&) override {
    Tape t(false);
    std::vector<double> ov(obs.pixels.begin(), obs.pixels.end());
    Tensor o = Tensor::leaf({1, static_cast<int>(ov.size())}, std::move(ov), false);
    const auto& v = policy_.forward(t, o).value();
    return {v[0], {v[1], v[2], v[3]}};
  }

 private:
  const BcPolicy& policy_;
};

}  // namespace

std::unique_ptr<Agent> make_bc_agent(const BcPolicy& policy) {
  return std::make_unique<BcAgent>(policy);
}

double bc_train_step(BcPolicy& policy, const std::vector<EpisodeRecord>& demos, int batch,
                     AdamW& opt, Rng& rng) {
  const int obs_dim = policy.obs_dim();
  std::vector<double> ov(static_cast<std::size_t>(batch) * obs_dim);
  std::vector<double> av(static_cast<std::size_t>(batch) * 4);
  for (int b = 0; b < batch; ++b) {
    const auto& ep = demos[rng.below(demos.size())];
    const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(ep.length())));
    const auto& frame = ep.observations[static_cast<std::size_t>(t)];
    for (int k = 0; k < obs_dim; ++k) {
      ov[static_cast<std::size_t>(b) * obs_dim + k] = frame[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < 4; ++k) {
      av[static_cast<std::size_t>(b) * 4 + k] = ep.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    }
  }
  Tape t;
  Tensor obs = Tensor::leaf({batch, obs_dim}, std::move(ov), false);
  Tensor target = Tensor::leaf({batch, 4}, std::move(av), false);
  Tensor diff = sub(t, policy.forward(t, obs), target);
  Tensor loss = mean(t, mul(t, diff, diff));
  const double out = loss.item();
  if (!std::isfinite(out)) throw FatalError("bc: non-finite loss");
  opt.zero_grad();
  t.backward(loss);
  opt.step();
  return out;
}

TrainResult train_bc(const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  apply_variant(cfg);

  auto demos = read_demos(cfg.demos_path);
  if (demos.empty()) throw FatalError("bc: demo file " + cfg.demos_path + " holds no episodes");
  for (const auto& d : demos) {
    if (d.resolution != cfg.env.resolution) {
      throw ConfigError("bc: demo resolution does not match env.resolution");
    }
  }

  Rng rng(cfg.seed);
  Rng eval_rng(cfg.seed ^ 0x5eed5eedULL);
  BcPolicy policy(cfg.model.obs_dim, rng);
  NamedParams params;
  policy.collect(params);
  AdamW opt(params.tensors(), {cfg.bc_lr, 0.9, 0.999, 1e-8, cfg.weight_decay, 100.0});

  MetricsWriter metrics(cfg.metrics_path());
  MetricsRow last_row;
  const int eval_interval = std::max(1, cfg.bc_steps / 10);
  double loss_acc = 0.0;
  int loss_n = 0;
  for (int step = 1; step <= cfg.bc_steps; ++step) {
    loss_acc += bc_train_step(policy, demos, cfg.bc_batch, opt, rng);
    ++loss_n;
    if (step % eval_interval == 0 || step == cfg.bc_steps) {
      auto agent = make_bc_agent(policy);
      auto stats = evaluate_agent(*agent, cfg.env, cfg.eval_episodes, eval_rng.next_u64(), false);
      MetricsRow row;
      row.env_step = step;  // supervised steps; BC consumes no env interaction
      row.epoch = step / eval_interval;
      row.eval_return_mean = stats.mean_return;
      row.eval_return_std = stats.std_return;
      row.model_loss = loss_acc / loss_n;
      row.sensor_d = stats.mean_final_viewpoint.d;
      row.sensor_a = stats.mean_final_viewpoint.a;
      row.sensor_e = stats.mean_final_viewpoint.e;
      metrics.append(row);
      last_row = row;
      loss_acc = 0.0;
      loss_n = 0;
    }
  }

  NamedParams all;
  policy.collect(all);
  all.add(kMetaVariant, Tensor::scalar(static_cast<double>(static_cast<int>(Variant::bc))));
  all.add(kMetaResolution, Tensor::scalar(static_cast<double>(cfg.env.resolution)));
  all.add(kMetaFeatDim, Tensor::scalar(static_cast<double>(cfg.model.obs_dim)));
  save_checkpoint(cfg.checkpoint_path(), all);

  TrainResult result;
  result.metrics_path = cfg.metrics_path();
  result.checkpoint_path = cfg.checkpoint_path();
  result.final_eval_mean = last_row.eval_return_mean;
  result.final_eval_std = last_row.eval_return_std;
  result.final_viewpoint = {last_row.sensor_d, last_row.sensor_a, last_row.sensor_e};
  result.env_steps = 0;
  return result;
}

}  // namespace sensor
