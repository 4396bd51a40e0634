#include "sensor/rssm.hpp"

#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

Tensor noise_like(int rows, int cols, Rng& rng) {
  std::vector<double> n(static_cast<std::size_t>(rows) * cols);
  for (auto& v : n) v = rng.normal();
  return Tensor::leaf({rows, cols}, std::move(n), false);
}

struct GaussStats {
  Tensor mean, log_std;
};

GaussStats split_stats(Tape& t, const Tensor& raw, int dim) {
  GaussStats out;
  out.mean = slice_last(t, raw, 0, dim);
  out.log_std = clamp(t, slice_last(t, raw, dim, 2 * dim), kLogStdMin, kLogStdMax);
  return out;
}

/// GRU cell with a tanh input projection, as in RSSM deterministic paths.
struct GruCell {
  Linear in_proj;  // [stoch + action] -> det
  Linear reset, update, cand;

  GruCell() = default;
  GruCell(int in_dim, int det, Rng& rng)
      : in_proj(in_dim, det, rng),
        reset(2 * det, det, rng),
        update(2 * det, det, rng),
        cand(2 * det, det, rng) {}

  Tensor step(Tape& t, const Tensor& h, const Tensor& input) const {
    Tensor x = tanh(t, in_proj.forward(t, input));
    Tensor xh = concat(t, {x, h});
    Tensor r = sigmoid(t, reset.forward(t, xh));
    Tensor u = sigmoid(t, update.forward(t, xh));
    Tensor xrh = concat(t, {x, mul(t, r, h)});
    Tensor c = tanh(t, cand.forward(t, xrh));
    // h' = u*h + (1-u)*c
    return add(t, mul(t, u, h), sub(t, c, mul(t, u, c)));
  }

  void collect(const std::string& prefix, NamedParams& out) const {
    in_proj.collect(prefix + ".in", out);
    reset.collect(prefix + ".r", out);
    update.collect(prefix + ".u", out);
    cand.collect(prefix + ".c", out);
  }
};

/// One recurrent latent branch: deterministic GRU path plus prior/posterior
/// Gaussian heads over the stochastic part.
struct Branch {
  GruCell cell;
  Mlp prior_head;  // det -> 2*stoch
  Mlp post_head;   // det + embed -> 2*stoch
  int det = 0, stoch = 0;

  Branch() = default;
  Branch(int act_dim, int det_dim, int stoch_dim, int embed_dim, int hidden, Rng& rng)
      : cell(stoch_dim + act_dim, det_dim, rng),
        prior_head({det_dim, hidden, 2 * stoch_dim}, rng),
        post_head({det_dim + embed_dim, hidden, 2 * stoch_dim}, rng),
        det(det_dim),
        stoch(stoch_dim) {}

  Tensor advance(Tape& t, const LatentBatch& prev, const Tensor& action_part) const {
    return cell.step(t, prev.h, concat(t, {prev.s, action_part}));
  }

  LatentBatch from_stats(Tape& t, const Tensor& h, const GaussStats& stats, Rng& rng) const {
    LatentBatch out;
    out.h = h;
    out.mean = stats.mean;
    out.log_std = stats.log_std;
    out.s = gaussian_sample(t, stats.mean, stats.log_std, noise_like(h.dim(0), stoch, rng));
    return out;
  }

  GaussStats prior_stats(Tape& t, const Tensor& h) const {
    return split_stats(t, prior_head.forward(t, h), stoch);
  }

  GaussStats post_stats(Tape& t, const Tensor& h, const Tensor& embed) const {
    return split_stats(t, post_head.forward(t, concat(t, {h, embed})), stoch);
  }

  void collect(const std::string& prefix, NamedParams& out) const {
    cell.collect(prefix + ".cell", out);
    prior_head.collect(prefix + ".prior", out);
    post_head.collect(prefix + ".post", out);
  }
};

Tensor kl_with_direction(Tape& t, const GaussStats& post, const GaussStats& prior, KlDirection dir) {
  if (dir == KlDirection::posterior_to_prior) {
    return kl_diag_gauss(t, post.mean, post.log_std, prior.mean, prior.log_std);
  }
  return kl_diag_gauss(t, prior.mean, prior.log_std, post.mean, post.log_std);
}

/// Shared sequence-loss skeleton for both model variants. Steps the posterior
/// along each sequence, accumulates free-nats-clamped KL per step, and decodes
/// all steps in one batch.
class RssmBase : public WorldModel {
 public:
  explicit RssmBase(const WorldModelConfig& cfg) : cfg_(cfg) {}
  const WorldModelConfig& config() const override { return cfg_; }

  ObserveResult observe_sequence(Tape& t, const SequenceBatch& batch, Rng& rng) const override {
    const int B = batch.batch, L = batch.seq_len, D = batch.obs_dim;
    if (D != cfg_.obs_dim) {
      throw ConfigError("rssm: batch obs dim " + std::to_string(D) + " != configured " +
                        std::to_string(cfg_.obs_dim));
    }
    // step-major stack of frames: rows [t*B, (t+1)*B) hold step t
    std::vector<double> obs_sm(static_cast<std::size_t>(L) * B * D);
    for (int b = 0; b < B; ++b) {
      for (int s = 0; s < L; ++s) {
        const double* src = batch.obs.data() + (static_cast<std::size_t>(b) * L + s) * D;
        std::copy(src, src + D, obs_sm.begin() + (static_cast<std::size_t>(s) * B + b) * D);
      }
    }
    Tensor obs_all = Tensor::leaf({L * B, D}, std::move(obs_sm), false);
    Tensor embed_all = encode(t, obs_all);

    ObserveResult res;
    ModelState state = initial_state(B);
    Tensor zero_action = Tensor::zeros({B, 4});
    Tensor kl_sum;  // clamped, summed over steps
    double kl_raw_total = 0.0;
    for (int s = 0; s < L; ++s) {
      Tensor action = zero_action;
      if (s > 0) {
        std::vector<double> av(static_cast<std::size_t>(B) * 4);
        for (int b = 0; b < B; ++b) {
          const double* src = batch.actions.data() + (static_cast<std::size_t>(b) * (L - 1) + s - 1) * 4;
          std::copy(src, src + 4, av.begin() + static_cast<std::size_t>(b) * 4);
        }
        action = Tensor::leaf({B, 4}, std::move(av), false);
      }
      Tensor embed = slice_rows(t, embed_all, s * B, (s + 1) * B);
      Tensor step_kl;
      state = filter_step(t, state, action, embed, rng, &step_kl);
      res.posteriors.push_back(state);
      kl_raw_total += step_kl.item() / B;
      Tensor kl_mean_t = scale(t, step_kl, 1.0 / B);
      Tensor clamped = clamp(t, add_scalar(t, kl_mean_t, -cfg_.free_nats), 0.0, 1e30);
      kl_sum = kl_sum.defined() ? add(t, kl_sum, clamped) : clamped;
    }

    std::vector<Tensor> step_feats;
    step_feats.reserve(res.posteriors.size());
    for (const auto& st : res.posteriors) step_feats.push_back(feat(t, st));
    Tensor feats_all = concat_rows(t, std::span<const Tensor>(step_feats.data(), step_feats.size()));
    res.stacked_posterior = stack_states(t, res.posteriors);

    Tensor dec_all = decode_feat(t, feats_all);
    Tensor diff = sub(t, obs_all, dec_all);
    Tensor recon = scale(t, sum(t, mul(t, diff, diff)), 0.5 / B);

    res.loss = add(t, recon, scale(t, kl_sum, cfg_.beta));
    res.recon_term = recon.item();
    res.kl_term = cfg_.beta * kl_sum.item();
    res.kl_mean = kl_raw_total / L;
    double se = 0.0;
    for (std::size_t i = 0; i < diff.value().size(); ++i) se += diff.value()[i] * diff.value()[i];
    res.recon_mse_per_pixel = se / static_cast<double>(diff.value().size());
    return res;
  }

 protected:
  virtual Tensor encode(Tape& t, const Tensor& obs) const = 0;
  virtual Tensor decode_feat(Tape& t, const Tensor& feats) const = 0;
  /// One posterior step; adds this step's summed KL(post, prior) to *kl_out.
  virtual ModelState filter_step(Tape& t, const ModelState& prev, const Tensor& action,
                                 const Tensor& embed, Rng& rng, Tensor* kl_out) const = 0;

  ModelState stack_states(Tape& t, const std::vector<ModelState>& states) const {
    ModelState out;
    out.batch = 0;
    for (const auto& st : states) out.batch += st.batch;
    const std::size_t nb = states.front().branches.size();
    for (std::size_t k = 0; k < nb; ++k) {
      std::vector<Tensor> hs, ss, ms, ls;
      for (const auto& st : states) {
        hs.push_back(st.branches[k].h);
        ss.push_back(st.branches[k].s);
        ms.push_back(st.branches[k].mean);
        ls.push_back(st.branches[k].log_std);
      }
      LatentBatch lb;
      lb.h = concat_rows(t, std::span<const Tensor>(hs.data(), hs.size()));
      lb.s = concat_rows(t, std::span<const Tensor>(ss.data(), ss.size()));
      lb.mean = concat_rows(t, std::span<const Tensor>(ms.data(), ms.size()));
      lb.log_std = concat_rows(t, std::span<const Tensor>(ls.data(), ls.size()));
      out.branches.push_back(std::move(lb));
    }
    return out;
  }

  WorldModelConfig cfg_;
};

class CoupledRssm : public RssmBase {
 public:
  CoupledRssm(const WorldModelConfig& cfg, Rng& rng)
      : RssmBase(cfg),
        enc_({cfg.obs_dim, cfg.enc_hidden, cfg.embed_dim}, rng),
        branch_(4, cfg.det_dim, cfg.stoch_dim, cfg.embed_dim, cfg.head_hidden, rng),
        dec_({cfg.det_dim + cfg.stoch_dim, cfg.dec_hidden, cfg.obs_dim}, rng) {}

  ModelState initial_state(int batch) const override {
    ModelState st;
    st.batch = batch;
    LatentBatch lb;
    lb.h = Tensor::zeros({batch, cfg_.det_dim});
    lb.s = Tensor::zeros({batch, cfg_.stoch_dim});
    lb.mean = Tensor::zeros({batch, cfg_.stoch_dim});
    lb.log_std = Tensor::zeros({batch, cfg_.stoch_dim});
    st.branches.push_back(std::move(lb));
    return st;
  }

  ModelState prior_step(Tape& t, const ModelState& prev, const Tensor& action,
                        Rng& rng) const override {
    Tensor h = branch_.advance(t, prev.branches[0], action);
    ModelState st;
    st.batch = prev.batch;
    st.branches.push_back(branch_.from_stats(t, h, branch_.prior_stats(t, h), rng));
    return st;
  }

  ModelState posterior_step(Tape& t, const ModelState& prev, const Tensor& action,
                            const Tensor& obs, Rng& rng) const override {
    Tensor embed = enc_.forward(t, obs);
    ModelState st;
    st.batch = prev.batch;
    Tensor h = branch_.advance(t, prev.branches[0], action);
    st.branches.push_back(branch_.from_stats(t, h, branch_.post_stats(t, h, embed), rng));
    return st;
  }

  Tensor decode(Tape& t, const ModelState& state) const override {
    return decode_feat(t, feat(t, state));
  }

  Tensor feat(Tape& t, const ModelState& state) const override {
    return concat(t, {state.branches[0].h, state.branches[0].s});
  }
  Tensor motor_feat(Tape& t, const ModelState& state) const override { return feat(t, state); }
  Tensor sensor_feat(Tape& t, const ModelState& state) const override { return feat(t, state); }
  int feat_dim() const override { return cfg_.det_dim + cfg_.stoch_dim; }
  int motor_feat_dim() const override { return feat_dim(); }
  int sensor_feat_dim() const override { return feat_dim(); }

  void collect(NamedParams& out) const override {
    enc_.collect("rssm.enc", out);
    branch_.collect("rssm", out);
    dec_.collect("rssm.dec", out);
  }

 protected:
  Tensor encode(Tape& t, const Tensor& obs) const override { return enc_.forward(t, obs); }
  Tensor decode_feat(Tape& t, const Tensor& feats) const override { return dec_.forward(t, feats); }

  ModelState filter_step(Tape& t, const ModelState& prev, const Tensor& action,
                         const Tensor& embed, Rng& rng, Tensor* kl_out) const override {
    Tensor h = branch_.advance(t, prev.branches[0], action);
    GaussStats prior = branch_.prior_stats(t, h);
    GaussStats post = branch_.post_stats(t, h, embed);
    ModelState st;
    st.batch = prev.batch;
    st.branches.push_back(branch_.from_stats(t, h, post, rng));
    *kl_out = kl_with_direction(t, post, prior, cfg_.kl_direction);
    return st;
  }

 private:
  Mlp enc_;
  Branch branch_;
  Mlp dec_;
};

/// Two parallel branches: the motor branch sees only the motor action, the
/// sensor branch only the camera action; a joint decoder reads both.
class DecoupledRssm : public RssmBase {
 public:
  DecoupledRssm(const WorldModelConfig& cfg, Rng& rng)
      : RssmBase(cfg),
        enc_({cfg.obs_dim, cfg.enc_hidden, cfg.embed_dim}, rng),
        motor_(1, cfg.det_dim, cfg.stoch_dim, cfg.embed_dim, cfg.head_hidden, rng),
        sensor_(3, cfg.sensor_det_dim, cfg.sensor_stoch_dim, cfg.embed_dim, cfg.head_hidden, rng),
        dec_({cfg.det_dim + cfg.stoch_dim + cfg.sensor_det_dim + cfg.sensor_stoch_dim,
              cfg.dec_hidden, cfg.obs_dim},
             rng) {}

  ModelState initial_state(int batch) const override {
    ModelState st;
    st.batch = batch;
    LatentBatch mz;
    mz.h = Tensor::zeros({batch, cfg_.det_dim});
    mz.s = Tensor::zeros({batch, cfg_.stoch_dim});
    mz.mean = Tensor::zeros({batch, cfg_.stoch_dim});
    mz.log_std = Tensor::zeros({batch, cfg_.stoch_dim});
    st.branches.push_back(std::move(mz));
    LatentBatch sc;
    sc.h = Tensor::zeros({batch, cfg_.sensor_det_dim});
    sc.s = Tensor::zeros({batch, cfg_.sensor_stoch_dim});
    sc.mean = Tensor::zeros({batch, cfg_.sensor_stoch_dim});
    sc.log_std = Tensor::zeros({batch, cfg_.sensor_stoch_dim});
    st.branches.push_back(std::move(sc));
    return st;
  }

  ModelState prior_step(Tape& t, const ModelState& prev, const Tensor& action,
                        Rng& rng) const override {
    Tensor az = slice_last(t, action, 0, 1);
    Tensor ac = slice_last(t, action, 1, 4);
    ModelState st;
    st.batch = prev.batch;
    Tensor hz = motor_.advance(t, prev.branches[0], az);
    st.branches.push_back(motor_.from_stats(t, hz, motor_.prior_stats(t, hz), rng));
    Tensor hc = sensor_.advance(t, prev.branches[1], ac);
    st.branches.push_back(sensor_.from_stats(t, hc, sensor_.prior_stats(t, hc), rng));
    return st;
  }

  ModelState posterior_step(Tape& t, const ModelState& prev, const Tensor& action,
                            const Tensor& obs, Rng& rng) const override {
    Tensor embed = enc_.forward(t, obs);
    return filter_with_embed(t, prev, action, embed, rng, nullptr);
  }

  Tensor decode(Tape& t, const ModelState& state) const override {
    return decode_feat(t, feat(t, state));
  }

  Tensor feat(Tape& t, const ModelState& state) const override {
    return concat(t, {state.branches[0].h, state.branches[0].s, state.branches[1].h,
                      state.branches[1].s});
  }
  Tensor motor_feat(Tape& t, const ModelState& state) const override {
    return concat(t, {state.branches[0].h, state.branches[0].s});
  }
  Tensor sensor_feat(Tape& t, const ModelState& state) const override {
    return concat(t, {state.branches[1].h, state.branches[1].s});
  }
  int feat_dim() const override {
    return cfg_.det_dim + cfg_.stoch_dim + cfg_.sensor_det_dim + cfg_.sensor_stoch_dim;
  }
  int motor_feat_dim() const override { return cfg_.det_dim + cfg_.stoch_dim; }
  int sensor_feat_dim() const override { return cfg_.sensor_det_dim + cfg_.sensor_stoch_dim; }

  void collect(NamedParams& out) const override {
    enc_.collect("rssm.enc", out);
    motor_.collect("rssm.motor", out);
    sensor_.collect("rssm.sensor", out);
    dec_.collect("rssm.dec", out);
  }

 protected:
  Tensor encode(Tape& t, const Tensor& obs) const override { return enc_.forward(t, obs); }
  Tensor decode_feat(Tape& t, const Tensor& feats) const override { return dec_.forward(t, feats); }

  ModelState filter_step(Tape& t, const ModelState& prev, const Tensor& action,
                         const Tensor& embed, Rng& rng, Tensor* kl_out) const override {
    return filter_with_embed(t, prev, action, embed, rng, kl_out);
  }

 private:
  ModelState filter_with_embed(Tape& t, const ModelState& prev, const Tensor& action,
                               const Tensor& embed, Rng& rng, Tensor* kl_out) const {
    Tensor az = slice_last(t, action, 0, 1);
    Tensor ac = slice_last(t, action, 1, 4);
    ModelState st;
    st.batch = prev.batch;

    Tensor hz = motor_.advance(t, prev.branches[0], az);
    GaussStats prior_z = motor_.prior_stats(t, hz);
    GaussStats post_z = motor_.post_stats(t, hz, embed);
    st.branches.push_back(motor_.from_stats(t, hz, post_z, rng));

    Tensor hc = sensor_.advance(t, prev.branches[1], ac);
    GaussStats prior_c = sensor_.prior_stats(t, hc);
    GaussStats post_c = sensor_.post_stats(t, hc, embed);
    st.branches.push_back(sensor_.from_stats(t, hc, post_c, rng));

    if (kl_out) {
      *kl_out = add(t, kl_with_direction(t, post_z, prior_z, cfg_.kl_direction),
                    kl_with_direction(t, post_c, prior_c, cfg_.kl_direction));
    }
    return st;
  }

  Mlp enc_;
  Branch motor_, sensor_;
  Mlp dec_;
};

}  // namespace

ModelState detach_state(const ModelState& state) {
  ModelState out;
  out.batch = state.batch;
  for (const auto& b : state.branches) {
    LatentBatch lb;
    lb.h = detach(b.h);
    lb.s = detach(b.s);
    lb.mean = detach(b.mean);
    lb.log_std = detach(b.log_std);
    out.branches.push_back(std::move(lb));
  }
  return out;
}

std::unique_ptr<WorldModel> make_world_model(const WorldModelConfig& cfg, Rng& rng) {
  if (cfg.decoupled) return std::make_unique<DecoupledRssm>(cfg, rng);
  return std::make_unique<CoupledRssm>(cfg, rng);
}

ImaginedTrajectory imagine(Tape& t, const WorldModel& model, const ModelState& start, int horizon,
                           const std::function<Tensor(Tape&, const ModelState&)>& policy,
                           Rng& rng) {
  if (horizon < 1) throw ConfigError("imagine: horizon must be >= 1");
  ImaginedTrajectory traj;
  traj.states.push_back(start);
  for (int i = 0; i < horizon; ++i) {
    Tensor action = policy(t, traj.states.back());
    traj.actions.push_back(action);
    traj.states.push_back(model.prior_step(t, traj.states.back(), action, rng));
  }
  return traj;
}

}  // namespace sensor
