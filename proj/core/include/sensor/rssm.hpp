#pragma once

#include <functional>
#include <memory>

#include "sensor/episode.hpp"
#include "sensor/nn.hpp"

namespace sensor {

enum class KlDirection { posterior_to_prior, prior_to_posterior };

struct WorldModelConfig {
  int obs_dim = 1024;  // resolution^2
  int det_dim = 64;
  int stoch_dim = 16;
  int embed_dim = 128;
  int enc_hidden = 256;
  int dec_hidden = 256;
  int head_hidden = 64;
  double beta = 1.0;
  double free_nats = 1.0;
  bool decoupled = false;
  // branch sizes of the two-RSSM variant (motor branch uses det/stoch above)
  int sensor_det_dim = 32;
  int sensor_stoch_dim = 8;
  KlDirection kl_direction = KlDirection::posterior_to_prior;
};

/// One latent branch at one time step: deterministic recurrent vector plus a
/// stochastic sample with the Gaussian stats it was drawn from. All tensors
/// are [batch, dim].
struct LatentBatch {
  Tensor h, s, mean, log_std;
};

/// Full latent state: one branch for the coupled model, (motor, sensor) for
/// the decoupled one.
struct ModelState {
  std::vector<LatentBatch> branches;
  int batch = 0;
};

struct ObserveResult {
  Tensor loss;                        // scalar, mean over batch
  std::vector<ModelState> posteriors;  // one per time step, in-graph
  ModelState stacked_posterior;        // same states stacked step-major [L*B, .]
  double recon_mse_per_pixel = 0.0;
  double kl_mean = 0.0;  // raw KL per sequence step, before free-nats
  double recon_term = 0.0;
  double kl_term = 0.0;  // after free-nats and beta, as summed into the loss
};

class WorldModel {
 public:
  virtual ~WorldModel() = default;

  virtual ModelState initial_state(int batch) const = 0;
  virtual ModelState prior_step(Tape& t, const ModelState& prev, const Tensor& action,
                                Rng& rng) const = 0;
  virtual ModelState posterior_step(Tape& t, const ModelState& prev, const Tensor& action,
                                    const Tensor& obs, Rng& rng) const = 0;
  virtual Tensor decode(Tape& t, const ModelState& state) const = 0;

  /// ELBO-style loss over a batch of sequences plus the posterior rollout.
  virtual ObserveResult observe_sequence(Tape& t, const SequenceBatch& batch, Rng& rng) const = 0;

  virtual Tensor feat(Tape& t, const ModelState& state) const = 0;
  virtual Tensor motor_feat(Tape& t, const ModelState& state) const = 0;
  virtual Tensor sensor_feat(Tape& t, const ModelState& state) const = 0;
  virtual int feat_dim() const = 0;
  virtual int motor_feat_dim() const = 0;
  virtual int sensor_feat_dim() const = 0;

  virtual void collect(NamedParams& out) const = 0;
  virtual const WorldModelConfig& config() const = 0;
};

/// Detached copy (values only, no gradient paths).
ModelState detach_state(const ModelState& state);

std::unique_ptr<WorldModel> make_world_model(const WorldModelConfig& cfg, Rng& rng);

struct ImaginedTrajectory {
  std::vector<ModelState> states;  // horizon+1 entries; states[0] is the start
  std::vector<Tensor> actions;     // horizon entries, [batch, 4]
};

/// Rolls `horizon` prior transitions from `start` under the given policy.
/// Pure latent-space rollout; there is no environment access by construction.
ImaginedTrajectory imagine(Tape& t, const WorldModel& model, const ModelState& start, int horizon,
                           const std::function<Tensor(Tape&, const ModelState&)>& policy, Rng& rng);

}  // namespace sensor
