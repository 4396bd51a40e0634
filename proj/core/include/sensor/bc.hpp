#pragma once

#include "sensor/trainer.hpp"

namespace sensor {

/// Behavior cloning net: flattened frame -> tanh MLP -> 4 actions (tanh
/// output keeps them inside the boxes). Trained by mean squared error
/// against expert actions; the demo set's sensor actions are all zero, so
/// the camera head regresses to zero.
class BcPolicy {
 public:
  BcPolicy(int obs_dim, Rng& rng);

  Tensor forward(Tape& t, const Tensor& obs) const;
  void collect(NamedParams& out) const;  // bc.*
  int obs_dim() const { return obs_dim_; }

 private:
  int obs_dim_;
  Mlp net_;
};

std::unique_ptr<Agent> make_bc_agent(const BcPolicy& policy);

/// One supervised step on a random minibatch of (frame, action) pairs drawn
/// from the demo episodes. Returns the batch MSE.
double bc_train_step(BcPolicy& policy, const std::vector<EpisodeRecord>& demos, int batch,
                     AdamW& opt, Rng& rng);

}  // namespace sensor
