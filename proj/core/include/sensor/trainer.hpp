#pragma once

#include <memory>

#include "sensor/config.hpp"
#include "sensor/episode.hpp"
#include "sensor/metrics.hpp"
#include "sensor/policy.hpp"

namespace sensor {

enum class Variant { sensor, vmail, vmail_as, bc, sensor_decoupled };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

/// Viewpoint names of the d{D}a{A}e{E} form, e.g. "d6a30e-10" or "d2.5a90e-45".
SensorState parse_viewpoint(const std::string& name);
std::string viewpoint_name(const SensorState& c);

struct TrainConfig {
  Variant variant = Variant::sensor;
  std::uint64_t seed = 0;
  int total_env_steps = 60000;
  int collect_steps = 100;       // agent steps collected per epoch
  int updates_per_collect = 10;  // training iterations per epoch
  int eval_every = 2000;         // env steps between evaluations
  int eval_episodes = 3;
  int seed_episodes = 5;  // random-policy warmup episodes before training
  int batch = 24;
  int seq_len = 16;
  int horizon = 15;
  int replay_capacity = 300;
  double model_lr = 6e-4;
  double weight_decay = 0.0;
  std::string demos_path = "demos.snsr";
  std::string out_dir = ".";
  std::string run_name;  // defaults to "<variant>_seed<seed>"

  EnvConfig env;
  WorldModelConfig model;
  EnsembleConfig disc;
  PolicyConfig policy;

  // BC-only settings
  int bc_steps = 6000;
  int bc_batch = 64;
  double bc_lr = 1e-3;

  std::string metrics_path() const;
  std::string checkpoint_path() const;
};

/// Reads every recognized key (see README for the full list), rejects
/// unknown ones, and resolves variant-implied settings.
TrainConfig parse_train_config(const KeyValueConfig& kv);
/// Applies the variant's implied settings (actor mode, sensor_enabled,
/// decoupled world model).
void apply_variant(TrainConfig& cfg);

struct TrainResult {
  std::string metrics_path;
  std::string checkpoint_path;
  double final_eval_mean = 0.0;
  double final_eval_std = 0.0;
  SensorState final_viewpoint;
  long env_steps = 0;
};

TrainResult train(const TrainConfig& cfg);
TrainResult train_bc(const TrainConfig& cfg);

/// Evaluation-time policy: maps raw observations to actions, holding
/// whatever recurrent state it needs across one episode.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode() = 0;
  virtual EnvAction act(const Image& obs, bool stochastic, Rng& rng) = 0;
};

std::unique_ptr<Agent> make_model_agent(const WorldModel& model, const PolicyHeads& heads);

struct EvalEpisode {
  double true_return = 0.0;
  std::vector<SensorState> viewpoints;  // per step, after the camera move
};

struct EvalStats {
  double mean_return = 0.0;
  double std_return = 0.0;
  SensorState mean_final_viewpoint;
  std::vector<EvalEpisode> episodes;
};

/// Deterministic-policy rollouts with true-reward accumulation and sensor
/// state logging. Side-effect free with respect to any training state.
EvalStats evaluate_agent(Agent& agent, const EnvConfig& env_cfg, int episodes,
                         std::uint64_t seed, bool stochastic = false);

/// Rebuilds the agent recorded in a checkpoint (any variant) and evaluates it
/// from each given initial viewpoint.
struct ViewpointEval {
  SensorState viewpoint;
  EvalStats stats;
};
std::vector<ViewpointEval> evaluate_checkpoint(const std::string& checkpoint_path,
                                               const TrainConfig& cfg,
                                               const std::vector<SensorState>& viewpoints,
                                               int episodes, std::uint64_t seed);

// Checkpoint meta record names (written alongside network parameters).
inline constexpr const char* kMetaVariant = "meta.variant";
inline constexpr const char* kMetaResolution = "meta.resolution";
inline constexpr const char* kMetaFeatDim = "meta.feat_dim";

}  // namespace sensor
