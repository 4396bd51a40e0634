#pragma once

#include <fstream>
#include <string>

namespace sensor {

struct MetricsRow {
  long env_step = 0;
  int epoch = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double model_loss = 0.0;
  double kl_term = 0.0;
  double disc_loss = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double eps = 0.0;
  double sensor_d = 0.0;
  double sensor_a = 0.0;
  double sensor_e = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "env_step,epoch,eval_return_mean,eval_return_std,model_loss,kl_term,disc_loss,actor_loss,"
    "critic_loss,eps,sensor_d,sensor_a,sensor_e";

/// CSV writer with a fixed header and deterministic number formatting, so
/// identical runs produce byte-identical files.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricsRow& row);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream os_;
};

std::string format_metric(double v);

}  // namespace sensor
