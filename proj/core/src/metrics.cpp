#include "sensor/metrics.hpp"

#include <cstdio>

#include "sensor/errors.hpp"

namespace sensor {

std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : path_(path), os_(path, std::ios::trunc) {
  if (!os_) throw FatalError("metrics: cannot write " + path);
  os_ << kMetricsHeader << "\n";
}

void MetricsWriter::append(const MetricsRow& r) {
  os_ << r.env_step << ',' << r.epoch << ',' << format_metric(r.eval_return_mean) << ','
      << format_metric(r.eval_return_std) << ',' << format_metric(r.model_loss) << ','
      << format_metric(r.kl_term) << ',' << format_metric(r.disc_loss) << ','
      << format_metric(r.actor_loss) << ',' << format_metric(r.critic_loss) << ','
      << format_metric(r.eps) << ',' << format_metric(r.sensor_d) << ','
      << format_metric(r.sensor_a) << ',' << format_metric(r.sensor_e) << '\n';
  os_.flush();
  if (!os_) throw FatalError("metrics: write failed for " + path_);
}

}  // namespace sensor
