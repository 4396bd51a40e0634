#include "sensor/nn.hpp"

#include <cmath>

#include "sensor/errors.hpp"

namespace sensor {

Linear::Linear(int in, int out, Rng& rng) {
  if (in <= 0 || out <= 0) throw ConfigError("linear: non-positive layer size");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> wv(static_cast<std::size_t>(in) * out);
  for (auto& v : wv) v = rng.uniform(-bound, bound);
  w = Tensor::leaf({in, out}, std::move(wv), true);
  b = Tensor::zeros({out}, true);
}

Tensor Linear::forward(Tape& t, const Tensor& x) const { return add(t, matmul(t, x, w), b); }

void Linear::collect(const std::string& prefix, NamedParams& out) const {
  out.add(prefix + ".w", w);
  out.add(prefix + ".b", b);
}

Mlp::Mlp(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("mlp: need at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) layers_.emplace_back(dims[i], dims[i + 1], rng);
  in_dim_ = dims.front();
  out_dim_ = dims.back();
}

Tensor Mlp::forward(Tape& t, const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(t, h);
    if (i + 1 < layers_.size()) h = tanh(t, h);
  }
  return h;
}

void Mlp::collect(const std::string& prefix, NamedParams& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(prefix + ".l" + std::to_string(i), out);
  }
}

AdamW::AdamW(std::vector<Tensor> params, Config cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.clear_grad();
}

void AdamW::step() {
  double sq = 0.0;
  for (const auto& p : params_) {
    if (!p.has_grad()) continue;
    for (double g : p.raw()->grad) sq += g * g;
  }
  last_grad_norm_ = std::sqrt(sq);
  const double rescale = (last_grad_norm_ > cfg_.clip_norm && last_grad_norm_ > 0.0)
                             ? cfg_.clip_norm / last_grad_norm_
                             : 1.0;
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& val = p.value();
    auto& m = m_[i];
    auto& v = v_[i];
    const bool hg = p.has_grad();
    for (std::size_t j = 0; j < val.size(); ++j) {
      const double g = hg ? p.raw()->grad[j] * rescale : 0.0;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      val[j] -= cfg_.lr * (mh / (std::sqrt(vh) + cfg_.eps) + cfg_.weight_decay * val[j]);
    }
  }
}

}  // namespace sensor
