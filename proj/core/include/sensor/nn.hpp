#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sensor/rng.hpp"
#include "sensor/tensor.hpp"

namespace sensor {

// log-std outputs of every Gaussian head are clamped to this range before
// exponentiation
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Ordered name -> tensor registry; the order defines checkpoint layout and
/// optimizer state indexing, so it must be deterministic.
struct NamedParams {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(const std::string& name, const Tensor& t) { items.emplace_back(name, t); }
  void merge(const NamedParams& other) {
    items.insert(items.end(), other.items.begin(), other.items.end());
  }
  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    out.reserve(items.size());
    for (const auto& [_, t] : items) out.push_back(t);
    return out;
  }
};

/// Affine layer. Weights init uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)),
/// biases zero.
struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]

  Linear() = default;
  Linear(int in, int out, Rng& rng);
  Tensor forward(Tape& t, const Tensor& x) const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

/// MLP with tanh hidden activations and a linear output layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& dims, Rng& rng);

  Tensor forward(Tape& t, const Tensor& x) const;
  void collect(const std::string& prefix, NamedParams& out) const;
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  std::vector<Linear> layers_;
  int in_dim_ = 0, out_dim_ = 0;
};

/// Adam with decoupled weight decay and global gradient-norm clipping.
class AdamW {
 public:
  struct Config {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    double clip_norm = 100.0;
  };

  AdamW() = default;
  AdamW(std::vector<Tensor> params, Config cfg);

  void zero_grad();
  /// Clip the group's global grad norm, then apply one update.
  void step();
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  Config cfg_;
  long step_count_ = 0;
  double last_grad_norm_ = 0.0;
};

}  // namespace sensor
