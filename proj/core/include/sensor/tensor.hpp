#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sensor {

using Shape = std::vector<int>;

int numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward reaches this tensor
  bool requires_grad = false;
};

/// Dense 64-bit float tensor, row-major. Cheap to copy (shared storage);
/// value mutation is reserved for optimizer steps on leaf parameters.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> value, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  int rank() const { return static_cast<int>(d_->shape.size()); }
  int size() const { return static_cast<int>(d_->value.size()); }
  /// Dimension i; negative i counts from the back.
  int dim(int i) const;

  std::vector<double>& value() { return d_->value; }
  const std::vector<double>& value() const { return d_->value; }
  /// Single element of a one-element tensor.
  double item() const;

  bool requires_grad() const { return d_->requires_grad; }
  bool has_grad() const { return !d_->grad.empty(); }
  /// Gradient storage, allocated (zero-filled) on first use.
  std::vector<double>& grad_storage();
  /// Gradient values; zero-filled if backward never reached this tensor.
  const std::vector<double>& grad() const;
  void clear_grad() { d_->grad.clear(); }

  TensorData* raw() const { return d_.get(); }
  const std::shared_ptr<TensorData>& ptr() const { return d_; }

 private:
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<TensorData> d_;
};

/// Ordered record of executed ops. backward() replays the record once, in
/// reverse, accumulating gradients; a tape is single-use after backward.
/// A non-recording tape executes ops forward-only (evaluation mode).
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }
  void record(std::function<void()> node) { nodes_.push_back(std::move(node)); }

  /// Reverse pass from a scalar loss produced under this tape.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> nodes_;
  bool recording_ = true;
  bool used_ = false;
};

// Forward op family. Every op validates shapes and throws ConfigError naming
// the op and the offending shapes. Binary elementwise ops accept equal shapes
// or a right operand whose shape is a suffix of the left one (broadcast over
// leading axes), which covers bias addition.
Tensor matmul(Tape& t, const Tensor& a, const Tensor& b);
Tensor add(Tape& t, const Tensor& a, const Tensor& b);
Tensor sub(Tape& t, const Tensor& a, const Tensor& b);
Tensor mul(Tape& t, const Tensor& a, const Tensor& b);
Tensor tanh(Tape& t, const Tensor& x);
Tensor sigmoid(Tape& t, const Tensor& x);
Tensor softplus(Tape& t, const Tensor& x);
Tensor exp(Tape& t, const Tensor& x);
Tensor log(Tape& t, const Tensor& x);
Tensor sqrt(Tape& t, const Tensor& x);
Tensor scale(Tape& t, const Tensor& x, double k);
Tensor add_scalar(Tape& t, const Tensor& x, double k);
/// Hard clamp; gradient is 1 inside [lo, hi] and 0 outside.
Tensor clamp(Tape& t, const Tensor& x, double lo, double hi);
Tensor sum(Tape& t, const Tensor& x);   // full reduction to a scalar
Tensor mean(Tape& t, const Tensor& x);  // full reduction to a scalar
Tensor concat(Tape& t, std::span<const Tensor> xs);  // along the last axis
Tensor concat(Tape& t, std::initializer_list<Tensor> xs);
/// Elements [lo, hi) of the last axis.
Tensor slice_last(Tape& t, const Tensor& x, int lo, int hi);
/// Rows [lo, hi) of a rank-2 tensor.
Tensor slice_rows(Tape& t, const Tensor& x, int lo, int hi);
/// Stack rank-2 tensors with equal column counts along the first axis.
Tensor concat_rows(Tape& t, std::span<const Tensor> xs);
Tensor concat_rows(Tape& t, std::initializer_list<Tensor> xs);

/// Leaf copy carrying the same values and no gradient path.
Tensor detach(const Tensor& x);

/// Reparameterized diagonal-Gaussian sample mean + exp(log_std) * noise.
/// Differentiable w.r.t. mean and log_std only.
Tensor gaussian_sample(Tape& t, const Tensor& mean, const Tensor& log_std, const Tensor& noise);

/// KL(p || q) between diagonal Gaussians, summed over all elements.
Tensor kl_diag_gauss(Tape& t, const Tensor& mean_p, const Tensor& log_std_p,
                     const Tensor& mean_q, const Tensor& log_std_q);

}  // namespace sensor
