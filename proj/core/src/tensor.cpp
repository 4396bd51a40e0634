#include "sensor/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

std::vector<double>& ensure_grad(TensorData* t) {
  if (t->grad.empty()) t->grad.assign(t->value.size(), 0.0);
  return t->grad;
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ConfigError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a) {
  throw ConfigError(std::string(op) + ": bad shape " + shape_str(a));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
  }
  return true;
}

Tensor make_result(Tape& t, Shape shape, std::vector<double> value, bool any_grad_input) {
  return Tensor::leaf(std::move(shape), std::move(value), t.recording() && any_grad_input);
}

// Elementwise binary op with optional suffix broadcast of b over a's leading axes.
template <typename Fwd, typename BwdA, typename BwdB>
Tensor binary_op(Tape& t, const char* name, const Tensor& a, const Tensor& b,
                 Fwd fwd, BwdA bwd_a, BwdB bwd_b) {
  if (!is_suffix(b.shape(), a.shape())) shape_fail(name, a.shape(), b.shape());
  const int n = a.size();
  const int nb = b.size();
  std::vector<double> out(n);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (int i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i % nb]);
  Tensor res = make_result(t, a.shape(), std::move(out), a.requires_grad() || b.requires_grad());
  if (res.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = res.ptr();
    t.record([ad, bd, od, bwd_a, bwd_b, n, nb]() {
      if (od->grad.empty()) return;
      const auto& g = od->grad;
      if (ad->requires_grad) {
        auto& ga = ensure_grad(ad.get());
        for (int i = 0; i < n; ++i) ga[i] += bwd_a(g[i], ad->value[i], bd->value[i % nb]);
      }
      if (bd->requires_grad) {
        auto& gb = ensure_grad(bd.get());
        for (int i = 0; i < n; ++i) gb[i % nb] += bwd_b(g[i], ad->value[i], bd->value[i % nb]);
      }
    });
  }
  return res;
}

// Elementwise unary op: fwd maps x to y, bwd maps (out grad, x, y) to x grad.
template <typename Fwd, typename Bwd>
Tensor unary_op(Tape& t, const Tensor& x, Fwd fwd, Bwd bwd) {
  const int n = x.size();
  std::vector<double> out(n);
  const auto& xv = x.value();
  for (int i = 0; i < n; ++i) out[i] = fwd(xv[i]);
  Tensor res = make_result(t, x.shape(), std::move(out), x.requires_grad());
  if (res.requires_grad()) {
    auto xd = x.ptr(), od = res.ptr();
    t.record([xd, od, bwd, n]() {
      if (od->grad.empty()) return;
      auto& gx = ensure_grad(xd.get());
      for (int i = 0; i < n; ++i) gx[i] += bwd(od->grad[i], xd->value[i], od->value[i]);
    });
  }
  return res;
}

}  // namespace

int numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

Tensor Tensor::leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  for (int d : shape) {
    if (d <= 0) throw ConfigError("tensor: non-positive dimension in shape " + shape_str(shape));
  }
  if (numel(shape) != static_cast<int>(value.size())) {
    throw ConfigError("tensor: shape " + shape_str(shape) + " does not match value count " +
                      std::to_string(value.size()));
  }
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(value);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  int n = numel(shape);
  return leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  int n = numel(shape);
  return leaf(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::scalar(double v) { return leaf({1}, {v}, false); }

int Tensor::dim(int i) const {
  int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw ConfigError("tensor: dim index out of range for " + shape_str(shape()));
  return d_->shape[i];
}

double Tensor::item() const {
  if (size() != 1) throw ConfigError("tensor: item() on non-scalar " + shape_str(shape()));
  return d_->value[0];
}

std::vector<double>& Tensor::grad_storage() { return ensure_grad(d_.get()); }

const std::vector<double>& Tensor::grad() const {
  ensure_grad(d_.get());
  return d_->grad;
}

void Tape::backward(const Tensor& loss) {
  if (!recording_) throw FatalError("backward: tape is not recording");
  if (used_) throw FatalError("backward: tape already consumed");
  if (loss.size() != 1) {
    throw FatalError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  used_ = true;
  loss.raw()->grad.assign(1, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  nodes_.clear();
}

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    shape_fail("matmul", a.shape(), b.shape());
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  {
    MapConst A(a.value().data(), m, k);
    MapConst B(b.value().data(), k, n);
    MapMat C(out.data(), m, n);
    C.noalias() = A * B;
  }
  Tensor res = make_result(t, {m, n}, std::move(out), a.requires_grad() || b.requires_grad());
  if (res.requires_grad()) {
    auto ad = a.ptr(), bd = b.ptr(), od = res.ptr();
    t.record([ad, bd, od, m, k, n]() {
      if (od->grad.empty()) return;
      MapConst G(od->grad.data(), m, n);
      if (ad->requires_grad) {
        MapConst B(bd->value.data(), k, n);
        MapMat GA(ensure_grad(ad.get()).data(), m, k);
        GA.noalias() += G * B.transpose();
      }
      if (bd->requires_grad) {
        MapConst A(ad->value.data(), m, k);
        MapMat GB(ensure_grad(bd.get()).data(), k, n);
        GB.noalias() += A.transpose() * G;
      }
    });
  }
  return res;
}

Tensor add(Tape& t, const Tensor& a, const Tensor& b) {
  return binary_op(t, "add", a, b,
                   [](double x, double y) { return x + y; },
                   [](double g, double, double) { return g; },
                   [](double g, double, double) { return g; });
}

Tensor sub(Tape& t, const Tensor& a, const Tensor& b) {
  return binary_op(t, "sub", a, b,
                   [](double x, double y) { return x - y; },
                   [](double g, double, double) { return g; },
                   [](double g, double, double) { return -g; });
}

Tensor mul(Tape& t, const Tensor& a, const Tensor& b) {
  return binary_op(t, "mul", a, b,
                   [](double x, double y) { return x * y; },
                   [](double g, double, double y) { return g * y; },
                   [](double g, double x, double) { return g * x; });
}

Tensor tanh(Tape& t, const Tensor& x) {
  return unary_op(t, x,
                  [](double v) { return std::tanh(v); },
                  [](double g, double, double y) { return g * (1.0 - y * y); });
}

Tensor sigmoid(Tape& t, const Tensor& x) {
  return unary_op(t, x,
                  [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                  [](double g, double, double y) { return g * y * (1.0 - y); });
}

Tensor softplus(Tape& t, const Tensor& x) {
  // log(1 + e^x) computed without overflow for large |x|
  return unary_op(t, x,
                  [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
                  [](double g, double v, double) { return g / (1.0 + std::exp(-v)); });
}

Tensor exp(Tape& t, const Tensor& x) {
  return unary_op(t, x,
                  [](double v) { return std::exp(v); },
                  [](double g, double, double y) { return g * y; });
}

Tensor log(Tape& t, const Tensor& x) {
  return unary_op(t, x,
                  [](double v) { return std::log(v); },
                  [](double g, double v, double) { return g / v; });
}

Tensor sqrt(Tape& t, const Tensor& x) {
  return unary_op(t, x,
                  [](double v) { return std::sqrt(v); },
                  [](double g, double, double y) { return 0.5 * g / y; });
}

Tensor scale(Tape& t, const Tensor& x, double k) {
  return unary_op(t, x,
                  [k](double v) { return k * v; },
                  [k](double g, double, double) { return k * g; });
}

Tensor add_scalar(Tape& t, const Tensor& x, double k) {
  return unary_op(t, x,
                  [k](double v) { return v + k; },
                  [](double g, double, double) { return g; });
}

Tensor clamp(Tape& t, const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("clamp: lo > hi");
  return unary_op(t, x,
                  [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
                  [lo, hi](double g, double v, double) { return (v >= lo && v <= hi) ? g : 0.0; });
}

Tensor sum(Tape& t, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  Tensor res = make_result(t, {1}, {acc}, x.requires_grad());
  if (res.requires_grad()) {
    auto xd = x.ptr();
    auto od = res.ptr();
    t.record([xd, od]() {
      if (od->grad.empty()) return;
      const double g = od->grad[0];
      auto& gx = ensure_grad(xd.get());
      for (auto& v : gx) v += g;
    });
  }
  return res;
}

Tensor mean(Tape& t, const Tensor& x) { return scale(t, sum(t, x), 1.0 / x.size()); }

Tensor concat(Tape& t, std::span<const Tensor> xs) {
  if (xs.empty()) throw ConfigError("concat: no inputs");
  Shape lead(xs[0].shape().begin(), xs[0].shape().end() - 1);
  int total_last = 0;
  bool any_grad = false;
  for (const auto& x : xs) {
    Shape l(x.shape().begin(), x.shape().end() - 1);
    if (l != lead) shape_fail("concat", xs[0].shape(), x.shape());
    total_last += x.dim(-1);
    any_grad = any_grad || x.requires_grad();
  }
  const int rows = numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total_last);
  std::vector<double> out(static_cast<std::size_t>(rows) * total_last);
  int off = 0;
  for (const auto& x : xs) {
    const int w = x.dim(-1);
    const auto& v = x.value();
    for (int r = 0; r < rows; ++r) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(r) * w,
                v.begin() + static_cast<std::ptrdiff_t>(r + 1) * w,
                out.begin() + static_cast<std::ptrdiff_t>(r) * total_last + off);
    }
    off += w;
  }
  Tensor res = make_result(t, std::move(out_shape), std::move(out), any_grad);
  if (res.requires_grad()) {
    std::vector<std::shared_ptr<TensorData>> parts;
    for (const auto& x : xs) parts.push_back(x.ptr());
    auto od = res.ptr();
    t.record([parts, od, rows, total_last]() {
      if (od->grad.empty()) return;
      const auto& g = od->grad;
      int off = 0;
      for (const auto& p : parts) {
        const int w = static_cast<int>(p->value.size()) / rows;
        if (p->requires_grad) {
          auto& gp = ensure_grad(p.get());
          for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < w; ++c) {
              gp[static_cast<std::size_t>(r) * w + c] +=
                  g[static_cast<std::size_t>(r) * total_last + off + c];
            }
          }
        }
        off += w;
      }
    });
  }
  return res;
}

Tensor concat(Tape& t, std::initializer_list<Tensor> xs) {
  return concat(t, std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor slice_last(Tape& t, const Tensor& x, int lo, int hi) {
  const int w = x.dim(-1);
  if (lo < 0 || hi > w || lo >= hi) {
    throw ConfigError("slice_last: range [" + std::to_string(lo) + "," + std::to_string(hi) +
                      ") invalid for shape " + shape_str(x.shape()));
  }
  const int rows = x.size() / w;
  const int ow = hi - lo;
  Shape out_shape = x.shape();
  out_shape.back() = ow;
  std::vector<double> out(static_cast<std::size_t>(rows) * ow);
  const auto& v = x.value();
  for (int r = 0; r < rows; ++r) {
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(r) * w + lo,
              v.begin() + static_cast<std::ptrdiff_t>(r) * w + hi,
              out.begin() + static_cast<std::ptrdiff_t>(r) * ow);
  }
  Tensor res = make_result(t, std::move(out_shape), std::move(out), x.requires_grad());
  if (res.requires_grad()) {
    auto xd = x.ptr(), od = res.ptr();
    t.record([xd, od, rows, w, ow, lo]() {
      if (od->grad.empty()) return;
      auto& gx = ensure_grad(xd.get());
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < ow; ++c) {
          gx[static_cast<std::size_t>(r) * w + lo + c] += od->grad[static_cast<std::size_t>(r) * ow + c];
        }
      }
    });
  }
  return res;
}

Tensor slice_rows(Tape& t, const Tensor& x, int lo, int hi) {
  if (x.rank() != 2) shape_fail("slice_rows", x.shape());
  const int rows = x.dim(0), cols = x.dim(1);
  if (lo < 0 || hi > rows || lo >= hi) {
    throw ConfigError("slice_rows: range [" + std::to_string(lo) + "," + std::to_string(hi) +
                      ") invalid for shape " + shape_str(x.shape()));
  }
  const int orows = hi - lo;
  std::vector<double> out(x.value().begin() + static_cast<std::ptrdiff_t>(lo) * cols,
                          x.value().begin() + static_cast<std::ptrdiff_t>(hi) * cols);
  Tensor res = make_result(t, {orows, cols}, std::move(out), x.requires_grad());
  if (res.requires_grad()) {
    auto xd = x.ptr(), od = res.ptr();
    t.record([xd, od, lo, cols, orows]() {
      if (od->grad.empty()) return;
      auto& gx = ensure_grad(xd.get());
      for (std::size_t i = 0; i < static_cast<std::size_t>(orows) * cols; ++i) {
        gx[static_cast<std::size_t>(lo) * cols + i] += od->grad[i];
      }
    });
  }
  return res;
}

Tensor concat_rows(Tape& t, std::span<const Tensor> xs) {
  if (xs.empty()) throw ConfigError("concat_rows: no inputs");
  const int cols = xs[0].rank() == 2 ? xs[0].dim(1) : -1;
  int total_rows = 0;
  bool any_grad = false;
  for (const auto& x : xs) {
    if (x.rank() != 2 || x.dim(1) != cols) shape_fail("concat_rows", xs[0].shape(), x.shape());
    total_rows += x.dim(0);
    any_grad = any_grad || x.requires_grad();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total_rows) * cols);
  for (const auto& x : xs) out.insert(out.end(), x.value().begin(), x.value().end());
  Tensor res = make_result(t, {total_rows, cols}, std::move(out), any_grad);
  if (res.requires_grad()) {
    std::vector<std::shared_ptr<TensorData>> parts;
    for (const auto& x : xs) parts.push_back(x.ptr());
    auto od = res.ptr();
    t.record([parts, od]() {
      if (od->grad.empty()) return;
      std::size_t off = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) {
          auto& gp = ensure_grad(p.get());
          for (std::size_t i = 0; i < p->value.size(); ++i) gp[i] += od->grad[off + i];
        }
        off += p->value.size();
      }
    });
  }
  return res;
}

Tensor concat_rows(Tape& t, std::initializer_list<Tensor> xs) {
  return concat_rows(t, std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor detach(const Tensor& x) { return Tensor::leaf(x.shape(), x.value(), false); }

Tensor gaussian_sample(Tape& t, const Tensor& mean, const Tensor& log_std, const Tensor& noise) {
  if (mean.shape() != log_std.shape() || mean.shape() != noise.shape()) {
    throw ConfigError("gaussian_sample: shapes " + shape_str(mean.shape()) + ", " +
                      shape_str(log_std.shape()) + ", " + shape_str(noise.shape()) + " must match");
  }
  const int n = mean.size();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = mean.value()[i] + std::exp(log_std.value()[i]) * noise.value()[i];
  Tensor res = make_result(t, mean.shape(), std::move(out), mean.requires_grad() || log_std.requires_grad());
  if (res.requires_grad()) {
    auto md = mean.ptr(), sd = log_std.ptr(), nd = noise.ptr(), od = res.ptr();
    t.record([md, sd, nd, od, n]() {
      if (od->grad.empty()) return;
      const auto& g = od->grad;
      if (md->requires_grad) {
        auto& gm = ensure_grad(md.get());
        for (int i = 0; i < n; ++i) gm[i] += g[i];
      }
      if (sd->requires_grad) {
        auto& gs = ensure_grad(sd.get());
        for (int i = 0; i < n; ++i) gs[i] += g[i] * std::exp(sd->value[i]) * nd->value[i];
      }
    });
  }
  return res;
}

Tensor kl_diag_gauss(Tape& t, const Tensor& mean_p, const Tensor& log_std_p,
                     const Tensor& mean_q, const Tensor& log_std_q) {
  if (mean_p.shape() != log_std_p.shape() || mean_p.shape() != mean_q.shape() ||
      mean_p.shape() != log_std_q.shape()) {
    throw ConfigError("kl_diag_gauss: all four shapes must match, got " + shape_str(mean_p.shape()) +
                      ", " + shape_str(log_std_p.shape()) + ", " + shape_str(mean_q.shape()) + ", " +
                      shape_str(log_std_q.shape()));
  }
  const int n = mean_p.size();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lsp = log_std_p.value()[i], lsq = log_std_q.value()[i];
    const double dm = mean_p.value()[i] - mean_q.value()[i];
    acc += (lsq - lsp) + (std::exp(2.0 * lsp) + dm * dm) * std::exp(-2.0 * lsq) * 0.5 - 0.5;
  }
  bool rg = mean_p.requires_grad() || log_std_p.requires_grad() || mean_q.requires_grad() ||
            log_std_q.requires_grad();
  Tensor res = make_result(t, {1}, {acc}, rg);
  if (res.requires_grad()) {
    auto mpd = mean_p.ptr(), lpd = log_std_p.ptr(), mqd = mean_q.ptr(), lqd = log_std_q.ptr();
    auto od = res.ptr();
    t.record([mpd, lpd, mqd, lqd, od, n]() {
      if (od->grad.empty()) return;
      const double g = od->grad[0];
      for (int i = 0; i < n; ++i) {
        const double lsp = lpd->value[i], lsq = lqd->value[i];
        const double dm = mpd->value[i] - mqd->value[i];
        const double inv_vq = std::exp(-2.0 * lsq);
        const double vp = std::exp(2.0 * lsp);
        if (mpd->requires_grad) ensure_grad(mpd.get())[i] += g * dm * inv_vq;
        if (mqd->requires_grad) ensure_grad(mqd.get())[i] -= g * dm * inv_vq;
        if (lpd->requires_grad) ensure_grad(lpd.get())[i] += g * (vp * inv_vq - 1.0);
        if (lqd->requires_grad) ensure_grad(lqd.get())[i] += g * (1.0 - (vp + dm * dm) * inv_vq);
      }
    });
  }
  return res;
}

}  // namespace sensor
