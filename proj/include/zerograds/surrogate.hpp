#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "zerograds/core.hpp"
#include "zerograds/rng.hpp"

namespace zg {

enum class Activation { kElu, kTanh };
enum class OutputHead { kSoftplus, kLinear };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);
OutputHead parse_output_head(const std::string& name);
std::string to_string(OutputHead h);

namespace detail {

template <typename Scalar>
Scalar activate(Activation a, Scalar z) {
  using std::exp;
  using std::expm1;
  using std::tanh;
  switch (a) {
    case Activation::kElu:
      return z > Scalar(0) ? z : expm1(z);
    case Activation::kTanh:
      return tanh(z);
  }
  return z;
}

template <typename Scalar>
Scalar activate_derivative(Activation a, Scalar z) {
  using std::exp;
  using std::tanh;
  switch (a) {
    case Activation::kElu:
      return z > Scalar(0) ? Scalar(1) : exp(z);
    case Activation::kTanh: {
      const Scalar t = tanh(z);
      return Scalar(1) - t * t;
    }
  }
  return Scalar(1);
}

template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::exp;
  using std::log1p;
  // log(1 + e^z) without overflow.
  return z > Scalar(0) ? z + log1p(exp(-z)) : log1p(exp(z));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

}  // namespace detail

/// Fully connected network h(x, phi): R^n -> R.
///
/// phi is one flat vector. Per layer it holds the (fan_out x fan_in)
/// weight matrix in column-major order followed by the fan_out biases.
/// Inputs are first mapped affinely, x_hat = (x - center) * scale, which
/// the optimizer uses to send the task domain to [-1, 1]^n. The output is
/// mapped back the same way: h = out_offset + out_scale * head(net(x_hat)).
template <typename Scalar = double>
class MlpSurrogate {
 public:
  using Vec = VectorX<Scalar>;
  using Mat = MatrixX<Scalar>;

  /// Per-call activations for one input, reused across calls.
  struct Workspace {
    std::vector<Vec> pre;   // pre-activations per layer
    std::vector<Vec> post;  // post[0] = normalized input
    Scalar value = Scalar(0);
  };

  MlpSurrogate() = default;
  MlpSurrogate(std::vector<int> layer_sizes, Activation activation,
               OutputHead head = OutputHead::kSoftplus)
      : sizes_(std::move(layer_sizes)), activation_(activation), head_(head) {
    if (sizes_.size() < 2 || sizes_.back() != 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid argument: mlp layer sizes must end in a single output");
    }
    for (int s : sizes_) {
      if (s < 1) throw Error(ErrorKind::kDimension, "dimension: empty mlp layer");
    }
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
      bias_offset_.push_back(offset);
      offset += sizes_[l + 1];
    }
    params_ = Vec::Zero(offset);
    center_ = Vec::Zero(sizes_.front());
    scale_ = Vec::Ones(sizes_.front());
  }

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  /// Draws one uniform per weight, layer by layer, column-major.
  void init_glorot(Rng& rng) {
    params_.setZero();
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const Scalar limit = std::sqrt(Scalar(6) / Scalar(sizes_[l] + sizes_[l + 1]));
      auto w = weights(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          w(i, j) = Scalar(rng.uniform(-1.0, 1.0)) * limit;
        }
      }
    }
  }

  void set_input_map(const Vec& center, const Vec& scale) {
    require_dim(center.size(), input_dim(), "MlpSurrogate::set_input_map");
    require_dim(scale.size(), input_dim(), "MlpSurrogate::set_input_map");
    center_ = center;
    scale_ = scale;
  }

  void set_output_map(Scalar offset, Scalar scale) {
    if (!std::isfinite(offset) || !std::isfinite(scale) || !(scale > Scalar(0))) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid argument: output scale must be finite and positive");
    }
    out_offset_ = offset;
    out_scale_ = scale;
  }
  Scalar output_offset() const { return out_offset_; }
  Scalar output_scale() const { return out_scale_; }
  const Vec& input_center() const { return center_; }
  const Vec& input_scale() const { return scale_; }

  int input_dim() const { return sizes_.front(); }
  Eigen::Index param_count() const { return params_.size(); }
  const Vec& params() const { return params_; }
  void set_params(const Vec& phi) {
    require_dim(phi.size(), param_count(), "MlpSurrogate::set_params");
    params_ = phi;
  }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  OutputHead head() const { return head_; }
  std::size_t layer_count() const { return sizes_.size() - 1; }

  Eigen::Map<Mat> weights(std::size_t l) {
    return Eigen::Map<Mat>(params_.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]);
  }
  Eigen::Map<const Mat> weights(std::size_t l) const {
    return Eigen::Map<const Mat>(params_.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]);
  }
  Eigen::Map<Vec> bias(std::size_t l) {
    return Eigen::Map<Vec>(params_.data() + bias_offset_[l], sizes_[l + 1]);
  }
  Eigen::Map<const Vec> bias(std::size_t l) const {
    return Eigen::Map<const Vec>(params_.data() + bias_offset_[l], sizes_[l + 1]);
  }

  Scalar forward(const Vec& x, Workspace& ws) const {
    require_dim(x.size(), input_dim(), "MlpSurrogate::forward");
    const std::size_t layers = layer_count();
    ws.pre.resize(layers);
    ws.post.resize(layers + 1);
    ws.post[0] = (x - center_).cwiseProduct(scale_);
    for (std::size_t l = 0; l < layers; ++l) {
      ws.pre[l].noalias() = weights(l) * ws.post[l];
      ws.pre[l] += bias(l);
      if (l + 1 < layers) {
        ws.post[l + 1] = ws.pre[l].unaryExpr(
            [a = activation_](Scalar z) { return detail::activate(a, z); });
      }
    }
    const Scalar out = ws.pre.back()[0];
    ws.value = out_offset_ + out_scale_ * (head_ == OutputHead::kSoftplus ? detail::softplus(out) : out);
    return ws.value;
  }

  Scalar forward(const Vec& x) const {
    Workspace ws;
    return forward(x, ws);
  }

  /// d_phi += upstream * dh/dphi, using the activations left in `ws` by
  /// the preceding forward call.
  void backward_params(const Workspace& ws, Scalar upstream, Vec& d_phi) const {
    require_dim(d_phi.size(), param_count(), "MlpSurrogate::backward_params");
    if (upstream == Scalar(0)) return;
    Vec delta = Vec::Constant(1, upstream * out_scale_ * head_slope(ws));
    for (std::size_t l = layer_count(); l-- > 0;) {
      Eigen::Map<Mat>(d_phi.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]).noalias() +=
          delta * ws.post[l].transpose();
      Eigen::Map<Vec>(d_phi.data() + bias_offset_[l], sizes_[l + 1]) += delta;
      if (l > 0) delta = back_through_layer(l, delta, ws);
    }
  }

  /// dh/dx at the input of the preceding forward call.
  Vec backward_input(const Workspace& ws) const {
    Vec delta = Vec::Constant(1, out_scale_ * head_slope(ws));
    for (std::size_t l = layer_count() - 1; l > 0; --l) delta = back_through_layer(l, delta, ws);
    return (weights(0).transpose() * delta).cwiseProduct(scale_);
  }

 private:
  Scalar head_slope(const Workspace& ws) const {
    return head_ == OutputHead::kSoftplus ? detail::sigmoid(ws.pre.back()[0]) : Scalar(1);
  }

  // Gradient w.r.t. pre-activation of layer l-1 given delta at layer l.
  Vec back_through_layer(std::size_t l, const Vec& delta, const Workspace& ws) const {
    Vec g = weights(l).transpose() * delta;
    const Activation a = activation_;
    return g.cwiseProduct(
        ws.pre[l - 1].unaryExpr([a](Scalar z) { return detail::activate_derivative(a, z); }));
  }

  std::vector<int> sizes_;
  Activation activation_ = Activation::kElu;
  OutputHead head_ = OutputHead::kSoftplus;
  std::vector<Eigen::Index> weight_offset_, bias_offset_;
  Vec params_;
  Vec center_, scale_;
  Scalar out_offset_ = Scalar(0);
  Scalar out_scale_ = Scalar(1);
};

/// h(x) = z^T A z with z = (x, 1) and A symmetric of size (n+1)x(n+1).
/// phi is A flattened column-major; writes re-symmetrize.
template <typename Scalar = double>
class QuadraticSurrogate {
 public:
  using Vec = VectorX<Scalar>;
  using Mat = MatrixX<Scalar>;

  QuadraticSurrogate() = default;
  explicit QuadraticSurrogate(int n, Scalar init_scale = Scalar(0))
      : a_(Mat::Identity(n + 1, n + 1) * init_scale) {
    if (n < 1) throw Error(ErrorKind::kDimension, "dimension: quadratic surrogate needs n >= 1");
  }

  int input_dim() const { return static_cast<int>(a_.rows()) - 1; }
  Eigen::Index param_count() const { return a_.size(); }
  const Mat& matrix() const { return a_; }
  void set_matrix(const Mat& a) {
    require_dim(a.rows(), a_.rows(), "QuadraticSurrogate::set_matrix");
    require_dim(a.cols(), a_.cols(), "QuadraticSurrogate::set_matrix");
    a_ = (a + a.transpose()) * Scalar(0.5);
  }
  Vec params() const { return Eigen::Map<const Vec>(a_.data(), a_.size()); }
  void set_params(const Vec& phi) {
    require_dim(phi.size(), param_count(), "QuadraticSurrogate::set_params");
    set_matrix(Eigen::Map<const Mat>(phi.data(), a_.rows(), a_.cols()));
  }

  Vec lift(const Vec& x) const {
    require_dim(x.size(), input_dim(), "QuadraticSurrogate");
    Vec z(x.size() + 1);
    z.head(x.size()) = x;
    z[x.size()] = Scalar(1);
    return z;
  }

  Scalar forward(const Vec& x) const {
    const Vec z = lift(x);
    return z.dot(a_ * z);
  }
  Vec grad_input(const Vec& x) const {
    const Vec z = lift(x);
    return Scalar(2) * (a_ * z).head(x.size());
  }
  /// d_phi += upstream * z z^T (flattened).
  void grad_params(const Vec& x, Scalar upstream, Vec& d_phi) const {
    require_dim(d_phi.size(), param_count(), "QuadraticSurrogate::grad_params");
    if (upstream == Scalar(0)) return;
    const Vec z = lift(x);
    Eigen::Map<Mat>(d_phi.data(), a_.rows(), a_.cols()).noalias() += upstream * z * z.transpose();
  }

 private:
  Mat a_;
};

enum class SurrogateKind { kMlp, kQuadratic };

SurrogateKind parse_surrogate_kind(const std::string& name);
std::string to_string(SurrogateKind k);

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::kMlp;
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::kElu;
  OutputHead head = OutputHead::kLinear;
  double quadratic_init_scale = 0.01;
};

using Surrogate = std::variant<MlpSurrogate<double>, QuadraticSurrogate<double>>;

/// Accumulator for surrogate gradients. d_phi has one entry per parameter.
struct SurrogateGradient {
  Vector d_phi;
  Vector d_input;

  explicit SurrogateGradient(Eigen::Index params = 0, Eigen::Index inputs = 0)
      : d_phi(Vector::Zero(params)), d_input(Vector::Zero(inputs)) {}
  void clear() {
    d_phi.setZero();
    d_input.setZero();
  }
};

/// Fresh surrogate for an n-dimensional problem. For the MLP, `domain`
/// (when non-empty) fixes the input map to [-1, 1]^n.
Surrogate surrogate_init(const SurrogateConfig& cfg, int n, Rng& rng,
                         const Domain* domain = nullptr);

double forward(const Surrogate& s, const ParameterVector& x);
ParameterVector grad_input(const Surrogate& s, const ParameterVector& x);
/// out.d_phi += upstream * dh(x, phi)/dphi.
void grad_params(const Surrogate& s, const ParameterVector& x, double upstream,
                 SurrogateGradient& out);
/// Forward at x, then accumulate upstream_fn(value) * dh/dphi. Returns the
/// forward value. One forward pass instead of two.
double forward_and_grad_params(const Surrogate& s, const ParameterVector& x,
                               const std::function<double(double)>& upstream_fn,
                               SurrogateGradient& out);
/// phi <- phi + delta.
void apply_update(Surrogate& s, const Vector& delta);
Eigen::Index param_count(const Surrogate& s);
Vector params(const Surrogate& s);
void set_params(Surrogate& s, const Vector& phi);
int input_dim(const Surrogate& s);

/// Central-difference check of grad_input and grad_params on random
/// surrogates of one kind. Errors are relative, per gradient vector:
/// |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2, 1e-12).
struct GradientCheckReport {
  int instances = 0;
  double max_input_error = 0.0;
  double max_param_error = 0.0;
  bool passed = false;
};
GradientCheckReport gradient_check(SurrogateKind kind, int instances, std::uint64_t seed,
                                   double step = 1e-4, double tolerance = 1e-4);

/// Little-endian checkpoint of phi:
///   bytes 0..7   magic "ZGPHI\0\0\1"
///   u32          kind (0 = mlp, 1 = quadratic)
///   u32          layer-size count L (0 for quadratic)
///   u32[L]       layer sizes (mlp only)
///   u32          input dimension
///   u64          parameter count P
///   f64[P]       phi
///   f64, f64     output offset and scale (mlp only)
void save_checkpoint(const Surrogate& s, const std::string& path);
/// Loads phi into an existing surrogate with the same layout.
void load_checkpoint(Surrogate& s, const std::string& path);

}  // namespace zg
