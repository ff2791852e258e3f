#include "zerograds/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace zg {

Activation parse_activation(const std::string& name) {
  if (name == "elu") return Activation::kElu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorKind::kUnknownName, "unknown activation '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::kElu ? "elu" : "tanh"; }

OutputHead parse_output_head(const std::string& name) {
  if (name == "linear") return OutputHead::kLinear;
  if (name == "softplus") return OutputHead::kSoftplus;
  throw Error(ErrorKind::kUnknownName, "unknown output head '" + name + "'");
}

std::string to_string(OutputHead h) { return h == OutputHead::kLinear ? "linear" : "softplus"; }

SurrogateKind parse_surrogate_kind(const std::string& name) {
  if (name == "mlp") return SurrogateKind::kMlp;
  if (name == "quadratic") return SurrogateKind::kQuadratic;
  throw Error(ErrorKind::kUnknownName, "unknown surrogate kind '" + name + "'");
}

std::string to_string(SurrogateKind k) { return k == SurrogateKind::kMlp ? "mlp" : "quadratic"; }

Surrogate surrogate_init(const SurrogateConfig& cfg, int n, Rng& rng, const Domain* domain) {
  if (n < 1) throw Error(ErrorKind::kDimension, "dimension: surrogate needs n >= 1");
  if (cfg.kind == SurrogateKind::kQuadratic) {
    return QuadraticSurrogate<double>(n, cfg.quadratic_init_scale);
  }
  std::vector<int> sizes{n};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  MlpSurrogate<double> mlp(std::move(sizes), cfg.activation, cfg.head);
  mlp.init_glorot(rng);
  if (domain != nullptr) {
    require_dim(domain->dim(), n, "surrogate_init");
    mlp.set_input_map((domain->lower + domain->upper) * 0.5, domain->extent().cwiseInverse() * 2.0);
  }
  return mlp;
}

double forward(const Surrogate& s, const ParameterVector& x) {
  return std::visit([&](const auto& m) { return m.forward(x); }, s);
}

ParameterVector grad_input(const Surrogate& s, const ParameterVector& x) {
  if (const auto* mlp = std::get_if<MlpSurrogate<double>>(&s)) {
    MlpSurrogate<double>::Workspace ws;
    mlp->forward(x, ws);
    return mlp->backward_input(ws);
  }
  return std::get<QuadraticSurrogate<double>>(s).grad_input(x);
}

void grad_params(const Surrogate& s, const ParameterVector& x, double upstream,
                 SurrogateGradient& out) {
  forward_and_grad_params(s, x, [upstream](double) { return upstream; }, out);
}

double forward_and_grad_params(const Surrogate& s, const ParameterVector& x,
                               const std::function<double(double)>& upstream_fn,
                               SurrogateGradient& out) {
  if (const auto* mlp = std::get_if<MlpSurrogate<double>>(&s)) {
    MlpSurrogate<double>::Workspace ws;
    const double value = mlp->forward(x, ws);
    mlp->backward_params(ws, upstream_fn(value), out.d_phi);
    return value;
  }
  const auto& quad = std::get<QuadraticSurrogate<double>>(s);
  const double value = quad.forward(x);
  quad.grad_params(x, upstream_fn(value), out.d_phi);
  return value;
}

Eigen::Index param_count(const Surrogate& s) {
  return std::visit([](const auto& m) { return m.param_count(); }, s);
}

Vector params(const Surrogate& s) {
  return std::visit([](const auto& m) -> Vector { return m.params(); }, s);
}

void set_params(Surrogate& s, const Vector& phi) {
  std::visit([&](auto& m) { m.set_params(phi); }, s);
}

void apply_update(Surrogate& s, const Vector& delta) {
  require_dim(delta.size(), param_count(s), "apply_update");
  set_params(s, params(s) + delta);
}

int input_dim(const Surrogate& s) {
  return std::visit([](const auto& m) { return m.input_dim(); }, s);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic{'Z', 'G', 'P', 'H', 'I', '\0', '\0', '\1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw Error(ErrorKind::kIo, "io: truncated checkpoint");
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

std::vector<std::uint32_t> layout_of(const Surrogate& s) {
  std::vector<std::uint32_t> layout;
  if (const auto* mlp = std::get_if<MlpSurrogate<double>>(&s)) {
    for (int size : mlp->layer_sizes()) layout.push_back(static_cast<std::uint32_t>(size));
  }
  return layout;
}

}  // namespace

namespace {

double relative_error(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

Surrogate random_surrogate(SurrogateKind kind, int n, Rng& rng) {
  if (kind == SurrogateKind::kQuadratic) {
    QuadraticSurrogate<double> q(n);
    Vector phi(q.param_count());
    for (auto& v : phi) v = rng.uniform(-1.0, 1.0);
    q.set_params(phi);
    return q;
  }
  SurrogateConfig cfg;
  cfg.hidden.assign(1 + rng.below(2), 0);
  for (int& h : cfg.hidden) h = 2 + static_cast<int>(rng.below(7));
  cfg.activation = rng.below(2) == 0 ? Activation::kElu : Activation::kTanh;
  cfg.head = rng.below(2) == 0 ? OutputHead::kLinear : OutputHead::kSoftplus;
  Surrogate s = surrogate_init(cfg, n, rng);
  auto& mlp = std::get<MlpSurrogate<double>>(s);
  Vector bias_jitter = params(s);
  for (auto& v : bias_jitter) v += 0.1 * rng.uniform(-1.0, 1.0);
  mlp.set_params(bias_jitter);
  mlp.set_output_map(rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0));
  return s;
}

}  // namespace

GradientCheckReport gradient_check(SurrogateKind kind, int instances, std::uint64_t seed,
                                   double step, double tolerance) {
  Rng rng(seed);
  GradientCheckReport report;
  report.instances = instances;
  for (int k = 0; k < instances; ++k) {
    const int n = 1 + static_cast<int>(rng.below(6));
    Surrogate s = random_surrogate(kind, n, rng);
    ParameterVector x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);

    Vector numeric_x(n);
    for (int i = 0; i < n; ++i) {
      ParameterVector up = x, down = x;
      up[i] += step;
      down[i] -= step;
      numeric_x[i] = (forward(s, up) - forward(s, down)) / (2.0 * step);
    }
    report.max_input_error =
        std::max(report.max_input_error, relative_error(grad_input(s, x), numeric_x));

    const Vector phi = params(s);
    Vector numeric_phi(phi.size());
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
      Vector probe = phi;
      probe[j] += step;
      set_params(s, probe);
      const double up = forward(s, x);
      probe[j] = phi[j] - step;
      set_params(s, probe);
      numeric_phi[j] = (up - forward(s, x)) / (2.0 * step);
    }
    set_params(s, phi);
    SurrogateGradient g(phi.size());
    grad_params(s, x, 1.0, g);
    report.max_param_error = std::max(report.max_param_error, relative_error(g.d_phi, numeric_phi));
  }
  report.passed = report.max_input_error < tolerance && report.max_param_error < tolerance;
  return report;
}

void save_checkpoint(const Surrogate& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "io: cannot open " + path);
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.index()));
  const auto layout = layout_of(s);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layout.size()));
  for (auto v : layout) put_le<std::uint32_t>(out, v);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(input_dim(s)));
  const Vector phi = params(s);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(phi.size()));
  for (Eigen::Index i = 0; i < phi.size(); ++i) put_le<double>(out, phi[i]);
  if (const auto* mlp = std::get_if<MlpSurrogate<double>>(&s)) {
    put_le<double>(out, mlp->output_offset());
    put_le<double>(out, mlp->output_scale());
  }
  if (!out) throw Error(ErrorKind::kIo, "io: write failed for " + path);
}

void load_checkpoint(Surrogate& s, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "io: cannot open " + path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(ErrorKind::kIo, "io: bad checkpoint magic in " + path);
  const auto kind = get_le<std::uint32_t>(in);
  std::vector<std::uint32_t> layout(get_le<std::uint32_t>(in));
  for (auto& v : layout) v = get_le<std::uint32_t>(in);
  const auto n = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  if (kind != s.index() || layout != layout_of(s) || static_cast<int>(n) != input_dim(s) ||
      static_cast<Eigen::Index>(count) != param_count(s)) {
    throw Error(ErrorKind::kDimension, "dimension: checkpoint layout does not match surrogate");
  }
  Vector phi(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = get_le<double>(in);
  if (auto* mlp = std::get_if<MlpSurrogate<double>>(&s)) {
    const double offset = get_le<double>(in);
    const double scale = get_le<double>(in);
    mlp->set_output_map(offset, scale);
  }
  set_params(s, phi);
}

}  // namespace zg
