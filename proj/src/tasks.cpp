#include "zerograds/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "zerograds/rng.hpp"

namespace zg {

double Task::checked_loss(const ParameterVector& theta) const {
  require_dim(theta.size(), dim(), name_.c_str());
  if (!all_finite(theta)) {
    throw Error(ErrorKind::kNonFinite, "non-finite parameter passed to " + name_);
  }
  const double value = loss(domain_.clamp(theta));
  return value;
}

double Task::evaluate(const ParameterVector& theta) const {
  const double value = checked_loss(theta);
  evals_.fetch_add(1, std::memory_order_relaxed);
  return value;
}

double Task::evaluate_bookkeeping(const ParameterVector& theta) const {
  const double value = checked_loss(theta);
  bookkeeping_.fetch_add(1, std::memory_order_relaxed);
  return value;
}

// ---------------------------------------------------------------------------

Plateau1dTask::Plateau1dTask() : Task("plateau1d", Domain::box(1, -2.0, 2.0)) {
  oracle_params_ = Vector::Constant(1, kMinimizer);
  optimum_loss_ = 0.0;
}

double Plateau1dTask::formula(double t) {
  if (t <= kPlateauHi) return kPlateauLevel;
  return kBasinScale * (t - kMinimizer) * (t - kMinimizer);
}

double Plateau1dTask::loss(const ParameterVector& x) const {
  return formula(x[0]);
}

// ---------------------------------------------------------------------------

RosenbrockTask::RosenbrockTask(std::ptrdiff_t n)
    : Task("rosenbrock:" + std::to_string(n),
           Domain::box(std::max<std::ptrdiff_t>(n, 1), -2.0, 2.0)) {
  if (n < 2) throw Error(ErrorKind::kDimension, "dimension: rosenbrock needs n >= 2");
  oracle_params_ = Vector::Ones(n);
  optimum_loss_ = 0.0;
}

double RosenbrockTask::loss(const ParameterVector& x) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

// ---------------------------------------------------------------------------

LedTask::LedTask(int width, int height, std::uint64_t seed)
    : Task("led:" + std::to_string(width) + "x" + std::to_string(height),
           Domain::box(static_cast<std::ptrdiff_t>(width) * height, 0.0, 1.0)),
      width_(width),
      height_(height) {
  Rng rng(seed);
  target_.resize(dim());
  for (Eigen::Index i = 0; i < target_.size(); ++i) {
    target_[i] = static_cast<double>(rng.next_u64() >> 63);
  }
  oracle_params_ = target_;
  optimum_loss_ = 0.0;
}

Vector LedTask::render(const Vector& theta) {
  return (theta.array() >= 0.5).cast<double>().matrix();
}

double LedTask::loss(const ParameterVector& x) const {
  return (render(x) - target_).squaredNorm() / static_cast<double>(dim());
}

// ---------------------------------------------------------------------------

double RocketTask::simulate_apex(int cutoff_step) {
  double h = 0.0, v = 0.0, apex = 0.0;
  const double burn = (kThrust - kGravity * kMass) / kMass;
  for (long s = 0; s < 10'000'000; ++s) {
    const bool engine_on = s < cutoff_step;
    v += (engine_on ? burn : -kGravity) * kDt;
    h += v * kDt;
    apex = std::max(apex, h);
    if (!engine_on && v < 0.0) break;
  }
  return apex;
}

RocketTask::RocketTask(int rockets, int steps, std::uint64_t seed)
    : Task("rocket:" + std::to_string(rockets) + "x" + std::to_string(steps),
           Domain::box(std::max(rockets, 1), 0.0, 1.0)),
      rockets_(rockets),
      steps_(steps) {
  if (rockets < 1) throw Error(ErrorKind::kDimension, "dimension: rocket count must be >= 1");
  if (steps < 10) throw Error(ErrorKind::kInvalidArgument, "invalid argument: rocket needs >= 10 steps");
  apex_.resize(steps);
  for (int k = 0; k < steps; ++k) apex_[k] = simulate_apex(k);
  const double top = apex_.back();
  for (double& a : apex_) a /= top;

  Rng rng(seed);
  Vector targets(rockets);
  for (int i = 0; i < rockets; ++i) targets[i] = rng.uniform(0.1, 0.9);
  set_targets(std::move(targets));
}

void RocketTask::set_targets(Vector targets) {
  require_dim(targets.size(), rockets_, "RocketTask::set_targets");
  targets_ = std::move(targets);
  const auto best = optimal_indices();
  ParameterVector oracle(rockets_);
  double l = 0.0;
  for (int i = 0; i < rockets_; ++i) {
    oracle[i] = (best[i] + 0.5) / steps_;
    const double d = apex_[best[i]] - targets_[i];
    l += d * d;
  }
  oracle_params_ = oracle;
  optimum_loss_ = l / rockets_;
}

int RocketTask::cutoff_index(double theta_i) const {
  const int k = static_cast<int>(std::floor(theta_i * steps_));
  return std::clamp(k, 0, steps_ - 1);
}

std::vector<int> RocketTask::optimal_indices() const {
  std::vector<int> best(rockets_, 0);
  for (int i = 0; i < rockets_; ++i) {
    double best_err = INFINITY;
    for (int k = 0; k < steps_; ++k) {
      const double err = std::abs(apex_[k] - targets_[i]);
      if (err < best_err) {
        best_err = err;
        best[i] = k;
      }
    }
  }
  return best;
}

double RocketTask::loss(const ParameterVector& x) const {
  double sum = 0.0;
  for (int i = 0; i < rockets_; ++i) {
    const double d = apex_[cutoff_index(x[i])] - targets_[i];
    sum += d * d;
  }
  return sum / rockets_;
}

// ---------------------------------------------------------------------------

namespace {

// Sum of three random low-frequency plane waves around 0.5, clamped to
// [lo, hi]. (u, v) are pixel centres in (0, 1).
Vector smooth_field(Rng& rng, int width, int height, double amplitude,
                    double lo, double hi) {
  struct Wave {
    double fx, fy, phase, amp;
  };
  Wave waves[3];
  for (auto& w : waves) {
    w.fx = rng.uniform(-2.0, 2.0);
    w.fy = rng.uniform(-2.0, 2.0);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.amp = rng.uniform(0.3, 1.0) * amplitude / 3.0;
  }
  Vector out(static_cast<Eigen::Index>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width, v = (y + 0.5) / height;
      double value = 0.5;
      for (const auto& w : waves) {
        value += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
      }
      out[y * width + x] = std::clamp(value, lo, hi);
    }
  }
  return out;
}

}  // namespace

TextureTask::TextureTask(int width, int height, std::uint64_t seed)
    : Task("texture:" + std::to_string(width) + "x" + std::to_string(height),
           Domain::box(static_cast<std::ptrdiff_t>(width) * height * 3, 0.0, 1.0)),
      width_(width),
      height_(height) {
  Rng rng(seed);
  target_.resize(dim());
  for (int c = 0; c < 3; ++c) {
    const Vector channel = smooth_field(rng, width, height, 0.35, 0.15, 0.85);
    for (Eigen::Index p = 0; p < channel.size(); ++p) target_[p * 3 + c] = channel[p];
  }
  oracle_params_ = target_;
  optimum_loss_ = 0.0;
}

double TextureTask::loss(const ParameterVector& x) const {
  return (x - target_).squaredNorm() / static_cast<double>(dim());
}

// ---------------------------------------------------------------------------

std::ptrdiff_t MlpFitTask::weight_count(const std::vector<int>& arch) {
  std::ptrdiff_t n = 0;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    n += static_cast<std::ptrdiff_t>(arch[l] + 1) * arch[l + 1];
  }
  return n;
}

namespace {
std::string arch_name(const std::vector<int>& arch) {
  std::string s;
  for (std::size_t i = 0; i < arch.size(); ++i) s += (i ? "-" : "") + std::to_string(arch[i]);
  return s;
}

std::ptrdiff_t checked_weight_count(const std::vector<int>& arch) {
  if (arch.size() < 2 || arch.front() != 2 || arch.back() != 1) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: mlpfit architecture must map R^2 -> R");
  }
  for (int w : arch) {
    if (w < 1) throw Error(ErrorKind::kInvalidArgument, "invalid argument: empty mlpfit layer");
  }
  const auto n = MlpFitTask::weight_count(arch);
  if (n > 4096) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: mlpfit has more than 4096 weights");
  }
  return n;
}
}  // namespace

MlpFitTask::MlpFitTask(std::vector<int> arch, std::uint64_t seed)
    : Task("mlpfit:" + arch_name(arch), Domain::box(checked_weight_count(arch), -1.0, 1.0)),
      arch_(std::move(arch)) {
  Rng rng(seed);
  target_ = smooth_field(rng, kGrid, kGrid, 0.4, 0.0, 1.0);
}

Vector MlpFitTask::render(const Vector& weights) const {
  require_dim(weights.size(), dim(), "MlpFitTask::render");
  Vector out(kGrid * kGrid);
  Vector act, next;
  for (int y = 0; y < kGrid; ++y) {
    for (int x = 0; x < kGrid; ++x) {
      act.resize(2);
      act << (x + 0.5) / kGrid, (y + 0.5) / kGrid;
      Eigen::Index offset = 0;
      for (std::size_t l = 0; l + 1 < arch_.size(); ++l) {
        const int fan_in = arch_[l], fan_out = arch_[l + 1];
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            w(weights.data() + offset, fan_out, fan_in);
        offset += static_cast<Eigen::Index>(fan_in) * fan_out;
        next = w * act + weights.segment(offset, fan_out);
        offset += fan_out;
        if (l + 2 < arch_.size()) next = next.array().tanh().matrix();
        act.swap(next);
      }
      out[y * kGrid + x] = act[0];
    }
  }
  return out;
}

double MlpFitTask::loss(const ParameterVector& x) const {
  return (render(x) - target_).squaredNorm() / static_cast<double>(target_.size());
}

// ---------------------------------------------------------------------------

TaskPtr make_plateau1d() { return std::make_unique<Plateau1dTask>(); }
TaskPtr make_rosenbrock(std::ptrdiff_t n) { return std::make_unique<RosenbrockTask>(n); }
TaskPtr make_led(int w, int h, std::uint64_t seed) { return std::make_unique<LedTask>(w, h, seed); }
TaskPtr make_rocket(int r, int s, std::uint64_t seed) {
  return std::make_unique<RocketTask>(r, s, seed);
}
TaskPtr make_texture(int w, int h, std::uint64_t seed) {
  return std::make_unique<TextureTask>(w, h, seed);
}
TaskPtr make_mlp_fit(std::vector<int> arch, std::uint64_t seed) {
  return std::make_unique<MlpFitTask>(std::move(arch), seed);
}

namespace {

int parse_positive(const std::string& s, const std::string& spec) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v < 1) {
    throw Error(ErrorKind::kUnknownName, "unknown task spec '" + spec + "'");
  }
  return v;
}

std::pair<int, int> parse_pair(const std::string& s, const std::string& spec) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw Error(ErrorKind::kUnknownName, "unknown task spec '" + spec + "'");
  return {parse_positive(s.substr(0, x), spec), parse_positive(s.substr(x + 1), spec)};
}

}  // namespace

TaskPtr make_task(const std::string& spec, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (name == "plateau1d" && args.empty()) return make_plateau1d();
  if (name == "rosenbrock") return make_rosenbrock(args.empty() ? 2 : parse_positive(args, spec));
  if (name == "led") {
    auto [w, h] = args.empty() ? std::pair{8, 8} : parse_pair(args, spec);
    return make_led(w, h, seed);
  }
  if (name == "rocket") {
    auto [r, s] = args.empty() ? std::pair{10, 100} : parse_pair(args, spec);
    return make_rocket(r, s, seed);
  }
  if (name == "texture") {
    auto [w, h] = args.empty() ? std::pair{16, 16} : parse_pair(args, spec);
    return make_texture(w, h, seed);
  }
  if (name == "mlpfit") {
    if (args.empty() || args == "small") return make_mlp_fit({2, 16, 16, 1}, seed);
    if (args == "medium") return make_mlp_fit({2, 32, 32, 1}, seed);
    std::vector<int> arch;
    std::size_t start = 0;
    while (start <= args.size()) {
      const auto dash = args.find('-', start);
      arch.push_back(parse_positive(args.substr(start, dash - start), spec));
      if (dash == std::string::npos) break;
      start = dash + 1;
    }
    return make_mlp_fit(std::move(arch), seed);
  }
  throw Error(ErrorKind::kUnknownName, "unknown task spec '" + spec + "'");
}

std::vector<std::string> task_names() {
  return {"plateau1d", "rosenbrock:2", "led:8x8", "rocket:10x100", "texture:16x16", "mlpfit:small"};
}

void write_pnm(const std::string& path, const Vector& pixels, int width, int height,
               int channels) {
  require_dim(pixels.size(), static_cast<std::ptrdiff_t>(width) * height * channels, "write_pnm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "io: cannot open " + path);
  out << (channels == 3 ? "P6" : "P5") << "\n" << width << " " << height << "\n255\n";
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    const double v = std::clamp(pixels[i], 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  if (!out) throw Error(ErrorKind::kIo, "io: write failed for " + path);
}

}  // namespace zg
