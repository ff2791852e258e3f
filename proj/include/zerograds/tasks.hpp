#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zerograds/core.hpp"

namespace zg {

/// A scalar black-box objective f(theta) >= 0 over a box domain.
///
/// Optimizers only ever see a task through evaluate(). Inputs outside the
/// domain are clamped before the loss is computed, because the smoothing
/// samples x - tau routinely leave the box.
class Task {
 public:
  Task(std::string name, Domain domain)
      : name_(std::move(name)), domain_(std::move(domain)) {}
  virtual ~Task() = default;
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;

  const std::string& name() const { return name_; }
  std::ptrdiff_t dim() const { return domain_.dim(); }
  const Domain& domain() const { return domain_; }

  /// Counted evaluation. Throws "dimension" / "non-finite" errors.
  double evaluate(const ParameterVector& theta) const;

  /// Evaluation used only for logging. Tallied separately so it never
  /// eats into an optimization budget.
  double evaluate_bookkeeping(const ParameterVector& theta) const;

  std::uint64_t eval_count() const { return evals_.load(); }
  std::uint64_t bookkeeping_count() const { return bookkeeping_.load(); }
  void reset_counters() const {
    evals_ = 0;
    bookkeeping_ = 0;
  }

  /// Default locality spread as a fraction of the mean domain extent.
  virtual double sigma_outer_fraction() const { return 0.1; }

  std::optional<double> optimum_loss() const { return optimum_loss_; }
  /// Ground-truth parameters, when the task has one (tests only).
  const std::optional<ParameterVector>& oracle_params() const {
    return oracle_params_;
  }

 protected:
  /// Loss of an in-domain, finite, correctly sized point.
  virtual double loss(const ParameterVector& clamped) const = 0;

  std::optional<double> optimum_loss_;
  std::optional<ParameterVector> oracle_params_;

 private:
  double checked_loss(const ParameterVector& theta) const;

  std::string name_;
  Domain domain_;
  mutable std::atomic<std::uint64_t> evals_{0};
  mutable std::atomic<std::uint64_t> bookkeeping_{0};
};

using TaskPtr = std::unique_ptr<Task>;

/// Wraps an arbitrary callable. Used for analytic fixtures.
class FunctionTask final : public Task {
 public:
  using Fn = std::function<double(const ParameterVector&)>;
  FunctionTask(std::string name, Domain domain, Fn fn,
               std::optional<ParameterVector> optimum = std::nullopt,
               std::optional<double> optimum_loss = std::nullopt)
      : Task(std::move(name), std::move(domain)), fn_(std::move(fn)) {
    oracle_params_ = std::move(optimum);
    optimum_loss_ = optimum_loss;
  }

 protected:
  double loss(const ParameterVector& x) const override { return fn_(x); }

 private:
  Fn fn_;
};

/// 1-D plateau/jump/basin landscape on [-2, 2]:
///   1.0              on [-2, -0.8]   (plateau, 30% of the domain)
///   0.25 (t - 1)^2   on (-0.8, 2]    (smooth basin, jumps down to 0.81)
/// The unique minimizer is t = 1 with loss 0.
class Plateau1dTask final : public Task {
 public:
  Plateau1dTask();
  static constexpr double kPlateauLo = -2.0;
  static constexpr double kPlateauHi = -0.8;
  static constexpr double kPlateauLevel = 1.0;
  static constexpr double kBasinScale = 0.25;
  static constexpr double kMinimizer = 1.0;
  static double formula(double t);

 protected:
  double loss(const ParameterVector& x) const override;
};

class RosenbrockTask final : public Task {
 public:
  explicit RosenbrockTask(std::ptrdiff_t n);

 protected:
  double loss(const ParameterVector& x) const override;
};

/// Binary image matching. Each entry renders as 1 when it is >= 0.5.
/// The locality spread defaults to 0.3 of the extent so samples from a
/// pixel parked at either bound still reach the switching threshold.
class LedTask final : public Task {
 public:
  LedTask(int width, int height, std::uint64_t seed);
  double sigma_outer_fraction() const override { return 0.3; }
  const Vector& target() const { return target_; }
  int width() const { return width_; }
  int height() const { return height_; }
  static Vector render(const Vector& theta);

 protected:
  double loss(const ParameterVector& x) const override;

 private:
  int width_, height_;
  Vector target_;
};

/// Engine cutoff control for a batch of 1-D rockets.
///
/// theta_i in [0, 1] selects the cutoff step min(floor(theta_i * steps),
/// steps - 1). Burn phase: net upward acceleration thrust - g with thrust
/// 2g, unit mass. Coast phase: -g. Forward Euler with dt = 0.05 until the
/// vertical velocity turns negative; the apex is the highest altitude
/// reached. Heights are reported as a fraction of the apex of the longest
/// burn, so losses stay in [0, 1].
class RocketTask final : public Task {
 public:
  static constexpr double kGravity = 9.81;
  static constexpr double kThrust = 2.0 * kGravity;
  static constexpr double kMass = 1.0;
  static constexpr double kDt = 0.05;

  RocketTask(int rockets, int steps, std::uint64_t seed);

  int rockets() const { return rockets_; }
  int steps() const { return steps_; }
  /// Raw simulated apex (metres) for a cutoff step index.
  static double simulate_apex(int cutoff_step);
  int cutoff_index(double theta_i) const;
  /// Normalized apex of a cutoff step index.
  double apex(int cutoff_step) const { return apex_[cutoff_step]; }
  const Vector& targets() const { return targets_; }
  /// Replaces the normalized target heights and recomputes the optimum.
  void set_targets(Vector targets);
  /// Per-rocket argmin over all cutoff indices, from the precomputed table.
  std::vector<int> optimal_indices() const;

 protected:
  double loss(const ParameterVector& x) const override;

 private:
  int rockets_, steps_;
  std::vector<double> apex_;
  Vector targets_;
};

/// RGB texture fit against a smooth seed-generated target in [0.15, 0.85].
/// Layout is channel-fastest: index = (y * width + x) * 3 + c.
class TextureTask final : public Task {
 public:
  TextureTask(int width, int height, std::uint64_t seed);
  const Vector& target() const { return target_; }
  int width() const { return width_; }
  int height() const { return height_; }

 protected:
  double loss(const ParameterVector& x) const override;

 private:
  int width_, height_;
  Vector target_;
};

/// Overfits a small coordinate MLP (tanh hidden layers, linear output) to a
/// 16x16 grayscale target. theta is the flat weight vector: per layer the
/// row-major (fan_out x fan_in) matrix followed by the fan_out biases.
class MlpFitTask final : public Task {
 public:
  static constexpr int kGrid = 16;

  MlpFitTask(std::vector<int> arch, std::uint64_t seed);

  /// Replaces the target (e.g. with the network's own output).
  void set_target(Vector target) {
    require_dim(target.size(), kGrid * kGrid, "MlpFitTask::set_target");
    target_ = std::move(target);
  }
  const Vector& target() const { return target_; }
  const std::vector<int>& arch() const { return arch_; }
  static std::ptrdiff_t weight_count(const std::vector<int>& arch);
  /// Network output at every grid cell, row-major.
  Vector render(const Vector& weights) const;

 protected:
  double loss(const ParameterVector& x) const override;

 private:
  std::vector<int> arch_;
  Vector target_;
};

/// Builds a task from a registry spec such as "plateau1d", "rosenbrock:8",
/// "led:8x8", "rocket:10x100", "texture:16x16" or "mlpfit:small".
/// The seed drives every random target.
TaskPtr make_task(const std::string& spec, std::uint64_t seed);

/// Registry names with their default spec strings.
std::vector<std::string> task_names();

TaskPtr make_plateau1d();
TaskPtr make_rosenbrock(std::ptrdiff_t n);
TaskPtr make_led(int width, int height, std::uint64_t seed);
TaskPtr make_rocket(int rockets, int steps, std::uint64_t seed);
TaskPtr make_texture(int width, int height, std::uint64_t seed);
TaskPtr make_mlp_fit(std::vector<int> arch, std::uint64_t seed);

/// Binary PGM (LED) / PPM (texture) dump of a parameter state.
void write_pnm(const std::string& path, const Vector& pixels, int width,
               int height, int channels);

}  // namespace zg
