#include <doctest.h>

#include <cmath>

#include "zerograds/rng.hpp"
#include "zerograds/tasks.hpp"

using namespace zg;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("rosenbrock closed-form values") {
  auto r2 = make_rosenbrock(2);
  CHECK(r2->evaluate(vec({1, 1})) == 0.0);
  CHECK(r2->evaluate(vec({0, 0})) == 1.0);
  auto r3 = make_rosenbrock(3);
  CHECK(r3->evaluate(vec({1, 1, 1})) == 0.0);
  // 100 (1 - 0)^2 + (1 - 0)^2 for the first pair, 100 (1 - 1)^2 + 0 for the second.
  CHECK(r3->evaluate(vec({0, 1, 1})) == doctest::Approx(101.0));
  CHECK_THROWS_AS(make_rosenbrock(1), Error);
}

TEST_CASE("evaluate validates input and counts calls") {
  auto task = make_rosenbrock(2);
  CHECK_THROWS_WITH_AS(task->evaluate(vec({1, 1, 1})), doctest::Contains("dimension"), Error);
  CHECK_THROWS_WITH_AS(task->evaluate(vec({NAN, 1})), doctest::Contains("non-finite"), Error);
  task->reset_counters();
  for (int k = 0; k < 7; ++k) task->evaluate(vec({0.3, -0.2}));
  task->evaluate_bookkeeping(vec({0.3, -0.2}));
  CHECK(task->eval_count() == 7);
  CHECK(task->bookkeeping_count() == 1);
}

TEST_CASE("out-of-domain points are clamped") {
  auto task = make_rosenbrock(2);
  CHECK(task->evaluate(vec({5, 9})) == task->evaluate(vec({2, 2})));
}

TEST_CASE("plateau1d: plateau, jump and basin") {
  auto task = make_plateau1d();
  CHECK(task->domain().lower[0] == -2.0);
  CHECK(task->domain().upper[0] == 2.0);
  const double lo = Plateau1dTask::kPlateauLo, hi = Plateau1dTask::kPlateauHi;
  CHECK((hi - lo) / 4.0 >= 0.3);

  const double level = task->evaluate(vec({lo}));
  for (int i = 0; i < 100; ++i) {
    const double t = lo + (hi - lo) * i / 99.0;
    CHECK(task->evaluate(vec({t})) == level);
  }
  CHECK(task->evaluate(vec({Plateau1dTask::kMinimizer})) == 0.0);
  CHECK(task->oracle_params().value()[0] == Plateau1dTask::kMinimizer);

  // jump at the right edge of the plateau
  const double right = task->evaluate(vec({std::nextafter(hi, 1.0)}));
  CHECK(std::abs(level - right) > 0.1);

  // central difference inside the plateau is exactly zero
  const double centre = 0.5 * (lo + hi), eps = 0.25 * (hi - lo);
  CHECK(task->evaluate(vec({centre + eps})) - task->evaluate(vec({centre - eps})) == 0.0);

  // unique global minimum: everything else is strictly larger
  for (int i = 0; i <= 400; ++i) {
    const double t = -2.0 + 4.0 * i / 400.0;
    if (t != 1.0) CHECK(task->evaluate(vec({t})) > 0.0);
  }
}

TEST_CASE("led: MSE of rounded bits") {
  auto task = make_led(8, 8, 3);
  auto& led = dynamic_cast<LedTask&>(*task);
  const Vector target = led.target();
  CHECK(task->dim() == 64);
  CHECK(task->evaluate(target) == 0.0);
  CHECK(task->evaluate(Vector::Ones(64) - target) == 1.0);
  Vector one_wrong = target;
  one_wrong[17] = 1.0 - one_wrong[17];
  CHECK(task->evaluate(one_wrong) == doctest::Approx(1.0 / 64.0));

  SUBCASE("loss depends only on the rounded image") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      Vector theta(64);
      for (auto& v : theta) v = rng.uniform();
      CHECK(task->evaluate(theta) == task->evaluate(LedTask::render(theta)));
    }
  }
}

TEST_CASE("led: targets depend on the seed only") {
  auto a = make_led(4, 4, 9), b = make_led(4, 4, 9), c = make_led(4, 4, 10);
  const auto& ta = dynamic_cast<LedTask&>(*a).target();
  CHECK(ta == dynamic_cast<LedTask&>(*b).target());
  CHECK(ta != dynamic_cast<LedTask&>(*c).target());
}

TEST_CASE("rocket: piecewise constant in the cutoff index") {
  auto task = make_rocket(10, 100, 5);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Vector theta(10), nudged(10);
    for (Eigen::Index i = 0; i < 10; ++i) {
      const int k = static_cast<int>(rng.below(100));
      theta[i] = (k + rng.uniform(0.05, 0.95)) / 100.0;
      nudged[i] = (k + rng.uniform(0.05, 0.95)) / 100.0;
    }
    CHECK(task->evaluate(theta) == task->evaluate(nudged));
  }
}

TEST_CASE("rocket: apex grows with burn time") {
  double previous = -1.0;
  for (int k = 0; k < 100; ++k) {
    const double apex = RocketTask::simulate_apex(k);
    CHECK(apex >= previous);
    previous = apex;
  }
  CHECK(RocketTask::simulate_apex(0) == 0.0);
}

TEST_CASE("rocket: brute-force oracle through evaluate only") {
  constexpr int kRockets = 4, kSteps = 40;
  auto task = make_rocket(kRockets, kSteps, 21);
  auto& rocket = dynamic_cast<RocketTask&>(*task);

  // Rockets are independent, so per-rocket enumeration with the others held
  // fixed finds the joint argmin.
  Vector theta = Vector::Constant(kRockets, 0.5 / kSteps);
  std::vector<int> argmin(kRockets);
  for (int i = 0; i < kRockets; ++i) {
    double best = INFINITY;
    for (int k = 0; k < kSteps; ++k) {
      Vector probe = theta;
      probe[i] = (k + 0.5) / kSteps;
      const double l = task->evaluate(probe);
      if (l < best) {
        best = l;
        argmin[i] = k;
      }
    }
  }
  CHECK(argmin == rocket.optimal_indices());
  Vector best_theta(kRockets);
  for (int i = 0; i < kRockets; ++i) best_theta[i] = (argmin[i] + 0.5) / kSteps;
  CHECK(task->evaluate(best_theta) == doctest::Approx(task->optimum_loss().value()).epsilon(1e-12));
  CHECK(task->evaluate(*task->oracle_params()) == task->evaluate(best_theta));
}

TEST_CASE("rocket: target at the cutoff-0 apex puts the optimum in [0, 1/steps)") {
  auto task = make_rocket(1, 50, 1);
  auto& rocket = dynamic_cast<RocketTask&>(*task);
  rocket.set_targets(Vector::Constant(1, rocket.apex(0)));
  CHECK(task->evaluate(Vector::Constant(1, 0.0)) == 0.0);
  CHECK(task->evaluate(Vector::Constant(1, 0.999 / 50)) == 0.0);
  CHECK(task->evaluate(Vector::Constant(1, 1.0 / 50)) > 0.0);
  CHECK(rocket.optimal_indices().front() == 0);
}

TEST_CASE("texture: MSE against a smooth target") {
  auto task = make_texture(16, 16, 42);
  const Vector target = dynamic_cast<TextureTask&>(*task).target();
  CHECK(task->dim() == 16 * 16 * 3);
  CHECK(target.minCoeff() >= 0.15);
  CHECK(target.maxCoeff() <= 0.85);
  CHECK(task->evaluate(target) == 0.0);
  CHECK(task->evaluate(target.array() + 0.1) == doctest::Approx(0.01).epsilon(1e-12));
  const double expected = (target.array() - 0.5).square().mean();
  CHECK(task->evaluate(Vector::Constant(task->dim(), 0.5)) == doctest::Approx(expected));
  CHECK(expected > 0.0);
}

TEST_CASE("mlpfit: architecture and self-consistency") {
  auto task = make_mlp_fit({2, 16, 16, 1}, 7);
  auto& fit = dynamic_cast<MlpFitTask&>(*task);
  CHECK(task->dim() == MlpFitTask::weight_count({2, 16, 16, 1}));
  CHECK(task->dim() == (2 * 16 + 16) + (16 * 16 + 16) + (16 + 1));

  CHECK(fit.render(Vector::Zero(task->dim())).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(4);
  Vector theta(task->dim());
  for (auto& v : theta) v = rng.uniform(-0.3, 0.3);
  CHECK(task->evaluate(theta) > 0.0);
  fit.set_target(fit.render(theta));
  CHECK(task->evaluate(theta) == 0.0);

  fit.set_target(Vector::Zero(MlpFitTask::kGrid * MlpFitTask::kGrid));
  CHECK(task->evaluate(Vector::Zero(task->dim())) == 0.0);

  CHECK_THROWS_AS(make_mlp_fit({3, 4, 1}, 0), Error);
  CHECK_THROWS_AS(make_mlp_fit({2, 64, 64, 1}, 0), Error);
}

TEST_CASE("registry") {
  for (const auto& name : task_names()) {
    auto task = make_task(name, 1);
    CHECK(task->dim() >= 1);
    const Vector mid = 0.5 * (task->domain().lower + task->domain().upper);
    const double a = task->evaluate(mid);
    CHECK(a >= 0.0);
    CHECK(task->evaluate(mid) == a);
  }
  CHECK(make_task("rosenbrock:5", 0)->dim() == 5);
  CHECK(make_task("led:3x2", 0)->dim() == 6);
  CHECK(make_task("rocket:2x20", 0)->dim() == 2);
  CHECK(make_task("texture:2x3", 0)->dim() == 18);
  CHECK(make_task("mlpfit:2-4-1", 0)->dim() == 17);
  CHECK_THROWS_AS(make_task("nope", 0), Error);
  CHECK_THROWS_AS(make_task("led:8", 0), Error);
}
