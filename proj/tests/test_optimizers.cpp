#include <doctest.h>

#include <cmath>

#include "zerograds/optimizers.hpp"

using namespace zg;

namespace {

FunctionTask linear_task(const Vector& a) {
  return FunctionTask("linear", Domain::box(a.size(), -10.0, 10.0),
                      [a](const ParameterVector& x) { return a.dot(x); });
}

FunctionTask sphere(int n) {
  return FunctionTask("sphere", Domain::box(n, -2.0, 2.0),
                      [](const ParameterVector& x) { return x.squaredNorm(); });
}

// Mean and standard error per coordinate over `k` draws of `sample`.
template <typename F>
std::pair<Vector, Vector> mc_mean(int k, Eigen::Index n, F&& sample) {
  Vector sum = Vector::Zero(n), sq = Vector::Zero(n);
  for (int i = 0; i < k; ++i) {
    const Vector g = sample();
    sum += g;
    sq += g.cwiseAbs2();
  }
  const Vector mean = sum / k;
  const Vector var = (sq / k - mean.cwiseAbs2()) * (k / (k - 1.0));
  return {mean, (var / k).cwiseSqrt()};
}

RunConfig config(const std::string& method, std::int64_t budget, std::uint64_t seed = 1) {
  RunConfig c;
  c.method = method;
  c.budget_evals = budget;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves x unchanged") {
    AdamState s(2, 0.1);
    const Vector x = (Vector(2) << 0.3, -0.4).finished();
    CHECK(adam_step(s, x, Vector::Zero(2)) == x);
  }
  SUBCASE("one step from a fresh state") {
    AdamState s(1, 0.1);
    const Vector x = Vector::Constant(1, 2.0);
    // m_hat = 1, v_hat = 1
    const double expected = 2.0 - 0.1 * 1.0 / (1.0 + s.eps);
    CHECK(adam_step(s, x, Vector::Ones(1))[0] == doctest::Approx(expected).epsilon(1e-15));
  }
  SUBCASE("constant gradient gives steps of size lr") {
    AdamState s(3, 0.01);
    Vector x = Vector::Zero(3);
    const Vector g = (Vector(3) << 5.0, -0.2, 1e-3).finished();
    Vector prev = x;
    for (int t = 0; t < 2000; ++t) {
      prev = x;
      adam_update(s, x, g);
    }
    const Vector step = x - prev;
    CHECK(step[0] == doctest::Approx(-0.01).epsilon(1e-3));
    CHECK(step[1] == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(step[2] == doctest::Approx(-0.01).epsilon(1e-3));
  }
  SUBCASE("length mismatch") {
    AdamState s(2, 0.1);
    CHECK_THROWS_AS(adam_step(s, Vector::Zero(2), Vector::Zero(3)), Error);
  }
}

TEST_CASE("spsa single estimates") {
  const Vector a = (Vector(3) << 1.5, -0.5, 0.25).finished();
  auto task = linear_task(a);
  const Vector c = Vector::Constant(3, 0.2);
  Rng rng(3);
  const auto [mean, se] =
      mc_mean(100000, 3, [&] { return spsa_gradient(task, Vector::Zero(3), c, rng); });
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean[i] - a[i]) < 3.0 * se[i] + 1e-12);

  FunctionTask constant("c", Domain::box(3, -1.0, 1.0), [](const ParameterVector&) { return 4.0; });
  CHECK(spsa_gradient(constant, Vector::Zero(3), c, rng).isZero(0.0));
}

TEST_CASE("fd estimates") {
  auto task = sphere(3);
  const Vector theta = (Vector(3) << 0.5, -1.25, 0.75).finished();
  const Vector g = fd_gradient(task, theta, Vector::Constant(3, 0.25));
  CHECK((g - 2.0 * theta).cwiseAbs().maxCoeff() < 1e-14);

  auto plateau = make_plateau1d();
  const double lo = Plateau1dTask::kPlateauLo, hi = Plateau1dTask::kPlateauHi;
  const Vector centre = Vector::Constant(1, 0.5 * (lo + hi));
  CHECK(fd_gradient(*plateau, centre, Vector::Constant(1, 0.4 * (hi - lo))).isZero(0.0));

  RunConfig c = config("fd", 2000);
  c.initial_theta = centre;
  const RunResult r = run_method(*plateau, c);
  CHECK(r.theta == centre);
}

TEST_CASE("fr22 estimates") {
  const Vector a = (Vector(2) << -2.0, 0.5).finished();
  auto task = linear_task(a);
  Rng rng(4);
  const auto [mean, se] =
      mc_mean(100000, 2, [&] { return fr22_gradient(task, Vector::Zero(2), 0.3, 8, rng); });
  for (int i = 0; i < 2; ++i) CHECK(std::abs(mean[i] - a[i]) < 3.0 * se[i] + 1e-12);

  FunctionTask constant("c", Domain::box(2, -1.0, 1.0), [](const ParameterVector&) { return 7.0; });
  CHECK(fr22_gradient(constant, Vector::Zero(2), 0.3, 8, rng).isZero(0.0));
  CHECK_THROWS_AS(fr22_gradient(constant, Vector::Zero(2), 0.0, 8, rng), Error);
}

TEST_CASE("metropolis rule") {
  CHECK(metropolis_accept(-1.0, 1e-300, 0.999999));
  CHECK(metropolis_accept(0.0, 1.0, 0.999999));
  CHECK_FALSE(metropolis_accept(1e-6, 1e-300, 0.0));
  CHECK(metropolis_accept(1.0, 1.0, std::exp(-1.0) - 1e-9));
  CHECK_FALSE(metropolis_accept(1.0, 1.0, std::exp(-1.0) + 1e-9));
}

TEST_CASE("ga keeps a uniform population without mutation") {
  auto task = make_rosenbrock(3);
  RunConfig c = config("ga", 1000);
  c.initial_theta = Vector::Constant(3, 0.4);
  c.ga.mutation_rate = 0.0;
  const RunResult r = run_method(*task, c);
  CHECK(r.theta == *c.initial_theta);
  for (const auto& row : r.trace.rows) CHECK(row.loss == r.trace.rows.front().loss);
}

TEST_CASE("sa and ga report non-increasing best losses") {
  auto task = make_led(4, 4, 2);
  for (const char* m : {"sa", "ga"}) {
    CAPTURE(m);
    const RunResult r = run_method(*task, config(m, 3000, 5));
    for (std::size_t i = 1; i < r.trace.rows.size(); ++i) {
      CHECK(r.trace.rows[i].loss <= r.trace.rows[i - 1].loss);
    }
  }
}

TEST_CASE("budget honesty and eval accounting") {
  auto task = make_rosenbrock(4);
  for (const auto& m : method_names()) {
    CAPTURE(m);
    RunConfig c = config(m, 1000, 2);
    const std::int64_t cost = iteration_cost(m, *task, c);
    task->reset_counters();
    const RunResult r = run_method(*task, c);
    CHECK(!r.aborted);
    const auto used = static_cast<std::int64_t>(task->eval_count());
    CHECK(used <= c.budget_evals);
    CHECK(used > c.budget_evals - cost);
    CHECK(r.trace.rows.back().evals == used);
    if (m != "sa" && m != "ga") CHECK(task->bookkeeping_count() > 0);
    for (std::size_t i = 1; i < r.trace.rows.size(); ++i) {
      CHECK(r.trace.rows[i].evals >= r.trace.rows[i - 1].evals);
    }
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) {
      CHECK((r.theta[i] >= task->domain().lower[i] && r.theta[i] <= task->domain().upper[i]));
    }
  }
}

TEST_CASE("per-iteration costs") {
  auto task = make_rosenbrock(3);
  auto run_iters = [&](const std::string& m, int iters) {
    RunConfig c = config(m, 0);
    c.budget_evals = iters * iteration_cost(m, *task, c) + (m == "ga" ? c.ga.population : 0);
    if (m == "sa") c.budget_evals += 1;
    task->reset_counters();
    const RunResult r = run_method(*task, c);
    return std::pair{static_cast<std::int64_t>(task->eval_count()), r.trace.rows.back().iter};
  };
  CHECK(run_iters("spsa", 7) == std::pair<std::int64_t, std::int64_t>{14, 7});
  CHECK(run_iters("fd", 5) == std::pair<std::int64_t, std::int64_t>{30, 5});
  CHECK(run_iters("fr22", 4) == std::pair<std::int64_t, std::int64_t>{64, 4});
  CHECK(run_iters("sa", 9) == std::pair<std::int64_t, std::int64_t>{10, 9});
  CHECK(run_iters("ga", 3) == std::pair<std::int64_t, std::int64_t>{200, 3});
  CHECK(run_iters("zerograds", 6) == std::pair<std::int64_t, std::int64_t>{384, 6});
}

TEST_CASE("runs are deterministic in the seed") {
  auto a = make_rocket(3, 50, 4), b = make_rocket(3, 50, 4);
  for (const auto& m : method_names()) {
    CAPTURE(m);
    const RunResult ra = run_method(*a, config(m, 800, 9));
    const RunResult rb = run_method(*b, config(m, 800, 9));
    REQUIRE(ra.trace.rows.size() == rb.trace.rows.size());
    for (std::size_t i = 0; i < ra.trace.rows.size(); ++i) {
      CHECK(ra.trace.rows[i].loss == rb.trace.rows[i].loss);
      CHECK(ra.trace.rows[i].evals == rb.trace.rows[i].evals);
      CHECK(ra.trace.rows[i].grad_norm == rb.trace.rows[i].grad_norm);
    }
    CHECK(ra.theta == rb.theta);
  }
}

TEST_CASE("warm-up-only budget leaves theta at its initialization") {
  auto task = make_plateau1d();
  RunConfig c = config("zerograds", 0);
  c.initial_theta = Vector::Constant(1, -1.3);
  c.budget_evals = c.zerograds.warmup * iteration_cost("zerograds", *task, c);
  const RunResult r = run_method(*task, c);
  CHECK(r.theta == *c.initial_theta);
  CHECK(r.grad_norms.empty());
  for (const auto& row : r.trace.rows) CHECK_FALSE(row.grad_norm.has_value());
  CHECK(r.trace.rows.back().iter == c.zerograds.warmup);
}

TEST_CASE("invalid configurations are rejected") {
  auto task = make_rosenbrock(2);
  CHECK_THROWS_AS(run_method(*task, config("zerograds", 8)), Error);
  CHECK_THROWS_AS(run_method(*task, config("fd", 3)), Error);
  CHECK_THROWS_AS(run_method(*task, config("ga", 10)), Error);
  CHECK_THROWS_WITH_AS(run_method(*task, config("cmaes", 100)), doctest::Contains("unknown"), Error);
}

TEST_CASE("zerograds finds the rocket cutoff within one step") {
  auto task = make_rocket(1, 100, 3);
  const int oracle = dynamic_cast<RocketTask&>(*task).optimal_indices().front();
  const RunResult r = run_method(*task, config("zerograds", 20000, 3));
  const int found = std::min(99, static_cast<int>(std::floor(r.theta[0] * 100)));
  CHECK(std::abs(found - oracle) <= 1);
}

TEST_CASE("windowed variance") {
  const std::vector<double> constant(120, 3.25);
  const auto v = windowed_variance(constant, 50);
  CHECK(v.size() == 71);
  for (double x : v) CHECK(x == 0.0);
  CHECK(windowed_variance(std::vector<double>(10, 1.0), 50).empty());
  const std::vector<double> pm{1, -1, 1, -1};
  for (double x : windowed_variance(pm, 2)) CHECK(x == 1.0);
  CHECK_THROWS_AS(windowed_variance(pm, 0), Error);

  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));

  // deterministic gradient source: FD on a quadratic repeats exactly
  auto task = sphere(2);
  RunConfig c = config("fd", 800);
  const auto first = gradient_variance_trace("fd", task, c, 10);
  CHECK(first == gradient_variance_trace("fd", task, c, 10));
  CHECK_THROWS_AS(gradient_variance_trace("sa", task, c), Error);
}
