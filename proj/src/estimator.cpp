#include "zerograds/estimator.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

namespace zg {

namespace {

void log_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ";" : "") << v[i];
}

}  // namespace

void write_sample_log_header(std::ostream& out) { out << "x,tau,f,h,r,w\n"; }

EstimatorReport estimate_gradient(const Surrogate& s, const Task& task,
                                  const ParameterVector& theta, const SamplerConfig& cfg,
                                  Rng& rng, const EstimatorOptions& opts) {
  cfg.validate();
  require_dim(theta.size(), task.dim(), "estimate_gradient");
  require_dim(input_dim(s), task.dim(), "estimate_gradient");
  const int n_samples = cfg.batch_size;
  const Domain& domain = task.domain();

  std::vector<SamplePair> pairs(n_samples);
  std::vector<double> weights(n_samples, 1.0);
  for (int i = 0; i < n_samples; ++i) {
    if (opts.locality == LocalitySampling::kImportance) {
      pairs[i] = sample_pair(rng, theta, cfg);
      continue;
    }
    Vector x(theta.size());
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      x[d] = rng.uniform(domain.lower[d], domain.upper[d]);
    }
    pairs[i].x = x;
    pairs[i].tau = sample_isotropic_gaussian(rng, Vector::Zero(theta.size()), cfg.sigma_inner);
    const double sq = ((x - theta) / cfg.sigma_outer).squaredNorm();
    double log_w = -0.5 * sq;
    if (!opts.normalize_uniform_weights) {
      const double n = static_cast<double>(theta.size());
      log_w += std::log(domain.volume()) -
               n * std::log(cfg.sigma_outer * std::sqrt(2.0 * std::numbers::pi));
    }
    weights[i] = std::exp(log_w);
  }

  // Objective evaluations are independent of each other; the reduction
  // below runs in sample order so results do not depend on evaluation order.
  std::vector<double> f(n_samples);
  for (int i = 0; i < n_samples; ++i) f[i] = task.evaluate(pairs[i].x - pairs[i].tau);

  EstimatorReport report;
  report.batch_size = n_samples;
  SurrogateGradient grad(param_count(s));
  double loss_sum = 0.0, err_sum = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    double residual = 0.0;
    const double h = forward_and_grad_params(
        s, pairs[i].x,
        [&](double value) {
          residual = value - f[i];
          if (!std::isfinite(residual)) {
            throw Error(ErrorKind::kNonFinite, "non-finite sample residual in estimate_gradient");
          }
          return 2.0 * weights[i] * residual / n_samples;
        },
        grad);
    loss_sum += f[i];
    err_sum += residual * residual;
    if (opts.sample_log != nullptr) {
      std::ostream& out = *opts.sample_log;
      log_vector(out, pairs[i].x);
      out << ",";
      log_vector(out, pairs[i].tau);
      out << "," << f[i] << "," << h << "," << residual << "," << weights[i] << "\n";
    }
  }
  if (!all_finite(grad.d_phi)) {
    throw Error(ErrorKind::kNonFinite, "non-finite sample gradient in estimate_gradient");
  }
  report.grad_phi = std::move(grad.d_phi);
  report.mean_sampled_loss = loss_sum / n_samples;
  double sq_sum = 0.0;
  for (double v : f) sq_sum += (v - report.mean_sampled_loss) * (v - report.mean_sampled_loss);
  report.sampled_loss_stddev = std::sqrt(sq_sum / n_samples);
  report.mean_surrogate_error = err_sum / n_samples;
  return report;
}

// ---------------------------------------------------------------------------

Vector QuadraticFixture::closed_form_gradient() const {
  const double mu = theta, s2 = sigma_outer * sigma_outer;
  const double m1 = mu;
  const double m2 = mu * mu + s2;
  const double m3 = mu * mu * mu + 3.0 * mu * s2;
  const double m4 = mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
  // residual r(x) = c2 x^2 + c1 x + c0 after integrating out tau
  const double c2 = a(0, 0) - 1.0;
  const double c1 = a(0, 1) + a(1, 0);
  const double c0 = a(1, 1) - sigma_inner * sigma_inner;
  const double e_rx2 = c2 * m4 + c1 * m3 + c0 * m2;
  const double e_rx = c2 * m3 + c1 * m2 + c0 * m1;
  const double e_r = c2 * m2 + c1 * m1 + c0;
  Vector g(4);
  g << 2.0 * e_rx2, 2.0 * e_rx, 2.0 * e_rx, 2.0 * e_r;  // column-major (00, 10, 01, 11)
  return g;
}

TaskPtr QuadraticFixture::make_task() const {
  return std::make_unique<FunctionTask>("fixture:x^2", Domain::box(1, -3.0, 3.0),
                                        [](const ParameterVector& x) { return x[0] * x[0]; });
}

Surrogate QuadraticFixture::make_surrogate() const {
  QuadraticSurrogate<double> q(1);
  q.set_matrix(a);
  return q;
}

Matrix collect_estimates(const QuadraticFixture& fixture, LocalitySampling locality, int trials,
                         std::uint64_t seed) {
  const TaskPtr task = fixture.make_task();
  const Surrogate s = fixture.make_surrogate();
  const ParameterVector theta = Vector::Constant(1, fixture.theta);
  SamplerConfig cfg{fixture.sigma_outer, fixture.sigma_inner, fixture.batch_size};
  EstimatorOptions opts;
  opts.locality = locality;
  opts.normalize_uniform_weights = false;
  Rng rng(seed);
  Matrix out(trials, param_count(s));
  for (int t = 0; t < trials; ++t) {
    out.row(t) = estimate_gradient(s, *task, theta, cfg, rng, opts).grad_phi.transpose();
  }
  return out;
}

ProbeReport unbiasedness_probe(const QuadraticFixture& fixture, int trials, std::uint64_t seed) {
  const Matrix est = collect_estimates(fixture, LocalitySampling::kImportance, trials, seed);
  ProbeReport r;
  r.trials = trials;
  r.closed_form = fixture.closed_form_gradient();
  r.empirical_mean = est.colwise().mean().transpose();
  const Matrix centered = est.rowwise() - r.empirical_mean.transpose();
  const Vector var = centered.colwise().squaredNorm().transpose() / std::max(trials - 1, 1);
  r.standard_error = (var / trials).cwiseSqrt();
  r.z_score.resize(r.closed_form.size());
  r.passed = true;
  for (Eigen::Index i = 0; i < r.z_score.size(); ++i) {
    const double diff = r.empirical_mean[i] - r.closed_form[i];
    r.z_score[i] = r.standard_error[i] > 0.0 ? diff / r.standard_error[i] : (diff == 0.0 ? 0.0 : INFINITY);
    if (!(std::abs(r.z_score[i]) < 3.0)) r.passed = false;
  }
  return r;
}

}  // namespace zg
