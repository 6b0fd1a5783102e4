#include "xql/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "xql/errors.hpp"
#include "xql/rng.hpp"

namespace xql {

namespace {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace

void GumbelParams::validate() const {
  if (!std::isfinite(loc) || !std::isfinite(scale) || scale <= 0.0)
    throw std::invalid_argument("GumbelParams: scale must be positive and finite");
}

void GaussianParams::validate() const {
  if (!std::isfinite(mean) || !std::isfinite(std) || std <= 0.0)
    throw std::invalid_argument("GaussianParams: std must be positive and finite");
}

void SampleBatch::validate() const {
  if (values.empty()) throw std::invalid_argument("SampleBatch: empty");
  if (!all_finite(values))
    throw std::invalid_argument("SampleBatch: non-finite value");
  if (!weights.empty()) {
    if (weights.size() != values.size())
      throw std::invalid_argument("SampleBatch: weight/value size mismatch");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("SampleBatch: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("SampleBatch: weights must sum to 1");
  }
}

double SampleBatch::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += weight(i) * values[i];
  return m;
}

double SampleBatch::min() const {
  return *std::min_element(values.begin(), values.end());
}

double SampleBatch::max() const {
  return *std::max_element(values.begin(), values.end());
}

double gumbel_pdf(double x, const GumbelParams& p) {
  p.validate();
  if (!std::isfinite(x)) throw std::domain_error("gumbel_pdf: non-finite x");
  const double z = (x - p.loc) / p.scale;
  return std::exp(-(z + std::exp(-z))) / p.scale;
}

double gumbel_cdf(double x, const GumbelParams& p) {
  p.validate();
  if (!std::isfinite(x)) throw std::domain_error("gumbel_cdf: non-finite x");
  const double z = (x - p.loc) / p.scale;
  return std::exp(-std::exp(-z));
}

double gumbel_logpdf(double x, const GumbelParams& p) {
  const double z = (x - p.loc) / p.scale;
  return -std::log(p.scale) - z - std::exp(-z);
}

double gaussian_logpdf(double x, const GaussianParams& p) {
  const double z = (x - p.mean) / p.std;
  return -0.5 * std::log(2.0 * M_PI) - std::log(p.std) - 0.5 * z * z;
}

SampleBatch gumbel_sample(const GumbelParams& p, std::size_t n,
                          std::uint64_t seed) {
  p.validate();
  if (n == 0) throw std::invalid_argument("gumbel_sample: n must be >= 1");
  Rng rng(seed);
  SampleBatch out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = rng.gumbel(p.loc, p.scale);
  return out;
}

double lse_operator(const SampleBatch& batch, double beta) {
  batch.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("lse_operator: beta must be > 0");
  const double m = batch.max();
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    acc += batch.weight(i) * std::exp((batch.values[i] - m) / beta);
  return m + beta * std::log(acc);
}

double log_sum_exp(std::span<const double> values, double beta) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty");
  if (!(beta > 0.0)) throw std::invalid_argument("log_sum_exp: beta must be > 0");
  const double m = *std::max_element(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += std::exp((v - m) / beta);
  return m + beta * std::log(acc);
}

std::vector<double> softmax(std::span<const double> values, double beta) {
  const double m = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp((values[i] - m) / beta);
    acc += out[i];
  }
  for (double& v : out) v /= acc;
  return out;
}

GumbelMaxReport gumbel_max_trick_check(const SampleBatch& xs, double beta,
                                       std::size_t trials, std::uint64_t seed) {
  xs.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("gumbel_max_trick_check: beta must be > 0");
  if (trials < 1000)
    throw std::invalid_argument("gumbel_max_trick_check: trials must be >= 1000");
  Rng rng(seed);
  const std::size_t k = xs.size();
  std::vector<std::size_t> counts(k, 0);
  SampleBatch maxima;
  maxima.values.resize(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double v = xs.values[i] + rng.gumbel(0.0, beta);
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    maxima.values[t] = best;
    ++counts[best_i];
  }
  GumbelMaxReport report;
  report.fitted = fit_gumbel_mle(maxima);
  report.argmax_freq.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    report.argmax_freq[i] = static_cast<double>(counts[i]) / static_cast<double>(trials);
  return report;
}

namespace {

// beta - mean(x) + S1(beta)/S0(beta) with Sk = sum_i w_i x_i^k e^{-x_i/beta};
// exponents are shifted by the sample min so that e^{.} stays in (0, 1].
double mle_scale_equation(const SampleBatch& batch, double mean, double xmin,
                          double beta) {
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double e = std::exp(-(batch.values[i] - xmin) / beta);
    s0 += batch.weight(i) * e;
    s1 += batch.weight(i) * batch.values[i] * e;
  }
  return beta - mean + s1 / s0;
}

}  // namespace

GumbelParams fit_gumbel_mle(const SampleBatch& batch) {
  batch.validate();
  const double xmin = batch.min();
  const double xmax = batch.max();
  const double range = xmax - xmin;
  if (range <= 0.0)
    throw degenerate_sample_error("fit_gumbel_mle: all sample values identical");

  const double mean = batch.mean();
  double lo = 1e-8 * range;
  double hi = 10.0 * range;
  double flo = mle_scale_equation(batch, mean, xmin, lo);
  double fhi = mle_scale_equation(batch, mean, xmin, hi);
  if (flo > 0.0 || fhi < 0.0) {
    std::ostringstream msg;
    msg << "fit_gumbel_mle: failed to bracket the scale root"
        << " (f(" << lo << ")=" << flo << ", f(" << hi << ")=" << fhi << ")";
    throw convergence_error(msg.str());
  }
  // Bisection to relative tolerance 1e-9.
  while ((hi - lo) > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mle_scale_equation(batch, mean, xmin, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double beta = 0.5 * (lo + hi);

  // loc = -beta * log sum_i w_i e^{-x_i/beta}, shifted by xmin for stability.
  double s0 = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    s0 += batch.weight(i) * std::exp(-(batch.values[i] - xmin) / beta);
  const double loc = xmin - beta * std::log(s0);
  return {loc, beta};
}

GaussianParams fit_gaussian_mle(const SampleBatch& batch) {
  batch.validate();
  if (batch.max() - batch.min() <= 0.0)
    throw degenerate_sample_error("fit_gaussian_mle: all sample values identical");
  const double mean = batch.mean();
  double var = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = batch.values[i] - mean;
    var += batch.weight(i) * d * d;
  }
  return {mean, std::sqrt(var)};
}

double log_likelihood(const SampleBatch& batch, const GumbelParams& model) {
  batch.validate();
  model.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    acc += batch.weight(i) * gumbel_logpdf(batch.values[i], model);
  return acc;
}

double log_likelihood(const SampleBatch& batch, const GaussianParams& model) {
  batch.validate();
  model.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    acc += batch.weight(i) * gaussian_logpdf(batch.values[i], model);
  return acc;
}

}  // namespace xql
