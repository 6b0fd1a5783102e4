#ifndef XQL_GUMBEL_HPP
#define XQL_GUMBEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace xql {

// Location/scale pair of the Gumbel (GEV type-1) distribution. The density is
// the normalized form p(x) = (1/scale) * exp(-(z + e^{-z})), z = (x-loc)/scale.
struct GumbelParams {
  double loc = 0.0;
  double scale = 1.0;
  void validate() const;  // scale > 0, both finite
};

struct GaussianParams {
  double mean = 0.0;
  double std = 1.0;
  void validate() const;
};

// A weighted sample. Weights are optional; absent means uniform. When present
// they must be nonnegative and sum to 1 within 1e-12.
struct SampleBatch {
  std::vector<double> values;
  std::vector<double> weights;  // empty == uniform

  void validate() const;
  std::size_t size() const { return values.size(); }
  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 / static_cast<double>(values.size())
                           : weights[i];
  }
  double mean() const;
  double min() const;
  double max() const;
};

double gumbel_pdf(double x, const GumbelParams& p);
double gumbel_cdf(double x, const GumbelParams& p);
double gumbel_logpdf(double x, const GumbelParams& p);
double gaussian_logpdf(double x, const GaussianParams& p);

// Inverse-CDF sampler: x = loc - scale * log(-log U). Deterministic per seed.
SampleBatch gumbel_sample(const GumbelParams& p, std::size_t n,
                          std::uint64_t seed);

// The log-partition operator of Eq-style MaxEnt values:
//   beta * log sum_i w_i e^{x_i/beta},
// computed with a max shift. With uniform weights this interpolates between
// the batch mean (beta -> inf) and the batch max (beta -> 0).
double lse_operator(const SampleBatch& batch, double beta);

// Unweighted form beta * log sum_i e^{x_i/beta}. This is the location that
// the Gumbel-max trick produces for max_i(x_i + eps_i), eps ~ Gumbel(0, beta),
// and differs from the uniform-weight lse_operator by beta * log n.
double log_sum_exp(std::span<const double> values, double beta);

struct GumbelMaxReport {
  GumbelParams fitted;             // MLE fit of the simulated max
  std::vector<double> argmax_freq; // empirical argmax frequencies
};

// Simulates max_i(x_i + eps_i) with i.i.d. eps_i ~ Gumbel(0, beta). The max
// should fit Gumbel(log_sum_exp(x, beta), beta) and the argmax frequencies
// should match softmax(x/beta).
GumbelMaxReport gumbel_max_trick_check(const SampleBatch& xs, double beta,
                                       std::size_t trials, std::uint64_t seed);

// Standard Gumbel MLE. The scale solves
//   beta = mean(x) - sum_i w_i x_i e^{-x_i/beta} / sum_i w_i e^{-x_i/beta}
// by bracketed bisection to relative tolerance 1e-9 on
// [1e-8 * range, 10 * range]; then loc = -beta * log sum_i w_i e^{-x_i/beta}.
GumbelParams fit_gumbel_mle(const SampleBatch& batch);

// Closed-form Gaussian MLE with the population (1/n) variance convention.
GaussianParams fit_gaussian_mle(const SampleBatch& batch);

// Average per-sample log density under either model.
double log_likelihood(const SampleBatch& batch, const GumbelParams& model);
double log_likelihood(const SampleBatch& batch, const GaussianParams& model);

std::vector<double> softmax(std::span<const double> values, double beta);

inline constexpr double kEulerMascheroni = 0.57721566490153286;

}  // namespace xql

#endif  // XQL_GUMBEL_HPP
