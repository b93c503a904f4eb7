#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace autoal {

// Univariate Gaussian mixture: weights on the simplex, per-component mean and
// variance (variances floored at 1e-6).
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  std::size_t components() const { return weights.size(); }
};

struct FitReport {
  int iterations = 0;
  double final_log_likelihood = 0.0;
  std::vector<double> trace;  // non-decreasing within 1e-9
  bool converged = false;
};

inline constexpr double kVarianceFloor = 1e-6;

// Standard EM with k-means++-style mean initialization. Stops when the
// log-likelihood gain drops below `tol` or after `max_iters`. k > n ->
// InputError; all-identical observations collapse to a floor-variance
// component with converged = true.
std::pair<GaussianMixture, FitReport> fit_em(std::span<const double> observations,
                                             std::size_t components, int max_iters,
                                             double tol, std::uint64_t seed);

double density(const GaussianMixture& gm, double s);

// Component by categorical(weights), then a normal draw; deterministic given
// seed.
std::vector<double> sample(const GaussianMixture& gm, std::size_t count,
                           std::uint64_t seed);

// The ceil(t * len)-th largest value; t outside (0, 1] -> InputError.
double threshold_top_t(std::span<const double> samples, double t);

}  // namespace autoal
