#include "autoal/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "autoal/errors.hpp"

namespace autoal {

namespace {

double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

// k-means++-style spread-out pick of initial means on the 1-D observations.
std::vector<double> init_means(std::span<const double> obs, std::size_t k,
                               std::mt19937_64& rng) {
  std::vector<double> means;
  std::uniform_int_distribution<std::size_t> first(0, obs.size() - 1);
  means.push_back(obs[first(rng)]);
  std::vector<double> d2(obs.size(), std::numeric_limits<double>::max());
  while (means.size() < k) {
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double d = obs[i] - means.back();
      d2[i] = std::min(d2[i], d * d);
    }
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t next = means.size() % obs.size();
    if (total > 0.0) {
      std::uniform_real_distribution<double> pick(0.0, total);
      double r = pick(rng);
      for (std::size_t i = 0; i < obs.size(); ++i) {
        r -= d2[i];
        if (r <= 0.0) {
          next = i;
          break;
        }
      }
    }
    means.push_back(obs[next]);
  }
  return means;
}

double log_likelihood(std::span<const double> obs, const GaussianMixture& gm) {
  double ll = 0.0;
  for (double x : obs) {
    double best = -std::numeric_limits<double>::max();
    std::vector<double> terms(gm.components());
    for (std::size_t c = 0; c < gm.components(); ++c) {
      terms[c] = gm.weights[c] > 0.0
                     ? std::log(gm.weights[c]) +
                           log_normal_pdf(x, gm.means[c], gm.variances[c])
                     : -std::numeric_limits<double>::max();
      best = std::max(best, terms[c]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - best);
    ll += best + std::log(sum);
  }
  return ll;
}

}  // namespace

std::pair<GaussianMixture, FitReport> fit_em(std::span<const double> observations,
                                             std::size_t components, int max_iters,
                                             double tol, std::uint64_t seed) {
  const std::size_t n = observations.size();
  if (components == 0) throw InputError("fit_em: need at least one component");
  if (components > n)
    throw InputError("fit_em: more components than observations");

  double lo = observations[0], hi = observations[0];
  double mean_all = 0.0;
  for (double x : observations) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    mean_all += x;
  }
  mean_all /= static_cast<double>(n);
  double var_all = 0.0;
  for (double x : observations) var_all += (x - mean_all) * (x - mean_all);
  var_all = std::max(var_all / static_cast<double>(n), kVarianceFloor);

  GaussianMixture gm;
  gm.weights.assign(components, 1.0 / static_cast<double>(components));
  gm.variances.assign(components, var_all);

  FitReport report;
  if (hi - lo <= 0.0) {
    // Degenerate input: one effective component at the floor variance.
    gm.means.assign(components, mean_all);
    gm.variances.assign(components, kVarianceFloor);
    report.converged = true;
    report.final_log_likelihood = log_likelihood(observations, gm);
    report.trace.push_back(report.final_log_likelihood);
    return {std::move(gm), std::move(report)};
  }

  std::mt19937_64 rng(seed);
  gm.means = init_means(observations, components, rng);

  std::vector<double> resp(n * components);
  double prev_ll = -std::numeric_limits<double>::max();
  for (int iter = 0; iter < max_iters; ++iter) {
    // E-step with log-sum-exp stabilization.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::max();
      for (std::size_t c = 0; c < components; ++c) {
        const double t =
            (gm.weights[c] > 0.0
                 ? std::log(gm.weights[c]) +
                       log_normal_pdf(observations[i], gm.means[c], gm.variances[c])
                 : -std::numeric_limits<double>::max());
        resp[i * components + c] = t;
        best = std::max(best, t);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < components; ++c) {
        resp[i * components + c] = std::exp(resp[i * components + c] - best);
        sum += resp[i * components + c];
      }
      for (std::size_t c = 0; c < components; ++c) resp[i * components + c] /= sum;
      ll += best + std::log(sum);
    }
    report.trace.push_back(ll);
    report.iterations = iter + 1;

    if (ll - prev_ll < tol && iter > 0) {
      report.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step.
    for (std::size_t c = 0; c < components; ++c) {
      double nk = 0.0, mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * components + c];
        mu += resp[i * components + c] * observations[i];
      }
      if (nk <= 0.0) {
        gm.weights[c] = 0.0;
        continue;
      }
      mu /= nk;
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = observations[i] - mu;
        var += resp[i * components + c] * d * d;
      }
      gm.weights[c] = nk / static_cast<double>(n);
      gm.means[c] = mu;
      gm.variances[c] = std::max(var / nk, kVarianceFloor);
    }
  }
  report.final_log_likelihood = report.trace.back();
  return {std::move(gm), std::move(report)};
}

double density(const GaussianMixture& gm, double s) {
  double p = 0.0;
  for (std::size_t c = 0; c < gm.components(); ++c)
    if (gm.weights[c] > 0.0)
      p += gm.weights[c] * std::exp(log_normal_pdf(s, gm.means[c], gm.variances[c]));
  return p;
}

std::vector<double> sample(const GaussianMixture& gm, std::size_t count,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(gm.weights.begin(), gm.weights.end());
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> draws(count);
  for (double& d : draws) {
    const std::size_t c = pick(rng);
    d = gm.means[c] + std::sqrt(gm.variances[c]) * unit(rng);
  }
  return draws;
}

double threshold_top_t(std::span<const double> samples, double t) {
  if (samples.empty()) throw InputError("threshold_top_t: empty sample set");
  if (t <= 0.0 || t > 1.0) throw InputError("threshold_top_t: t must lie in (0, 1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(t * static_cast<double>(sorted.size())));
  return sorted[rank - 1];
}

}  // namespace autoal
