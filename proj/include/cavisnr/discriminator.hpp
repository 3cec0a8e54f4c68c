#pragma once

// Poisson count statistics for a photon-count discriminator: detection
// efficiency and false-count probability versus threshold, and the p-sigma
// threshold rule.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cavisnr/error.hpp"

namespace cavisnr {

namespace detail {

inline double log_poisson_pmf(long k, double mean) {
  return double(k) * std::log(mean) - mean - std::lgamma(double(k) + 1.0);
}

// Sum of pmf(j) for j ≤ k, starting from pmf(k) and walking down.
// Terms decrease monotonically for k < mean so the walk can stop early.
inline double lower_tail(long k, double mean) {
  double term = std::exp(log_poisson_pmf(k, mean));
  double sum = term;
  for (long j = k; j > 0 && term > 1e-18 * sum; --j) {
    term *= double(j) / mean;
    sum += term;
  }
  return sum;
}

// Sum of pmf(j) for j > k, starting from pmf(k + 1) and walking up.
inline double upper_tail(long k, double mean) {
  double term = std::exp(log_poisson_pmf(k + 1, mean));
  double sum = term;
  for (long j = k + 1; term > 1e-18 * sum || double(j) < mean; ++j) {
    term *= mean / double(j + 1);
    sum += term;
    if (term == 0.0) break;
  }
  return sum;
}

}  // namespace detail

/// P(X ≤ k) for X ~ Poisson(mean). The smaller tail is summed explicitly.
inline double poisson_cdf(long k, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ParameterError("Poisson mean must be finite and >= 0");
  if (k < 0) return 0.0;
  if (mean == 0.0) return 1.0;
  if (double(k) < mean) return std::min(1.0, detail::lower_tail(k, mean));
  return std::max(0.0, 1.0 - detail::upper_tail(k, mean));
}

/// P(X > k).
inline double poisson_sf(long k, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ParameterError("Poisson mean must be finite and >= 0");
  if (k < 0) return 1.0;
  if (mean == 0.0) return 0.0;
  if (double(k) < mean) return std::max(0.0, 1.0 - detail::lower_tail(k, mean));
  return std::min(1.0, detail::upper_tail(k, mean));
}

enum class Polarity { kDip, kPeak };

struct CountModel {
  double n_empty = 0.0;  ///< mean counts without an atom
  double n_atom = 0.0;   ///< mean counts during a transit
  Polarity polarity = Polarity::kDip;

  static CountModel from_means(double n_empty, double n_atom) {
    CountModel m{n_empty, n_atom, n_atom > n_empty ? Polarity::kPeak : Polarity::kDip};
    m.validate();
    return m;
  }

  void validate() const {
    if (!(n_empty >= 0.0) || !(n_atom >= 0.0) || !std::isfinite(n_empty) || !std::isfinite(n_atom)) {
      throw ParameterError("count means must be finite and >= 0");
    }
    if (polarity == Polarity::kDip && n_atom > n_empty) throw ParameterError("dip polarity needs N <= N_empty");
    if (polarity == Polarity::kPeak && n_atom < n_empty) throw ParameterError("peak polarity needs N >= N_empty");
  }

  /// (N_empty − N)/√(N_empty + N).
  double snr() const {
    const double total = n_empty + n_atom;
    return total > 0.0 ? (n_empty - n_atom) / std::sqrt(total) : 0.0;
  }
};

struct DiscriminatorPoint {
  long threshold = 0;
  double qe = 0.0;
  double false_rate = 0.0;
};

struct DiscriminatorCurve {
  CountModel model;
  std::vector<DiscriminatorPoint> points;
};

/// Dip: an event is X ≤ d. Peak: an event is X ≥ d.
inline DiscriminatorPoint discriminator_at(const CountModel& model, long d) {
  DiscriminatorPoint p{d, 0.0, 0.0};
  if (model.polarity == Polarity::kDip) {
    p.qe = poisson_cdf(d, model.n_atom);
    p.false_rate = poisson_cdf(d, model.n_empty);
  } else {
    p.qe = poisson_sf(d - 1, model.n_atom);
    p.false_rate = poisson_sf(d - 1, model.n_empty);
  }
  return p;
}

inline DiscriminatorCurve qe_false_curves(const CountModel& model, long d_first, long d_last) {
  model.validate();
  if (d_last < d_first) throw ParameterError("threshold range is empty");
  DiscriminatorCurve curve{model, {}};
  curve.points.reserve(std::size_t(d_last - d_first + 1));
  for (long d = d_first; d <= d_last; ++d) curve.points.push_back(discriminator_at(model, d));
  return curve;
}

/// Thresholds 0 … ⌈max mean + 10√max mean + 20⌉, far enough out that both
/// curves reach their limits to double precision.
inline DiscriminatorCurve qe_false_curves(const CountModel& model) {
  const double top = std::max(model.n_empty, model.n_atom);
  return qe_false_curves(model, 0, long(std::ceil(top + 10.0 * std::sqrt(top) + 20.0)));
}

/// S_min = √2·p.
inline double min_snr_for_sigma(double p) {
  if (!(p >= 0.0)) throw ParameterError("sigma count must be >= 0");
  return std::numbers::sqrt2 * p;
}

struct ThresholdChoice {
  long threshold = 0;
  double lo = 0.0;  ///< interval of admissible thresholds
  double hi = 0.0;
  double qe = 0.0;
  double false_rate = 0.0;
};

/// Places d between the two distributions, at least p·√mean from each mean.
/// The midpoint of the admissible interval is rounded down.
inline ThresholdChoice choose_threshold(const CountModel& model, double p) {
  model.validate();
  if (!(p > 0.0)) throw ParameterError("sigma count must be > 0");
  const double low_mean = model.polarity == Polarity::kDip ? model.n_atom : model.n_empty;
  const double high_mean = model.polarity == Polarity::kDip ? model.n_empty : model.n_atom;
  ThresholdChoice c;
  c.lo = low_mean + p * std::sqrt(low_mean);
  c.hi = high_mean - p * std::sqrt(high_mean);
  if (!(c.lo <= c.hi) || low_mean == high_mean) {
    throw SeparationError("count distributions are not separated at " + std::to_string(p) +
                              " sigma; SNR " + std::to_string(std::abs(model.snr())) + " < required " +
                              std::to_string(min_snr_for_sigma(p)),
                          min_snr_for_sigma(p));
  }
  c.threshold = long(std::floor(0.5 * (c.lo + c.hi)));
  const DiscriminatorPoint at = discriminator_at(model, c.threshold);
  c.qe = at.qe;
  c.false_rate = at.false_rate;
  return c;
}

}  // namespace cavisnr
