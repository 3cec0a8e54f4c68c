#pragma once

// SNR maps over one or two parameter axes, ridge tracing and constrained
// optima.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cavisnr/detect.hpp"
#include "cavisnr/parallel.hpp"

namespace cavisnr {

enum class AxisKind { kFinesse, kFlux, kDelta, kTheta };
enum class AxisScale { kLinear, kLog };

inline const char* to_string(AxisKind kind) {
  switch (kind) {
    case AxisKind::kFinesse: return "finesse";
    case AxisKind::kFlux: return "flux";
    case AxisKind::kDelta: return "delta";
    case AxisKind::kTheta: return "theta";
  }
  return "?";
}

/// One swept parameter. Values are in natural units: finesse, photons/µs,
/// Δ/κ, θ/γ.
struct Axis {
  AxisKind kind = AxisKind::kFlux;
  AxisScale scale = AxisScale::kLog;
  std::vector<double> values;

  static Axis log(AxisKind kind, double first, double last, std::size_t count) {
    if (!(first > 0.0) || !(last > 0.0)) throw ParameterError("log axis bounds must be > 0");
    if (count < 2) throw ParameterError("axis needs at least two points");
    Axis a{kind, AxisScale::kLog, {}};
    a.values.resize(count);
    const double l0 = std::log10(first), l1 = std::log10(last);
    for (std::size_t i = 0; i < count; ++i) {
      a.values[i] = std::pow(10.0, l0 + (l1 - l0) * double(i) / double(count - 1));
    }
    a.values.front() = first;
    a.values.back() = last;
    return a;
  }

  static Axis linear(AxisKind kind, double first, double last, std::size_t count) {
    if (count < 2) throw ParameterError("axis needs at least two points");
    Axis a{kind, AxisScale::kLinear, {}};
    a.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      a.values[i] = first + (last - first) * double(i) / double(count - 1);
    }
    return a;
  }

  /// Coordinate used for interpolation: log10 for log axes.
  double coordinate(std::size_t i) const {
    return scale == AxisScale::kLog ? std::log10(values[i]) : values[i];
  }
  double from_coordinate(double x) const { return scale == AxisScale::kLog ? std::pow(10.0, x) : x; }
};

/// Base operating point in natural units.
struct NaturalOperatingPoint {
  double delta_over_kappa = 0.0;
  double theta_over_gamma = 0.0;
  double flux_per_us = 1.0;
  double tau_us = 20.0;
};

struct GridSpec {
  std::vector<Axis> axes;
  CavityGeometry geometry = reference_geometry();
  AtomSpec atom = AtomSpec::rubidium_d2();
  std::optional<double> g0_override = kReferenceG0;
  NaturalOperatingPoint base{};
  DetectorModel detector = DetectorModel::ideal_counter();
  TruncationPolicy truncation{};
  unsigned workers = 0;  ///< 0 picks CAVISNR_WORKERS or the hardware count
  /// Flux axes beyond this (photons/µs) are rejected up front.
  double max_flux_per_us = 1e7;

  void validate() const {
    if (axes.empty() || axes.size() > 2) throw ParameterError("a sweep needs one or two axes");
    for (const Axis& a : axes) {
      if (a.values.size() < 1) throw ParameterError(std::string("axis ") + to_string(a.kind) + " is empty");
      for (double v : a.values) {
        if (!std::isfinite(v)) throw ParameterError(std::string("axis ") + to_string(a.kind) + " has a non-finite value");
        if ((a.kind == AxisKind::kFinesse || a.kind == AxisKind::kFlux) && !(v > 0.0)) {
          throw ParameterError(std::string("axis ") + to_string(a.kind) + " values must be > 0");
        }
        if (a.kind == AxisKind::kFlux && v > max_flux_per_us) {
          throw CapacityError("flux axis exceeds configured limit of " + std::to_string(max_flux_per_us) +
                                  " photons/us",
                              static_cast<long>(v), static_cast<long>(max_flux_per_us));
        }
      }
    }
    if (axes.size() == 2 && axes[0].kind == axes[1].kind) throw ParameterError("the two axes must differ");
    geometry.validate();
    atom.validate();
    detector.validate();
    detail::require_positive(base.tau_us, "tau");
  }
};

enum class SweepStatus { kOk, kPartial };

struct Provenance {
  std::string config_echo;
  std::string version;
  std::string timestamp;
};

struct SweepResult {
  std::vector<Axis> axes;
  std::vector<SNRResult> points;  ///< row-major, last axis fastest
  DetectorModel detector{};
  SweepStatus status = SweepStatus::kOk;
  double invalid_fraction = 0.0;
  Provenance provenance;

  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> s;
    for (const Axis& a : axes) s.push_back(a.values.size());
    return s;
  }
  std::size_t flat(std::size_t i, std::size_t j = 0) const {
    return axes.size() == 2 ? i * axes[1].values.size() + j : i;
  }
  /// Per-axis indices of a flat position.
  std::vector<std::size_t> unflatten(std::size_t k) const {
    if (axes.size() == 2) return {k / axes[1].values.size(), k % axes[1].values.size()};
    return {k};
  }
};

/// Operating point and cavity at one grid position.
struct ResolvedPoint {
  OperatingPoint op;
  DerivedCavity cavity;
};

inline ResolvedPoint resolve_point(const GridSpec& spec, const std::vector<std::size_t>& index) {
  CavityGeometry geometry = spec.geometry;
  NaturalOperatingPoint nat = spec.base;
  for (std::size_t a = 0; a < spec.axes.size(); ++a) {
    const double v = spec.axes[a].values[index[a]];
    switch (spec.axes[a].kind) {
      case AxisKind::kFinesse: geometry.finesse = v; break;
      case AxisKind::kFlux: nat.flux_per_us = v; break;
      case AxisKind::kDelta: nat.delta_over_kappa = v; break;
      case AxisKind::kTheta: nat.theta_over_gamma = v; break;
    }
  }
  ResolvedPoint out;
  out.cavity = derive_cavity(geometry, spec.atom, spec.g0_override);
  out.op.delta = nat.delta_over_kappa * out.cavity.kappa;
  out.op.theta = nat.theta_over_gamma * spec.atom.gamma;
  out.op.flux = nat.flux_per_us * 1e6;
  out.op.tau = nat.tau_us / 1e6;
  return out;
}

/// Fraction of invalid points above which a sweep is reported as partial.
inline constexpr double kPartialThreshold = 0.2;

inline SweepResult run_grid(const GridSpec& spec) {
  spec.validate();
  SweepResult result;
  result.axes = spec.axes;
  result.detector = spec.detector;
  std::size_t total = 1;
  for (const Axis& a : spec.axes) total *= a.values.size();
  result.points.resize(total);

  const EvaluationOptions options{spec.truncation};
  parallel_for(total, resolve_workers(spec.workers), [&](std::size_t k) {
    SNRResult& slot = result.points[k];
    try {
      const ResolvedPoint rp = resolve_point(spec, result.unflatten(k));
      slot = evaluate_point(rp.op, rp.cavity, spec.atom, spec.detector, options);
    } catch (const std::exception& e) {
      slot = SNRResult{};
      slot.valid = false;
      slot.truncation_ok = false;
      slot.error = e.what();
    }
  });

  const auto invalid = std::count_if(result.points.begin(), result.points.end(),
                                     [](const SNRResult& r) { return !r.valid; });
  result.invalid_fraction = total ? double(invalid) / double(total) : 0.0;
  result.status = result.invalid_fraction > kPartialThreshold ? SweepStatus::kPartial : SweepStatus::kOk;
  return result;
}

struct RidgePoint {
  double outer = std::numeric_limits<double>::quiet_NaN();  ///< outer axis value (NaN for 1-D)
  double argmax = std::numeric_limits<double>::quiet_NaN(); ///< refined inner coordinate
  double max_snr = std::numeric_limits<double>::quiet_NaN();
  double flux_per_us = std::numeric_limits<double>::quiet_NaN();
  std::size_t index = 0;  ///< discrete argmax along the inner axis
  bool refined = false;
  bool gap = false;       ///< row had no usable point
};

struct RidgeTrace {
  std::optional<AxisKind> outer_kind;
  AxisKind inner_kind = AxisKind::kFlux;
  std::vector<RidgePoint> rows;
  bool has_gaps = false;
};

namespace detail {

// Vertex of the parabola through three points with x0 < x1 < x2.
inline std::optional<std::pair<double, double>> parabola_vertex(double x0, double y0, double x1, double y1,
                                                                double x2, double y2) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double curvature = (d12 - d01) / (x2 - x0);
  if (!(curvature < 0.0)) return std::nullopt;
  const double b = d01 - curvature * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * curvature), x0, x2);
  const double yv = y0 + d01 * (xv - x0) + curvature * (xv - x0) * (xv - x1);
  return std::pair{xv, yv};
}

}  // namespace detail

/// Per-row maximum of |S| (the figure of merit of the sweep's detector) along
/// the inner axis. Interior maxima are refined by a parabola through the
/// bracketing points in the axis' own coordinate (log10 for log axes).
inline RidgeTrace ridge_max(const SweepResult& result, AxisKind inner = AxisKind::kFlux) {
  std::size_t inner_axis = result.axes.size();
  for (std::size_t a = 0; a < result.axes.size(); ++a) {
    if (result.axes[a].kind == inner) inner_axis = a;
  }
  if (inner_axis == result.axes.size()) throw ParameterError(std::string("sweep has no ") + to_string(inner) + " axis");
  const Axis& ax = result.axes[inner_axis];
  if (ax.values.size() < 3) throw ParameterError("ridge needs at least three points on the inner axis");

  RidgeTrace trace;
  trace.inner_kind = inner;
  const bool two_d = result.axes.size() == 2;
  const std::size_t outer_axis = two_d ? 1 - inner_axis : 0;
  if (two_d) trace.outer_kind = result.axes[outer_axis].kind;
  const std::size_t rows = two_d ? result.axes[outer_axis].values.size() : 1;
  const std::size_t n = ax.values.size();

  for (std::size_t r = 0; r < rows; ++r) {
    auto at = [&](std::size_t j) -> const SNRResult& {
      if (!two_d) return result.points[j];
      return inner_axis == 1 ? result.points[result.flat(r, j)] : result.points[result.flat(j, r)];
    };
    auto value = [&](std::size_t j) { return std::abs(at(j).primary(result.detector)); };

    RidgePoint rp;
    if (two_d) rp.outer = result.axes[outer_axis].values[r];
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < n; ++j) {
      if (!at(j).usable()) continue;
      const double v = value(j);
      if (!best || v > value(*best) || (v == value(*best) && ax.values[j] < ax.values[*best])) best = j;
    }
    if (!best) {
      rp.gap = true;
      trace.has_gaps = true;
      trace.rows.push_back(rp);
      continue;
    }
    const std::size_t j = *best;
    rp.index = j;
    rp.argmax = ax.values[j];
    rp.max_snr = value(j);
    if (j > 0 && j + 1 < n && at(j - 1).usable() && at(j + 1).usable()) {
      if (auto v = detail::parabola_vertex(ax.coordinate(j - 1), value(j - 1), ax.coordinate(j), value(j),
                                           ax.coordinate(j + 1), value(j + 1))) {
        rp.argmax = ax.from_coordinate(v->first);
        rp.max_snr = std::max(v->second, value(j));
        rp.refined = true;
      }
    }
    if (inner == AxisKind::kFlux) {
      rp.flux_per_us = rp.argmax;
    } else if (two_d && result.axes[outer_axis].kind == AxisKind::kFlux) {
      rp.flux_per_us = rp.outer;
    }
    trace.rows.push_back(rp);
  }
  return trace;
}

/// Closed interval on one axis, in that axis' natural units.
struct AxisRange {
  AxisKind kind = AxisKind::kFlux;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct Optimum {
  std::vector<double> coordinates;  ///< one per axis, natural units
  std::size_t flat_index = 0;
  SNRResult point;
};

/// Largest |S| over usable points inside every given range. Ranges on axes
/// the sweep lacks are ignored.
inline Optimum find_optimum(const SweepResult& result, const std::vector<AxisRange>& region = {}) {
  std::optional<std::size_t> best;
  double best_value = -1.0;
  for (std::size_t k = 0; k < result.points.size(); ++k) {
    const SNRResult& p = result.points[k];
    if (!p.usable()) continue;
    const auto idx = result.unflatten(k);
    bool inside = true;
    for (const AxisRange& range : region) {
      for (std::size_t a = 0; a < result.axes.size(); ++a) {
        if (result.axes[a].kind != range.kind) continue;
        const double v = result.axes[a].values[idx[a]];
        if (v < range.lo || v > range.hi) inside = false;
      }
    }
    if (!inside) continue;
    const double v = std::abs(p.primary(result.detector));
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  if (!best) throw RangeError("no usable grid point inside the requested region");
  Optimum out;
  out.flat_index = *best;
  out.point = result.points[*best];
  const auto idx = result.unflatten(*best);
  for (std::size_t a = 0; a < result.axes.size(); ++a) out.coordinates.push_back(result.axes[a].values[idx[a]]);
  return out;
}

}  // namespace cavisnr
