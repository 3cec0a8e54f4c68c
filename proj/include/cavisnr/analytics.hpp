#pragma once

// Closed-form companions to the numerical model: dressed-state ladder,
// linear-response field amplitude, classical saturable absorber, probe
// transmission spectra and their sensitivity to frequency jitter.

#include <cmath>
#include <vector>

#include "cavisnr/detect.hpp"
#include "cavisnr/parallel.hpp"

namespace cavisnr {

enum class Branch { kPlus, kMinus };

/// Level |n±⟩ with energy offset from ħω_c(n − 1/2), in rad/s.
struct DressedLevel {
  int excitation = 1;
  Branch branch = Branch::kPlus;
  double offset = 0.0;
};

struct DressedPair {
  DressedLevel plus;
  DressedLevel minus;
};

/// ±½√(4g²n + (Δ − θ)²). The ground state n = 0 has no branches.
inline DressedPair dressed_energies(int n, double g, double delta, double theta) {
  if (n < 1) throw ParameterError("the n = 0 ground level has no dressed branches");
  const double detuning = delta - theta;
  const double half = 0.5 * std::sqrt(4.0 * g * g * n + detuning * detuning);
  return {{n, Branch::kPlus, half}, {n, Branch::kMinus, -half}};
}

/// |δ(n)| = g(√(n+1) − √n), the mismatch between one probe photon and the
/// next rung of the resonant ladder. Written as g/(√(n+1) + √n) to avoid
/// cancellation at large n.
inline double probe_detuning_shift(double n, double g) {
  if (n < 0.0) throw ParameterError("excitation number must be >= 0");
  return g / (std::sqrt(n + 1.0) + std::sqrt(n));
}

/// Linear-response ⟨a⟩ with the atom held in its ground state:
/// −iε(γ/2 + iθ) / [(κ + iΔ)(γ/2 + iθ) + g²].
inline Complex weak_drive_amplitude(double epsilon, double delta, double theta, double g, double kappa,
                                    double gamma) {
  const Complex i1(0.0, 1.0);
  const Complex atom = gamma / 2.0 + i1 * theta;
  return -i1 * epsilon * atom / ((kappa + i1 * delta) * atom + g * g);
}

struct AbsorberSignal {
  double cross_section = 0.0;  ///< σ = σ₀/(I/I_sat + 1)
  double signal = 0.0;         ///< s = F·σ/A
};

/// Classical saturable absorber. Intensity is given in units of I_sat.
inline AbsorberSignal saturable_absorber(double intensity_over_sat, double sigma0, double flux, double area) {
  if (!(intensity_over_sat >= 0.0)) throw ParameterError("intensity must be >= 0");
  detail::require_positive(area, "beam area");
  detail::require_positive(sigma0, "cross section");
  AbsorberSignal out;
  out.cross_section = sigma0 / (intensity_over_sat + 1.0);
  out.signal = flux * out.cross_section / area;
  return out;
}

struct SpectrumPoint {
  double delta = 0.0;          ///< cavity-probe detuning (rad/s)
  double theta = 0.0;          ///< atom-probe detuning (rad/s)
  double transmission = 0.0;   ///< n / n₀(Δ = 0)
  double phase = 0.0;          ///< arg ⟨a⟩
  double photons = 0.0;
  bool valid = true;
};

struct SpectrumCurve {
  std::vector<SpectrumPoint> points;
  double atom_cavity_offset = 0.0;  ///< ω_a − ω_c; θ = Δ + offset along the scan
  double peak_photons = 0.0;        ///< empty-cavity resonant photon number used for T
  bool with_atom = true;
};

struct SpectrumOptions {
  double atom_cavity_offset = 0.0;
  bool with_atom = true;
  TruncationPolicy truncation{};
  unsigned workers = 1;
};

/// Scans the probe across `deltas` at fixed input flux, with the atom detuned
/// from the cavity by a fixed offset (θ = Δ + offset). Points that fail to
/// solve are kept with valid = false.
inline SpectrumCurve transmission_spectrum(const DerivedCavity& cavity, const AtomSpec& atom, double flux,
                                           const std::vector<double>& deltas, const SpectrumOptions& options = {}) {
  const double epsilon = calibrate_drive(flux, cavity);
  const Dissipation diss{cavity.kappa, atom.gamma};
  SpectrumCurve curve;
  curve.atom_cavity_offset = options.atom_cavity_offset;
  curve.with_atom = options.with_atom;
  curve.peak_photons = empty_cavity_photons(epsilon, cavity.kappa, 0.0);
  curve.points.resize(deltas.size());
  const double g = options.with_atom ? cavity.g0 : 0.0;

  parallel_for(deltas.size(), resolve_workers(options.workers), [&](std::size_t i) {
    SpectrumPoint& pt = curve.points[i];
    pt.delta = deltas[i];
    pt.theta = deltas[i] + options.atom_cavity_offset;
    try {
      const TruncatedSolution sol = auto_truncate({pt.delta, pt.theta, g, epsilon}, diss, options.truncation);
      const Observables o = expectations(sol.state);
      pt.photons = o.photons;
      pt.transmission = curve.peak_photons > 0.0 ? o.photons / curve.peak_photons : 0.0;
      pt.phase = std::arg(o.field);
      pt.valid = sol.state.hermitian_ok;
    } catch (const Error&) {
      pt.valid = false;
    }
  });
  return curve;
}

/// Relative transmitted-amplitude fluctuation caused by frequency jitter,
/// against the shot-noise floor 1/√N_empty.
struct NoiseSusceptibility {
  double slope = 0.0;        ///< dT/dΔ (per rad/s)
  double transmission = 0.0;
  double fluctuation = 0.0;  ///< |dT/dΔ|·δω / T
  double shot = 0.0;         ///< 1/√N_empty
  double ratio = 0.0;        ///< fluctuation / shot
};

namespace detail {

inline NoiseSusceptibility finish_susceptibility(double slope, double transmission, double jitter,
                                                 double counts_empty) {
  detail::require_positive(counts_empty, "empty-cavity counts");
  if (!(jitter >= 0.0)) throw ParameterError("frequency jitter must be >= 0");
  NoiseSusceptibility out;
  out.slope = slope;
  out.transmission = transmission;
  out.fluctuation = transmission > 0.0 ? std::abs(slope) * jitter / transmission : 0.0;
  out.shot = 1.0 / std::sqrt(counts_empty);
  out.ratio = out.fluctuation / out.shot;
  return out;
}

}  // namespace detail

/// Reads the slope off a solved spectrum by centred differences, linearly
/// interpolated between grid nodes. The operating detuning must have a valid
/// neighbour on both sides.
inline NoiseSusceptibility noise_susceptibility(const SpectrumCurve& curve, double delta, double jitter,
                                                double counts_empty) {
  const auto& p = curve.points;
  const std::size_t n = p.size();
  if (n < 3) throw RangeError("spectrum needs at least three points");
  auto centred = [&](std::size_t i) {
    if (i == 0 || i + 1 >= n) throw RangeError("operating detuning is at the edge of the spectrum");
    if (!p[i - 1].valid || !p[i + 1].valid || !p[i].valid) throw RangeError("spectrum has invalid points near the operating detuning");
    return (p[i + 1].transmission - p[i - 1].transmission) / (p[i + 1].delta - p[i - 1].delta);
  };
  if (delta < p.front().delta || delta > p.back().delta) throw RangeError("operating detuning outside the spectrum");
  std::size_t hi = 1;
  while (hi < n - 1 && p[hi].delta < delta) ++hi;
  const std::size_t lo = hi - 1;
  const double w = (delta - p[lo].delta) / (p[hi].delta - p[lo].delta);
  double slope, transmission;
  if (w <= 1e-12) {
    slope = centred(lo);
    transmission = p[lo].transmission;
  } else if (w >= 1.0 - 1e-12) {
    slope = centred(hi);
    transmission = p[hi].transmission;
  } else {
    slope = (1.0 - w) * centred(lo) + w * centred(hi);
    transmission = (1.0 - w) * p[lo].transmission + w * p[hi].transmission;
  }
  return detail::finish_susceptibility(slope, transmission, jitter, counts_empty);
}

/// Same estimate with the slope taken from fresh solves at Δ ± h, halving h
/// from κ/4 until two successive slopes agree to 1 %.
inline NoiseSusceptibility refined_noise_susceptibility(const DerivedCavity& cavity, const AtomSpec& atom,
                                                        double flux, double delta, double jitter,
                                                        double counts_empty,
                                                        const SpectrumOptions& options = {}) {
  SpectrumOptions serial = options;
  serial.workers = 1;
  auto slope_at = [&](double h) {
    const SpectrumCurve c = transmission_spectrum(cavity, atom, flux, {delta - h, delta, delta + h}, serial);
    for (const auto& pt : c.points) {
      if (!pt.valid) throw SolverError("spectrum point failed while refining slope", 0.0);
    }
    return std::pair{(c.points[2].transmission - c.points[0].transmission) / (2.0 * h), c.points[1].transmission};
  };
  double h = cavity.kappa / 4.0;
  auto [previous, transmission] = slope_at(h);
  for (int iter = 0; iter < 12; ++iter) {
    h /= 2.0;
    const auto [slope, t] = slope_at(h);
    const bool stable = std::abs(slope - previous) <= 0.01 * std::max(std::abs(slope), 1e-300) ||
                        (slope == 0.0 && previous == 0.0);
    previous = slope;
    transmission = t;
    if (stable) break;
  }
  return detail::finish_susceptibility(previous, transmission, jitter, counts_empty);
}

/// Local maxima of the valid transmission samples, refined by a parabola
/// through each peak and its two neighbours. Returns detunings in rad/s.
inline std::vector<double> transmission_peaks(const SpectrumCurve& curve, bool refine = false) {
  std::vector<double> peaks;
  const auto& p = curve.points;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (!p[i - 1].valid || !p[i].valid || !p[i + 1].valid) continue;
    if (p[i].transmission > p[i - 1].transmission && p[i].transmission >= p[i + 1].transmission) {
      double x = p[i].delta;
      if (refine) {
        const double y0 = p[i - 1].transmission, y1 = p[i].transmission, y2 = p[i + 1].transmission;
        const double den = y0 - 2.0 * y1 + y2;
        const double step = 0.5 * (p[i + 1].delta - p[i - 1].delta);
        if (den < 0.0) x += 0.5 * (y0 - y2) / den * step;
      }
      peaks.push_back(x);
    }
  }
  return peaks;
}

}  // namespace cavisnr
