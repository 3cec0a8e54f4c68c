#pragma once

// From steady-state observables to detected photon statistics: drive
// calibration, direct-counting and heterodyne SNR, detector realism.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "cavisnr/params.hpp"
#include "cavisnr/steadystate.hpp"

namespace cavisnr {

/// Probe configuration. Detunings in rad/s, flux in photons/s, τ in s.
struct OperatingPoint {
  double delta = 0.0;   ///< cavity-probe detuning Δ
  double theta = 0.0;   ///< atom-probe detuning θ
  double flux = 0.0;    ///< input photon flux
  double tau = 20e-6;   ///< measurement window
  std::optional<double> g;  ///< coupling; cavity g₀ when empty

  void validate() const {
    if (!std::isfinite(delta) || !std::isfinite(theta)) throw ParameterError("detunings must be finite");
    if (!std::isfinite(flux) || flux < 0.0) throw ParameterError("input flux must be >= 0");
    detail::require_positive(tau, "measurement window tau");
    if (g && (!std::isfinite(*g) || *g < 0.0)) throw ParameterError("coupling g must be >= 0");
  }
};

enum class DetectorKind { kIdealCounter, kApd, kHeterodyne };

struct DetectorModel {
  DetectorKind kind = DetectorKind::kIdealCounter;
  double efficiency = 1.0;
  double saturation_flux = std::numeric_limits<double>::infinity();  ///< incident photons/s

  static DetectorModel ideal_counter() { return {}; }
  /// Avalanche photodiode: 50 % QE, 20 photons/µs incident flux limit.
  static DetectorModel apd() { return {DetectorKind::kApd, 0.5, 20e6}; }
  static DetectorModel heterodyne(double efficiency = 0.95) {
    return {DetectorKind::kHeterodyne, efficiency, std::numeric_limits<double>::infinity()};
  }

  bool is_counter() const { return kind != DetectorKind::kHeterodyne; }

  void validate() const {
    if (!(efficiency > 0.0) || efficiency > 1.0) throw ParameterError("detector efficiency must lie in (0, 1]");
    if (!(saturation_flux > 0.0)) throw ParameterError("detector saturation flux must be > 0");
  }
};

inline const char* to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kIdealCounter: return "ideal-counter";
    case DetectorKind::kApd: return "apd";
    case DetectorKind::kHeterodyne: return "heterodyne";
  }
  return "?";
}

struct SNRResult {
  double n_empty = 0.0;         ///< n₀
  double n_atom = 0.0;          ///< n
  double field_sq = 0.0;        ///< |⟨a⟩|² with the atom
  double empty_field_sq = 0.0;  ///< |⟨a⟩₀|²
  double counts_empty = 0.0;    ///< N_empty in τ
  double counts = 0.0;          ///< N in τ
  double snr = 0.0;             ///< direct counting
  double snr_het = 0.0;         ///< heterodyne
  double fano = 1.0;            ///< of the with-atom intracavity field
  double incident_flux = 0.0;   ///< larger of the two transmitted fluxes before η (photons/s)
  int cutoff = 1;               ///< Fock cutoff of the with-atom solve
  bool apd_saturated = false;
  bool truncation_ok = true;
  bool empty_coherent = true;   ///< n₀ = |⟨a⟩₀|² within 1e-8(1 + n₀)
  bool valid = true;            ///< false when the point failed to evaluate
  std::string error;

  /// Figure of merit of the detector the point was evaluated for.
  double primary(const DetectorModel& detector) const {
    return detector.is_counter() ? snr : snr_het;
  }
  /// Eligible for optima: evaluated, converged, not saturated.
  bool usable() const { return valid && truncation_ok && !apd_saturated; }
};

/// ε = κ·√(Φ/r_out), r_out the output-mirror escape rate per photon. The empty
/// cavity at Δ = 0 then holds Φ/r_out photons and transmits exactly Φ.
inline double calibrate_drive(double flux, const DerivedCavity& cavity) {
  if (!std::isfinite(flux) || flux < 0.0) throw ParameterError("input flux must be >= 0");
  const double rate = cavity.output_rate();
  if (!(rate > 0.0)) throw ConfigurationError("output coupling is zero; no transmitted flux to detect");
  return cavity.kappa * std::sqrt(flux / rate);
}

struct DirectCounts {
  double counts = 0.0;        ///< N
  double counts_empty = 0.0;  ///< N_empty
  double snr = 0.0;           ///< (N_empty − N)/√(N_empty + N)
};

/// Photons counted in τ through the output mirror, thinned by efficiency η.
inline DirectCounts direct_snr(double n, double n0, double out_rate, double tau, double eta) {
  if (n < 0.0 || n0 < 0.0) throw ParameterError("photon numbers must be >= 0");
  DirectCounts out;
  out.counts = eta * n * out_rate * tau;
  out.counts_empty = eta * n0 * out_rate * tau;
  const double total = out.counts + out.counts_empty;
  out.snr = total > 0.0 ? (out.counts_empty - out.counts) / std::sqrt(total) : 0.0;
  return out;
}

/// Heterodyne measures |⟨a⟩|² against the coherent empty-cavity reference n₀,
/// with noise √2 above shot noise.
inline double heterodyne_snr(Complex amplitude, double n0, double out_rate, double tau, double eta) {
  const double a2 = std::norm(amplitude);
  const double total = n0 + a2;
  if (total <= 0.0) return 0.0;
  return std::sqrt(eta * out_rate * tau) * (n0 - a2) / std::sqrt(2.0 * total);
}

struct EvaluationOptions {
  TruncationPolicy truncation{};
};

namespace detail {

inline std::string describe(const OperatingPoint& op) {
  std::ostringstream s;
  s << "[delta=" << op.delta << " rad/s, theta=" << op.theta << " rad/s, flux=" << op.flux * 1e-6
    << " photons/us]";
  return s.str();
}

template <typename Fn>
auto tagged(const OperatingPoint& op, Fn&& fn) {
  try {
    return fn();
  } catch (const CapacityError& e) {
    throw CapacityError(std::string(e.what()) + " at " + describe(op), e.requested(), e.cap());
  } catch (const SolverError& e) {
    throw SolverError(std::string(e.what()) + " at " + describe(op), e.condition_estimate());
  }
}

}  // namespace detail

/// Solves the empty and the loaded cavity under the same drive and cutoff
/// policy and turns both into counts and SNRs.
inline SNRResult evaluate_point(const OperatingPoint& op, const DerivedCavity& cavity, const AtomSpec& atom,
                                const DetectorModel& detector, const EvaluationOptions& options = {}) {
  op.validate();
  atom.validate();
  detector.validate();
  const double epsilon = calibrate_drive(op.flux, cavity);
  const Dissipation diss{cavity.kappa, atom.gamma};
  const double g = op.g.value_or(cavity.g0);

  auto solve = [&](double coupling) {
    return detail::tagged(op, [&] {
      return auto_truncate({op.delta, op.theta, coupling, epsilon}, diss, options.truncation);
    });
  };
  const TruncatedSolution empty = solve(0.0);
  const TruncatedSolution loaded = solve(g);
  const Observables e = expectations(empty.state);
  const Observables a = expectations(loaded.state);

  SNRResult r;
  r.n_empty = std::max(0.0, e.photons);
  r.n_atom = std::max(0.0, a.photons);
  r.empty_field_sq = std::norm(e.field);
  r.field_sq = std::norm(a.field);
  r.fano = a.fano;
  r.cutoff = loaded.cutoff;
  r.empty_coherent = std::abs(r.n_empty - r.empty_field_sq) < 1e-8 * (1.0 + r.n_empty);

  const double rate = cavity.output_rate();
  const DirectCounts dc = direct_snr(r.n_atom, r.n_empty, rate, op.tau, detector.efficiency);
  r.counts = dc.counts;
  r.counts_empty = dc.counts_empty;
  r.snr = dc.snr;
  r.snr_het = heterodyne_snr(a.field, r.empty_field_sq, rate, op.tau, detector.efficiency);

  const bool verified = !options.truncation.verify_doubling ||
                        (empty.doubling_verified && loaded.doubling_verified);
  r.truncation_ok = verified && empty.state.hermitian_ok && loaded.state.hermitian_ok;
  r.incident_flux = std::max(r.n_atom, r.n_empty) * rate;
  if (detector.is_counter()) r.apd_saturated = r.incident_flux > detector.saturation_flux;
  return r;
}

}  // namespace cavisnr
