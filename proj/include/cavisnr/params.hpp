#pragma once

// Physical parameters of the atom and the cavity, and the rates derived from
// them. Every frequency is an angular rate in rad/s; lengths are metres.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "cavisnr/error.hpp"

namespace cavisnr {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Converts a frequency quoted as ω/2π in MHz to rad/s.
constexpr double mhz_to_angular(double mhz) { return kTwoPi * mhz * 1e6; }
constexpr double angular_to_mhz(double rad_per_s) { return rad_per_s / (kTwoPi * 1e6); }

namespace detail {

inline void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw ParameterError(std::string(name) + " must be finite and > 0, got " +
                         std::to_string(value));
  }
}

inline void require_nonnegative(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw ParameterError(std::string(name) + " must be finite and >= 0, got " +
                         std::to_string(value));
  }
}

}  // namespace detail

/// Resonant two-level atom.
struct AtomSpec {
  double wavelength = 780e-9;              ///< transition wavelength λ (m)
  double gamma = mhz_to_angular(6.0);      ///< excited-state population decay rate (rad/s)
  double cross_section = 0.0;              ///< resonant cross-section σ₀ (m²); 0 means derive 3λ²/2π
  std::optional<double> transition_frequency;  ///< ω_a (rad/s); only detunings enter the dynamics

  /// σ₀, derived from the wavelength unless set explicitly.
  double sigma0() const {
    if (cross_section > 0.0) return cross_section;
    return 3.0 * wavelength * wavelength / kTwoPi;
  }

  void validate() const {
    detail::require_positive(wavelength, "atom wavelength");
    detail::require_positive(gamma, "atom gamma");
    detail::require_nonnegative(cross_section, "atom cross section");
  }

  /// ⁸⁷Rb D₂ line.
  static AtomSpec rubidium_d2() { return AtomSpec{}; }
};

enum class GeometryKind { kStandingWave, kTravellingWave };

/// How many photons per second leave through a mirror of field decay rate κ_x
/// for each intracavity photon.
///
/// kLindbladRate uses 2κ_x, the loss rate implied by the κ(2aρa† − …) damping
/// term. kLiteral uses κ_x itself, i.e. N = n·κ_out·τ read verbatim. Both
/// calibrate the drive so that the matched empty cavity transmits the input
/// flux; they differ in the intracavity photon number reached at a given flux.
enum class FluxConvention { kLindbladRate, kLiteral };

/// Fractions of the total cavity loss carried by each channel.
struct MirrorSplit {
  double in = 0.5;
  double out = 0.5;
  double loss = 0.0;

  void validate() const {
    detail::require_nonnegative(in, "mirror split in");
    detail::require_nonnegative(out, "mirror split out");
    detail::require_nonnegative(loss, "mirror split loss");
    if (std::abs(in + out + loss - 1.0) > 1e-12) {
      throw ParameterError("mirror split fractions must sum to 1");
    }
  }
};

/// Fabry-Perot (or ring) cavity supporting a single TEM00 mode. For a
/// travelling-wave ring `length` is half the round-trip length, so both kinds
/// share the same free spectral range.
struct CavityGeometry {
  double length = 100e-6;   ///< L (m)
  double waist = 20e-6;     ///< w₀ (m)
  double finesse = 1e4;
  GeometryKind kind = GeometryKind::kStandingWave;
  MirrorSplit split{};
  FluxConvention flux_convention = FluxConvention::kLindbladRate;

  void validate() const {
    detail::require_positive(length, "cavity length");
    detail::require_positive(waist, "cavity waist");
    detail::require_positive(finesse, "cavity finesse");
    split.validate();
  }
};

struct DerivedCavity {
  double kappa = 0.0;        ///< total field decay rate; FWHM linewidth is 2κ
  double kappa_in = 0.0;
  double kappa_out = 0.0;
  double kappa_loss = 0.0;
  double fsr = 0.0;          ///< free spectral range (rad/s)
  double mode_volume = 0.0;  ///< V (m³)
  double g0 = 0.0;           ///< maximal coupling (rad/s)
  bool g0_from_formula = false;
  FluxConvention flux_convention = FluxConvention::kLindbladRate;

  /// Photons per second leaving through the output mirror per intracavity photon.
  double output_rate() const {
    return flux_convention == FluxConvention::kLindbladRate ? 2.0 * kappa_out : kappa_out;
  }
  double linewidth_fwhm() const { return 2.0 * kappa; }
};

struct CouplingRegime {
  double critical_photon_number = 0.0;  ///< m₀
  double critical_atom_number = 0.0;    ///< N₀
  double cooperativity = 0.0;           ///< C = 1/N₀
};

/// Mode volume πw₀²L/4 for a standing wave, twice that for a travelling wave.
inline double mode_volume(const CavityGeometry& geometry) {
  const double standing = std::numbers::pi * geometry.waist * geometry.waist * geometry.length / 4.0;
  return geometry.kind == GeometryKind::kStandingWave ? standing : 2.0 * standing;
}

/// Coupling from the cross-section formula g₀ = √(σ₀cγ/V).
inline double coupling_from_cross_section(const AtomSpec& atom, double volume) {
  detail::require_positive(volume, "mode volume");
  return std::sqrt(atom.sigma0() * kSpeedOfLight * atom.gamma / volume);
}

/// Rescales a known coupling g_ref at volume V_ref to volume V (g ∝ V^-1/2).
inline double scale_coupling(double g_ref, double volume_ref, double volume) {
  detail::require_positive(g_ref, "reference coupling");
  detail::require_positive(volume_ref, "reference volume");
  detail::require_positive(volume, "mode volume");
  return g_ref * std::sqrt(volume_ref / volume);
}

inline DerivedCavity derive_cavity(const CavityGeometry& geometry, const AtomSpec& atom,
                                   std::optional<double> g0_override = std::nullopt) {
  geometry.validate();
  atom.validate();
  DerivedCavity out;
  out.kappa = std::numbers::pi * kSpeedOfLight / (2.0 * geometry.length * geometry.finesse);
  out.kappa_in = geometry.split.in * out.kappa;
  out.kappa_out = geometry.split.out * out.kappa;
  out.kappa_loss = geometry.split.loss * out.kappa;
  out.fsr = kTwoPi * kSpeedOfLight / (2.0 * geometry.length);
  out.mode_volume = mode_volume(geometry);
  out.flux_convention = geometry.flux_convention;
  if (g0_override) {
    detail::require_positive(*g0_override, "g0 override");
    out.g0 = *g0_override;
  } else {
    out.g0 = coupling_from_cross_section(atom, out.mode_volume);
    out.g0_from_formula = true;
  }
  return out;
}

inline CouplingRegime critical_numbers(double g0, double gamma, double kappa) {
  detail::require_positive(g0, "g0");
  detail::require_positive(gamma, "gamma");
  detail::require_positive(kappa, "kappa");
  CouplingRegime r;
  r.critical_photon_number = (gamma / 2.0) * (gamma / 2.0) / (2.0 * g0 * g0);
  r.critical_atom_number = gamma * kappa / (g0 * g0);
  r.cooperativity = 1.0 / r.critical_atom_number;
  return r;
}

/// Normalised field amplitude cos(2πz/λ)·exp(−r²/w₀²) of a Gaussian standing wave.
inline double mode_function(double r, double z, double waist, double wavelength) {
  detail::require_positive(waist, "waist");
  detail::require_positive(wavelength, "wavelength");
  return std::cos(kTwoPi * z / wavelength) * std::exp(-(r * r) / (waist * waist));
}

// Reference cavity of the detection study: L = 100 µm, w₀ = 20 µm, F = 10⁴,
// impedance matched, ⁸⁷Rb D₂, g₀ = 2π × 26 MHz.
inline constexpr double kReferenceG0 = kTwoPi * 26e6;

inline CavityGeometry reference_geometry() { return CavityGeometry{}; }

}  // namespace cavisnr
