#pragma once

// Run configuration for the command-line tool: JSON schema with boundary
// units (µm, MHz, photons/µs, µs), dotted-path overrides, and the CSV / JSON
// writers for every result type.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavisnr/analytics.hpp"
#include "cavisnr/detect.hpp"
#include "cavisnr/discriminator.hpp"
#include "cavisnr/params.hpp"
#include "cavisnr/sweep.hpp"

#ifndef CAVISNR_VERSION
#define CAVISNR_VERSION "0.1.0"
#endif

namespace cavisnr {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = CAVISNR_VERSION;

struct CavityConfig {
  double length_um = 100.0;
  double waist_um = 20.0;
  double finesse = 1e4;
  std::string geometry = "standing";  ///< standing | travelling
  double mirror_in = 0.5;
  double mirror_out = 0.5;
  double mirror_loss = 0.0;
  std::optional<double> g0_mhz = 26.0;  ///< null derives g₀ from the cross section
  std::string flux_convention = "lindblad";  ///< lindblad | literal
  friend bool operator==(const CavityConfig&, const CavityConfig&) = default;
};

struct AtomConfig {
  double wavelength_um = 0.78;
  double gamma_mhz = 6.0;
  double cross_section_um2 = 0.0;  ///< 0 derives 3λ²/2π
  friend bool operator==(const AtomConfig&, const AtomConfig&) = default;
};

struct OperatingConfig {
  double delta_over_kappa = 0.0;
  double theta_over_gamma = 0.0;
  double flux_per_us = 100.0;
  double tau_us = 20.0;
  friend bool operator==(const OperatingConfig&, const OperatingConfig&) = default;
};

struct DetectorConfig {
  std::string kind = "ideal";  ///< ideal | apd | heterodyne
  std::optional<double> efficiency;             ///< kind default when null
  std::optional<double> saturation_flux_per_us; ///< kind default when null
  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct AxisConfig {
  std::string kind = "flux";
  std::string scale = "log";
  double from = 1.0;
  double to = 1e4;
  int count = 2;
  std::vector<double> values;  ///< explicit values override from/to/count
  friend bool operator==(const AxisConfig&, const AxisConfig&) = default;
};

struct SweepConfig {
  std::vector<AxisConfig> axes;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct SpectrumConfig {
  std::string unit = "kappa";  ///< kappa | g0 | mhz, for from/to
  double from = -3.0;
  double to = 3.0;
  int count = 121;
  bool with_atom = true;
  double atom_cavity_offset_over_gamma = 0.0;
  friend bool operator==(const SpectrumConfig&, const SpectrumConfig&) = default;
};

struct DiscriminatorConfig {
  double sigma = 3.0;
  std::optional<double> n_empty;  ///< counts; evaluated from the operating point when null
  std::optional<double> n_atom;
  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

struct SolverConfig {
  double tol = 1e-8;
  int fock_cap = 400;
  bool verify_doubling = true;
  unsigned workers = 0;
  std::string method = "hermitian-real";  ///< hermitian-real | complex
  double max_flux_per_us = 1e7;
  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct OutputConfig {
  std::string json;  ///< empty: not written
  std::string csv;   ///< empty: standard output
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  CavityConfig cavity;
  AtomConfig atom;
  OperatingConfig operating;
  DetectorConfig detector;
  SweepConfig sweep;
  SpectrumConfig spectrum;
  DiscriminatorConfig discriminator;
  SolverConfig solver;
  OutputConfig output;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigurationError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out, bool required = false) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (required) throw ConfigurationError("missing required field " + field(key));
      return;
    }
    out = convert<T>(node_.at(key), key);
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    const Json& v = node_.at(key);
    if (v.is_null()) {
      out.reset();
    } else {
      out = convert<T>(v, key);
    }
  }

  const Json* child(const std::string& key, bool required = false) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (required) throw ConfigurationError("missing required section " + field(key));
      return nullptr;
    }
    return &node_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigurationError("unknown field " + field(it.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config root" : path_; }

  template <typename T>
  T convert(const Json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigurationError(field(key) + ": expected true or false");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!v.is_number()) throw ConfigurationError(field(key) + ": expected a number");
      if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
          throw ConfigurationError(field(key) + ": expected an integer");
        }
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && v.get<long long>() < 0) {
            throw ConfigurationError(field(key) + ": expected a non-negative integer");
          }
        }
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigurationError(field(key) + ": expected a string");
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw ConfigurationError(field(key) + ": expected an array of numbers");
      for (const Json& e : v) {
        if (!e.is_number()) throw ConfigurationError(field(key) + ": expected an array of numbers");
      }
    }
    return v.get<T>();
  }

  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require_one_of(const std::string& value, std::initializer_list<const char*> allowed,
                           const std::string& field) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigurationError(field + ": '" + value + "' is not one of " + list);
}

inline AxisConfig parse_axis(const Json& node, const std::string& path) {
  ObjectReader r(node, path);
  AxisConfig a;
  r.read("kind", a.kind, true);
  r.read("scale", a.scale);
  r.read("from", a.from);
  r.read("to", a.to);
  r.read("count", a.count);
  r.read("values", a.values);
  r.finish();
  require_one_of(a.kind, {"finesse", "flux", "delta", "theta"}, r.field("kind"));
  require_one_of(a.scale, {"log", "linear"}, r.field("scale"));
  if (a.values.empty() && (!r.has("from") || !r.has("to") || !r.has("count"))) {
    throw ConfigurationError("missing required field " + path + ".from/to/count (or give " + path + ".values)");
  }
  if (a.values.empty() && a.count < 1) throw ConfigurationError(r.field("count") + ": must be >= 1");
  return a;
}

}  // namespace detail

/// Parses a config tree. Sections `cavity` and `atom` with their physical
/// fields are required; everything else falls back to the reference values.
inline RunConfig parse_config(const Json& root) {
  using detail::ObjectReader;
  RunConfig c;
  ObjectReader top(root, "");

  {
    ObjectReader r(*top.child("cavity", true), "cavity");
    r.read("length_um", c.cavity.length_um, true);
    r.read("waist_um", c.cavity.waist_um, true);
    r.read("finesse", c.cavity.finesse, true);
    r.read("geometry", c.cavity.geometry);
    if (const Json* m = r.child("mirror")) {
      ObjectReader mr(*m, "cavity.mirror");
      mr.read("in", c.cavity.mirror_in);
      mr.read("out", c.cavity.mirror_out);
      mr.read("loss", c.cavity.mirror_loss);
      mr.finish();
    }
    r.read("g0_mhz", c.cavity.g0_mhz);
    r.read("flux_convention", c.cavity.flux_convention);
    r.finish();
    detail::require_one_of(c.cavity.geometry, {"standing", "travelling"}, "cavity.geometry");
    detail::require_one_of(c.cavity.flux_convention, {"lindblad", "literal"}, "cavity.flux_convention");
  }
  {
    ObjectReader r(*top.child("atom", true), "atom");
    r.read("wavelength_um", c.atom.wavelength_um, true);
    r.read("gamma_mhz", c.atom.gamma_mhz, true);
    r.read("cross_section_um2", c.atom.cross_section_um2);
    r.finish();
  }
  if (const Json* n = top.child("operating")) {
    ObjectReader r(*n, "operating");
    r.read("delta_over_kappa", c.operating.delta_over_kappa);
    r.read("theta_over_gamma", c.operating.theta_over_gamma);
    r.read("flux_per_us", c.operating.flux_per_us);
    r.read("tau_us", c.operating.tau_us);
    r.finish();
  }
  if (const Json* n = top.child("detector")) {
    ObjectReader r(*n, "detector");
    r.read("kind", c.detector.kind);
    r.read("efficiency", c.detector.efficiency);
    r.read("saturation_flux_per_us", c.detector.saturation_flux_per_us);
    r.finish();
    detail::require_one_of(c.detector.kind, {"ideal", "apd", "heterodyne"}, "detector.kind");
  }
  if (const Json* n = top.child("sweep")) {
    ObjectReader r(*n, "sweep");
    if (const Json* axes = r.child("axes")) {
      if (!axes->is_array()) throw ConfigurationError("sweep.axes: expected an array");
      for (std::size_t i = 0; i < axes->size(); ++i) {
        c.sweep.axes.push_back(detail::parse_axis((*axes)[i], "sweep.axes[" + std::to_string(i) + "]"));
      }
    }
    r.finish();
  }
  if (const Json* n = top.child("spectrum")) {
    ObjectReader r(*n, "spectrum");
    r.read("unit", c.spectrum.unit);
    r.read("from", c.spectrum.from);
    r.read("to", c.spectrum.to);
    r.read("count", c.spectrum.count);
    r.read("with_atom", c.spectrum.with_atom);
    r.read("atom_cavity_offset_over_gamma", c.spectrum.atom_cavity_offset_over_gamma);
    r.finish();
    detail::require_one_of(c.spectrum.unit, {"kappa", "g0", "mhz"}, "spectrum.unit");
    if (c.spectrum.count < 1) throw ConfigurationError("spectrum.count: must be >= 1");
  }
  if (const Json* n = top.child("discriminator")) {
    ObjectReader r(*n, "discriminator");
    r.read("sigma", c.discriminator.sigma);
    r.read("n_empty", c.discriminator.n_empty);
    r.read("n_atom", c.discriminator.n_atom);
    r.finish();
  }
  if (const Json* n = top.child("solver")) {
    ObjectReader r(*n, "solver");
    r.read("tol", c.solver.tol);
    r.read("fock_cap", c.solver.fock_cap);
    r.read("verify_doubling", c.solver.verify_doubling);
    r.read("workers", c.solver.workers);
    r.read("method", c.solver.method);
    r.read("max_flux_per_us", c.solver.max_flux_per_us);
    r.finish();
    detail::require_one_of(c.solver.method, {"hermitian-real", "complex"}, "solver.method");
  }
  if (const Json* n = top.child("output")) {
    ObjectReader r(*n, "output");
    r.read("json", c.output.json);
    r.read("csv", c.output.csv);
    r.finish();
  }
  top.finish();
  return c;
}

namespace detail {

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace detail

/// The fully resolved config, every field present.
inline Json to_json(const RunConfig& c) {
  Json axes = Json::array();
  for (const AxisConfig& a : c.sweep.axes) {
    Json j;
    j["kind"] = a.kind;
    j["scale"] = a.scale;
    if (a.values.empty()) {
      j["from"] = a.from;
      j["to"] = a.to;
      j["count"] = a.count;
    } else {
      j["values"] = a.values;
    }
    axes.push_back(j);
  }
  Json out;
  out["cavity"] = {{"length_um", c.cavity.length_um},
                   {"waist_um", c.cavity.waist_um},
                   {"finesse", c.cavity.finesse},
                   {"geometry", c.cavity.geometry},
                   {"mirror", {{"in", c.cavity.mirror_in}, {"out", c.cavity.mirror_out}, {"loss", c.cavity.mirror_loss}}},
                   {"g0_mhz", detail::optional_json(c.cavity.g0_mhz)},
                   {"flux_convention", c.cavity.flux_convention}};
  out["atom"] = {{"wavelength_um", c.atom.wavelength_um},
                 {"gamma_mhz", c.atom.gamma_mhz},
                 {"cross_section_um2", c.atom.cross_section_um2}};
  out["operating"] = {{"delta_over_kappa", c.operating.delta_over_kappa},
                      {"theta_over_gamma", c.operating.theta_over_gamma},
                      {"flux_per_us", c.operating.flux_per_us},
                      {"tau_us", c.operating.tau_us}};
  out["detector"] = {{"kind", c.detector.kind},
                     {"efficiency", detail::optional_json(c.detector.efficiency)},
                     {"saturation_flux_per_us", detail::optional_json(c.detector.saturation_flux_per_us)}};
  out["sweep"] = {{"axes", axes}};
  out["spectrum"] = {{"unit", c.spectrum.unit},
                     {"from", c.spectrum.from},
                     {"to", c.spectrum.to},
                     {"count", c.spectrum.count},
                     {"with_atom", c.spectrum.with_atom},
                     {"atom_cavity_offset_over_gamma", c.spectrum.atom_cavity_offset_over_gamma}};
  out["discriminator"] = {{"sigma", c.discriminator.sigma},
                          {"n_empty", detail::optional_json(c.discriminator.n_empty)},
                          {"n_atom", detail::optional_json(c.discriminator.n_atom)}};
  out["solver"] = {{"tol", c.solver.tol},
                   {"fock_cap", c.solver.fock_cap},
                   {"verify_doubling", c.solver.verify_doubling},
                   {"workers", c.solver.workers},
                   {"method", c.solver.method},
                   {"max_flux_per_us", c.solver.max_flux_per_us}};
  out["output"] = {{"json", c.output.json}, {"csv", c.output.csv}};
  return out;
}

/// Applies `a.b.c=value`. The value is read as JSON when it parses as JSON
/// and as a plain string otherwise. Missing intermediate sections are created.
inline void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigurationError("override '" + assignment + "' is not of the form path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigurationError("override path '" + path + "' has an empty component");
    if (!node->is_object()) throw ConfigurationError("override path '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

/// Parses config text. Syntax errors report line and column.
inline Json parse_config_text(const std::string& text, const std::string& source = "config") {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigurationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                             ": syntax error: " + e.what());
  }
}

inline Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json root = read_config_file(path);
  for (const std::string& o : overrides) apply_override(root, o);
  return parse_config(root);
}

// ---- conversion to library types -------------------------------------------------

inline AtomSpec make_atom(const RunConfig& c) {
  AtomSpec a;
  a.wavelength = c.atom.wavelength_um * 1e-6;
  a.gamma = mhz_to_angular(c.atom.gamma_mhz);
  a.cross_section = c.atom.cross_section_um2 * 1e-12;
  a.validate();
  return a;
}

inline CavityGeometry make_geometry(const RunConfig& c) {
  CavityGeometry g;
  g.length = c.cavity.length_um * 1e-6;
  g.waist = c.cavity.waist_um * 1e-6;
  g.finesse = c.cavity.finesse;
  g.kind = c.cavity.geometry == "standing" ? GeometryKind::kStandingWave : GeometryKind::kTravellingWave;
  g.split = {c.cavity.mirror_in, c.cavity.mirror_out, c.cavity.mirror_loss};
  g.flux_convention = c.cavity.flux_convention == "literal" ? FluxConvention::kLiteral : FluxConvention::kLindbladRate;
  g.validate();
  return g;
}

inline std::optional<double> make_g0_override(const RunConfig& c) {
  if (!c.cavity.g0_mhz) return std::nullopt;
  return mhz_to_angular(*c.cavity.g0_mhz);
}

inline DerivedCavity make_cavity(const RunConfig& c) {
  return derive_cavity(make_geometry(c), make_atom(c), make_g0_override(c));
}

inline DetectorModel make_detector(const RunConfig& c) {
  DetectorModel d;
  if (c.detector.kind == "apd") {
    d = DetectorModel::apd();
  } else if (c.detector.kind == "heterodyne") {
    d = DetectorModel::heterodyne();
  }
  if (c.detector.efficiency) d.efficiency = *c.detector.efficiency;
  if (c.detector.saturation_flux_per_us) d.saturation_flux = *c.detector.saturation_flux_per_us * 1e6;
  d.validate();
  return d;
}

inline TruncationPolicy make_policy(const RunConfig& c) {
  TruncationPolicy p;
  p.tol = c.solver.tol;
  p.hard_cap = c.solver.fock_cap;
  p.verify_doubling = c.solver.verify_doubling;
  p.method = c.solver.method == "complex" ? SolveMethod::kComplex : SolveMethod::kHermitianReal;
  return p;
}

inline OperatingPoint make_operating_point(const RunConfig& c, const DerivedCavity& cavity, const AtomSpec& atom) {
  OperatingPoint op;
  op.delta = c.operating.delta_over_kappa * cavity.kappa;
  op.theta = c.operating.theta_over_gamma * atom.gamma;
  op.flux = c.operating.flux_per_us * 1e6;
  op.tau = c.operating.tau_us / 1e6;
  op.validate();
  return op;
}

inline Axis make_axis(const AxisConfig& a) {
  AxisKind kind = AxisKind::kFlux;
  if (a.kind == "finesse") kind = AxisKind::kFinesse;
  if (a.kind == "delta") kind = AxisKind::kDelta;
  if (a.kind == "theta") kind = AxisKind::kTheta;
  const AxisScale scale = a.scale == "log" ? AxisScale::kLog : AxisScale::kLinear;
  if (!a.values.empty()) return Axis{kind, scale, a.values};
  if (a.count == 1) return Axis{kind, scale, {a.from}};
  return scale == AxisScale::kLog ? Axis::log(kind, a.from, a.to, std::size_t(a.count))
                                  : Axis::linear(kind, a.from, a.to, std::size_t(a.count));
}

inline GridSpec make_grid(const RunConfig& c) {
  if (c.sweep.axes.empty()) throw ConfigurationError("missing required field sweep.axes");
  GridSpec g;
  for (const AxisConfig& a : c.sweep.axes) g.axes.push_back(make_axis(a));
  g.geometry = make_geometry(c);
  g.atom = make_atom(c);
  g.g0_override = make_g0_override(c);
  g.base = {c.operating.delta_over_kappa, c.operating.theta_over_gamma, c.operating.flux_per_us, c.operating.tau_us};
  g.detector = make_detector(c);
  g.truncation = make_policy(c);
  g.workers = c.solver.workers;
  g.max_flux_per_us = c.solver.max_flux_per_us;
  return g;
}

/// Probe detunings of the spectrum scan, in rad/s.
inline std::vector<double> spectrum_detunings(const RunConfig& c, const DerivedCavity& cavity) {
  double unit = cavity.kappa;
  if (c.spectrum.unit == "g0") unit = cavity.g0;
  if (c.spectrum.unit == "mhz") unit = mhz_to_angular(1.0);
  std::vector<double> out(std::size_t(c.spectrum.count));
  for (int i = 0; i < c.spectrum.count; ++i) {
    const double t = c.spectrum.count == 1 ? 0.0 : double(i) / double(c.spectrum.count - 1);
    out[std::size_t(i)] = (c.spectrum.from + (c.spectrum.to - c.spectrum.from) * t) * unit;
  }
  return out;
}

// ---- output --------------------------------------------------------------------

/// %.9g, with nan/inf spelled the same on every platform.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Provenance make_provenance(const RunConfig& c) {
  return {to_json(c).dump(), kVersion, utc_timestamp()};
}

inline constexpr const char* kSpectrumHeader =
    "delta_over_kappa,theta_over_gamma,transmission,phase_rad,n_photons,valid";

inline std::string spectrum_csv(const SpectrumCurve& curve, const DerivedCavity& cavity, const AtomSpec& atom) {
  std::string out = std::string(kSpectrumHeader) + "\n";
  for (const SpectrumPoint& p : curve.points) {
    out += format_number(p.delta / cavity.kappa) + "," + format_number(p.theta / atom.gamma) + "," +
           format_number(p.transmission) + "," + format_number(p.phase) + "," + format_number(p.photons) + "," +
           (p.valid ? "1" : "0") + "\n";
  }
  return out;
}

inline Json snr_json(const SNRResult& r) {
  return {{"n_empty", r.n_empty},       {"n_atom", r.n_atom},
          {"field_sq", r.field_sq},     {"empty_field_sq", r.empty_field_sq},
          {"counts_empty", r.counts_empty}, {"counts", r.counts},
          {"snr", r.snr},               {"snr_het", r.snr_het},
          {"fano", r.fano},             {"incident_flux_per_us", r.incident_flux * 1e-6},
          {"cutoff", r.cutoff},
          {"apd_saturated", r.apd_saturated}, {"truncation_ok", r.truncation_ok},
          {"empty_coherent", r.empty_coherent}, {"valid", r.valid},
          {"error", r.error}};
}

inline Json axis_json(const Axis& a) {
  return {{"kind", to_string(a.kind)}, {"scale", a.scale == AxisScale::kLog ? "log" : "linear"}, {"values", a.values}};
}

inline const char* to_string(SweepStatus s) { return s == SweepStatus::kOk ? "ok" : "partial"; }

inline Json provenance_json(const Provenance& p) {
  Json config = p.config_echo.empty() ? Json(nullptr) : Json::parse(p.config_echo);
  return {{"config", config}, {"version", p.version}, {"timestamp", p.timestamp}};
}

inline Json sweep_json(const SweepResult& r) {
  Json axes = Json::array();
  for (const Axis& a : r.axes) axes.push_back(axis_json(a));
  Json tensor = Json::array();
  for (const SNRResult& p : r.points) tensor.push_back(snr_json(p));
  Json shape = r.shape();
  return {{"axes", axes},
          {"shape", shape},
          {"detector", to_string(r.detector.kind)},
          {"status", to_string(r.status)},
          {"invalid_fraction", r.invalid_fraction},
          {"tensor", tensor},
          {"provenance", provenance_json(r.provenance)}};
}

/// Gnuplot-ready projection. Columns: one per axis, then S, S_het, valid.
/// 2-D sweeps get a blank line between outer rows.
inline std::string sweep_csv(const SweepResult& r) {
  std::string out;
  for (const Axis& a : r.axes) out += std::string(to_string(a.kind)) + ",";
  out += "snr,snr_het,valid\n";
  for (std::size_t k = 0; k < r.points.size(); ++k) {
    const auto idx = r.unflatten(k);
    if (r.axes.size() == 2 && k > 0 && idx[1] == 0) out += "\n";
    for (std::size_t a = 0; a < r.axes.size(); ++a) out += format_number(r.axes[a].values[idx[a]]) + ",";
    const SNRResult& p = r.points[k];
    out += format_number(p.snr) + "," + format_number(p.snr_het) + "," + (p.usable() ? "1" : "0") + "\n";
  }
  return out;
}

inline Json ridge_json(const RidgeTrace& t) {
  Json rows = Json::array();
  for (const RidgePoint& p : t.rows) {
    rows.push_back({{"outer", p.outer}, {"argmax", p.argmax}, {"max_snr", p.max_snr},
                    {"flux_per_us", p.flux_per_us}, {"refined", p.refined}, {"gap", p.gap}});
  }
  return {{"outer", t.outer_kind ? Json(to_string(*t.outer_kind)) : Json(nullptr)},
          {"inner", to_string(t.inner_kind)},
          {"has_gaps", t.has_gaps},
          {"rows", rows}};
}

inline std::string ridge_csv(const RidgeTrace& t) {
  std::string out = std::string(t.outer_kind ? to_string(*t.outer_kind) : "row") + ",argmax_" +
                    to_string(t.inner_kind) + ",max_snr,gap\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const RidgePoint& p = t.rows[i];
    out += format_number(t.outer_kind ? p.outer : double(i)) + "," + format_number(p.argmax) + "," +
           format_number(p.max_snr) + "," + (p.gap ? "1" : "0") + "\n";
  }
  return out;
}

inline constexpr const char* kDiscriminatorHeader = "threshold,qe,false_rate";

inline std::string discriminator_csv(const DiscriminatorCurve& c) {
  std::string out = std::string(kDiscriminatorHeader) + "\n";
  for (const DiscriminatorPoint& p : c.points) {
    out += std::to_string(p.threshold) + "," + format_number(p.qe) + "," + format_number(p.false_rate) + "\n";
  }
  return out;
}

/// The four detection schemes compared along a flux axis.
struct DetectorComparison {
  std::vector<double> flux_per_us;
  std::vector<double> ideal_counter;
  std::vector<double> ideal_heterodyne;
  std::vector<double> apd;        ///< NaN where the APD saturates
  std::vector<double> heterodyne;
  std::vector<bool> valid;
};

inline constexpr const char* kCompareHeader = "flux_per_us,ideal_counter,ideal_heterodyne,apd,heterodyne,valid";

/// Both S and S_het scale as √η, so one ideal sweep gives every curve.
inline DetectorComparison compare_detectors(const SweepResult& ideal, const DetectorModel& apd,
                                            const DetectorModel& heterodyne) {
  if (ideal.axes.size() != 1 || ideal.axes[0].kind != AxisKind::kFlux) {
    throw ConfigurationError("detector comparison needs a single flux axis");
  }
  if (ideal.detector.efficiency != 1.0) throw ConfigurationError("detector comparison needs an ideal reference sweep");
  DetectorComparison out;
  for (std::size_t i = 0; i < ideal.points.size(); ++i) {
    const SNRResult& p = ideal.points[i];
    const double flux = ideal.axes[0].values[i];
    out.flux_per_us.push_back(flux);
    out.ideal_counter.push_back(p.snr);
    out.ideal_heterodyne.push_back(p.snr_het);
    const bool saturated = p.incident_flux > apd.saturation_flux;
    out.apd.push_back(saturated ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(apd.efficiency) * p.snr);
    out.heterodyne.push_back(std::sqrt(heterodyne.efficiency) * p.snr_het);
    out.valid.push_back(p.valid && p.truncation_ok);
  }
  return out;
}

inline std::string compare_csv(const DetectorComparison& c) {
  std::string out = std::string(kCompareHeader) + "\n";
  for (std::size_t i = 0; i < c.flux_per_us.size(); ++i) {
    out += format_number(c.flux_per_us[i]) + "," + format_number(c.ideal_counter[i]) + "," +
           format_number(c.ideal_heterodyne[i]) + "," + format_number(c.apd[i]) + "," +
           format_number(c.heterodyne[i]) + "," + (c.valid[i] ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace cavisnr
