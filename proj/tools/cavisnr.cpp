// Command-line front end: derive, spectrum, sweep, ridge, discriminator,
// compare-detectors.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cavisnr/cavisnr.hpp"
#include "cavisnr/config.hpp"

namespace {

using namespace cavisnr;

enum Exit { kSuccess = 0, kFailure = 1, kPartial = 2 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string format = "text";
  std::string json_path;
  std::string csv_path;
  unsigned workers = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_format = false) {
  sub->add_option("config", c.config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "override a field, e.g. --set cavity.finesse=1e5")->take_all();
  sub->add_option("--json", c.json_path, "write the JSON result here (overrides output.json)");
  sub->add_option("--csv", c.csv_path, "write the CSV result here (overrides output.csv)");
  sub->add_option("--workers", c.workers, "worker threads (0: CAVISNR_WORKERS or all cores)");
  if (with_format) sub->add_option("--format", c.format, "text or json")->check(CLI::IsMember({"text", "json"}));
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config_path, c.overrides);
  if (!c.json_path.empty()) cfg.output.json = c.json_path;
  if (!c.csv_path.empty()) cfg.output.csv = c.csv_path;
  if (c.workers > 0) cfg.solver.workers = c.workers;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json with_provenance(const RunConfig& cfg, Json body) {
  body["provenance"] = provenance_json(make_provenance(cfg));
  return body;
}

int run_derive(const Common& common) {
  const RunConfig cfg = resolve(common);
  const AtomSpec atom = make_atom(cfg);
  const DerivedCavity cav = make_cavity(cfg);
  const CouplingRegime reg = critical_numbers(cav.g0, atom.gamma, cav.kappa);
  const double g_formula = coupling_from_cross_section(atom, cav.mode_volume);

  Json j = {{"kappa_rad_s", cav.kappa},
            {"kappa_mhz", angular_to_mhz(cav.kappa)},
            {"kappa_in_rad_s", cav.kappa_in},
            {"kappa_out_rad_s", cav.kappa_out},
            {"kappa_loss_rad_s", cav.kappa_loss},
            {"linewidth_fwhm_mhz", angular_to_mhz(cav.linewidth_fwhm())},
            {"fsr_rad_s", cav.fsr},
            {"fsr_ghz", angular_to_mhz(cav.fsr) * 1e-3},
            {"mode_volume_um3", cav.mode_volume * 1e18},
            {"g0_rad_s", cav.g0},
            {"g0_mhz", angular_to_mhz(cav.g0)},
            {"g0_from_formula", cav.g0_from_formula},
            {"g0_cross_section_mhz", angular_to_mhz(g_formula)},
            {"output_rate_per_photon", cav.output_rate()},
            {"critical_photon_number", reg.critical_photon_number},
            {"critical_atom_number", reg.critical_atom_number},
            {"cooperativity", reg.cooperativity}};
  j = with_provenance(cfg, j);
  if (!cfg.output.json.empty()) write_text(cfg.output.json, dump(j));

  if (common.format == "json") {
    std::cout << dump(j);
  } else {
    std::printf("kappa        %.6g rad/s  (kappa/2pi = %.6g MHz, FWHM %.6g MHz)\n", cav.kappa,
                angular_to_mhz(cav.kappa), angular_to_mhz(cav.linewidth_fwhm()));
    std::printf("kappa in/out/loss  %.6g / %.6g / %.6g rad/s\n", cav.kappa_in, cav.kappa_out, cav.kappa_loss);
    std::printf("FSR          %.6g rad/s  (%.6g GHz)\n", cav.fsr, angular_to_mhz(cav.fsr) * 1e-3);
    std::printf("mode volume  %.6g um^3\n", cav.mode_volume * 1e18);
    std::printf("g0           %.6g rad/s  (g0/2pi = %.6g MHz, %s; cross-section value %.6g MHz)\n", cav.g0,
                angular_to_mhz(cav.g0), cav.g0_from_formula ? "cross-section formula" : "override",
                angular_to_mhz(g_formula));
    std::printf("m0           %.6g\n", reg.critical_photon_number);
    std::printf("N0           %.6g\n", reg.critical_atom_number);
    std::printf("C            %.6g\n", reg.cooperativity);
  }
  return kSuccess;
}

int run_spectrum(const Common& common) {
  const RunConfig cfg = resolve(common);
  const AtomSpec atom = make_atom(cfg);
  const DerivedCavity cav = make_cavity(cfg);
  SpectrumOptions opt;
  opt.atom_cavity_offset = cfg.spectrum.atom_cavity_offset_over_gamma * atom.gamma;
  opt.with_atom = cfg.spectrum.with_atom;
  opt.truncation = make_policy(cfg);
  opt.workers = cfg.solver.workers;
  const SpectrumCurve curve =
      transmission_spectrum(cav, atom, cfg.operating.flux_per_us * 1e6, spectrum_detunings(cfg, cav), opt);

  write_text(cfg.output.csv, spectrum_csv(curve, cav, atom));
  std::size_t invalid = 0;
  for (const auto& p : curve.points) invalid += p.valid ? 0 : 1;
  if (!cfg.output.json.empty()) {
    Json points = Json::array();
    for (const auto& p : curve.points) {
      points.push_back({{"delta_over_kappa", p.delta / cav.kappa},
                        {"theta_over_gamma", p.theta / atom.gamma},
                        {"transmission", p.transmission},
                        {"phase_rad", p.phase},
                        {"n_photons", p.photons},
                        {"valid", p.valid}});
    }
    write_text(cfg.output.json, dump(with_provenance(cfg, {{"peak_photons", curve.peak_photons}, {"points", points}})));
  }
  const double fraction = curve.points.empty() ? 0.0 : double(invalid) / double(curve.points.size());
  if (invalid > 0) std::cerr << "warning: " << invalid << " spectrum points failed\n";
  return fraction > kPartialThreshold ? kPartial : kSuccess;
}

SweepResult sweep_from(const RunConfig& cfg) {
  SweepResult r = run_grid(make_grid(cfg));
  r.provenance = make_provenance(cfg);
  return r;
}

int sweep_exit(const SweepResult& r) {
  if (r.status == SweepStatus::kPartial) {
    std::cerr << "warning: " << r.invalid_fraction * 100.0 << "% of grid points are invalid\n";
    return kPartial;
  }
  return kSuccess;
}

int run_sweep(const Common& common) {
  const RunConfig cfg = resolve(common);
  const SweepResult r = sweep_from(cfg);
  Json j = sweep_json(r);
  try {
    const Optimum best = find_optimum(r);
    j["optimum"] = {{"coordinates", best.coordinates}, {"point", snr_json(best.point)}};
  } catch (const RangeError&) {
    j["optimum"] = nullptr;
  }
  write_text(cfg.output.json, dump(j));
  if (!cfg.output.csv.empty()) write_text(cfg.output.csv, sweep_csv(r));
  return sweep_exit(r);
}

int run_ridge(const Common& common) {
  const RunConfig cfg = resolve(common);
  const SweepResult r = sweep_from(cfg);
  const RidgeTrace t = ridge_max(r, AxisKind::kFlux);
  Json j = sweep_json(r);
  j["ridge"] = ridge_json(t);
  if (!cfg.output.json.empty()) write_text(cfg.output.json, dump(j));
  write_text(cfg.output.csv, ridge_csv(t));
  if (t.has_gaps) std::cerr << "warning: ridge has rows without usable points\n";
  return sweep_exit(r);
}

int run_discriminator(const Common& common) {
  const RunConfig cfg = resolve(common);
  double n_empty = 0.0, n_atom = 0.0;
  Json source;
  if (cfg.discriminator.n_empty && cfg.discriminator.n_atom) {
    n_empty = *cfg.discriminator.n_empty;
    n_atom = *cfg.discriminator.n_atom;
    source = "config";
  } else {
    const AtomSpec atom = make_atom(cfg);
    const DerivedCavity cav = make_cavity(cfg);
    const SNRResult s = evaluate_point(make_operating_point(cfg, cav, atom), cav, atom, make_detector(cfg),
                                       {make_policy(cfg)});
    n_empty = s.counts_empty;
    n_atom = s.counts;
    source = snr_json(s);
  }
  const CountModel model = CountModel::from_means(n_empty, n_atom);
  const DiscriminatorCurve curve = qe_false_curves(model);
  Json j = {{"n_empty", n_empty},
            {"n_atom", n_atom},
            {"polarity", model.polarity == Polarity::kDip ? "dip" : "peak"},
            {"snr", model.snr()},
            {"sigma", cfg.discriminator.sigma},
            {"min_snr", min_snr_for_sigma(cfg.discriminator.sigma)},
            {"source", source}};
  try {
    const ThresholdChoice t = choose_threshold(model, cfg.discriminator.sigma);
    j["threshold"] = {{"d", t.threshold}, {"lo", t.lo}, {"hi", t.hi}, {"qe", t.qe}, {"false_rate", t.false_rate}};
  } catch (const SeparationError& e) {
    j["threshold"] = nullptr;
    j["separation_error"] = e.what();
    std::cerr << "warning: " << e.what() << "\n";
  }
  if (!cfg.output.json.empty()) write_text(cfg.output.json, dump(with_provenance(cfg, j)));
  write_text(cfg.output.csv, discriminator_csv(curve));
  return kSuccess;
}

int run_compare(const Common& common) {
  RunConfig cfg = resolve(common);
  const DetectorModel apd = DetectorModel::apd();
  const DetectorModel het = DetectorModel::heterodyne();
  cfg.detector = DetectorConfig{};
  const SweepResult r = sweep_from(cfg);
  const DetectorComparison c = compare_detectors(r, apd, het);
  if (!cfg.output.json.empty()) {
    Json j = {{"flux_per_us", c.flux_per_us},
              {"ideal_counter", c.ideal_counter},
              {"ideal_heterodyne", c.ideal_heterodyne},
              {"apd", Json::array()},
              {"heterodyne", c.heterodyne},
              {"valid", c.valid}};
    for (double v : c.apd) j["apd"].push_back(std::isnan(v) ? Json(nullptr) : Json(v));
    j["apd_model"] = {{"efficiency", apd.efficiency}, {"saturation_flux_per_us", apd.saturation_flux * 1e-6}};
    j["heterodyne_model"] = {{"efficiency", het.efficiency}};
    write_text(cfg.output.json, dump(with_provenance(cfg, j)));
  }
  write_text(cfg.output.csv, compare_csv(c));
  return sweep_exit(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-atom detection SNR in a driven optical cavity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cavisnr::kVersion));

  Common common;
  CLI::App* derive = app.add_subcommand("derive", "derived cavity quantities");
  CLI::App* spectrum = app.add_subcommand("spectrum", "probe transmission spectrum as CSV");
  CLI::App* sweep = app.add_subcommand("sweep", "SNR over the configured grid");
  CLI::App* ridge = app.add_subcommand("ridge", "optimum-flux ridge of a sweep");
  CLI::App* disc = app.add_subcommand("discriminator", "QE and false-count curves");
  CLI::App* compare = app.add_subcommand("compare-detectors", "ideal, APD and heterodyne SNR versus flux");
  add_common(derive, common, true);
  for (CLI::App* s : {spectrum, sweep, ridge, disc, compare}) add_common(s, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (derive->parsed()) return run_derive(common);
    if (spectrum->parsed()) return run_spectrum(common);
    if (sweep->parsed()) return run_sweep(common);
    if (ridge->parsed()) return run_ridge(common);
    if (disc->parsed()) return run_discriminator(common);
    if (compare->parsed()) return run_compare(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
