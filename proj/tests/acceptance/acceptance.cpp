// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Worker count follows CAVISNR_WORKERS (or the hardware count).

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "cavisnr/cavisnr.hpp"

using namespace cavisnr;

namespace {

constexpr double kPerUs = 1e6;

int failures = 0;

void report(bool pass, const char* id, const std::string& detail) {
  std::printf("%s  %-4s %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * target; }

// Density-matrix and truncation checks accumulated over every operating point
// that a criterion reports.
struct StateAudit {
  int points = 0;
  double worst_trace = 0.0;
  double worst_hermiticity = 0.0;
  double min_eigenvalue = 0.0;
  double worst_doubling = 0.0;
  std::string errors;

  void check(const OperatingPoint& op, const DerivedCavity& cavity, const AtomSpec& atom) {
    const double eps = calibrate_drive(op.flux, cavity);
    const Dissipation diss{cavity.kappa, atom.gamma};
    for (double g : {0.0, op.g.value_or(cavity.g0)}) {
      try {
        const JaynesCummingsParams p{op.delta, op.theta, g, eps};
        const TruncatedSolution sol = auto_truncate(p, diss);
        TruncationPolicy policy;
        const SteadyState twice = solve_at_cutoff(p, diss, 2 * sol.cutoff, policy);
        for (const SteadyState* s : {&sol.state, &twice}) {
          worst_trace = std::max(worst_trace, std::abs(s->rho.trace().real() - 1.0) + std::abs(s->rho.trace().imag()));
          worst_hermiticity = std::max(worst_hermiticity, s->hermiticity_correction);
          min_eigenvalue = std::min(min_eigenvalue, s->min_eigenvalue);
        }
        const Observables a = expectations(sol.state), b = expectations(twice);
        auto rel = [](double x, double y) { return y == 0.0 ? std::abs(x) : std::abs(x - y) / std::abs(y); };
        worst_doubling = std::max({worst_doubling, rel(a.photons, b.photons), rel(std::abs(a.field), std::abs(b.field))});
        ++points;
      } catch (const Error& e) {
        errors += std::string(e.what()) + "; ";
      }
    }
  }

  void check(const GridSpec& spec, const SweepResult& result, std::size_t flat) {
    const ResolvedPoint rp = resolve_point(spec, result.unflatten(flat));
    check(rp.op, rp.cavity, spec.atom);
  }
};

StateAudit audit;

GridSpec reference_grid() {
  GridSpec g;
  g.geometry = reference_geometry();
  g.atom = AtomSpec::rubidium_d2();
  g.g0_override = kReferenceG0;
  return g;
}

OperatingPoint at(double delta, double theta, double flux_per_us) {
  OperatingPoint op;
  op.delta = delta;
  op.theta = theta;
  op.flux = flux_per_us * kPerUs;
  op.tau = 20e-6;
  return op;
}

// Criterion 1 also feeds the resolution-stability property.
double resonant_optimum(std::size_t count, Optimum* out, GridSpec* spec_out) {
  GridSpec g = reference_grid();
  g.axes = {Axis::log(AxisKind::kFlux, 1.0, 1e4, count)};
  const SweepResult r = run_grid(g);
  const Optimum opt = find_optimum(r);
  if (out) *out = opt;
  if (spec_out) *spec_out = g;
  if (out) audit.check(g, r, opt.flat_index);
  return std::abs(opt.point.snr);
}

void criterion_resonant(double& s25) {
  Optimum opt;
  GridSpec g;
  s25 = resonant_optimum(25, &opt, &g);
  report(within(s25, 13.0, 0.25), "C1",
         fmt("resonant optimum F=1e4: max S = %.3f at %.1f photons/us (target 13 +/- 25%%)", s25,
             opt.coordinates[0]));
}

void criterion_ridge() {
  GridSpec g = reference_grid();
  g.axes = {Axis::log(AxisKind::kFinesse, 1e2, 1e6, 9), Axis::log(AxisKind::kFlux, 0.1, 1e5, 31)};
  g.truncation.hard_cap = 200;
  g.truncation.verify_doubling = false;
  const SweepResult r = run_grid(g);
  const RidgeTrace trace = ridge_max(r);
  const RidgePoint* lowest = nullptr;
  for (const RidgePoint& row : trace.rows) {
    if (row.gap) continue;
    if (!lowest || row.flux_per_us < lowest->flux_per_us) lowest = &row;
    audit.check(g, r, r.flat(&row - trace.rows.data(), row.index));
  }
  const bool ok = lowest && lowest->outer >= 1500.0 && lowest->outer <= 6000.0;
  report(ok, "C2",
         lowest ? fmt("ridge flux minimum at F = %.0f (%.1f photons/us, S = %.2f); target F in [1500, 6000]",
                      lowest->outer, lowest->flux_per_us, lowest->max_snr)
                : std::string("ridge has no usable rows"));
}

void criterion_detuned() {
  GridSpec g = reference_grid();
  g.base.delta_over_kappa = 1.0;
  g.base.theta_over_gamma = 10.0;
  g.axes = {Axis::log(AxisKind::kFlux, 10.0, 3e4, 29)};
  const SweepResult r = run_grid(g);
  const Optimum opt = find_optimum(r);
  audit.check(g, r, opt.flat_index);
  const double s = std::abs(opt.point.snr);
  const double flux = opt.coordinates[0];
  report(within(s, 9.0, 0.25) && flux > 100.0, "C3",
         fmt("detuned optimum (delta=kappa, theta=10 gamma): |S| = %.3f at %.0f photons/us (target 9 +/- 25%%, "
             "flux > 100)",
             s, flux));
}

void criterion_detectors() {
  GridSpec g = reference_grid();
  g.axes = {Axis::log(AxisKind::kFlux, 1.0, 1e4, 25)};
  g.detector = DetectorModel::apd();
  const SweepResult apd = run_grid(g);
  const Optimum a = find_optimum(apd);
  audit.check(g, apd, a.flat_index);
  const double s_apd = std::abs(a.point.snr);
  const double incident = a.point.incident_flux / kPerUs;
  report(within(s_apd, 8.0, 0.25) && incident <= 20.0, "C4a",
         fmt("APD (eta=0.5, 20/us limit): best S = %.3f at %.1f photons/us in, %.1f/us incident (target 8 +/- 25%%)",
             s_apd, a.coordinates[0], incident));

  g.detector = DetectorModel::heterodyne(0.95);
  const SweepResult het = run_grid(g);
  const Optimum h = find_optimum(het);
  audit.check(g, het, h.flat_index);
  const double s_het = std::abs(h.point.snr_het);
  report(within(s_het, 12.0, 0.25) && h.coordinates[0] > 20.0, "C4b",
         fmt("heterodyne (eta=0.95): best S_het = %.3f at %.1f photons/us (target 12 +/- 25%%, flux > 20)", s_het,
             h.coordinates[0]));
}

void criterion_long_cavity() {
  CavityGeometry geo = reference_geometry();
  geo.length = 178e-6;
  geo.waist = 25.5e-6;
  geo.finesse = 3.5e5;
  const AtomSpec atom = AtomSpec::rubidium_d2();
  const double g0 = scale_coupling(kReferenceG0, mode_volume(reference_geometry()), mode_volume(geo));
  const DerivedCavity cav = derive_cavity(geo, atom, g0);
  const OperatingPoint op = at(0.5 * cav.kappa, 3.0 * atom.gamma, 70.0);
  const SNRResult r = evaluate_point(op, cav, atom, DetectorModel::ideal_counter());
  audit.check(op, cav, atom);
  const double s = std::abs(r.snr);
  report(r.usable() && within(s, 10.0, 0.30), "C5",
         fmt("long high-finesse cavity (g0/2pi = %.1f MHz, kappa/2pi = %.2f MHz): |S| = %.2f (target 10 +/- 30%%)",
             angular_to_mhz(g0), angular_to_mhz(cav.kappa), s));
}

void criterion_rabi() {
  CavityGeometry geo = reference_geometry();
  geo.finesse = 1e5;
  const AtomSpec atom = AtomSpec::rubidium_d2();
  const DerivedCavity cav = derive_cavity(geo, atom, kReferenceG0);
  std::vector<double> deltas(201);
  for (std::size_t i = 0; i < deltas.size(); ++i) deltas[i] = cav.g0 * (-3.0 + 6.0 * double(i) / 200.0);
  const double step = deltas[1] - deltas[0];
  SpectrumOptions opts;
  opts.workers = 0;
  const SpectrumCurve c = transmission_spectrum(cav, atom, 1.0 * kPerUs, deltas, opts);

  // Highest sample on each side of the centre, then a parabola through it.
  auto side_peak = [&](bool upper, std::size_t* index) {
    std::size_t best = upper ? 101 : 0;
    for (std::size_t i = upper ? 101 : 0; i < (upper ? 201u : 100u); ++i) {
      if (c.points[i].valid && c.points[i].transmission > c.points[best].transmission) best = i;
    }
    *index = best;
    double x = deltas[best];
    if (best > 0 && best + 1 < deltas.size()) {
      const double y0 = c.points[best - 1].transmission, y1 = c.points[best].transmission,
                   y2 = c.points[best + 1].transmission;
      const double den = y0 - 2.0 * y1 + y2;
      if (den < 0.0) x += 0.5 * (y0 - y2) / den * step;
    }
    return x;
  };
  std::size_t il = 0, iu = 0;
  const double lower = side_peak(false, &il), upper = side_peak(true, &iu);
  for (std::size_t i : {il, iu}) audit.check(at(deltas[i], deltas[i], 1.0), cav, atom);
  const bool ok = std::abs(lower + cav.g0) <= 0.5 * step && std::abs(upper - cav.g0) <= 0.5 * step;
  report(ok, "C6",
         fmt("vacuum Rabi peaks at %.4f and %.4f g0 (grid samples %.2f, %.2f); tolerance +/- %.3f g0", lower / cav.g0,
             upper / cav.g0, deltas[il] / cav.g0, deltas[iu] / cav.g0, 0.5 * step / cav.g0));
}

void criterion_noise() {
  const AtomSpec atom = AtomSpec::rubidium_d2();
  const DerivedCavity cav = derive_cavity(reference_geometry(), atom, kReferenceG0);
  const double delta = cav.kappa;
  const double flux = 1e4 * kPerUs;
  const double tau = 20e-6;
  SpectrumOptions opts;
  opts.atom_cavity_offset = 10.0 * atom.gamma - cav.kappa;  // θ = 10γ at Δ = κ
  opts.with_atom = true;
  const double n_empty = empty_cavity_photons(calibrate_drive(flux, cav), cav.kappa, delta);
  const double transmitted = n_empty * cav.output_rate();
  const double counts_empty = transmitted * tau;
  const NoiseSusceptibility ns =
      refined_noise_susceptibility(cav, atom, flux, delta, kTwoPi * 1e6, counts_empty, opts);
  audit.check(at(delta, delta + opts.atom_cavity_offset, 1e4), cav, atom);
  const bool ok = within(ns.fluctuation, 1e-3, 0.5) && within(ns.shot, 1e-2, 0.2);
  report(ok, "C8",
         fmt("side of fringe, %.0f photons/us transmitted, 2pi x 1 MHz jitter: fluctuation %.3g (target 1e-3 +/- "
             "50%%), shot %.3g (target 1e-2 +/- 20%%), ratio %.3g",
             transmitted / kPerUs, ns.fluctuation, ns.shot, ns.ratio));
}

// ---- property suite ----

void property_empty_cavity() {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-3.0, 3.0), lf(0.0, 4.0);
  const AtomSpec atom = AtomSpec::rubidium_d2();
  const DerivedCavity cav = derive_cavity(reference_geometry(), atom, kReferenceG0);
  double worst_n = 0.0, worst_purity = 0.0, worst_fano = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double delta = d(rng) * cav.kappa;
    const double eps = calibrate_drive(std::pow(10.0, lf(rng)) * kPerUs, cav);
    const TruncatedSolution s = auto_truncate({delta, 0.0, 0.0, eps}, {cav.kappa, atom.gamma});
    const Observables o = expectations(s.state);
    const double expect = eps * eps / (cav.kappa * cav.kappa + delta * delta);
    worst_n = std::max(worst_n, std::abs(o.photons - expect) / expect);
    worst_purity = std::max(worst_purity, std::abs(o.purity - 1.0));
    worst_fano = std::max(worst_fano, std::abs(o.fano - 1.0));
  }
  report(worst_n <= 1e-8 && worst_purity <= 1e-8 && worst_fano <= 1e-6, "C7a",
         fmt("empty cavity over 20 points: n0 rel %.2e (<=1e-8), purity %.2e (<=1e-8), Fano %.2e (<=1e-6)", worst_n,
             worst_purity, worst_fano));
}

void property_weak_drive() {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> d(-3.0, 3.0), t(-20.0, 20.0), gs(0.2, 2.0), ln(-6.0, -4.0);
  const AtomSpec atom = AtomSpec::rubidium_d2();
  const DerivedCavity cav = derive_cavity(reference_geometry(), atom, kReferenceG0);
  double worst = 0.0;
  int used = 0, skipped = 0;
  while (used < 50) {
    const double delta = d(rng) * cav.kappa, theta = t(rng) * atom.gamma, g = gs(rng) * cav.g0;
    const double eps = cav.kappa * std::sqrt(std::pow(10.0, ln(rng)));
    const TruncatedSolution s = auto_truncate({delta, theta, g, eps}, {cav.kappa, atom.gamma});
    const Observables o = expectations(s.state);
    if (!(o.photons < 1e-3)) {
      ++skipped;
      continue;
    }
    const Complex expect = weak_drive_amplitude(eps, delta, theta, g, cav.kappa, atom.gamma);
    worst = std::max(worst, std::abs(o.field - expect) / std::abs(expect));
    ++used;
  }
  report(worst < 1e-3, "C7b",
         fmt("weak-drive amplitude over %d points (%d skipped, n >= 1e-3): worst rel %.2e (<1e-3)", used, skipped,
             worst));
}

void property_dressed() {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-5.0, 5.0), pos(0.01, 5.0);
  std::uniform_int_distribution<int> nd(1, 50);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = nd(rng);
    const double g = pos(rng), delta = u(rng), theta = u(rng);
    // {|n−1, e⟩, |n, g⟩} block in the probe frame.
    Eigen::Matrix2d block;
    block << (n - 1) * delta + theta, g * std::sqrt(double(n)), g * std::sqrt(double(n)), n * delta;
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(block).eigenvalues();
    const double centre = 0.5 * block.trace();
    const DressedPair p = dressed_energies(n, g, delta, theta);
    worst = std::max({worst, std::abs((ev[1] - centre) / p.plus.offset - 1.0),
                      std::abs((ev[0] - centre) / p.minus.offset - 1.0)});
  }
  report(worst <= 1e-10, "C7c", fmt("dressed energies vs 2x2 diagonalisation, 100 cases: worst rel %.2e", worst));
}

void property_states() {
  const bool ok = audit.errors.empty() && audit.worst_trace <= 1e-10 && audit.worst_hermiticity <= 1e-10 &&
                  audit.min_eigenvalue >= -1e-8;
  report(ok, "C7d",
         fmt("density matrices at %d reported solves: |tr-1| %.2e, hermiticity %.2e (<=1e-10), min eigenvalue %.2e "
             "(>=-1e-8)%s",
             audit.points, audit.worst_trace, audit.worst_hermiticity, audit.min_eigenvalue,
             audit.errors.empty() ? "" : (" errors: " + audit.errors).c_str()));
  report(audit.errors.empty() && audit.worst_doubling < 1e-5, "C7e",
         fmt("cutoff m vs 2m at %d reported solves: worst rel change %.2e (<1e-5)", audit.points,
             audit.worst_doubling));
}

void property_poisson() {
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> mean_dist(0.0, 1000.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double mean = mean_dist(rng);
    std::uniform_int_distribution<long> kd(0, long(mean + 6.0 * std::sqrt(mean) + 10.0));
    const long k = kd(rng);
    long double term = std::exp(-static_cast<long double>(mean)), sum = term;
    for (long j = 1; j <= k; ++j) {
      term *= static_cast<long double>(mean) / j;
      sum += term;
    }
    worst = std::max(worst, std::abs(poisson_cdf(k, mean) - double(sum)));
  }
  report(worst <= 1e-12, "C7f", fmt("Poisson CDF vs direct summation, 100 cases: worst abs %.2e (<=1e-12)", worst));
}

void property_threshold() {
  const ThresholdChoice c = choose_threshold(CountModel::from_means(400.0, 25.0), 3.0);
  report(c.qe > 0.99 && c.false_rate < 0.01, "C7g",
         fmt("3-sigma threshold for 400 vs 25 counts: d = %ld, QE %.6f (>0.99), false %.3e (<0.01)", c.threshold, c.qe,
             c.false_rate));
}

void property_determinism() {
  GridSpec g = reference_grid();
  g.axes = {Axis::linear(AxisKind::kDelta, -1.0, 1.0, 3), Axis::log(AxisKind::kFlux, 1.0, 1e3, 5)};
  auto run = [&](unsigned workers) {
    g.workers = workers;
    return run_grid(g);
  };
  const SweepResult a = run(1), b = run(3), c = run(0), d = run(1);
  auto same = [](const SweepResult& x, const SweepResult& y) {
    for (std::size_t i = 0; i < x.points.size(); ++i) {
      const SNRResult &p = x.points[i], &q = y.points[i];
      const std::initializer_list<std::pair<double, double>> fields = {
          {p.snr, q.snr}, {p.snr_het, q.snr_het}, {p.n_atom, q.n_atom}, {p.n_empty, q.n_empty}, {p.field_sq, q.field_sq}};
      for (auto [u, v] : fields) {
        if (std::memcmp(&u, &v, sizeof u) != 0) return false;
      }
    }
    return x.points.size() == y.points.size();
  };
  report(same(a, b) && same(a, c) && same(a, d), "C7h",
         fmt("3x5 sweep repeated with 1, 3, auto (%u) and 1 workers: tensors bit-identical", resolve_workers(0)));
}

void property_resolution(double s25) {
  const double s49 = resonant_optimum(49, nullptr, nullptr);
  const double change = std::abs(s49 - s25) / s25;
  report(change < 0.02, "C7i",
         fmt("resonant optimum at 25 vs 49 flux points: %.4f vs %.4f (change %.2e < 2%%)", s25, s49, change));
}

template <typename Fn>
void guarded(const char* id, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn();
  } catch (const std::exception& e) {
    report(false, id, std::string("threw: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("      (%s took %.1f s)\n", id, secs);
}

}  // namespace

int main() {
  std::printf("acceptance run, %u worker(s)\n", resolve_workers(0));
  double s25 = 0.0;
  guarded("C1", [&] { criterion_resonant(s25); });
  guarded("C2", criterion_ridge);
  guarded("C3", criterion_detuned);
  guarded("C4", criterion_detectors);
  guarded("C5", criterion_long_cavity);
  guarded("C6", criterion_rabi);
  guarded("C8", criterion_noise);
  guarded("C7a", property_empty_cavity);
  guarded("C7b", property_weak_drive);
  guarded("C7c", property_dressed);
  guarded("C7d", property_states);
  guarded("C7f", property_poisson);
  guarded("C7g", property_threshold);
  guarded("C7h", property_determinism);
  guarded("C7i", [&] { property_resolution(s25); });
  std::printf("%d failing line(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
