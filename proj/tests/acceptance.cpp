// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <fmt/format.h>
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qdisp/analytic.hpp"
#include "qdisp/lindblad.hpp"
#include "qdisp/sweep.hpp"

using namespace qdisp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

SystemParams sys_of(double omega, double k, Complex alpha) {
  SystemParams s;
  s.omega_eff = omega;
  s.decay = k;
  s.alpha = alpha;
  return s;
}

EwlParams ewl_of(double p, Complex mu = M_SQRT1_2, Complex nu = M_SQRT1_2,
                 Family fam = Family::Phi) {
  EwlParams e;
  e.purity = p;
  e.mu = mu;
  e.nu = nu;
  e.family = fam;
  return e;
}

EwlParams random_ewl(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double theta = M_PI / 2 * u(rng);
  return ewl_of(u(rng), std::polar(std::cos(theta), 2 * M_PI * u(rng)),
                std::polar(std::sin(theta), 2 * M_PI * u(rng)),
                u(rng) < 0.5 ? Family::Phi : Family::Psi);
}

SystemParams random_sys(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return sys_of(0.2 + 2.0 * u(rng), 0.5 * u(rng), std::polar(2.0 * u(rng), 2 * M_PI * u(rng)));
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QDISP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// diagnostics shared by criteria 5 and 9
struct OracleRuns {
  double single_trace_drift = 0.0, single_min_eig = 1.0;
  double pair_trace_drift = 0.0, pair_min_eig = 1.0;
  bool ran = false;
} g_oracle;

Outcome criterion1() {
  const SystemParams s = sys_of(1.0, 0.01, 1.0);
  const double c08 = concurrence_ewl(s, ewl_of(0.8), 0.0);
  const double c06 = concurrence_ewl(s, ewl_of(0.6), 0.0);
  const bool ok = std::abs(c08 - 0.7) <= 1e-12 && std::abs(c06 - 0.4) <= 1e-12;
  return {ok, fmt::format("C(0) = {:.15f} (p=0.8), {:.15f} (p=0.6); tol 1e-12", c08, c06)};
}

Outcome criterion2() {
  const auto grid = linspace(0.0, 30.0, 3001);
  std::size_t n[3];
  const double alphas[3] = {0.5, 1.0, 2.0};
  for (int i = 0; i < 3; ++i)
    n[i] = esd_intervals(sys_of(1.0, 0.01, alphas[i]), ewl_of(0.9), grid).size();
  const bool ok = n[0] == 0 && n[1] >= 1 && n[2] >= 1;
  return {ok, fmt::format("ESD intervals over Omega t in [0, 30]: alpha=0.5 -> {}, alpha=1 -> {}, "
                          "alpha=2 -> {}",
                          n[0], n[1], n[2])};
}

Outcome criterion3() {
  const SystemParams s = sys_of(1.0, 0.01, 0.5);
  const double c_inf = asymptotic_concurrence(s, ewl_of(0.9));
  const double c_25 = concurrence_ewl(s, ewl_of(0.9), 25.0 / 0.01);
  const double c_a2 = asymptotic_concurrence(sys_of(1.0, 0.01, 2.0), ewl_of(0.9));
  const bool ok = std::abs(c_inf - 0.4959) <= 1e-3 && std::abs(c_25 - c_inf) <= 1e-3 && c_a2 == 0.0;
  return {ok, fmt::format("C(inf) = {:.6f}, C(kt=25) = {:.6f}, alpha=2 -> {}", c_inf, c_25, c_a2)};
}

Outcome criterion4() {
  // fig6 preset axis: k = 1, Omega/k in [1, 20]
  const EwlParams e = ewl_of(0.8);
  double lo = 1e300, hi = -1e300, at_lo = 0.0, at_hi = 0.0;
  for (double w : linspace(1.0, 20.0, 101)) {
    const SystemParams s = sys_of(w, 1.0, 1.0);
    const double kt = threshold_time(s, e, default_threshold_level(s, e), 40.0);
    if (kt < lo) lo = kt, at_lo = w;
    if (kt > hi) hi = kt, at_hi = w;
  }
  const bool ok = lo >= 5.0 && hi <= 9.0;
  return {ok, fmt::format("kt_c over Omega/k in [1, 20] spans [{:.4f} (Omega/k={:g}), {:.4f} "
                          "(Omega/k={:g})]; required within [5, 9]",
                          lo, at_lo, hi, at_hi)};
}

Outcome criterion5() {
  // single copy: N = 40, alpha = 1, k/Omega = 0.1, dt = 1e-3/Omega, Omega t <= 20
  const auto t0 = std::chrono::steady_clock::now();
  const FockSpace big(40);
  const SystemParams sys = sys_of(1.0, 0.1, 1.0);
  const Complex xi_c(0.5, 0.0);
  Matrix2c atom;
  atom << 0.5, xi_c, std::conj(xi_c), 0.5;
  IntegrationOptions opt;
  opt.dt = 1e-3;
  opt.t_end = 20.0;
  opt.sample_interval = 0.1;
  const Trajectory tr = integrate(product_state(atom, sys.alpha, big), DispersiveModel{1.0, 0.1},
                                  big, opt);
  double single = 0.0;
  for (const auto& smp : tr.samples)
    single = std::max(single, std::abs(coherence_multiplier(smp.density, xi_c, big) -
                                       channel(sys, smp.time).coherence()));
  const double single_secs = seconds_since(t0);

  // two copies: N = 14, alpha = 1, p = 0.8, Omega t in [0, pi]
  const auto t1 = std::chrono::steady_clock::now();
  const FockSpace small(14);
  TwoCopyOptions topt;
  topt.dt = 2e-3;
  topt.t_end = M_PI;
  topt.sample_interval = M_PI / 40;
  const EwlParams e = ewl_of(0.8);
  const TwoCopyResult pair = two_copy_oracle(e, sys, small, topt);
  double rho_dev = 0.0, c_dev = 0.0;
  for (const auto& smp : pair.samples) {
    const Matrix4c cf = evolve_two_atom(ewl_state(e), channel(sys, smp.t)).matrix();
    rho_dev = std::max(rho_dev, (smp.rho - cf).cwiseAbs().maxCoeff());
    c_dev = std::max(c_dev, std::abs(concurrence_wootters(TwoQubitDensity(smp.rho)) -
                                     concurrence_ewl(sys, e, smp.t)));
  }
  const double pair_secs = seconds_since(t1);

  g_oracle = {tr.diagnostics.max_trace_drift, tr.diagnostics.min_eigenvalue,
              pair.diagnostics.max_trace_drift, pair.diagnostics.min_eigenvalue, true};
  const bool ok = single < 1e-6 && rho_dev < 1e-6 && c_dev < 1e-5 && single_secs < 30.0 &&
                  pair_secs < 600.0;
  return {ok, fmt::format("single-copy |c - f lambda| = {:.2e} ({:.1f} s); two-copy max |drho| = "
                          "{:.2e}, max |dC| = {:.2e} ({} samples, {:.1f} s)",
                          single, single_secs, rho_dev, c_dev, pair.samples.size(), pair_secs)};
}

Outcome criterion6() {
  std::mt19937 rng(601);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SystemParams s = random_sys(rng);
    const EwlParams e = random_ewl(rng);
    const XStateDensity rho0 = ewl_state(e);
    const double s0 = linear_entropy(ComplexMatrix(reduced_atom(rho0, Atom::First)));
    for (int k = 0; k < 20; ++k) {
      const XStateDensity rho = evolve_two_atom(rho0, channel(s, u(rng)));
      worst = std::max(worst,
                       std::abs(linear_entropy(ComplexMatrix(reduced_atom(rho, Atom::First))) - s0));
    }
  }
  double half = 0.0;
  for (double p : linspace(0.0, 1.0, 11)) {
    const XStateDensity rho = evolve_two_atom(ewl_state(ewl_of(p)), channel(sys_of(1, 0.1, 1), 3.0));
    half = std::max(half, std::abs(linear_entropy(ComplexMatrix(reduced_atom(rho, Atom::First))) - 0.5));
  }
  const bool ok = worst <= 1e-12 && half <= 1e-12;
  return {ok, fmt::format("max |S_L(t) - S_L(0)| = {:.1e}; max |S_L - 0.5| at mu=nu = {:.1e}",
                          worst, half)};
}

Outcome criterion7() {
  std::mt19937 rng(701);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x_dev = 0.0;
  for (int i = 0; i < 200; ++i) {
    double d[4], total = 0.0;
    for (double& x : d) total += (x = u(rng) + 1e-3);
    Matrix4c m = Matrix4c::Zero();
    for (int k = 0; k < 4; ++k) m(k, k) = d[k] / total;
    m(0, 3) = std::polar(u(rng) * std::sqrt((m(0, 0) * m(3, 3)).real()), 2 * M_PI * u(rng));
    m(1, 2) = std::polar(u(rng) * std::sqrt((m(1, 1) * m(2, 2)).real()), 2 * M_PI * u(rng));
    m(3, 0) = std::conj(m(0, 3));
    m(2, 1) = std::conj(m(1, 2));
    const XStateDensity rho(m);
    x_dev = std::max(x_dev, std::abs(concurrence_wootters(rho) - concurrence_x(rho)));
  }
  double fam_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SystemParams s = random_sys(rng);
    EwlParams e = random_ewl(rng);
    const ChannelFactors ch = channel(s, 50.0 * u(rng));
    e.family = Family::Phi;
    const double phi = concurrence_x(evolve_two_atom(ewl_state(e), ch));
    e.family = Family::Psi;
    const double psi = concurrence_x(evolve_two_atom(ewl_state(e), ch));
    fam_dev = std::max(fam_dev, std::abs(phi - psi));
  }
  const bool ok = x_dev <= 1e-10 && fam_dev <= 1e-12;
  return {ok, fmt::format("max |C_wootters - C_x| = {:.1e} (200 X states); max |C_phi - C_psi| = "
                          "{:.1e} (100 tuples)",
                          x_dev, fam_dev)};
}

Outcome criterion8() {
  std::mt19937 rng(801);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int n : {4, 10, 24, 40}) {
    const FockSpace s(n);
    for (int trial = 0; trial < 10; ++trial) {
      ComplexMatrix rho(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rho(i, j) = Complex(g(rng), g(rng));
      rho /= rho.norm();  // unit Frobenius norm, the scale of a density matrix
      const auto x = apply_superops(rho, s);
      const auto from_m = apply_superops(x.m, s);
      const auto from_r = apply_superops(x.r, s);
      const auto from_l = apply_superops(x.l, s);
      const int k = n - 1;
      const ComplexMatrix rm = (from_m.r - from_r.m + x.m).topLeftCorner(k, k);
      const ComplexMatrix lm = (from_m.l - from_l.m + x.m).topLeftCorner(k, k);
      const ComplexMatrix rl = (from_l.r - from_r.l).topLeftCorner(k, k);
      worst = std::max({worst, rm.cwiseAbs().maxCoeff(), lm.cwiseAbs().maxCoeff(),
                        rl.cwiseAbs().maxCoeff()});
    }
  }
  return {worst <= 1e-12,
          fmt::format("max entry of ([R,M]+M), ([L,M]+M), [R,L] on n < N-1, N up to 40, "
                      "unit-norm operators: {:.1e}",
                      worst)};
}

Outcome criterion9() {
  if (!g_oracle.ran) return {false, "oracle runs of criterion 5 did not complete"};
  const FockSpace s(20);
  JointState dark{ComplexMatrix::Zero(40, 40), 0.0};
  dark.density(20, 20) = 1.0;  // |g>|0>
  IntegrationOptions opt;
  opt.dt = 1e-3;
  opt.t_end = 2.0;
  opt.sample_interval = 0.0;
  const Trajectory tr = integrate(dark, DispersiveModel{1.0, 0.1}, s, opt);
  double dark_dev = 0.0;
  for (std::size_t i = 1; i < tr.samples.size(); ++i)
    dark_dev = std::max(dark_dev,
                        (tr.samples[i].density - tr.samples[i - 1].density).cwiseAbs().maxCoeff());
  const double drift = std::max(g_oracle.single_trace_drift, g_oracle.pair_trace_drift);
  const double min_eig = std::min(g_oracle.single_min_eig, g_oracle.pair_min_eig);
  const bool ok = drift < 1e-9 && min_eig > -1e-6 && dark_dev <= 1e-12;
  return {ok, fmt::format("trace drift {:.1e}, min eigenvalue {:.1e}, dark-state change per step "
                          "{:.1e} over {} steps",
                          drift, min_eig, dark_dev, tr.samples.size() - 1)};
}

Outcome criterion10() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path base = fs::temp_directory_path() / "qdisp_acceptance";
  fs::remove_all(base);
  const fs::path a = base / "a", b = base / "b";
  std::vector<std::string> mismatched;
  std::size_t files = 0;
  for (const char* fig : {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7"}) {
    if (run_cli(fmt::format("figure {} --out {} --deterministic", fig, a.string())) != 0 ||
        run_cli(fmt::format("--threads 3 figure {} --out {} --deterministic", fig, b.string())) != 0)
      return {false, fmt::format("figure {} exited with an error", fig)};
  }
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    if (slurp(entry.path()) != slurp(b / entry.path().filename()))
      mismatched.push_back(entry.path().filename().string());
  }

  const SweepResult r = run_figure(Figure::Fig7).front().result;
  const Eigen::Index last = r.cols() - 1;
  const double top = r.concurrence(0, last);  // alpha = 0, p = 1
  const double p0 = r.concurrence.col(0).cwiseAbs().maxCoeff();
  bool monotone = true;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if (i > 0 && r.concurrence(i, j) > r.concurrence(i - 1, j) + 1e-15) monotone = false;
      if (j > 0 && r.concurrence(i, j) < r.concurrence(i, j - 1) - 1e-15) monotone = false;
    }
  const double secs = seconds_since(t0);
  const bool ok = files == 8 && mismatched.empty() && std::abs(top - 1.0) <= 1e-12 && p0 == 0.0 &&
                  monotone && secs < 60.0;
  return {ok, fmt::format("{} CSVs byte-identical across runs: {}; fig7 C(alpha=0, p=1) = {:.15f}, "
                          "max C(p=0) = {:g}, monotone in alpha and p: {} ({:.1f} s)",
                          files, mismatched.empty() ? "yes" : "no", top, p0,
                          monotone ? "yes" : "no", secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"initial concurrence anchors", criterion1},
      {"ESD presence and absence", criterion2},
      {"long-lived entanglement value", criterion3},
      {"threshold time at the default level", criterion4},
      {"oracle equivalence", criterion5},
      {"coherence preservation", criterion6},
      {"concurrence formula cross-validation", criterion7},
      {"superoperator algebra", criterion8},
      {"integrator sanity", criterion9},
      {"figure regression", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, fmt::format("exception: {}", e.what())};
    }
    if (!out.pass) ++failed;
    fmt::print("[{}] {:2}. {}: {}\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
               out.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
