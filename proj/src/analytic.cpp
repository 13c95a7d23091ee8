#include "qdisp/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qdisp {

namespace {

constexpr double kStateTol = 1e-12;
constexpr double kPositivityTol = 1e-10;

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and >= 0");
}

void check_density(const Matrix4c& m) {
  if (!m.allFinite()) throw InvalidState("density matrix has non-finite entries");
  if (hermiticity_defect(m) > kStateTol) throw InvalidState("density matrix is not Hermitian");
  if (std::abs(m.trace() - Complex(1.0)) > kStateTol)
    throw InvalidState("density matrix trace differs from 1");
  if (eig_hermitian(m).minCoeff() < -kPositivityTol)
    throw InvalidState("density matrix has a negative eigenvalue");
}

}  // namespace

void SystemParams::validate() const {
  if (!(omega_eff > 0.0) || !std::isfinite(omega_eff))
    throw DomainError("omega_eff must be finite and > 0");
  if (!(decay >= 0.0) || !std::isfinite(decay)) throw DomainError("decay must be finite and >= 0");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
    throw DomainError("alpha must be finite");
}

void EwlParams::validate() const {
  if (!(purity >= 0.0 && purity <= 1.0)) throw DomainError("purity must lie in [0, 1]");
  if (std::abs(std::norm(mu) + std::norm(nu) - 1.0) > 1e-12)
    throw DomainError("|mu|^2 + |nu|^2 must equal 1");
}

TwoQubitDensity::TwoQubitDensity(const Matrix4c& m) : m_(m) { check_density(m_); }

bool XStateDensity::has_x_pattern(const Matrix4c& m, double tol) {
  // (1,2), (1,3), (2,4), (3,4) in 1-based indexing, and their mirrors
  constexpr int zeros[4][2] = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
  for (const auto& z : zeros)
    if (std::abs(m(z[0], z[1])) > tol || std::abs(m(z[1], z[0])) > tol) return false;
  return true;
}

XStateDensity::XStateDensity(const Matrix4c& m) : TwoQubitDensity(m) {
  if (!has_x_pattern(m_, kStateTol)) throw InvalidState("matrix does not have the X pattern");
}

std::pair<Complex, Complex> alpha_branches(const SystemParams& sys, double t) {
  require_time(t);
  return alpha_branches(sys.omega_eff, sys.decay, sys.alpha, t);
}

Complex f_factor(const SystemParams& sys, double t) {
  require_time(t);
  return f_factor(sys.omega_eff, sys.decay, sys.alpha, t);
}

Complex lambda_factor(const SystemParams& sys, double t) {
  require_time(t);
  return lambda_factor(sys.omega_eff, sys.decay, sys.alpha, t);
}

ChannelFactors channel(const SystemParams& sys, double t) {
  require_time(t);
  ChannelFactors ch;
  ch.t = t;
  if (t == 0.0) return ch;
  ch.f = f_factor(sys, t);
  ch.lam = lambda_factor(sys, t);
  // rounding can push the moduli a hair above one
  auto clamp = [](Complex z) { return std::abs(z) > 1.0 ? z / std::abs(z) : z; };
  ch.f = clamp(ch.f);
  ch.lam = clamp(ch.lam);
  return ch;
}

double coherence_weight(const SystemParams& sys, double t) {
  require_time(t);
  // ln|f lambda|^2 = -2 |alpha|^2 Re[(1 - e^{-2(k+i Omega)t}) i Omega / (k + i Omega)]
  const double k = sys.decay;
  const double w = sys.omega_eff;
  const Complex z(k, w);
  const Complex one_minus_e =
      -std::expm1(-2.0 * k * t) + std::exp(-2.0 * k * t) * (1.0 - std::exp(Complex(0, -2.0 * w * t)));
  const double exponent = -2.0 * std::norm(sys.alpha) * (one_minus_e * Complex(0, w) / z).real();
  return std::min(1.0, std::exp(exponent));
}

XStateDensity ewl_state(const EwlParams& ewl) {
  ewl.validate();
  const double p = ewl.purity;
  Matrix4c m = Matrix4c::Identity() * ((1.0 - p) / 4.0);
  // |Phi> lives on |eg>,|ge> (indices 1,2); |Psi> on |ee>,|gg> (0,3)
  const int a = ewl.family == Family::Phi ? 1 : 0;
  const int b = ewl.family == Family::Phi ? 2 : 3;
  m(a, a) += p * std::norm(ewl.mu);
  m(b, b) += p * std::norm(ewl.nu);
  m(a, b) += p * ewl.mu * std::conj(ewl.nu);
  m(b, a) += p * ewl.nu * std::conj(ewl.mu);
  return XStateDensity(m);
}

XStateDensity evolve_two_atom(const XStateDensity& rho0, const ChannelFactors& ch) {
  const Complex c = ch.coherence();
  const Matrix4c& in = rho0.matrix();
  Matrix4c out = in;
  out(0, 1) = c * in(0, 1);
  out(0, 2) = c * in(0, 2);
  out(0, 3) = c * c * in(0, 3);
  out(1, 2) = std::norm(c) * in(1, 2);
  out(1, 3) = c * in(1, 3);
  out(2, 3) = c * in(2, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) out(i, j) = std::conj(out(j, i));
  // |c| <= 1 keeps every 2x2 block PSD, so the result stays a valid X state
  return XStateDensity(out, XStateDensity::Unchecked{});
}

double concurrence_wootters(const TwoQubitDensity& rho) {
  const ComplexMatrix sy = pauli_y();
  const ComplexMatrix flip = kron(sy, sy);
  const ComplexMatrix r(rho.matrix());
  const ComplexMatrix s = sqrt_psd(r);
  ComplexMatrix h = s * flip * r.conjugate() * flip * s;
  h = (h + h.adjoint()).eval() / 2.0;
  const RealVector mu = eig_hermitian(h);
  double lam[4];
  for (int i = 0; i < 4; ++i) lam[i] = std::sqrt(std::max(0.0, mu(i)));
  std::sort(lam, lam + 4, std::greater<>());
  return std::clamp(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0);
}

double concurrence_x(const XStateDensity& rho) {
  const Matrix4c& m = rho.matrix();
  const double r11 = std::max(0.0, m(0, 0).real());
  const double r22 = std::max(0.0, m(1, 1).real());
  const double r33 = std::max(0.0, m(2, 2).real());
  const double r44 = std::max(0.0, m(3, 3).real());
  const double a = std::abs(m(1, 2)) - std::sqrt(r11 * r44);
  const double b = std::abs(m(0, 3)) - std::sqrt(r22 * r33);
  return std::clamp(2.0 * std::max({0.0, a, b}), 0.0, 1.0);
}

double concurrence_ewl_raw(const SystemParams& sys, const EwlParams& ewl, double t) {
  const double p = ewl.purity;
  return 2.0 * p * coherence_weight(sys, t) * std::abs(ewl.mu * ewl.nu) - (1.0 - p) / 2.0;
}

double concurrence_ewl(const SystemParams& sys, const EwlParams& ewl, double t) {
  sys.validate();
  ewl.validate();
  return std::max(0.0, concurrence_ewl_raw(sys, ewl, t));
}

double asymptotic_concurrence(const SystemParams& sys, const EwlParams& ewl) {
  sys.validate();
  ewl.validate();
  if (sys.decay == 0.0)
    throw DomainError("no stationary concurrence without cavity decay (decay = 0)");
  const double k = sys.decay;
  const double w = sys.omega_eff;
  const double weight = std::exp(-2.0 * std::norm(sys.alpha) * w * w / (k * k + w * w));
  const double p = ewl.purity;
  return std::max(0.0, 2.0 * p * std::abs(ewl.mu * ewl.nu) * weight - (1.0 - p) / 2.0);
}

std::vector<EsdInterval> esd_intervals(const SystemParams& sys, const EwlParams& ewl,
                                       const std::vector<double>& t_grid) {
  sys.validate();
  ewl.validate();
  if (t_grid.size() < 2) throw EmptyGrid("esd_intervals: need at least two grid points");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!std::isfinite(t_grid[i]) || t_grid[i] < 0.0)
      throw DomainError("esd_intervals: grid times must be finite and >= 0");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw DomainError("esd_intervals: grid must be strictly increasing");
  }

  // zero set of C is {t : raw(t) < tol}; bisect raw - tol across each edge
  auto dead = [&](double t) { return concurrence_ewl_raw(sys, ewl, t) < kConcurrenceZeroTol; };
  auto refine = [&](double alive_t, double dead_t) {
    while (std::abs(dead_t - alive_t) > 1e-8) {
      const double mid = 0.5 * (alive_t + dead_t);
      (dead(mid) ? dead_t : alive_t) = mid;
    }
    return 0.5 * (alive_t + dead_t);
  };

  std::vector<EsdInterval> out;
  const std::size_t n = t_grid.size();
  std::size_t i = 0;
  while (i < n) {
    if (!dead(t_grid[i])) {
      ++i;
      continue;
    }
    EsdInterval iv;
    iv.t_start = i == 0 ? t_grid[0] : refine(t_grid[i - 1], t_grid[i]);
    std::size_t j = i;
    while (j + 1 < n && dead(t_grid[j + 1])) ++j;
    if (j + 1 == n) {
      iv.t_end = t_grid[n - 1];
      iv.open_ended = true;
    } else {
      iv.t_end = refine(t_grid[j + 1], t_grid[j]);
    }
    out.push_back(iv);
    i = j + 1;
  }
  return out;
}

double default_threshold_level(const SystemParams& sys, const EwlParams& ewl) {
  const double c_inf = asymptotic_concurrence(sys, ewl);
  const double c0 = concurrence_ewl(sys, ewl, 0.0);
  return c_inf + 0.01 * (c0 - c_inf);
}

double threshold_time(const SystemParams& sys, const EwlParams& ewl, double c,
                      double t_search_max) {
  sys.validate();
  ewl.validate();
  if (sys.decay <= 0.0) throw DomainError("threshold_time requires decay > 0");
  if (std::abs(std::abs(ewl.mu) - M_SQRT1_2) > 1e-12 ||
      std::abs(std::abs(ewl.nu) - M_SQRT1_2) > 1e-12)
    throw DomainError("threshold_time requires |mu| = |nu| = 1/sqrt(2)");
  if (!(t_search_max > 0.0) || !std::isfinite(t_search_max))
    throw DomainError("threshold_time requires a finite positive search horizon");
  const double p = ewl.purity;
  if (!(c >= 0.0) || 2.0 * c + 1.0 - p > 2.0 * p + 1e-15)
    throw BadThreshold("threshold level must satisfy 0 <= c and 2c + 1 - p <= 2p");

  const double k = sys.decay;
  const double w = sys.omega_eff;
  auto above = [&](double t) { return concurrence_ewl(sys, ewl, t) > c; };

  // resolve both the oscillation period pi/Omega and the decay time 1/k
  const double step = std::min(M_PI / w, 1.0 / k) / 64.0;
  const auto count = static_cast<std::size_t>(std::ceil(t_search_max / step));
  if (count > 50'000'000) throw DomainError("threshold_time: search horizon too long for scan");

  bool prev = above(0.0);
  double last_lo = -1.0, last_hi = -1.0;
  for (std::size_t i = 1; i <= count; ++i) {
    const double t = std::min(t_search_max, static_cast<double>(i) * step);
    const bool cur = above(t);
    if (cur != prev) {
      last_lo = std::min(t_search_max, static_cast<double>(i - 1) * step);
      last_hi = t;
    }
    prev = cur;
  }
  if (last_hi < 0.0) throw NoSolution("threshold_time: C(t) never crosses the level in range");

  const bool lo_state = above(last_lo);
  double lo = last_lo, hi = last_hi;
  while (k * (hi - lo) > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) == lo_state ? lo : hi) = mid;
  }
  return k * 0.5 * (lo + hi);
}

double linear_entropy(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw NotDensity("linear_entropy: not square");
  if (std::abs(rho.trace() - Complex(1.0)) > 1e-10)
    throw NotDensity("linear_entropy: trace differs from 1");
  return 1.0 - (rho * rho).trace().real();
}

Matrix2c reduced_atom(const TwoQubitDensity& rho, Atom which) {
  const Matrix4c& m = rho.matrix();
  Matrix2c out = Matrix2c::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int s = 0; s < 2; ++s) {
        // index = 2 * atom1 + atom2
        if (which == Atom::First)
          out(a, b) += m(2 * a + s, 2 * b + s);
        else
          out(a, b) += m(2 * s + a, 2 * s + b);
      }
  return out;
}

}  // namespace qdisp
