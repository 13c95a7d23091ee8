#ifndef QDISP_ANALYTIC_HPP
#define QDISP_ANALYTIC_HPP

// Closed-form dynamics of two atoms, each coupled dispersively to its own
// lossy cavity that starts in a coherent state. Each atomic coherence is
// multiplied by f(t) * lambda(t); populations are frozen.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "qdisp/errors.hpp"
#include "qdisp/linalg.hpp"

namespace qdisp {

/// Parameters of one atom-cavity copy. Both copies share them.
struct SystemParams {
  double omega_eff = 1.0;  ///< dispersive shift g^2 / detuning (rad / time)
  double decay = 0.0;      ///< cavity field damping rate k (1 / time)
  Complex alpha{1.0, 0.0}; ///< coherent amplitude of the initial field

  void validate() const;
};

enum class Family { Phi, Psi };

/// Extended Werner-like initial state p |chi><chi| + (1-p) I/4 with
/// |chi> = mu|eg> + nu|ge> (Phi) or mu|ee> + nu|gg> (Psi).
struct EwlParams {
  double purity = 1.0;
  Complex mu{M_SQRT1_2, 0.0};
  Complex nu{M_SQRT1_2, 0.0};
  Family family = Family::Phi;

  void validate() const;
};

/// Coherence multipliers of the single-atom channel at time t.
struct ChannelFactors {
  Complex f{1.0, 0.0};
  Complex lam{1.0, 0.0};
  double t = 0.0;

  Complex coherence() const { return f * lam; }
};

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Matrix2c = Eigen::Matrix<Complex, 2, 2>;

/// Two-qubit density matrix in the basis |ee>, |eg>, |ge>, |gg>.
class TwoQubitDensity {
 public:
  /// Validates Hermiticity, unit trace and positivity; throws InvalidState.
  explicit TwoQubitDensity(const Matrix4c& m);

  const Matrix4c& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

 protected:
  struct Unchecked {};
  TwoQubitDensity(const Matrix4c& m, Unchecked) : m_(m) {}
  Matrix4c m_;
};

/// Two-qubit density matrix whose only nonzero entries sit on the diagonal
/// and the anti-diagonal.
class XStateDensity : public TwoQubitDensity {
 public:
  explicit XStateDensity(const Matrix4c& m);

  static bool has_x_pattern(const Matrix4c& m, double tol = 1e-12);

 private:
  friend XStateDensity evolve_two_atom(const XStateDensity&, const ChannelFactors&);
  XStateDensity(const Matrix4c& m, Unchecked u) : TwoQubitDensity(m, u) {}
};

/// Coherent branches (alpha_+, alpha_-) = alpha e^{-(k +- i Omega) t}.
template <typename Real>
std::pair<std::complex<Real>, std::complex<Real>> alpha_branches(Real omega, Real k,
                                                                 std::complex<Real> alpha,
                                                                 Real t) {
  using C = std::complex<Real>;
  return {alpha * std::exp(-C(k, omega) * t), alpha * std::exp(-C(k, -omega) * t)};
}

/// <beta|alpha> for normalized coherent states.
template <typename Real>
std::complex<Real> coherent_overlap(std::complex<Real> beta, std::complex<Real> alpha) {
  return std::exp(-std::norm(beta) / Real(2) - std::norm(alpha) / Real(2) +
                  std::conj(beta) * alpha);
}

template <typename Real>
std::complex<Real> f_factor(Real omega, Real k, std::complex<Real> alpha, Real t) {
  using C = std::complex<Real>;
  const Real n = std::norm(alpha);
  const C z(k, omega);
  C exponent = C(0, -omega * t) + n * (std::exp(-Real(2) * k * t) - Real(1));
  // k / (k + i Omega) * (1 - e^{-2 (k + i Omega) t}); -expm1 keeps small t accurate
  exponent += n * (k / z) * (-std::expm1(-Real(2) * k * t) +
                             std::exp(-Real(2) * k * t) * (Real(1) - std::exp(C(0, -2 * omega * t))));
  return std::exp(exponent);
}

template <typename Real>
std::complex<Real> lambda_factor(Real omega, Real k, std::complex<Real> alpha, Real t) {
  using C = std::complex<Real>;
  const Real n = std::norm(alpha);
  const Real damp = std::exp(-Real(2) * k * t);
  return std::exp(-n * damp + n * damp * std::exp(C(0, -2 * omega * t)));
}

std::pair<Complex, Complex> alpha_branches(const SystemParams& sys, double t);
Complex f_factor(const SystemParams& sys, double t);
Complex lambda_factor(const SystemParams& sys, double t);
ChannelFactors channel(const SystemParams& sys, double t);

/// |f(t) lambda(t)|^2 in closed form; equals |channel(sys,t).coherence()|^2.
double coherence_weight(const SystemParams& sys, double t);

XStateDensity ewl_state(const EwlParams& ewl);
XStateDensity evolve_two_atom(const XStateDensity& rho0, const ChannelFactors& ch);

/// Wootters concurrence through the Hermitian matrix
/// sqrt(rho) (sy x sy) rho* (sy x sy) sqrt(rho), whose eigenvalues are the
/// squares of the lambda_i.
double concurrence_wootters(const TwoQubitDensity& rho);
/// Closed form for X states.
double concurrence_x(const XStateDensity& rho);
double concurrence_ewl(const SystemParams& sys, const EwlParams& ewl, double t);

/// 2p|mu nu| |f lambda|^2 - (1-p)/2: the smooth expression inside max{0, .}.
double concurrence_ewl_raw(const SystemParams& sys, const EwlParams& ewl, double t);

/// t -> infinity limit of the EWL concurrence; requires decay > 0.
double asymptotic_concurrence(const SystemParams& sys, const EwlParams& ewl);

struct EsdInterval {
  double t_start = 0.0;
  double t_end = 0.0;
  bool open_ended = false;
};

inline constexpr double kConcurrenceZeroTol = 1e-12;

/// Maximal stretches of the grid where the concurrence vanishes, with both
/// ends refined by bisection to 1e-8 in t.
std::vector<EsdInterval> esd_intervals(const SystemParams& sys, const EwlParams& ewl,
                                       const std::vector<double>& t_grid);

/// Default level for threshold_time: 1% of the way from C(inf) up to C(0).
double default_threshold_level(const SystemParams& sys, const EwlParams& ewl);

/// Largest k t in (0, k t_search_max] at which C(t) crosses the level c.
/// Requires mu = nu = 1/sqrt(2) (up to phase), decay > 0, 0 <= c <= C(0).
double threshold_time(const SystemParams& sys, const EwlParams& ewl, double c,
                      double t_search_max);

/// 1 - Tr(rho^2). Throws NotDensity unless rho is square with unit trace.
double linear_entropy(const ComplexMatrix& rho);

enum class Atom { First, Second };

Matrix2c reduced_atom(const TwoQubitDensity& rho, Atom which);

}  // namespace qdisp

#endif  // QDISP_ANALYTIC_HPP
