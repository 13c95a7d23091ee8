#include "qdisp/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

namespace qdisp {

namespace {

using Index = Eigen::Index;

// Fixed-step RK4 driver; `on_sample(t, y)` runs at t0 and every `every` steps.
template <typename State, typename Rhs, typename OnSample>
void run_rk4(State y, double t0, double dt, std::size_t steps, std::size_t every, Rhs&& rhs,
             OnSample&& on_sample) {
  on_sample(t0, y);
  double t = t0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const State k1 = rhs(t, y);
    const State k2 = rhs(t + 0.5 * dt, State(y + (0.5 * dt) * k1));
    const State k3 = rhs(t + 0.5 * dt, State(y + (0.5 * dt) * k2));
    const State k4 = rhs(t + dt, State(y + dt * k3));
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + static_cast<double>(s) * dt;
    if (s % every == 0 || s == steps) on_sample(t, y);
  }
}

struct StepPlan {
  double dt;
  std::size_t steps;
  std::size_t every;
};

StepPlan plan_steps(double t0, double t_end, double dt, double sample_interval) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be finite and > 0");
  if (!(t_end >= t0) || !std::isfinite(t_end)) throw DomainError("t_end must be >= start time");
  StepPlan plan;
  const double span = t_end - t0;
  plan.steps = span == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  plan.dt = plan.steps == 0 ? dt : span / static_cast<double>(plan.steps);
  plan.every = sample_interval <= 0.0
                   ? 1
                   : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                  std::llround(sample_interval / plan.dt)));
  return plan;
}

// Lindblad generator whose Hamiltonian is diagonal in the product Fock basis and
// whose jump operators are annihilators, each acting as an index shift.
struct ShiftMode {
  Index offset = 0;      // index distance from |..n..> to |..n+1..>
  RealVector sqrt_up;    // sqrt(n+1) where n+1 < N, else 0
};

struct DiagonalLindblad {
  RealVector energy;
  RealVector number_sum;  // total photon number per basis index
  std::vector<ShiftMode> modes;
  double decay = 0.0;

  ComplexMatrix operator()(const ComplexMatrix& rho) const {
    const Index d = rho.rows();
    ComplexMatrix out(d, d);
    for (Index j = 0; j < d; ++j) {
      const double ej = energy(j);
      const double nj = number_sum(j);
      for (Index i = 0; i < d; ++i) {
        Complex v = Complex(-decay * (number_sum(i) + nj), -(energy(i) - ej)) * rho(i, j);
        for (const auto& m : modes) {
          const double w = m.sqrt_up(i) * m.sqrt_up(j);
          if (w != 0.0) v += (2.0 * decay * w) * rho(i + m.offset, j + m.offset);
        }
        out(i, j) = v;
      }
    }
    return out;
  }
};

// index = atom * N + n with atom 0 = e, 1 = g
DiagonalLindblad single_copy_lindblad(const RealVector& energy, double decay, int n_trunc) {
  const Index d = 2 * n_trunc;
  DiagonalLindblad gen;
  gen.energy = energy;
  gen.decay = decay;
  gen.number_sum.resize(d);
  ShiftMode mode;
  mode.offset = 1;
  mode.sqrt_up.resize(d);
  for (Index i = 0; i < d; ++i) {
    const Index n = i % n_trunc;
    gen.number_sum(i) = static_cast<double>(n);
    mode.sqrt_up(i) = n + 1 < n_trunc ? std::sqrt(static_cast<double>(n + 1)) : 0.0;
  }
  gen.modes.push_back(std::move(mode));
  return gen;
}

RealVector dispersive_energies(double omega_eff, int n_trunc) {
  RealVector e(2 * n_trunc);
  for (int n = 0; n < n_trunc; ++n) {
    e(n) = omega_eff * (n + 1);
    e(n_trunc + n) = -omega_eff * n;
  }
  return e;
}

void require_joint_dims(const ComplexMatrix& rho, const FockSpace& space) {
  const Index d = 2 * space.truncation();
  if (rho.rows() != d || rho.cols() != d)
    throw DimensionMismatch("joint state must be (2N)x(2N) for truncation N = " +
                            std::to_string(space.truncation()));
}

// Adds -i[H_c, rho] for H_c = g (phase a s+ + conj(phase) a' s-).
void add_jc_coupling(const ComplexMatrix& rho, ComplexMatrix& out, double g, Complex phase,
                     int n_trunc) {
  const Index d = 2 * n_trunc;
  const Complex up = g * phase;              // <e,n-1| H |g,n> = g phase sqrt(n)
  const Complex down = g * std::conj(phase); // <g,n+1| H |e,n> = g conj(phase) sqrt(n+1)
  const Complex minus_i(0.0, -1.0);
  auto e_idx = [](int n) { return static_cast<Index>(n); };
  auto g_idx = [n_trunc](int n) { return static_cast<Index>(n_trunc + n); };
  for (Index j = 0; j < d; ++j) {
    for (int m = 0; m < n_trunc; ++m) {
      Complex he(0.0), hg(0.0);
      if (m + 1 < n_trunc) he = up * std::sqrt(double(m + 1)) * rho(g_idx(m + 1), j);
      if (m >= 1) hg = down * std::sqrt(double(m)) * rho(e_idx(m - 1), j);
      out(e_idx(m), j) += minus_i * he;
      out(g_idx(m), j) += minus_i * hg;
    }
  }
  for (int n = 0; n < n_trunc; ++n) {
    for (Index i = 0; i < d; ++i) {
      Complex rg(0.0), re(0.0);
      if (n >= 1) rg = rho(i, e_idx(n - 1)) * up * std::sqrt(double(n));
      if (n + 1 < n_trunc) re = rho(i, g_idx(n + 1)) * down * std::sqrt(double(n + 1));
      out(i, g_idx(n)) -= minus_i * rg;
      out(i, e_idx(n)) -= minus_i * re;
    }
  }
}

double top_population(const ComplexMatrix& joint, int n_trunc) {
  return joint(n_trunc - 1, n_trunc - 1).real() +
         joint(2 * n_trunc - 1, 2 * n_trunc - 1).real();
}

struct StepFailure {
  std::string what;
};

}  // namespace

FockSpace::FockSpace(int truncation) : n_(truncation) {
  if (truncation < 2) throw DomainError("Fock truncation must be >= 2");
}

FockSpace FockSpace::for_coherent(int truncation, Complex alpha) {
  FockSpace s(truncation);
  s.require_fits(alpha);
  return s;
}

double FockSpace::tail_mass(Complex alpha) const {
  // sum_{n >= N} e^{-x} x^n / n!, summed directly to avoid cancellation
  const double x = std::norm(alpha);
  if (x == 0.0) return 0.0;
  double log_term = -x + n_ * std::log(x) - std::lgamma(n_ + 1.0);
  double term = std::exp(log_term);
  double sum = 0.0;
  for (int n = n_; n < n_ + 10000; ++n) {
    sum += term;
    term *= x / (n + 1.0);
    if (n > x && term < 1e-18 * std::max(sum, 1e-300)) break;
  }
  return sum;
}

void FockSpace::require_fits(Complex alpha) const {
  const double tail = tail_mass(alpha);
  if (!(tail < kTailMassTol))
    throw TruncationTooSmall(fmt::format(
        "coherent amplitude |alpha| = {:g} leaves tail mass {:.3g} beyond truncation N = {}",
        std::abs(alpha), tail, n_));
}

bool FullModelParams::dispersive_valid(double mean_photons) const {
  return std::abs(detuning()) >= 10.0 * std::sqrt(mean_photons + 1.0) * g;
}

void FullModelParams::validate() const {
  if (!(g > 0.0)) throw DomainError("coupling g must be > 0");
  if (detuning() == 0.0) throw DomainError("detuning omega0 - omega must be nonzero");
}

LadderOps ladder_ops(const FockSpace& space) {
  const int n = space.truncation();
  LadderOps ops;
  ops.a = ComplexMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) ops.a(k - 1, k) = std::sqrt(static_cast<double>(k));
  ops.a_dag = ops.a.adjoint();
  ops.number = ops.a_dag * ops.a;
  return ops;
}

ComplexVector coherent_vector(const FockSpace& space, Complex alpha) {
  space.require_fits(alpha);
  const int n = space.truncation();
  ComplexVector v(n);
  Complex c = std::exp(-std::norm(alpha) / 2.0);
  for (int k = 0; k < n; ++k) {
    v(k) = c;
    c *= alpha / std::sqrt(static_cast<double>(k + 1));
  }
  return v;
}

namespace {

SuperopActions superops_with(const ComplexMatrix& rho, const LadderOps& ops) {
  // a'a is diagonal, so R and L scale rows and columns
  const ComplexVector nd = ops.number.diagonal();
  return {ops.a * rho * ops.a_dag, nd.asDiagonal() * rho, rho * nd.asDiagonal()};
}

}  // namespace

SuperopActions apply_superops(const ComplexMatrix& rho, const FockSpace& space) {
  const int n = space.truncation();
  if (rho.rows() != n || rho.cols() != n)
    throw DimensionMismatch("apply_superops: operator must be N x N");
  return superops_with(rho, ladder_ops(space));
}

JointState product_state(const Matrix2c& atom, Complex alpha, const FockSpace& space) {
  const ComplexVector psi = coherent_vector(space, alpha);
  const ComplexMatrix field = psi * psi.adjoint();
  return {kron(ComplexMatrix(atom), field), 0.0};
}

Matrix2c atom_marginal(const ComplexMatrix& joint, const FockSpace& space) {
  require_joint_dims(joint, space);
  const ComplexMatrix r = partial_trace(joint, {2, space.truncation()}, {0});
  return Matrix2c(r);
}

ComplexMatrix field_block(const ComplexMatrix& joint, int a, int b, const FockSpace& space) {
  require_joint_dims(joint, space);
  const int n = space.truncation();
  return joint.block(a * n, b * n, n, n);
}

ComplexMatrix dispersive_generator(const ComplexMatrix& rho, double omega_eff, double decay,
                                   const FockSpace& space) {
  require_joint_dims(rho, space);
  const int n = space.truncation();
  return single_copy_lindblad(dispersive_energies(omega_eff, n), decay, n)(rho);
}

ComplexMatrix full_jc_generator(const ComplexMatrix& rho, const FullModelParams& params,
                                double decay, const FockSpace& space) {
  require_joint_dims(rho, space);
  const int n = space.truncation();
  RealVector e(2 * n);
  for (int k = 0; k < n; ++k) {
    e(k) = params.omega * k + params.omega0 / 2.0;
    e(n + k) = params.omega * k - params.omega0 / 2.0;
  }
  ComplexMatrix out = single_copy_lindblad(e, decay, n)(rho);
  add_jc_coupling(rho, out, params.g, Complex(1.0, 0.0), n);
  return out;
}

ComplexMatrix full_jc_interaction_generator(const ComplexMatrix& rho,
                                            const FullModelParams& params, double decay,
                                            double t, const FockSpace& space) {
  require_joint_dims(rho, space);
  const int n = space.truncation();
  ComplexMatrix out = single_copy_lindblad(RealVector::Zero(2 * n), decay, n)(rho);
  add_jc_coupling(rho, out, params.g, std::exp(Complex(0.0, params.detuning() * t)), n);
  return out;
}

ComplexMatrix dispersive_dressing(const FullModelParams& params, double t,
                                const FockSpace& space) {
  params.validate();
  const int n = space.truncation();
  const Complex c = params.g / params.detuning() * std::exp(Complex(0.0, params.detuning() * t));
  // a s+ |g,m> = sqrt(m) |e,m-1>
  ComplexMatrix s = ComplexMatrix::Zero(2 * n, 2 * n);
  for (int m = 1; m < n; ++m) {
    s(m - 1, n + m) = c * std::sqrt(static_cast<double>(m));
    s(n + m, m - 1) = -std::conj(c) * std::sqrt(static_cast<double>(m));
  }
  // e^{S} = e^{-iH} with H = iS Hermitian
  const auto e = eigh(ComplexMatrix(Complex(0.0, 1.0) * s));
  const ComplexVector phases = e.values.unaryExpr([](double x) { return std::exp(Complex(0.0, -x)); });
  return e.vectors * phases.asDiagonal() * e.vectors.adjoint();
}

Trajectory integrate(const JointState& initial, const Model& model, const FockSpace& space,
                     const IntegrationOptions& options) {
  require_joint_dims(initial.density, space);
  const int n = space.truncation();

  std::function<ComplexMatrix(double, const ComplexMatrix&)> rhs;
  if (const auto* m = std::get_if<DispersiveModel>(&model)) {
    rhs = [gen = single_copy_lindblad(dispersive_energies(m->omega_eff, n), m->decay, n)](
              double, const ComplexMatrix& r) { return gen(r); };
  } else {
    const auto& jc = std::get<FullJcModel>(model);
    jc.params.validate();
    rhs = [gen = single_copy_lindblad(RealVector::Zero(2 * n), jc.decay, n), p = jc.params,
           n](double t, const ComplexMatrix& r) {
      ComplexMatrix out = gen(r);
      add_jc_coupling(r, out, p.g, std::exp(Complex(0.0, p.detuning() * t)), n);
      return out;
    };
  }

  const double trace0 = initial.density.trace().real();
  auto attempt = [&](double dt) {
    const StepPlan plan = plan_steps(initial.time, options.t_end, dt, options.sample_interval);
    Trajectory traj;
    traj.diagnostics.dt_used = plan.dt;
    traj.diagnostics.steps = plan.steps;
    run_rk4(initial.density, initial.time, plan.dt, plan.steps, plan.every, rhs,
            [&](double t, const ComplexMatrix& y) {
              ComplexMatrix h = (y + y.adjoint()) / 2.0;
              if (!h.allFinite()) throw StepFailure{"non-finite state"};
              auto& diag = traj.diagnostics;
              diag.max_trace_drift =
                  std::max(diag.max_trace_drift, std::abs(h.trace().real() - trace0));
              if (diag.max_trace_drift > kTraceDriftTol)
                throw StepFailure{"trace drift " + std::to_string(diag.max_trace_drift)};
              if (options.check_positivity) {
                diag.min_eigenvalue = std::min(diag.min_eigenvalue, eig_hermitian(h).minCoeff());
                if (diag.min_eigenvalue < -kNegativityTol)
                  throw StepFailure{"negative eigenvalue " + std::to_string(diag.min_eigenvalue)};
              }
              diag.max_top_population = std::max(diag.max_top_population, top_population(h, n));
              if (diag.max_top_population > kTopPopulationTol)
                throw TruncationTooSmall("population of the top Fock level exceeds 1e-8 at t = " +
                                         std::to_string(t));
              traj.samples.push_back({std::move(h), t});
            });
    return traj;
  };

  try {
    return attempt(options.dt);
  } catch (const StepFailure& first) {
    if (!options.allow_halving) throw StepTooLarge("integrate: " + first.what);
    try {
      return attempt(options.dt / 2.0);
    } catch (const StepFailure& second) {
      throw StepTooLarge("integrate: " + second.what + " (after halving dt)");
    }
  }
}

Complex coherence_multiplier(const ComplexMatrix& joint, Complex xi_c, const FockSpace& space) {
  if (xi_c == Complex(0.0)) throw DomainError("coherence_multiplier needs xi_c != 0");
  return atom_marginal(joint, space)(0, 1) / xi_c;
}

BlockCheckReport block_evolution_check(const Matrix2c& atom0, const SystemParams& sys,
                                       const FockSpace& space, const IntegrationOptions& options) {
  sys.validate();
  const int n = space.truncation();
  const Trajectory joint =
      integrate(product_state(atom0, sys.alpha, space), DispersiveModel{sys.omega_eff, sys.decay},
                space, options);

  // each block evolves under its own generator, written with M, R, L
  const double w = sys.omega_eff;
  const double k = sys.decay;
  const Complex iw(0.0, w);
  const LadderOps ops = ladder_ops(space);
  auto l_ee = [&](double, const ComplexMatrix& r) {
    const auto s = superops_with(r, ops);
    return ComplexMatrix(-iw * (s.r - s.l) + k * (2.0 * s.m - s.r - s.l));
  };
  auto l_gg = [&](double, const ComplexMatrix& r) {
    const auto s = superops_with(r, ops);
    return ComplexMatrix(iw * (s.r - s.l) + k * (2.0 * s.m - s.r - s.l));
  };
  auto l_eg = [&](double, const ComplexMatrix& r) {
    const auto s = superops_with(r, ops);
    return ComplexMatrix(-iw * (s.r + s.l + r) + k * (2.0 * s.m - s.r - s.l));
  };

  const ComplexVector psi = coherent_vector(space, sys.alpha);
  const ComplexMatrix proj = psi * psi.adjoint();
  const double dt = joint.diagnostics.dt_used;
  const StepPlan plan = plan_steps(0.0, options.t_end, dt, options.sample_interval);

  std::vector<ComplexMatrix> ee, gg, eg;
  run_rk4(ComplexMatrix(atom0(0, 0) * proj), 0.0, plan.dt, plan.steps, plan.every, l_ee,
          [&](double, const ComplexMatrix& y) { ee.push_back(y); });
  run_rk4(ComplexMatrix(atom0(1, 1) * proj), 0.0, plan.dt, plan.steps, plan.every, l_gg,
          [&](double, const ComplexMatrix& y) { gg.push_back(y); });
  run_rk4(ComplexMatrix(atom0(0, 1) * proj), 0.0, plan.dt, plan.steps, plan.every, l_eg,
          [&](double, const ComplexMatrix& y) { eg.push_back(y); });

  BlockCheckReport rep;
  rep.samples = std::min(joint.samples.size(), ee.size());
  for (std::size_t s = 0; s < rep.samples; ++s) {
    const ComplexMatrix& rho = joint.samples[s].density;
    const double t = joint.samples[s].time;
    const ComplexMatrix bee = rho.block(0, 0, n, n);
    const ComplexMatrix bgg = rho.block(n, n, n, n);
    const ComplexMatrix beg = rho.block(0, n, n, n);
    const ComplexMatrix bge = rho.block(n, 0, n, n);

    rep.max_block_deviation = std::max({rep.max_block_deviation,
                                        (bee - ee[s]).cwiseAbs().maxCoeff(),
                                        (bgg - gg[s]).cwiseAbs().maxCoeff(),
                                        (beg - eg[s]).cwiseAbs().maxCoeff()});
    rep.max_eg_block_norm = std::max(rep.max_eg_block_norm, beg.cwiseAbs().maxCoeff());
    rep.max_hermiticity_defect =
        std::max(rep.max_hermiticity_defect, (bge - beg.adjoint()).cwiseAbs().maxCoeff());

    const auto [ap, am] = alpha_branches(sys, t);
    const ComplexVector vp = coherent_vector(space, ap);
    const ComplexVector vm = coherent_vector(space, am);
    const ComplexMatrix cf_ee = atom0(0, 0) * vp * vp.adjoint();
    const ComplexMatrix cf_gg = atom0(1, 1) * vm * vm.adjoint();
    const ComplexMatrix cf_eg = atom0(0, 1) * f_factor(sys, t) * vp * vm.adjoint();
    rep.max_closed_form_deviation =
        std::max({rep.max_closed_form_deviation, (bee - cf_ee).cwiseAbs().maxCoeff(),
                  (bgg - cf_gg).cwiseAbs().maxCoeff(), (beg - cf_eg).cwiseAbs().maxCoeff()});
  }
  return rep;
}

TwoCopyResult two_copy_oracle(const EwlParams& ewl, const SystemParams& sys,
                              const FockSpace& space, const TwoCopyOptions& options) {
  sys.validate();
  const int n = space.truncation();
  if (n > options.max_truncation)
    throw MemoryBudget("two-copy oracle limited to N <= " + std::to_string(options.max_truncation));
  space.require_fits(sys.alpha);

  const Index d = 2 * n;       // one copy
  const Index dd = d * d;      // joint
  const Matrix4c atoms = ewl_state(ewl).matrix();
  const ComplexVector psi = coherent_vector(space, sys.alpha);

  // index I = i1 * d + i2, i = atom * N + photon
  ComplexMatrix rho0(dd, dd);
  for (Index J = 0; J < dd; ++J) {
    const Index b1 = (J / d) / n, m1 = (J / d) % n, b2 = (J % d) / n, m2 = (J % d) % n;
    for (Index I = 0; I < dd; ++I) {
      const Index a1 = (I / d) / n, n1 = (I / d) % n, a2 = (I % d) / n, n2 = (I % d) % n;
      rho0(I, J) = atoms(2 * a1 + a2, 2 * b1 + b2) * psi(n1) * std::conj(psi(m1)) * psi(n2) *
                   std::conj(psi(m2));
    }
  }
  // the truncated coherent vectors miss the tail mass; restore unit trace
  rho0 /= rho0.trace().real();

  DiagonalLindblad gen;
  gen.decay = sys.decay;
  gen.energy.resize(dd);
  gen.number_sum.resize(dd);
  ShiftMode first, second;
  first.offset = d;
  second.offset = 1;
  first.sqrt_up.resize(dd);
  second.sqrt_up.resize(dd);
  const RealVector e1 = dispersive_energies(sys.omega_eff, n);
  for (Index I = 0; I < dd; ++I) {
    const Index i1 = I / d, i2 = I % d;
    const Index n1 = i1 % n, n2 = i2 % n;
    gen.energy(I) = e1(i1) + e1(i2);
    gen.number_sum(I) = static_cast<double>(n1 + n2);
    first.sqrt_up(I) = n1 + 1 < n ? std::sqrt(double(n1 + 1)) : 0.0;
    second.sqrt_up(I) = n2 + 1 < n ? std::sqrt(double(n2 + 1)) : 0.0;
  }
  gen.modes = {first, second};

  auto reduce = [&](const ComplexMatrix& y) {
    Matrix4c r = Matrix4c::Zero();
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int b1 = 0; b1 < 2; ++b1)
          for (int b2 = 0; b2 < 2; ++b2) {
            Complex s(0.0);
            for (int n1 = 0; n1 < n; ++n1)
              for (int n2 = 0; n2 < n; ++n2)
                s += y((a1 * n + n1) * d + a2 * n + n2, (b1 * n + n1) * d + b2 * n + n2);
            r(2 * a1 + a2, 2 * b1 + b2) = s;
          }
    return r;
  };

  const StepPlan plan = plan_steps(0.0, options.t_end, options.dt, options.sample_interval);
  TwoCopyResult result;
  result.diagnostics.dt_used = plan.dt;
  result.diagnostics.steps = plan.steps;
  const double trace0 = rho0.trace().real();
  run_rk4(std::move(rho0), 0.0, plan.dt, plan.steps, plan.every,
          [&](double, const ComplexMatrix& r) { return gen(r); },
          [&](double t, const ComplexMatrix& y) {
            auto& diag = result.diagnostics;
            diag.max_trace_drift = std::max(diag.max_trace_drift, std::abs(y.trace().real() - trace0));
            if (diag.max_trace_drift > kTraceDriftTol)
              throw StepTooLarge("two-copy oracle: trace drift " +
                                 std::to_string(diag.max_trace_drift));
            double top = 0.0;
            for (Index I = 0; I < dd; ++I) {
              const Index n1 = (I / d) % n, n2 = (I % d) % n;
              if (n1 == n - 1 || n2 == n - 1) top += y(I, I).real();
            }
            diag.max_top_population = std::max(diag.max_top_population, top);
            if (top > kTopPopulationTol)
              throw TruncationTooSmall("two-copy oracle: top Fock level populated");
            Matrix4c r = reduce(y);
            r = ((r + r.adjoint()) / 2.0).eval();
            diag.min_eigenvalue = std::min(diag.min_eigenvalue, eig_hermitian(r).minCoeff());
            if (diag.min_eigenvalue < -kNegativityTol)
              throw StepTooLarge("two-copy oracle: negative eigenvalue");
            result.samples.push_back({t, r});
          });
  return result;
}

}  // namespace qdisp
