#ifndef QDISP_LINDBLAD_HPP
#define QDISP_LINDBLAD_HPP

// Brute-force reference dynamics on a truncated Fock space. One atom-cavity
// copy is stored as a (2N)x(2N) density matrix ordered atom (x) field with the
// atom basis {|e>, |g>}; the two-copy system is the tensor product of two such
// copies.

#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

#include "qdisp/analytic.hpp"
#include "qdisp/linalg.hpp"

namespace qdisp {

inline constexpr double kTailMassTol = 1e-10;

/// Fock states |0> .. |N-1>.
class FockSpace {
 public:
  explicit FockSpace(int truncation);

  /// Same as the constructor but also requires |alpha> to fit (tail mass below 1e-10).
  static FockSpace for_coherent(int truncation, Complex alpha);

  int truncation() const { return n_; }
  /// Probability weight of |alpha> on levels n >= N.
  double tail_mass(Complex alpha) const;
  void require_fits(Complex alpha) const;

 private:
  int n_;
};

struct LadderOps {
  ComplexMatrix a;
  ComplexMatrix a_dag;
  ComplexMatrix number;
};

LadderOps ladder_ops(const FockSpace& space);
ComplexVector coherent_vector(const FockSpace& space, Complex alpha);

/// M rho = a rho a^dagger, R rho = a^dagger a rho, L rho = rho a^dagger a.
struct SuperopActions {
  ComplexMatrix m;
  ComplexMatrix r;
  ComplexMatrix l;
};
SuperopActions apply_superops(const ComplexMatrix& rho, const FockSpace& space);

/// Parameters of the resonant-form Hamiltonian
/// H = w a'a + (w0/2) sz + g (a' s- + a s+).
struct FullModelParams {
  double omega = 0.0;   ///< field frequency
  double omega0 = 0.0;  ///< atomic transition frequency
  double g = 0.0;       ///< coupling

  double detuning() const { return omega0 - omega; }
  double omega_eff() const { return g * g / detuning(); }
  /// |detuning| >= 10 sqrt(nbar + 1) g.
  bool dispersive_valid(double mean_photons) const;
  void validate() const;
};

struct JointState {
  ComplexMatrix density;
  double time = 0.0;
};

/// rho_atom (x) |alpha><alpha| for one copy.
JointState product_state(const Matrix2c& atom, Complex alpha, const FockSpace& space);
Matrix2c atom_marginal(const ComplexMatrix& joint, const FockSpace& space);
/// <a| rho |b> on the field space, a, b in {0 = e, 1 = g}.
ComplexMatrix field_block(const ComplexMatrix& joint, int a, int b, const FockSpace& space);

/// d rho / dt = -i[V, rho] + k(2 a rho a' - a'a rho - rho a'a),
/// V = Omega[(a'a + 1)|e><e| - a'a |g><g|].
ComplexMatrix dispersive_generator(const ComplexMatrix& rho, double omega_eff, double decay,
                                   const FockSpace& space);

/// Same dissipator with the full Hamiltonian, in the lab frame.
ComplexMatrix full_jc_generator(const ComplexMatrix& rho, const FullModelParams& params,
                                double decay, const FockSpace& space);

/// Full model in the interaction picture of w a'a + (w0/2) sz; explicitly time
/// dependent through e^{+-i detuning t}.
ComplexMatrix full_jc_interaction_generator(const ComplexMatrix& rho,
                                            const FullModelParams& params, double decay,
                                            double t, const FockSpace& space);

/// e^{S(t)} with S(t) = (g / detuning)(e^{i detuning t} a s+ - h.c.), the
/// interaction-picture frame change that removes the coupling to first order in
/// g / detuning. Dispersive-model states correspond to e^{S} rho e^{-S}.
ComplexMatrix dispersive_dressing(const FullModelParams& params, double t, const FockSpace& space);

struct DispersiveModel {
  double omega_eff = 1.0;
  double decay = 0.0;
};
struct FullJcModel {
  FullModelParams params;
  double decay = 0.0;
};
using Model = std::variant<DispersiveModel, FullJcModel>;

struct IntegrationOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  double sample_interval = 0.0;  ///< 0 samples every step
  bool check_positivity = true;
  bool allow_halving = true;     ///< retry once at dt/2 before StepTooLarge
};

struct IntegrationDiagnostics {
  double dt_used = 0.0;
  double max_trace_drift = 0.0;
  double min_eigenvalue = 1.0;
  double max_top_population = 0.0;
  std::size_t steps = 0;
};

struct Trajectory {
  std::vector<JointState> samples;
  IntegrationDiagnostics diagnostics;
};

inline constexpr double kTraceDriftTol = 1e-9;
inline constexpr double kNegativityTol = 1e-6;
inline constexpr double kTopPopulationTol = 1e-8;

/// Classical fourth-order Runge-Kutta with a fixed step.
Trajectory integrate(const JointState& initial, const Model& model, const FockSpace& space,
                     const IntegrationOptions& options);

/// rho_eg(t) / xi_c after tracing out the field.
Complex coherence_multiplier(const ComplexMatrix& joint, Complex xi_c, const FockSpace& space);

struct BlockCheckReport {
  double max_block_deviation = 0.0;        ///< independent block evolution vs joint run
  double max_closed_form_deviation = 0.0;  ///< coherent-state closed forms vs joint run
  double max_eg_block_norm = 0.0;
  double max_hermiticity_defect = 0.0;     ///< ||rho_ge - rho_eg^dagger||
  std::size_t samples = 0;
};

/// Evolves rho_ee, rho_gg, rho_eg separately under their own generators and
/// compares them with the blocks of the joint integration and with the
/// coherent-state closed forms.
BlockCheckReport block_evolution_check(const Matrix2c& atom0, const SystemParams& sys,
                                       const FockSpace& space, const IntegrationOptions& options);

struct TwoCopyOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  double sample_interval = 0.1;
  int max_truncation = 24;
};

struct TwoAtomSample {
  double t = 0.0;
  Matrix4c rho;
};

struct TwoCopyResult {
  std::vector<TwoAtomSample> samples;
  IntegrationDiagnostics diagnostics;
};

/// Two independent atom-cavity copies evolved jointly; returns the two-atom
/// reduced state at each sample time.
TwoCopyResult two_copy_oracle(const EwlParams& ewl, const SystemParams& sys,
                              const FockSpace& space, const TwoCopyOptions& options);

}  // namespace qdisp

#endif  // QDISP_LINDBLAD_HPP
