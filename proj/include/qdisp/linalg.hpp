#ifndef QDISP_LINALG_HPP
#define QDISP_LINALG_HPP

// Small dense complex linear algebra on top of Eigen: Kronecker products,
// partial-trace helpers, and a cyclic Jacobi eigensolver for Hermitian
// matrices (all use sites are at most a few hundred rows).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qdisp/errors.hpp"

namespace qdisp {

template <typename Real>
using ComplexMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using ComplexVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RealVectorT = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using ComplexMatrix = ComplexMatrixT<double>;
using ComplexVector = ComplexVectorT<double>;
using RealVector = RealVectorT<double>;
using Complex = std::complex<double>;

inline constexpr double kHermitianTol = 1e-10;

template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar,
                                                      typename DerivedB::Scalar>::ReturnType;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                             a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename Derived>
auto hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Eigen-decomposition of a Hermitian matrix; columns of `vectors` pair with
// `values`, which are sorted in descending order.
template <typename Real>
struct HermitianEigen {
  RealVectorT<Real> values;
  ComplexMatrixT<Real> vectors;
};

template <typename Real>
struct JacobiSettings {
  int max_sweeps = 100;
  Real off_tolerance = Real(1e-13);
};

// Cyclic Jacobi. Each rotation removes one off-diagonal element after a phase
// change that makes it real; converges quadratically once the off-diagonal
// mass is small.
template <typename Derived>
HermitianEigen<typename Eigen::NumTraits<typename Derived::Scalar>::Real> eigh(
    const Eigen::MatrixBase<Derived>& m,
    JacobiSettings<typename Eigen::NumTraits<typename Derived::Scalar>::Real> settings = {}) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  using C = std::complex<Real>;
  if (m.rows() != m.cols()) throw DimensionMismatch("eigh: matrix is not square");
  if (!m.allFinite()) throw NotHermitian("eigh: non-finite entries");
  if (hermiticity_defect(m) > Real(kHermitianTol))
    throw NotHermitian("eigh: max |m - m^dagger| exceeds tolerance");

  const Eigen::Index n = m.rows();
  ComplexMatrixT<Real> a = (m.template cast<C>() + m.template cast<C>().adjoint()) / Real(2);
  ComplexMatrixT<Real> v = ComplexMatrixT<Real>::Identity(n, n);

  auto off_norm = [&] {
    Real s = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += std::norm(a(i, j));
    return std::sqrt(Real(2) * s);
  };
  const Real scale = std::max(Real(1), a.norm());

  int sweep = 0;
  for (; sweep < settings.max_sweeps; ++sweep) {
    if (off_norm() <= settings.off_tolerance * scale) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const C apq = a(p, q);
        const Real mag = std::abs(apq);
        if (mag == Real(0)) continue;
        const C phase = apq / mag;
        const Real app = a(p, p).real();
        const Real aqq = a(q, q).real();
        const Real theta = (aqq - app) / (Real(2) * mag);
        Real t = Real(1) / (std::abs(theta) + std::sqrt(theta * theta + Real(1)));
        if (theta < 0) t = -t;
        const Real c = Real(1) / std::sqrt(t * t + Real(1));
        const Real s = t * c;
        const C sp = s * std::conj(phase);  // s e^{-i phi}
        const C cp = c * std::conj(phase);  // c e^{-i phi}

        // columns: A <- A U
        for (Eigen::Index r = 0; r < n; ++r) {
          const C arp = a(r, p);
          const C arq = a(r, q);
          a(r, p) = c * arp - sp * arq;
          a(r, q) = s * arp + cp * arq;
          const C vrp = v(r, p);
          const C vrq = v(r, q);
          v(r, p) = c * vrp - sp * vrq;
          v(r, q) = s * vrp + cp * vrq;
        }
        // rows: A <- U^dagger A
        for (Eigen::Index r = 0; r < n; ++r) {
          const C apr = a(p, r);
          const C aqr = a(q, r);
          a(p, r) = c * apr - std::conj(sp) * aqr;
          a(q, r) = s * apr + std::conj(cp) * aqr;
        }
        a(p, q) = C(0);
        a(q, p) = C(0);
        a(p, p) = C(a(p, p).real(), 0);
        a(q, q) = C(a(q, q).real(), 0);
      }
    }
  }
  if (sweep == settings.max_sweeps && off_norm() > settings.off_tolerance * scale)
    throw NoConvergence("eigh: Jacobi sweep cap reached");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return a(x, x).real() > a(y, y).real();
  });
  HermitianEigen<Real> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src).real();
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

template <typename Derived>
auto eig_hermitian(const Eigen::MatrixBase<Derived>& m) {
  return eigh(m).values;
}

// Applies a real function to the spectrum of a Hermitian matrix.
template <typename Real, typename Fn>
ComplexMatrixT<Real> apply_spectral(const HermitianEigen<Real>& e, Fn&& fn) {
  RealVectorT<Real> mapped = e.values.unaryExpr(std::forward<Fn>(fn));
  return e.vectors * mapped.template cast<std::complex<Real>>().asDiagonal() *
         e.vectors.adjoint();
}

// Principal square root of a positive semidefinite Hermitian matrix.
// Eigenvalues in [-1e-10, 0) are treated as rounding noise and clipped.
template <typename Derived>
auto sqrt_psd(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const auto e = eigh(m);
  if (e.values.size() > 0 && e.values.minCoeff() < Real(-1e-10))
    throw NotPsd("sqrt_psd: eigenvalue below -1e-10");
  return apply_spectral<Real>(e, [](Real x) { return x > 0 ? std::sqrt(x) : Real(0); });
}

// Partial trace over a tensor product of subsystems with dimensions `dims`
// (first factor most significant). `keep` lists the subsystems retained, in
// increasing order.
template <typename Derived>
auto partial_trace(const Eigen::MatrixBase<Derived>& rho, const std::vector<int>& dims,
                   std::vector<int> keep) {
  using Scalar = typename Derived::Scalar;
  using Out = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int nsys = static_cast<int>(dims.size());
  Eigen::Index total = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionMismatch("partial_trace: non-positive subsystem dimension");
    total *= d;
  }
  if (rho.rows() != total || rho.cols() != total)
    throw DimensionMismatch("partial_trace: product of dims does not match matrix size");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<bool> kept(static_cast<std::size_t>(nsys), false);
  for (int k : keep) {
    if (k < 0 || k >= nsys) throw DimensionMismatch("partial_trace: keep index out of range");
    kept[static_cast<std::size_t>(k)] = true;
  }

  // strides of each subsystem in the full and the reduced index
  std::vector<Eigen::Index> stride(static_cast<std::size_t>(nsys));
  std::vector<Eigen::Index> kstride(static_cast<std::size_t>(nsys), 0);
  Eigen::Index s = 1, ks = 1;
  for (int i = nsys - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    stride[ui] = s;
    s *= dims[ui];
    if (kept[ui]) {
      kstride[ui] = ks;
      ks *= dims[ui];
    }
  }
  const Eigen::Index kdim = ks;
  Out out = Out::Zero(kdim, kdim);

  auto reduced_index = [&](Eigen::Index full, Eigen::Index& traced_part) {
    Eigen::Index r = 0;
    traced_part = 0;
    for (int i = 0; i < nsys; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const Eigen::Index digit = (full / stride[ui]) % dims[ui];
      if (kept[ui])
        r += digit * kstride[ui];
      else
        traced_part += digit * stride[ui];
    }
    return r;
  };
  std::vector<Eigen::Index> red(static_cast<std::size_t>(total));
  std::vector<Eigen::Index> traced(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i)
    red[static_cast<std::size_t>(i)] = reduced_index(i, traced[static_cast<std::size_t>(i)]);

  for (Eigen::Index i = 0; i < total; ++i)
    for (Eigen::Index j = 0; j < total; ++j)
      if (traced[static_cast<std::size_t>(i)] == traced[static_cast<std::size_t>(j)])
        out(red[static_cast<std::size_t>(i)], red[static_cast<std::size_t>(j)]) += rho(i, j);
  return out;
}

inline ComplexMatrix pauli_y() {
  ComplexMatrix y(2, 2);
  y << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return y;
}

}  // namespace qdisp

#endif  // QDISP_LINALG_HPP
