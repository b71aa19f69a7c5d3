#pragma once

// Thin LAPACK wrappers over Eigen storage (column major), plus the runtime
// guard that pins the OpenBLAS kernel family before the library initializes.

#include <complex>
#ifndef LAPACK_COMPLEX_CPP
#define LAPACK_COMPLEX_CPP
#endif
#include <lapacke.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace granular {

using cplx = std::complex<double>;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

/// Some OpenBLAS builds stall inside the Hessenberg QR on recent x86 cores
/// with the auto-detected kernels. The kernel family is read once when the
/// library loads, so the process re-executes itself with a pinned value.
inline void pin_blas_kernels(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
  if (std::getenv("GRANULAR_NO_REEXEC") != nullptr) return;
  setenv("OPENBLAS_CORETYPE", "Haswell", 0);
  setenv("GRANULAR_NO_REEXEC", "1", 1);
  execv("/proc/self/exe", argv);
  // exec failed: continue with whatever the library picked
}

class LapackError : public std::runtime_error {
 public:
  LapackError(const std::string& routine, int info)
      : std::runtime_error(routine + " failed with info=" + std::to_string(info)), info_(info) {}
  int info() const { return info_; }

 private:
  int info_;
};

struct EigenDecomposition {
  CVector values;
  CMatrix vectors;  // columns; empty when not requested
};

inline EigenDecomposition eig(RMatrix a, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("eig: matrix must be square");
  RVector wr(n), wi(n);
  RMatrix vr(vectors ? n : 1, vectors ? n : 1);
  double dummy = 0.0;
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, a.data(), n, wr.data(),
                                        wi.data(), &dummy, 1, vr.data(), vectors ? n : 1);
  if (info != 0) throw LapackError("dgeev", info);
  EigenDecomposition r;
  r.values.resize(n);
  for (lapack_int i = 0; i < n; ++i) r.values[i] = cplx(wr[i], wi[i]);
  if (vectors) {
    r.vectors.resize(n, n);
    for (lapack_int i = 0; i < n; ++i) {
      if (wi[i] != 0.0 && i + 1 < n) {
        for (lapack_int k = 0; k < n; ++k) {
          r.vectors(k, i) = cplx(vr(k, i), vr(k, i + 1));
          r.vectors(k, i + 1) = cplx(vr(k, i), -vr(k, i + 1));
        }
        ++i;
      } else {
        for (lapack_int k = 0; k < n; ++k) r.vectors(k, i) = cplx(vr(k, i), 0.0);
      }
    }
  }
  return r;
}

inline EigenDecomposition eig(CMatrix a, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("eig: matrix must be square");
  EigenDecomposition r;
  r.values.resize(n);
  CMatrix vr(vectors ? n : 1, vectors ? n : 1);
  lapack_complex_double dummy{};
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, reinterpret_cast<lapack_complex_double*>(a.data()),
                    n, reinterpret_cast<lapack_complex_double*>(r.values.data()), &dummy, 1,
                    reinterpret_cast<lapack_complex_double*>(vr.data()), vectors ? n : 1);
  if (info != 0) throw LapackError("zgeev", info);
  if (vectors) r.vectors = std::move(vr);
  return r;
}

/// Minimum-norm least squares for a full-rank tall system.
inline RVector least_squares(RMatrix a, RVector b) {
  const lapack_int m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  if (b.size() != m) throw std::invalid_argument("least_squares: size mismatch");
  RVector rhs(std::max(m, n));
  rhs.setZero();
  rhs.head(m) = b;
  const lapack_int info = LAPACKE_dgels(LAPACK_COL_MAJOR, 'N', m, n, 1, a.data(), m, rhs.data(), rhs.size());
  if (info != 0) throw LapackError("dgels", info);
  return rhs.head(n);
}

struct SvdResult {
  RVector singular;
  CMatrix u;   // left singular vectors, columns
  CMatrix vh;  // rows are conjugated right singular vectors
};

inline SvdResult svd(CMatrix a) {
  const lapack_int m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  SvdResult r;
  r.singular.resize(k);
  r.u.resize(m, m);
  r.vh.resize(n, n);
  const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'A', m, n, reinterpret_cast<lapack_complex_double*>(a.data()),
                                         m, r.singular.data(), reinterpret_cast<lapack_complex_double*>(r.u.data()), m,
                                         reinterpret_cast<lapack_complex_double*>(r.vh.data()), n);
  if (info != 0) throw LapackError("zgesdd", info);
  return r;
}

struct RealSvd {
  RVector singular;
  RMatrix u;
  RMatrix vt;  // rows are right singular vectors
};

inline RealSvd svd(RMatrix a) {
  const lapack_int m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  RealSvd r;
  r.singular.resize(std::min(m, n));
  r.u.resize(m, m);
  r.vt.resize(n, n);
  const lapack_int info =
      LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'A', m, n, a.data(), m, r.singular.data(), r.u.data(), m, r.vt.data(), n);
  if (info != 0) throw LapackError("dgesdd", info);
  return r;
}

}  // namespace granular
