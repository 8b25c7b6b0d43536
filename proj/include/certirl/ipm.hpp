#pragma once

#include <Eigen/Dense>
#include <vector>

namespace certirl {

// Row layout of the conic standard form
//   min q'x   s.t.  G x + s = h,   s in K
// where K = {0}^zero x R+^nonneg x PSD(d_1) x ... x PSD(d_k). The leading
// `zero` rows are equalities (slack pinned to 0, dual free); PSD blocks are
// packed in svec order (lower triangle, column major, off-diagonal entries
// scaled by sqrt(2) so the packed inner product equals the Frobenius one).
struct ConeDims {
  int zero = 0;
  int nonneg = 0;
  std::vector<int> psd;

  int svec_total() const {
    int t = 0;
    for (int d : psd) t += d * (d + 1) / 2;
    return t;
  }
  int rows() const { return zero + nonneg + svec_total(); }
  int degree() const {  // barrier parameter nu
    int t = nonneg;
    for (int d : psd) t += d;
    return t;
  }
};

struct IpmOptions {
  double tol = 1e-8;
  int max_iter = 120;
  double reg = 1e-12;  // static Schur-complement regularization (relative)
};

enum class IpmStatus { optimal, max_iter, numerical_failure };

struct IpmSolution {
  IpmStatus status = IpmStatus::numerical_failure;
  Eigen::VectorXd x, s, z;
  double pobj = 0.0, dobj = 0.0, gap = 0.0, pres = 0.0, dres = 0.0;
  int iters = 0;
};

// Dense Nesterov-Todd primal-dual predictor-corrector. Problem sizes here are
// a few thousand variables at most, so dense linear algebra with one Cholesky
// of the Schur complement per iteration is the simplest reliable choice.
IpmSolution ipm_solve(const Eigen::VectorXd& q, const Eigen::MatrixXd& G,
                      const Eigen::VectorXd& h, const ConeDims& cone,
                      const IpmOptions& opt = IpmOptions{});

inline int svec_len(int d) { return d * (d + 1) / 2; }
void svec_to_mat(const double* sv, Eigen::MatrixXd& M);  // M must be sized d x d
void mat_to_svec(const Eigen::MatrixXd& M, double* sv);

}  // namespace certirl
