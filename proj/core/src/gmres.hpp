#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace polyflow::detail {

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  ///< final relative residual
};

/// Restarted GMRES with right preconditioning: solves A x = b starting from x.
/// `apply` computes A v, `precond` approximates A^{-1} v.
inline GmresResult gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& precond,
                         const Eigen::VectorXd& b, Eigen::VectorXd& x, double rtol, int restart,
                         int max_iter) {
  GmresResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const int n = static_cast<int>(b.size());
  while (res.iterations < max_iter) {
    Eigen::VectorXd r = b - apply(x);
    double beta = r.norm();
    res.residual = beta / bnorm;
    if (res.residual <= rtol) {
      res.converged = true;
      return res;
    }
    const int m = std::min(restart, n);
    Eigen::MatrixXd v(n, m + 1), z(n, m), h = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd gvec = Eigen::VectorXd::Zero(m + 1);
    v.col(0) = r / beta;
    gvec[0] = beta;
    int k = 0;
    for (; k < m && res.iterations < max_iter; ++k, ++res.iterations) {
      z.col(k) = precond(v.col(k));
      Eigen::VectorXd w = apply(z.col(k));
      for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt
        h(i, k) = w.dot(v.col(i));
        w -= h(i, k) * v.col(i);
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 0.0) v.col(k + 1) = w / h(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : h(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      gvec[k + 1] = -sn[k] * gvec[k];
      gvec[k] = cs[k] * gvec[k];
      res.residual = std::abs(gvec[k + 1]) / bnorm;
      if (res.residual <= rtol) {
        ++k;
        ++res.iterations;
        break;
      }
    }
    const Eigen::VectorXd y =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(gvec.head(k));
    x += z.leftCols(k) * y;
    if (res.residual <= rtol) {
      // confirm with the true residual
      res.residual = (b - apply(x)).norm() / bnorm;
      if (res.residual <= 10 * rtol) {
        res.converged = true;
        return res;
      }
    }
  }
  return res;
}

}  // namespace polyflow::detail
