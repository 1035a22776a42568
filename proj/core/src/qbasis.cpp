#include "polyflow/qbasis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "polyflow/error.hpp"

namespace polyflow {

namespace {

std::vector<QBasis::Index> graded_indices(int dim, int n_q) {
  std::vector<QBasis::Index> out;
  for (int deg = 0; deg <= n_q; ++deg) {
    if (dim == 1) {
      out.push_back({deg, 0, 0});
    } else if (dim == 2) {
      for (int a = deg; a >= 0; --a) out.push_back({a, deg - a, 0});
    } else {
      for (int a = deg; a >= 0; --a)
        for (int b = deg - a; b >= 0; --b) out.push_back({a, b, deg - a - b});
    }
  }
  return out;
}

}  // namespace

int QBasis::total_degree(int k) const {
  const Index& a = indices_[k];
  return a[0] + a[1] + a[2];
}

int QBasis::find(const Index& alpha) const {
  for (int k = 0; k < size(); ++k)
    if (indices_[k] == alpha) return k;
  return -1;
}

Eigen::MatrixXd QBasis::lift(const std::array<const Eigen::MatrixXd*, 3>& per_axis) const {
  const int n = size();
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double v = 1.0;
      for (int i = 0; i < dim_q_ && v != 0.0; ++i) {
        const int a = indices_[r][i];
        const int b = indices_[c][i];
        v *= per_axis[i] ? (*per_axis[i])(a, b) : (a == b ? 1.0 : 0.0);
      }
      m(r, c) = v;
    }
  }
  return m;
}

QRule QBasis::tensor_rule(const Rule1D& r) const {
  const int n1 = static_cast<int>(r.size());
  int total = 1;
  for (int i = 0; i < dim_q_; ++i) total *= n1;
  // 1-D basis values at the rule nodes
  Eigen::MatrixXd v1(n1, n_q_ + 1);
  std::vector<double> p(n_q_ + 1), dp(n_q_ + 1), d2p(n_q_ + 1);
  for (int k = 0; k < n1; ++k) {
    eval_orthonormal(rec_, n_q_, r.nodes[k], p, dp, d2p);
    for (int n = 0; n <= n_q_; ++n) v1(k, n) = p[n];
  }
  QRule out;
  out.points.resize(total, dim_q_);
  out.weights.resize(total);
  out.values.resize(total, size());
  for (int flat = 0; flat < total; ++flat) {
    int rest = flat;
    int node[3] = {0, 0, 0};
    double w = 1.0;
    for (int i = 0; i < dim_q_; ++i) {
      node[i] = rest % n1;
      rest /= n1;
      out.points(flat, i) = r.nodes[node[i]];
      w *= r.weights[node[i]];
    }
    out.weights[flat] = w;
    for (int b = 0; b < size(); ++b) {
      double v = 1.0;
      for (int i = 0; i < dim_q_; ++i) v *= v1(node[i], indices_[b][i]);
      out.values(flat, b) = v;
    }
  }
  return out;
}

QBasis build_basis(const Potential& p, int n_q) {
  if (n_q < 2) throw ParameterError("basis: N_q must be at least 2");
  if (!p.separable() && p.dim_q() > 1)
    throw UnsupportedError("basis: non-separable potentials need dim_q = 1");
  QBasis b;
  b.potential_ = p;
  b.dim_q_ = p.dim_q();
  b.n_q_ = n_q;
  b.indices_ = graded_indices(b.dim_q_, n_q);

  const bool ball = p.support().bounded;
  const int n_ref = ball ? 2400 : 400 + 24 * n_q;
  b.ref_ = p.reference_rule(n_ref, 2 * n_q + 10);
  b.rec_ = stieltjes(b.ref_, n_q + 8);

  const int n = n_q + 1;
  const int k_ref = static_cast<int>(b.ref_.size());
  b.ref_values_.resize(k_ref, n);
  Eigen::MatrixXd dvals(k_ref, n), d2vals(k_ref, n);
  std::vector<double> pv(n), dp(n), d2p(n);
  for (int k = 0; k < k_ref; ++k) {
    eval_orthonormal(b.rec_, n_q, b.ref_.nodes[k], pv, dp, d2p);
    for (int m = 0; m < n; ++m) {
      b.ref_values_(k, m) = pv[m];
      dvals(k, m) = dp[m];
      d2vals(k, m) = d2p[m];
    }
  }
  const Eigen::Map<const Eigen::VectorXd> w(b.ref_.weights.data(), k_ref);
  const Eigen::MatrixXd& v = b.ref_values_;

  const Eigen::MatrixXd gram = v.transpose() * w.asDiagonal() * v;
  b.gram_error_ = (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(b.gram_error_ <= 1e-10)) {
    std::ostringstream os;
    os << "basis: orthonormality lost at N_q = " << n_q << " (Gram deviation " << b.gram_error_
       << "); use a lower N_q or a finer reference quadrature";
    throw ParameterError(os.str());
  }

  Eigen::VectorXd dphi(k_ref), x(k_ref);
  for (int k = 0; k < k_ref; ++k) {
    x[k] = b.ref_.nodes[k];
    dphi[k] = p.reduced_d1(x[k]);
  }
  const Eigen::MatrixXd d1 = v.transpose() * w.asDiagonal() * dvals;
  const Eigen::MatrixXd q1 = v.transpose() * (w.cwiseProduct(x)).asDiagonal() * v;
  const Eigen::MatrixXd a1 = v.transpose() * (w.cwiseProduct(dphi)).asDiagonal() * v;
  const Eigen::MatrixXd s1 =
      v.transpose() * (w.cwiseProduct(x).cwiseProduct(x)).asDiagonal() * v;
  const Eigen::MatrixXd r1 =
      v.transpose() * (w.cwiseProduct(x).cwiseProduct(dphi)).asDiagonal() * v;
  // generator form -p'' + phi' p', tested against p_m
  Eigen::MatrixXd gen = -d2vals;
  for (int k = 0; k < k_ref; ++k) gen.row(k) += dphi[k] * dvals.row(k);
  Eigen::MatrixXd l1 = v.transpose() * w.asDiagonal() * gen;
  l1 = 0.5 * (l1 + l1.transpose()).eval();
  const Eigen::MatrixXd q1s = 0.5 * (q1 + q1.transpose());
  const Eigen::MatrixXd a1s = 0.5 * (a1 + a1.transpose());
  const Eigen::MatrixXd s1s = 0.5 * (s1 + s1.transpose());
  const Eigen::MatrixXd r1s = 0.5 * (r1 + r1.transpose());

  const int d = b.dim_q_;
  const int nb = b.size();
  b.l_ = Eigen::MatrixXd::Zero(nb, nb);
  b.w_ = Eigen::MatrixXd::Identity(nb, nb);
  for (int i = 0; i < d; ++i) {
    std::array<const Eigen::MatrixXd*, 3> axes{nullptr, nullptr, nullptr};
    axes[i] = &d1;
    b.d_.push_back(b.lift(axes));
    axes[i] = &q1s;
    b.q_.push_back(b.lift(axes));
    axes[i] = &a1s;
    b.a_.push_back(b.lift(axes));
    axes[i] = &s1s;
    b.s_.push_back(b.lift(axes));
    b.w_ += b.s_.back();
    axes[i] = &l1;
    b.l_ += b.lift(axes);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      std::array<const Eigen::MatrixXd*, 3> axes{nullptr, nullptr, nullptr};
      if (i == j) {
        axes[i] = &r1s;
      } else {
        axes[i] = &a1s;
        axes[j] = &q1s;
      }
      b.b_.push_back(b.lift(axes));
      b.c_.push_back(b.b_.back().col(0));
      b.t_.push_back(b.q_[j] * b.d_[i]);
    }
  }

  b.recon_ = b.tensor_rule(golub_welsch(b.rec_, n_q + 2));
  if (d == 1) {
    b.diag_.points = Eigen::Map<const Eigen::VectorXd>(b.ref_.nodes.data(), k_ref);
    b.diag_.weights = w;
    b.diag_.values = v;
  } else {
    b.diag_ = b.tensor_rule(golub_welsch(b.rec_, n_q + 4));
  }
  return b;
}

double weighted_inner(const QBasis& b, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  if (f.size() != b.size() || g.size() != b.size())
    throw ParameterError("weighted_inner: coefficient vector size does not match the basis");
  return f.dot(g);
}

Eigen::VectorXd apply_L(const QBasis& b, const Eigen::VectorXd& g) {
  if (g.size() != b.size())
    throw ParameterError("apply_L: coefficient vector size does not match the basis");
  return b.L() * g;
}

std::vector<double> lowest_eigenvalues(const QBasis& b, int count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.L(), Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (int k = 0; k < std::min<int>(count, b.size()); ++k) out.push_back(es.eigenvalues()[k]);
  return out;
}

double poincare_constant(const QBasis& b) {
  const int n = b.size() - 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.L().bottomRightCorner(n, n),
                                                    Eigen::EigenvaluesOnly);
  const double lambda1 = es.eigenvalues()[0];
  if (!(lambda1 >= 1e-12)) {
    std::ostringstream os;
    os << "poincare: degenerate spectrum, smallest nonzero-mode eigenvalue " << lambda1;
    throw ConsistencyError(os.str());
  }
  return 1.0 / lambda1;
}

std::string PoincareRatios::to_text() const {
  std::ostringstream os;
  os << "trials " << trials << ", evaluated " << evaluated;
  if (zero_input) os << " (zero inputs skipped)";
  os << "\n";
  for (int k = 0; k < kCount; ++k)
    os << "  " << std::left << std::setw(34) << kNames[k] << std::setprecision(8) << max_ratio[k]
       << "\n";
  return os.str();
}

PoincareRatios poincare_ratios(const QBasis& b, const std::vector<Eigen::VectorXd>& samples) {
  const int d = b.dim_q();
  const Potential& p = b.potential();
  const Eigen::MatrixXd grad2 = b.axis_multiplier([&](double x) {
    const double g = p.reduced_d1(x);
    return g * g;
  });
  const Eigen::MatrixXd x2grad2 = b.axis_multiplier([&](double x) {
    const double g = p.reduced_d1(x);
    return x * x * g * g;
  });
  const Eigen::MatrixXd x2 = b.axis_multiplier([](double x) { return x * x; });
  const Eigen::MatrixXd x4 = b.axis_multiplier([](double x) { return x * x * x * x; });

  const int nb = b.size();
  Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd g2 = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd g3 = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd g4 = Eigen::MatrixXd::Zero(nb, nb);
  for (int i = 0; i < d; ++i) {
    std::array<const Eigen::MatrixXd*, 3> axes{nullptr, nullptr, nullptr};
    axes[i] = &grad2;
    g1 += b.lift(axes);
    g2 += b.S(i);
    for (int j = 0; j < d; ++j) {
      std::array<const Eigen::MatrixXd*, 3> ax3{nullptr, nullptr, nullptr};
      std::array<const Eigen::MatrixXd*, 3> ax4{nullptr, nullptr, nullptr};
      if (i == j) {
        ax3[i] = &x2grad2;
        ax4[i] = &x4;
      } else {
        ax3[i] = &x2;
        ax3[j] = &grad2;
        ax4[i] = &x2;
        ax4[j] = &x2;
      }
      g3 += b.lift(ax3);
      g4 += b.lift(ax4);
    }
  }

  PoincareRatios out;
  out.trials = static_cast<int>(samples.size());
  for (Eigen::VectorXd g : samples) {
    g[0] = 0.0;
    const double grad = g.dot(b.L() * g);
    double wgrad = 0.0;
    for (int i = 0; i < d; ++i) {
      const Eigen::VectorXd dg = b.D(i) * g;
      wgrad += dg.dot(b.W() * dg);
    }
    if (!(grad > 0.0) || !(wgrad > 0.0)) {
      out.zero_input = true;
      continue;
    }
    ++out.evaluated;
    const double r[4] = {std::sqrt(g.dot(g1 * g) / grad), std::sqrt(g.dot(g2 * g) / grad),
                         std::sqrt(g.dot(g3 * g) / wgrad), std::sqrt(g.dot(g4 * g) / wgrad)};
    for (int k = 0; k < 4; ++k) out.max_ratio[k] = std::max(out.max_ratio[k], r[k]);
  }
  return out;
}

PoincareRatios weighted_poincare_check(const QBasis& b, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> samples;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd g(b.size());
    for (int k = 0; k < b.size(); ++k) {
      const double deg = b.total_degree(k);
      g[k] = normal(rng) / ((1.0 + deg) * (1.0 + deg));
    }
    samples.push_back(g);
  }
  return poincare_ratios(b, samples);
}

}  // namespace polyflow
