#include "polyflow/xgrid.hpp"

#include <fftw3.h>

#include <mutex>

#include "polyflow/error.hpp"

namespace polyflow {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct TorusGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

std::vector<MultiIndex> multi_indices(int dim, int order) {
  std::vector<MultiIndex> out;
  if (dim == 1) {
    out.push_back({order, 0, 0});
  } else if (dim == 2) {
    for (int a = order; a >= 0; --a) out.push_back({a, order - a, 0});
  } else {
    for (int a = order; a >= 0; --a)
      for (int b = order - a; b >= 0; --b) out.push_back({a, b, order - a - b});
  }
  return out;
}

TorusGrid::TorusGrid(int dim_x, int n, double length) : dim_(dim_x), n_(n), length_(length) {
  if (dim_x < 1 || dim_x > 3) throw ParameterError("grid dimension must be 1, 2 or 3");
  if (n < 4 || n % 2 != 0) throw ParameterError("points per dimension must be even and >= 4");
  if (!(length > 0.0)) throw ParameterError("domain length must be positive");
  const int half = n / 2 + 1;
  size_ = 1;
  for (int i = 0; i < dim_; ++i) size_ *= n;
  spec_size_ = size_ / n * half;

  const double k0 = 2.0 * std::numbers::pi / length;
  const int cut = dealias_cutoff();
  for (int a = 0; a < 3; ++a) {
    k_[a].assign(spec_size_, 0.0);
    nyq_[a].assign(spec_size_, 0);
  }
  mask_.assign(spec_size_, 1);
  mult_.assign(spec_size_, 1.0);
  for (int s = 0; s < spec_size_; ++s) {
    int rest = s;
    std::array<int, 3> idx{0, 0, 0};
    idx[dim_ - 1] = rest % half;
    rest /= half;
    for (int a = dim_ - 2; a >= 0; --a) {
      idx[a] = rest % n;
      rest /= n;
    }
    for (int a = 0; a < dim_; ++a) {
      const int j = (a == dim_ - 1) ? idx[a] : (idx[a] <= n / 2 ? idx[a] : idx[a] - n);
      k_[a][s] = k0 * j;
      nyq_[a][s] = (idx[a] == n / 2) ? 1 : 0;
      if (std::abs(j) > cut) mask_[s] = 0;
    }
    const int last = idx[dim_ - 1];
    mult_[s] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
  }
  for (int order = 0; order <= 3; ++order) {
    sob_[order].assign(spec_size_, 0.0);
    for (int o = 0; o <= order; ++o)
      for (const MultiIndex& alpha : multi_indices(dim_, o))
        for (int s = 0; s < spec_size_; ++s) sob_[order][s] += std::norm(derivative_symbol(s, alpha));
  }

  plans_ = std::make_shared<Plans>();
  std::array<int, 3> dims{n, n, n};
  std::vector<double> in(size_);
  std::vector<fftw_complex> out(spec_size_);
  std::lock_guard<std::mutex> lock(plan_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->r2c = fftw_plan_dft_r2c(dim_, dims.data(), in.data(), out.data(), flags);
  plans_->c2r = fftw_plan_dft_c2r(dim_, dims.data(), out.data(), in.data(), flags);
  if (!plans_->r2c || !plans_->c2r) throw ParameterError("FFT planning failed");
}

double TorusGrid::coordinate(int point, int axis) const {
  int rest = point;
  for (int a = dim_ - 1; a > axis; --a) rest /= n_;
  return spacing() * (rest % n_);
}

Eigen::VectorXcd TorusGrid::forward(const Eigen::VectorXd& f) const {
  if (f.size() != size_) throw ParameterError("field size does not match the grid");
  Eigen::VectorXd in = f;
  Eigen::VectorXcd out(spec_size_);
  fftw_execute_dft_r2c(plans_->r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

Eigen::VectorXd TorusGrid::backward(const Eigen::VectorXcd& f_hat) const {
  if (f_hat.size() != spec_size_) throw ParameterError("spectrum size does not match the grid");
  Eigen::VectorXcd in = f_hat;  // c2r overwrites its input
  Eigen::VectorXd out(size_);
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  out /= double(size_);
  return out;
}

Eigen::MatrixXcd TorusGrid::forward_columns(const Eigen::MatrixXd& f) const {
  if (f.rows() != size_) throw ParameterError("field size does not match the grid");
  Eigen::MatrixXcd out(spec_size_, f.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    Eigen::VectorXd in = f.col(c);
    fftw_execute_dft_r2c(plans_->r2c, in.data(),
                         reinterpret_cast<fftw_complex*>(out.col(c).data()));
  }
  return out;
}

Eigen::MatrixXd TorusGrid::backward_columns(const Eigen::MatrixXcd& f_hat) const {
  if (f_hat.rows() != spec_size_) throw ParameterError("spectrum size does not match the grid");
  Eigen::MatrixXd out(size_, f_hat.cols());
  const double scale = 1.0 / size_;
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < f_hat.cols(); ++c) {
    Eigen::VectorXcd in = f_hat.col(c);
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(in.data()),
                         out.col(c).data());
    out.col(c) *= scale;
  }
  return out;
}

std::complex<double> TorusGrid::derivative_symbol(int s, const MultiIndex& alpha) const {
  std::complex<double> m = 1.0;
  for (int a = 0; a < dim_; ++a) {
    const int p = alpha[a];
    if (p == 0) continue;
    if ((p % 2) == 1 && nyq_[a][s]) return 0.0;
    const double k = k_[a][s];
    // (i k)^p
    const double mag = std::pow(k, p);
    switch (p % 4) {
      case 0: m *= mag; break;
      case 1: m *= std::complex<double>(0.0, mag); break;
      case 2: m *= -mag; break;
      default: m *= std::complex<double>(0.0, -mag); break;
    }
  }
  return m;
}

Eigen::VectorXd TorusGrid::derivative(const Eigen::VectorXd& f, const MultiIndex& alpha) const {
  for (int a = dim_; a < 3; ++a)
    if (alpha[a] != 0) throw ParameterError("derivative along a missing axis");
  if (alpha[0] < 0 || alpha[1] < 0 || alpha[2] < 0 || alpha[0] + alpha[1] + alpha[2] > 4)
    throw ParameterError("derivative order must be between 0 and 4");
  Eigen::VectorXcd h = forward(f);
  for (int s = 0; s < spec_size_; ++s) h[s] *= derivative_symbol(s, alpha);
  return backward(h);
}

Eigen::VectorXd TorusGrid::derivative(const Eigen::VectorXd& f, int axis) const {
  MultiIndex a{0, 0, 0};
  a[axis] = 1;
  return derivative(f, a);
}

void TorusGrid::apply_symbol(Eigen::MatrixXcd& f_hat, const MultiIndex& alpha) const {
  for (int s = 0; s < spec_size_; ++s) f_hat.row(s) *= derivative_symbol(s, alpha);
}

Eigen::VectorXd TorusGrid::dealias(const Eigen::VectorXd& f) const {
  Eigen::VectorXcd h = forward(f);
  for (int s = 0; s < spec_size_; ++s)
    if (!mask_[s]) h[s] = 0.0;
  return backward(h);
}

void TorusGrid::dealias_spectrum(Eigen::MatrixXcd& f_hat) const {
  for (int s = 0; s < spec_size_; ++s)
    if (!mask_[s]) f_hat.row(s).setZero();
}

Eigen::MatrixXd TorusGrid::dealias_columns(const Eigen::MatrixXd& f) const {
  Eigen::MatrixXcd h = forward_columns(f);
  dealias_spectrum(h);
  return backward_columns(h);
}

double TorusGrid::sobolev_norm_sq_spectral(const Eigen::VectorXcd& f_hat, int s) const {
  if (s < 0 || s > 3) throw ParameterError("Sobolev order must be between 0 and 3");
  double acc = 0.0;
  for (int k = 0; k < spec_size_; ++k) acc += mult_[k] * sob_[s][k] * std::norm(f_hat[k]);
  return parseval_factor() * acc;
}

double TorusGrid::sobolev_norm(const Eigen::VectorXd& f, int s) const {
  return std::sqrt(sobolev_norm_sq_spectral(forward(f), s));
}

}  // namespace polyflow
