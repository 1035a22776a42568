#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

namespace polyflow {

using MultiIndex = std::array<int, 3>;

/// All multi-indices over `dim` axes with |alpha| == order, lexicographically descending.
std::vector<MultiIndex> multi_indices(int dim, int order);

/// Periodic box [0, L)^dim_x with N points per axis and Fourier pseudo-spectral calculus.
///
/// Real fields are Eigen vectors of length N^dim_x in row-major order (last axis
/// fastest). Spectra are the unnormalized real-to-complex transforms of length
/// N^(dim_x-1) (N/2 + 1). Odd-order derivatives zero the Nyquist mode so that the
/// derivative of a real interpolant stays real and the first-derivative operator
/// is exactly skew-adjoint on the grid.
class TorusGrid {
 public:
  TorusGrid(int dim_x, int n, double length = 2.0 * std::numbers::pi);

  int dim() const noexcept { return dim_; }
  int points_per_dim() const noexcept { return n_; }
  int size() const noexcept { return size_; }
  int spectral_size() const noexcept { return spec_size_; }
  double length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / n_; }
  double volume() const noexcept { return std::pow(length_, dim_); }
  double cell_volume() const noexcept { return volume() / size_; }
  /// Largest retained integer wavenumber under the 2/3 rule.
  int dealias_cutoff() const noexcept { return n_ / 3; }

  double coordinate(int point, int axis) const;
  /// Wavenumber component along `axis` of spectral index `s`.
  double wavenumber(int s, int axis) const { return k_[axis][s]; }
  bool is_nyquist(int s, int axis) const { return nyq_[axis][s] != 0; }
  bool retained(int s) const { return mask_[s] != 0; }
  /// 1 or 2: how many full-spectrum modes the half-spectrum entry stands for.
  double multiplicity(int s) const { return mult_[s]; }

  Eigen::VectorXcd forward(const Eigen::VectorXd& f) const;
  Eigen::VectorXd backward(const Eigen::VectorXcd& f_hat) const;
  /// Column-wise transforms of fields stored as columns.
  Eigen::MatrixXcd forward_columns(const Eigen::MatrixXd& f) const;
  Eigen::MatrixXd backward_columns(const Eigen::MatrixXcd& f_hat) const;

  /// Fourier multiplier of d^alpha at spectral index s.
  std::complex<double> derivative_symbol(int s, const MultiIndex& alpha) const;
  /// |alpha| <= 4.
  Eigen::VectorXd derivative(const Eigen::VectorXd& f, const MultiIndex& alpha) const;
  Eigen::VectorXd derivative(const Eigen::VectorXd& f, int axis) const;
  /// In-place multiplier application on spectra (rows of a column matrix).
  void apply_symbol(Eigen::MatrixXcd& f_hat, const MultiIndex& alpha) const;

  /// Zero the modes removed by the 2/3 rule.
  Eigen::VectorXd dealias(const Eigen::VectorXd& f) const;
  void dealias_spectrum(Eigen::MatrixXcd& f_hat) const;
  Eigen::MatrixXd dealias_columns(const Eigen::MatrixXd& f) const;

  /// sum over |alpha| <= s of |symbol_alpha(k)|^2.
  double sobolev_weight(int spec, int s) const { return sob_[s][spec]; }
  /// Squared H^s norm from a spectrum: sum_alpha ||d^alpha f||^2_{L^2}.
  double sobolev_norm_sq_spectral(const Eigen::VectorXcd& f_hat, int s) const;
  double sobolev_norm(const Eigen::VectorXd& f, int s) const;
  /// Factor turning sum_s mult |f_hat|^2 into the L^2 integral.
  double parseval_factor() const noexcept { return volume() / (double(size_) * size_); }

  double integral(const Eigen::VectorXd& f) const { return cell_volume() * f.sum(); }
  double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    return cell_volume() * f.dot(g);
  }
  double l2_norm(const Eigen::VectorXd& f) const { return std::sqrt(inner(f, f)); }

 private:
  struct Plans;

  int dim_, n_, size_, spec_size_;
  double length_;
  std::array<std::vector<double>, 3> k_;
  std::array<std::vector<char>, 3> nyq_;
  std::vector<char> mask_;
  std::vector<double> mult_;
  std::array<std::vector<double>, 4> sob_;
  std::shared_ptr<Plans> plans_;
};

}  // namespace polyflow
