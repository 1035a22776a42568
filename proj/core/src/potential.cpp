#include "polyflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "polyflow/error.hpp"

namespace polyflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Doubling Gauss-Legendre integration of a smooth integrand on [lo, hi].
template <class F>
double integrate_refined(F&& f, double lo, double hi, double rel_tol) {
  double prev = 0.0;
  for (int n = 32; n <= 4096; n *= 2) {
    const Rule1D rule = gauss_legendre(n, lo, hi);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
    if (n > 32 && std::abs(sum - prev) <= rel_tol * std::abs(sum)) return sum;
    prev = sum;
  }
  throw ConvergenceError("potential normalization quadrature did not converge");
}

}  // namespace

std::string Potential::name() const {
  return kind_ == PotentialKind::kHookean ? "hookean" : "fene";
}

double Potential::factor(double x) const {
  if (kind_ == PotentialKind::kHookean) return 0.5 * x * x;
  const double s = 1.0 - x * x / (b0_ * b0_);
  if (s <= 0.0) return kInf;
  return -k_ * std::log(s);
}

double Potential::factor_d1(double x) const {
  if (kind_ == PotentialKind::kHookean) return x;
  const double d = b0_ * b0_ - x * x;
  if (d <= 0.0) return std::copysign(kInf, x);
  return 2.0 * k_ * x / d;
}

double Potential::factor_d2(double x) const {
  if (kind_ == PotentialKind::kHookean) return 1.0;
  const double d = b0_ * b0_ - x * x;
  if (d <= 0.0) return kInf;
  return 2.0 * k_ * (b0_ * b0_ + x * x) / (d * d);
}

double Potential::reduced_d1_gap(double gap) const {
  if (!support_.bounded) throw std::logic_error("reduced_d1_gap: unbounded support");
  const double x = b0_ - gap;
  return 2.0 * k_ * x / (gap * (2.0 * b0_ - gap)) / theta_;
}

double Potential::reduced_d2_gap(double gap) const {
  if (!support_.bounded) throw std::logic_error("reduced_d2_gap: unbounded support");
  const double x = b0_ - gap;
  const double d = gap * (2.0 * b0_ - gap);
  return 2.0 * k_ * (b0_ * b0_ + x * x) / (d * d) / theta_;
}

double Potential::factor_density_gap(double gap) const {
  if (!support_.bounded) throw std::logic_error("factor_density_gap: unbounded support");
  const double s = gap * (2.0 * b0_ - gap) / (b0_ * b0_);
  if (s <= 0.0) return 0.0;
  return std::pow(s, k_ / theta_) / z1_;
}

void Potential::reduced_taylor(double x, double gap, std::span<double> coeffs) const {
  std::fill(coeffs.begin(), coeffs.end(), 0.0);
  const std::size_t n = coeffs.size();
  if (kind_ == PotentialKind::kHookean) {
    if (n > 0) coeffs[0] = 0.5 * x * x / theta_;
    if (n > 1) coeffs[1] = x / theta_;
    if (n > 2) coeffs[2] = 0.5 / theta_;
    return;
  }
  // -k [ln(gap - e) + ln(c + e) - 2 ln b0] with c = b0 + x
  const double c = 2.0 * b0_ - gap;
  const double scale = k_ / theta_;
  if (n > 0) coeffs[0] = -scale * (std::log(gap) + std::log(c) - 2.0 * std::log(b0_));
  double ig = 1.0;
  double ic = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    ig /= gap;
    ic /= -c;
    coeffs[j] = scale * (ig + ic) / static_cast<double>(j);
  }
}

void Potential::sqrt_density_taylor(double x, double gap, std::span<double> coeffs) const {
  const std::size_t n = coeffs.size();
  std::fill(coeffs.begin(), coeffs.end(), 0.0);
  if (n == 0) return;
  const double root_z = std::sqrt(z1_);
  if (kind_ == PotentialKind::kHookean) {
    // exp(-(x + e)^2 / (4 theta))
    std::vector<double> a(n, 0.0);
    a[0] = -0.25 * x * x / theta_;
    if (n > 1) a[1] = -0.5 * x / theta_;
    if (n > 2) a[2] = -0.25 / theta_;
    coeffs[0] = std::exp(a[0]);
    for (std::size_t m = 1; m < n; ++m) {
      double s = 0.0;
      for (std::size_t k = 1; k <= std::min<std::size_t>(m, 2); ++k) s += k * a[k] * coeffs[m - k];
      coeffs[m] = s / m;
    }
    for (double& c : coeffs) c /= root_z;
    return;
  }
  // ((gap - e) (c + e) / b0^2)^p with p = k / (2 theta), as a product of binomial series
  const double p = 0.5 * k_ / theta_;
  const double c = 2.0 * b0_ - gap;
  std::vector<double> left(n), right(n);
  double binom = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    left[j] = binom * std::pow(gap, p - j) * (j % 2 ? -1.0 : 1.0);
    right[j] = binom * std::pow(c, p - j);
    binom *= (p - j) / (j + 1.0);
  }
  const double scale = std::pow(b0_, -2.0 * p) / root_z;
  for (std::size_t m = 0; m < n; ++m) {
    double s = 0.0;
    for (std::size_t j = 0; j <= m; ++j) s += left[j] * right[m - j];
    coeffs[m] = s * scale;
  }
}

double Potential::energy(std::span<const double> q) const {
  double u = 0.0;
  for (int i = 0; i < dim_q_; ++i) u += factor(q[i]);
  return u;
}

void Potential::gradient(std::span<const double> q, std::span<double> out) const {
  for (int i = 0; i < dim_q_; ++i) out[i] = factor_d1(q[i]);
}

double Potential::laplacian(std::span<const double> q) const {
  double l = 0.0;
  for (int i = 0; i < dim_q_; ++i) l += factor_d2(q[i]);
  return l;
}

double Potential::factor_density(double x) const {
  const double phi = reduced(x);
  if (!std::isfinite(phi)) return 0.0;
  return std::exp(-phi) / z1_;
}

double Potential::maxwellian(std::span<const double> q) const {
  double m = 1.0;
  for (int i = 0; i < dim_q_; ++i) m *= factor_density(q[i]);
  return m;
}

double Potential::truncation_radius(double tol, int poly_degree) const {
  if (support_.bounded) return support_.radius;
  const double log_tol = std::log(tol);
  const double phi0 = reduced(0.0);
  auto excess = [&](double r) {
    return -(reduced(r) - phi0) + poly_degree * std::log1p(r) - log_tol;
  };
  double hi = 1.0;
  while (excess(hi) > 0.0 || excess(-hi) > 0.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0 || excess(-mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

Rule1D Potential::reference_rule(int n, int poly_degree) const {
  Rule1D rule;
  if (support_.bounded) {
    const double half_pi = 0.5 * std::numbers::pi;
    const Rule1D t = gauss_legendre(n, -half_pi, half_pi);
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      const double x = b0_ * std::sin(t.nodes[i]);
      rule.nodes[i] = x;
      rule.weights[i] = t.weights[i] * b0_ * std::cos(t.nodes[i]) * factor_density(x);
    }
    return rule;
  }
  const double radius = truncation_radius(1e-16, poly_degree);
  rule = gauss_legendre(n, -radius, radius);
  for (int i = 0; i < n; ++i) rule.weights[i] *= factor_density(rule.nodes[i]);
  return rule;
}

void Potential::compute_normalization() {
  if (support_.bounded) {
    const double half_pi = 0.5 * std::numbers::pi;
    z1_ = integrate_refined(
        [this](double t) {
          const double x = b0_ * std::sin(t);
          const double phi = reduced(x);
          return std::isfinite(phi) ? b0_ * std::cos(t) * std::exp(-phi) : 0.0;
        },
        -half_pi, half_pi, 1e-15);
    return;
  }
  const double radius = truncation_radius(1e-18);
  z1_ = integrate_refined([this](double x) { return std::exp(-reduced(x)); }, -radius, radius,
                          1e-15);
}

Potential make_hookean(double sigma, double r, int dim_q) {
  if (!(sigma > 0.0)) throw ParameterError("hookean: sigma must be positive");
  if (!(r > 0.0)) throw ParameterError("hookean: r must be positive");
  if (dim_q < 1 || dim_q > 3) throw ParameterError("hookean: dim_q must be 1, 2 or 3");
  Potential p;
  p.kind_ = PotentialKind::kHookean;
  p.dim_q_ = dim_q;
  p.support_ = {};
  p.theta_ = sigma * r;
  p.compute_normalization();
  return p;
}

Potential make_fene(double k, double b0, FeneOptions options) {
  if (!(b0 > 0.0)) throw ParameterError("fene: b0 must be positive");
  if (!(k > 0.0)) throw ParameterError("fene: k must be positive");
  if (!(options.thermal_scale > 0.0)) throw ParameterError("fene: thermal scale must be positive");
  if (options.enforce_moment_bound && k / options.thermal_scale <= 1.0)
    throw ParameterError(
        "fene: k / (sigma r) must exceed 1; otherwise the moment of |grad U|^2 against the "
        "Maxwellian diverges at the boundary of the ball");
  Potential p;
  p.kind_ = PotentialKind::kFene;
  p.dim_q_ = 1;
  p.support_ = {true, b0};
  p.theta_ = options.thermal_scale;
  p.k_ = k;
  p.b0_ = b0;
  p.compute_normalization();
  return p;
}

}  // namespace polyflow
