#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ddlab/dde.hpp"

namespace ddlab::gaussian {

struct LinearDdeParams {
  double a;
  double b;
  double tau;
};

struct Cosine {};            // cos(s2 - s1)
struct CosineDegenerate {};  // cos(s1) cos(s2)
struct BrownianMinPlusTau {  // min(s1, s2) + tau, i.e. W(s + tau)
  double tau;
};
// u(min) v(max) with u(-tau) = 0, v > 0 and u / v non-decreasing.
struct UVProduct {
  std::function<double(double)> u;
  std::function<double(double)> v;
};
// Values on the uniform n x n grid over [-tau, 0]^2, row-major in (s1, s2),
// bilinear in between.
struct TabulatedGrid {
  double tau;
  std::size_t n;
  std::vector<double> values;
};
using KernelSpec = std::variant<Cosine, CosineDegenerate, BrownianMinPlusTau, UVProduct, TabulatedGrid>;

class CovKernel {
 public:
  CovKernel(KernelSpec spec);  // NOLINT(google-explicit-constructor)
  template <class K>
    requires(!std::is_same_v<std::remove_cvref_t<K>, CovKernel> &&
             !std::is_same_v<std::remove_cvref_t<K>, KernelSpec> && std::is_constructible_v<KernelSpec, K &&>)
  CovKernel(K&& k) : CovKernel(KernelSpec(std::forward<K>(k))) {}  // NOLINT(google-explicit-constructor)

  double operator()(double s1, double s2) const;
  const KernelSpec& spec() const noexcept { return spec_; }
  std::string name() const;
  // Kernels whose only non-smoothness is along s1 = s2.
  bool kinked_on_diagonal() const noexcept;
  // Interior grid lines of a tabulated kernel, across which it is only
  // continuous; empty for the analytic kernels.
  std::vector<double> grid_lines() const;

 private:
  KernelSpec spec_;
};

// Symmetry and smallest Gram eigenvalue on an n x n grid over [-tau, 0].
// Throws KernelNotPsdError if either check fails.
void validate_kernel(const CovKernel& kernel, double tau, std::size_t n = 16);

// X(t): zero for t < 0, otherwise sum_k b^k/k! (t - k tau)^k e^{a (t - k tau)}.
double fundamental_solution(const LinearDdeParams& p, double t);

struct RtOptions {
  double abs_tol = 1e-9;
};

// Covariance R_t(s1, s2) of x(t + s1), x(t + s2) under x' = a x + b x(t - tau)
// with a centered Gaussian history of covariance R_0 = kernel.
double r_t(const CovKernel& kernel, const LinearDdeParams& p, double t, double s1, double s2,
           const RtOptions& opt = {});

struct Sigma2Point {
  double t;
  double sigma2;
  double cross;     // R_t(-tau, 0)
  double residual;  // |d sigma2/dt - 2 a sigma2 - 2 b R_t(-tau, 0)|
};

// sigma2 on t = 0, dt, ..., T from
//   sigma2(t) = e^{2at} sigma2(0) + 2b int_0^t e^{2a(t-s)} R_s(-tau, 0) ds.
std::vector<Sigma2Point> sigma2_curve(const CovKernel& kernel, const LinearDdeParams& p, double T,
                                      double dt, const RtOptions& opt = {});

struct WienerClosedForm {
  double cross;   // R_t(-tau, 0)
  double sigma2;  // R_t(0, 0)
};
// Closed forms for R_0 = min(s1, s2) + tau and t in [0, tau].
WienerClosedForm wiener_closed_form(const LinearDdeParams& p, double t);
// sigma2(t) = int (S_t eta_r(0))^2 dr with eta_r = 1_[r, 0], t in [0, tau].
double factorized_sigma2_wiener(const LinearDdeParams& p, double t);

enum class Stability { Stable, Unstable, Boundary };

struct StabilityClass {
  Stability verdict;
  double kappa;                  // NaN when a tau >= 1
  std::array<double, 3> margins; // 1 - a tau, -(b + a) tau, b tau + a tau cos k + k sin k
};
StabilityClass hayes_stable(const LinearDdeParams& p);

struct GaussianState {
  double t = 0.0;
  double sigma2_t = 0.0;    // Var x(t)
  double sigma2_lag = 0.0;  // Var x(t - tau)
  double cross = 0.0;       // R_t(-tau, 0)

  Eigen::Matrix2d Q() const;
  GaussianState scaled(double factor) const;
};
GaussianState gaussian_state(const CovKernel& kernel, const LinearDdeParams& p, double t,
                             const RtOptions& opt = {});

inline constexpr double kDegenerateTol = 1e-12;

double marginal_density(const GaussianState& s, double x);
// Density of (x(t), x(t - tau)) at (x, y).
double joint_density(const GaussianState& s, double x, double y);
// |int y f_nu(x, y) dy - (cross / sigma2_t) x f(x)|
double conditional_mean_check(const GaussianState& s, double x);

// Draws one history on the m + 1 nodes of [-tau, 0]. Deterministic per seed.
dde::History sample_gaussian_history(const CovKernel& kernel, int m, double tau, std::uint64_t seed);

// Reusable sampler: factorizes tabulated kernels once.
class HistorySampler {
 public:
  HistorySampler(CovKernel kernel, int m, double tau);
  dde::History operator()(std::uint64_t seed) const;

 private:
  CovKernel kernel_;
  int m_;
  double tau_;
  std::shared_ptr<const Eigen::MatrixXd> chol_;
};

// CSV with header `s1,s2,R` on a full square grid over [-tau, 0]^2.
TabulatedGrid load_tabulated_kernel(const std::string& path);

}  // namespace ddlab::gaussian
