#pragma once

#include <string>
#include <vector>

namespace bbmwave::theory {

/// Drift magnitude rho, selection gradient beta and the rate-floor constant
/// alpha of the branching diffusion. Everything else derives from these.
struct ModelParams {
  double rho = 0.0;
  double beta = 0.0;
  double alpha = 0.5;

  /// Throws std::invalid_argument unless rho > 0, beta > 0, 0 < alpha < 1.
  void validate() const;

  /// rho^3 / beta; the Gaussian bulk is narrow compared with L* when large.
  double cubic_ratio() const { return rho * rho * rho / beta; }
  /// rho / beta^{1/3}.
  double edge_ratio() const;
};

/// Regime-quality diagnostics. Reported, never enforced.
struct RegimeDiagnostics {
  double cubic_ratio;
  double edge_ratio;
  bool asymptotic;  // cubic_ratio >= 100 and edge_ratio >= 5
};
RegimeDiagnostics diagnostics(const ModelParams& p);

struct EdgeSet {
  double l_star;    // right edge, rho^2 / (2 beta)
  double l_dagger;  // left edge, -5 rho^2 / (8 beta)
  double l_right;   // right boundary, L* - (2 beta)^{-1/3} gamma_1
  double l_bar;     // left-most particle, L-dagger + 2 (2 beta)^{-1/3} gamma_1
};

struct WaveCoeffs {
  double z;
  double c0;  // z / L*
  double c;   // sqrt(1 - c0)
};

enum class CurveKind { f, f_airy, f_gauss, g, t, p_t, h };

struct TheoryCurve {
  CurveKind kind;
  std::vector<double> grid;
  std::vector<double> values;
};

EdgeSet edges(const ModelParams& p);

/// Look-back time sqrt(2 (L* - y) / beta). Domain error for y > L*.
double t_of(const ModelParams& p, double y);

/// Log-density exponent rho (L* - y) - (2 sqrt(2 beta) / 3) (L* - y)^{3/2}.
double g_of(const ModelParams& p, double y);

WaveCoeffs coeffs(const ModelParams& p, double z);

/// Asymptotic empirical density; 0 for y >= L*.
double profile_f(const ModelParams& p, double y);

/// Airy approximant (2 beta)^{1/3} e^{-rho y + rho^3 / 3 beta} Ai((2 beta)^{1/3} (L* - y)).
/// Accepts any y whose Ai argument is inside the Airy window; the classical
/// domain is y < L* and the formula turns negative past the first Ai zero.
double profile_airy(const ModelParams& p, double y);

/// Normal density with mean 0 and variance rho / beta.
double profile_gauss(const ModelParams& p, double y);

/// Profile in the frame without drift: profile_f(y - rho t).
double traveling_profile(const ModelParams& p, double t, double y);

/// Many-to-one density p_t(x, y) of the first moment measure.
double mean_density(const ModelParams& p, double t, double x, double y);

/// Closed form of the integral of mean_density over y in [a, b]. The density
/// is Gaussian in y, so the integral reduces to a difference of normal tails.
double mean_count_closed_form(const ModelParams& p, double t, double x, double a, double b);

/// Integral of mean_density over y in [a, b] by adaptive quadrature.
double mean_count_quadrature(const ModelParams& p, double t, double x, double a, double b,
                             double rel_tol = 1e-12);

/// Theorem-style count prediction
///   z0 e^{-rho L*} / Ai'(gamma_1)^2 * int_{[a,b] cap (-inf, L*]} e^{g(y)} / sqrt(2 pi t(y)) dy.
double predicted_count(const ModelParams& p, double z0, double a, double b);

/// log of the integral int_{[a,b] cap (-inf, L*]} e^{g(y)} / sqrt(2 pi t(y)) dy,
/// evaluated without overflow. Returns -infinity for an empty intersection.
double log_edge_integral(const ModelParams& p, double a, double b);

/// e^{-rho^3 / 6 beta} times the full edge integral; the total mass of profile_f.
double normalization_mass(const ModelParams& p);

/// Integral of profile_f over [a, b] cap (-inf, L*].
double profile_f_mass(const ModelParams& p, double a, double b);

/// Point of [a, b] where g is largest: a if a >= 0, b if b <= 0, else 0.
double z_star(double a, double b);

/// Normalised right-edge profile h(y) = Ai(y + gamma_1) / int_0^inf Ai(z + gamma_1) dz.
double edge_profile_h(double y);

/// Cumulative distribution of h.
double edge_profile_cdf(double y);

/// Inverse of edge_profile_cdf for u in [0, 1).
double edge_profile_quantile(double u);

/// int_0^inf Ai(z + gamma_1) dz.
double edge_profile_normalizer();

/// Closed-form wave omega(y) = C e^{-sigma2 y / 2D} Ai(sigma2^2 / (4 D^{4/3}) - y / D^{1/3}).
double wave_solution(double sigma2, double d_coeff, double scale_c, double y);

/// D omega'' + sigma2 omega' + y omega for the closed-form wave, with the
/// derivatives taken by fourth-order central differences.
double wave_ode_residual(double sigma2, double d_coeff, double scale_c, double y);

/// sigma^2 and D that map the wave equation onto the branching model.
struct WaveMapping {
  double sigma2;
  double d_coeff;
};
WaveMapping wave_mapping(const ModelParams& p);

/// Samples one closed-form profile on a grid. Points outside a formula's
/// domain (or outside the Airy window) are stored as NaN. For CurveKind::p_t
/// the density is taken at time `t` from a single particle at `x`.
TheoryCurve sample_curve(const ModelParams& p, CurveKind kind, const std::vector<double>& grid,
                         double t = 0.0, double x = 0.0);

std::string to_string(CurveKind kind);

}  // namespace bbmwave::theory
