#include "bbmwave/wave_theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bbmwave/airy.hpp"
#include "bbmwave/quadrature.hpp"

namespace bbmwave::theory {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

void require_below_edge(const ModelParams& p, double y, const char* who) {
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  if (!(y <= l_star)) {
    throw std::domain_error(std::string(who) + ": y = " + std::to_string(y) +
                            " lies above the right edge L* = " + std::to_string(l_star));
  }
}

// Standard normal probability of (lo, hi], accurate in both tails.
double normal_mass(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  constexpr double r = std::numbers::sqrt2;
  if (lo >= 0.0) return 0.5 * (std::erfc(lo / r) - std::erfc(hi / r));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi / r) - std::erfc(-lo / r));
  return 1.0 - 0.5 * (std::erfc(-lo / r) + std::erfc(hi / r));
}

// Right-edge profile h, tabulated once: cumulative masses at nodes of a fine
// grid, refined inside a cell with one Gauss-Kronrod panel.
class EdgeProfileTable {
 public:
  static constexpr double kStep = 1.0 / 64.0;

  EdgeProfileTable() : g1_(airy::gamma1()), y_max_(airy::kWindow - g1_) {
    const int cells = static_cast<int>(std::ceil(y_max_ / kStep));
    cumulative_.resize(static_cast<std::size_t>(cells) + 1, 0.0);
    for (int i = 0; i < cells; ++i) {
      const double a = i * kStep;
      const double b = std::min(y_max_, a + kStep);
      cumulative_[i + 1] = cumulative_[i] + raw_panel(a, b);
    }
    normalizer_ = cumulative_.back();
  }

  double normalizer() const { return normalizer_; }

  double pdf(double y) const {
    if (y > y_max_) return 0.0;
    return airy::ai(y + g1_) / normalizer_;
  }

  double cdf(double y) const {
    if (y <= 0.0) return 0.0;
    if (y >= y_max_) return 1.0;
    const auto i = static_cast<std::size_t>(y / kStep);
    const double a = static_cast<double>(i) * kStep;
    return std::min(1.0, (cumulative_[i] + raw_panel(a, y)) / normalizer_);
  }

  double quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("edge_profile_quantile: u outside [0, 1)");
    if (u == 0.0) return 0.0;
    const double target = u * normalizer_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    double lo = static_cast<double>(i) * kStep;
    double hi = std::min(y_max_, lo + kStep);
    // Safeguarded Newton inside the bracketing cell.
    double y = 0.5 * (lo + hi);
    for (int iter = 0; iter < 60; ++iter) {
      const double f = cumulative_[i] + raw_panel(static_cast<double>(i) * kStep, y) - target;
      if (f > 0.0) hi = y; else lo = y;
      const double d = airy::ai(y + g1_);
      double next = (d > 0.0) ? y - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - y) < 1e-14 * std::max(1.0, y)) return next;
      y = next;
    }
    return y;
  }

 private:
  double raw_panel(double a, double b) const {
    if (b <= a) return 0.0;
    // 15-point Kronrod panel; integrand is entire and the cell is short.
    static constexpr std::array<double, 8> x = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr std::array<double, 8> w = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = w[7] * airy::ai(c + g1_);
    for (int j = 0; j < 7; ++j) {
      s += w[j] * (airy::ai(c - h * x[j] + g1_) + airy::ai(c + h * x[j] + g1_));
    }
    return s * h;
  }

  double g1_;
  double y_max_;
  double normalizer_ = 0.0;
  std::vector<double> cumulative_;
};

const EdgeProfileTable& edge_table() {
  static const EdgeProfileTable table;
  return table;
}

}  // namespace

void ModelParams::validate() const {
  if (!(std::isfinite(rho) && rho > 0.0)) {
    throw std::invalid_argument("model: rho must be finite and > 0");
  }
  if (!(std::isfinite(beta) && beta > 0.0)) {
    throw std::invalid_argument("model: beta must be finite and > 0");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("model: alpha must lie in (0, 1)");
  }
}

double ModelParams::edge_ratio() const { return rho / std::cbrt(beta); }

RegimeDiagnostics diagnostics(const ModelParams& p) {
  const double cubic = p.cubic_ratio();
  const double edge = p.edge_ratio();
  return {cubic, edge, cubic >= 100.0 && edge >= 5.0};
}

EdgeSet edges(const ModelParams& p) {
  p.validate();
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  const double l_dagger = -5.0 * p.rho * p.rho / (8.0 * p.beta);
  const double shift = airy::gamma1() / std::cbrt(2.0 * p.beta);
  return {l_star, l_dagger, l_star - shift, l_dagger + 2.0 * shift};
}

double t_of(const ModelParams& p, double y) {
  require_below_edge(p, y, "t_of");
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  return std::sqrt(2.0 / p.beta * (l_star - y));
}

double g_of(const ModelParams& p, double y) {
  require_below_edge(p, y, "g_of");
  const double s = p.rho * p.rho / (2.0 * p.beta) - y;
  return p.rho * s - 2.0 * std::sqrt(2.0 * p.beta) / 3.0 * s * std::sqrt(s);
}

WaveCoeffs coeffs(const ModelParams& p, double z) {
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  if (!(z < l_star)) throw std::domain_error("coeffs: z must lie below L*");
  const double c0 = z / l_star;
  return {z, c0, std::sqrt(1.0 - c0)};
}

double profile_f(const ModelParams& p, double y) {
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  if (!(y < l_star)) return 0.0;
  return std::exp(g_of(p, y) - p.cubic_ratio() / 6.0) / (kSqrt2Pi * std::sqrt(t_of(p, y)));
}

double profile_airy(const ModelParams& p, double y) {
  const double k = std::cbrt(2.0 * p.beta);
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  const double arg = k * (l_star - y);
  const double a = airy::ai(arg);  // throws outside the window
  const double exponent = -p.rho * y + p.cubic_ratio() / 3.0;
  if (a > 0.0) return k * std::exp(exponent + std::log(a));
  return k * std::exp(exponent) * a;
}

double profile_gauss(const ModelParams& p, double y) {
  const double var = p.rho / p.beta;
  return std::exp(-y * y / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double traveling_profile(const ModelParams& p, double t, double y) {
  return profile_f(p, y - p.rho * t);
}

double mean_density(const ModelParams& p, double t, double x, double y) {
  if (!(t > 0.0)) throw std::domain_error("mean_density: t must be > 0");
  const double d = x - y;
  const double e = p.rho * x - p.rho * y - d * d / (2.0 * t) - p.rho * p.rho * t / 2.0 +
                   p.beta * (x + y) * t / 2.0 + p.beta * p.beta * t * t * t / 24.0;
  return std::exp(e) / std::sqrt(2.0 * std::numbers::pi * t);
}

double mean_count_closed_form(const ModelParams& p, double t, double x, double a, double b) {
  if (!(t > 0.0)) throw std::domain_error("mean_count: t must be > 0");
  if (!(a < b)) return 0.0;
  const double mu = x + p.beta * t * t / 2.0 - p.rho * t;
  const double growth = p.beta * x * t - p.beta * p.rho * t * t / 2.0 +
                        p.beta * p.beta * t * t * t / 6.0;
  const double sd = std::sqrt(t);
  return std::exp(growth) * normal_mass((a - mu) / sd, (b - mu) / sd);
}

double mean_count_quadrature(const ModelParams& p, double t, double x, double a, double b,
                             double rel_tol) {
  if (!(t > 0.0)) throw std::domain_error("mean_count: t must be > 0");
  if (!(a < b)) return 0.0;
  const double mu = x + p.beta * t * t / 2.0 - p.rho * t;
  const double sd = std::sqrt(t);
  std::array<double, 5> cuts = {mu - 8.0 * sd, mu - 2.0 * sd, mu, mu + 2.0 * sd, mu + 8.0 * sd};
  quadrature::Options opts;
  opts.rel_tol = rel_tol;
  opts.tail_scale = sd;
  auto f = [&](double y) { return mean_density(p, t, x, y); };
  return quadrature::integrate(f, a, b, opts, cuts).value;
}

double z_star(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("z_star: requires a < b");
  if (a >= 0.0) return a;
  if (b <= 0.0) return b;
  return 0.0;
}

double log_edge_integral(const ModelParams& p, double a, double b) {
  p.validate();
  if (!(a < b)) throw std::invalid_argument("edge integral: requires a < b");
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  const double hi = std::min(b, l_star);
  if (!(a < hi)) return kNegInf;

  const double zs = z_star(a, hi);
  const double g_max = g_of(p, zs);
  // Substituting y = L* - u^4 turns the integrand into a smooth function of u:
  //   dy / sqrt(2 pi t(y)) = K u^2 du,  g = rho u^4 - k u^6.
  const double k6 = 2.0 * std::sqrt(2.0 * p.beta) / 3.0;
  const double pref = 4.0 * std::pow(p.beta / 2.0, 0.25) / kSqrt2Pi;
  auto integrand = [&](double u) {
    const double u2 = u * u;
    const double u4 = u2 * u2;
    return u2 * std::exp(p.rho * u4 - k6 * u4 * u2 - g_max);
  };
  const double u_lo = std::sqrt(std::sqrt(l_star - hi));
  const double u_hi = std::isinf(a) ? quadrature::kInf : std::sqrt(std::sqrt(l_star - a));
  const double u_peak = std::sqrt(std::sqrt(l_star - zs));
  const double width = std::pow(p.beta, 0.25) / (2.0 * std::pow(2.0, 0.25) * p.rho);

  std::vector<double> cuts;
  for (double m : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    cuts.push_back(u_peak - m * width);
    cuts.push_back(u_peak + m * width);
  }
  cuts.push_back(u_peak);
  quadrature::Options opts;
  opts.rel_tol = 1e-12;
  opts.tail_scale = width;
  const auto r = quadrature::integrate(integrand, u_lo, u_hi, opts, cuts);
  if (!(r.value > 0.0)) return kNegInf;
  return g_max + std::log(pref * r.value);
}

double predicted_count(const ModelParams& p, double z0, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("predicted_count: requires a < b");
  if (!(z0 >= 0.0)) throw std::invalid_argument("predicted_count: z0 must be >= 0");
  if (z0 == 0.0) return 0.0;
  const double log_i = log_edge_integral(p, a, b);
  if (std::isinf(log_i)) return 0.0;
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  const double d = airy::ai_deriv_at_gamma1();
  return std::exp(std::log(z0) - p.rho * l_star + log_i) / (d * d);
}

double normalization_mass(const ModelParams& p) {
  return profile_f_mass(p, -quadrature::kInf, quadrature::kInf);
}

double profile_f_mass(const ModelParams& p, double a, double b) {
  const double log_i = log_edge_integral(p, a, b);
  if (std::isinf(log_i)) return 0.0;
  return std::exp(log_i - p.cubic_ratio() / 6.0);
}

double edge_profile_h(double y) {
  if (!(y > 0.0)) throw std::domain_error("edge_profile_h: y must be > 0");
  return edge_table().pdf(y);
}

double edge_profile_cdf(double y) { return edge_table().cdf(y); }

double edge_profile_quantile(double u) { return edge_table().quantile(u); }

double edge_profile_normalizer() { return edge_table().normalizer(); }

double wave_solution(double sigma2, double d_coeff, double scale_c, double y) {
  if (!(d_coeff > 0.0)) throw std::domain_error("wave: D must be > 0");
  const double arg = sigma2 * sigma2 / (4.0 * std::pow(d_coeff, 4.0 / 3.0)) - y / std::cbrt(d_coeff);
  return scale_c * std::exp(-sigma2 * y / (2.0 * d_coeff)) * airy::ai(arg);
}

double wave_ode_residual(double sigma2, double d_coeff, double scale_c, double y) {
  if (!(d_coeff > 0.0)) throw std::domain_error("wave: D must be > 0");
  if (scale_c == 0.0) return 0.0;
  // Fourth-order central differences of wave_solution, so the Airy equation
  // itself is not assumed. Step tied to the natural length D^{1/3}.
  const double h = 2e-3 * std::cbrt(d_coeff);
  auto w = [&](double v) { return wave_solution(sigma2, d_coeff, scale_c, v); };
  const double m2 = w(y - 2 * h);
  const double m1 = w(y - h);
  const double w0 = w(y);
  const double p1 = w(y + h);
  const double p2 = w(y + 2 * h);
  const double w1 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h);
  const double w2 = (-m2 + 16 * m1 - 30 * w0 + 16 * p1 - p2) / (12 * h * h);
  return d_coeff * w2 + sigma2 * w1 + y * w0;
}

WaveMapping wave_mapping(const ModelParams& p) {
  return {p.rho * p.beta, p.beta * p.beta / 2.0};
}

TheoryCurve sample_curve(const ModelParams& p, CurveKind kind, const std::vector<double>& grid,
                         double t, double x) {
  TheoryCurve curve{kind, grid, {}};
  curve.values.reserve(grid.size());
  const double l_star = p.rho * p.rho / (2.0 * p.beta);
  for (double y : grid) {
    double v = kNaN;
    switch (kind) {
      case CurveKind::f: v = profile_f(p, y); break;
      case CurveKind::f_gauss: v = profile_gauss(p, y); break;
      case CurveKind::f_airy: {
        const double arg = std::cbrt(2.0 * p.beta) * (l_star - y);
        if (arg >= -airy::kWindow && arg <= airy::kWindow) v = profile_airy(p, y);
        break;
      }
      case CurveKind::g: if (y <= l_star) v = g_of(p, y); break;
      case CurveKind::t: if (y <= l_star) v = t_of(p, y); break;
      case CurveKind::p_t: v = mean_density(p, t, x, y); break;
      case CurveKind::h: if (y > 0.0) v = edge_profile_h(y); break;
    }
    curve.values.push_back(v);
  }
  return curve;
}

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::f: return "f";
    case CurveKind::f_airy: return "f_airy";
    case CurveKind::f_gauss: return "f_gauss";
    case CurveKind::g: return "g";
    case CurveKind::t: return "t";
    case CurveKind::p_t: return "p_t";
    case CurveKind::h: return "h";
  }
  return "unknown";
}

}  // namespace bbmwave::theory
