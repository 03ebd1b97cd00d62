#include "bbmwave/airy.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bbmwave::airy {
namespace {

using Real = long double;

// Ai(0) = 1 / (3^{2/3} Gamma(2/3)),  Ai'(0) = -1 / (3^{1/3} Gamma(1/3)).
constexpr Real kAi0 = 0.355028053887817239260063186004183176L;
constexpr Real kAiPrime0 = -0.258819403792806798405183560189203963L;

constexpr double kTableLo = -40.0;
constexpr double kTableHi = 12.0;
constexpr double kNodeSpacing = 0.125;
constexpr int kNodeCount = static_cast<int>((kTableHi - kTableLo) / kNodeSpacing) + 1;

struct Node {
  Real value;
  Real deriv;
};

// Taylor expansion of a solution of y'' = x y about x0, evaluated at x0 + h.
// Coefficients obey a_{n+2} = (x0 a_n + a_{n-1}) / ((n+2)(n+1)).
Node taylor_step(Real x0, Node at, Real h) {
  constexpr Real eps = 1e-22L;
  Real a_prev = at.value;   // a_{n-1}
  Real a_curr = at.deriv;   // a_n
  Real value = at.value + at.deriv * h;
  Real deriv = at.deriv;
  // a_2 handled with a_{-1} = 0.
  Real a_next = x0 * at.value / 2.0L;
  Real hp = h;              // h^{n-1} for the derivative term of a_n, n = 2
  Real hn = h * h;          // h^n
  int quiet = 0;
  for (int n = 2; n < 120; ++n) {
    const Real tv = a_next * hn;
    const Real td = static_cast<Real>(n) * a_next * hp;
    value += tv;
    deriv += td;
    const Real scale = std::fabs(value) + std::fabs(deriv);
    if (std::fabs(tv) <= eps * scale && std::fabs(td) <= eps * scale) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
    // Advance: compute a_{n+1} from a_{n-1} and a_{n-2}.
    const Real a_following =
        (x0 * a_curr + a_prev) / (static_cast<Real>(n + 1) * static_cast<Real>(n));
    a_prev = a_curr;
    a_curr = a_next;
    a_next = a_following;
    hp = hn;
    hn *= h;
  }
  return {value, deriv};
}

// Decaying-branch asymptotic series (positive argument).
Node asymptotic_positive(Real x) {
  const Real zeta = 2.0L / 3.0L * x * std::sqrt(x);
  const Real x4 = std::sqrt(std::sqrt(x));
  Real u = 1.0L;
  Real su = 1.0L;
  Real sv = 1.0L;
  Real zpow = 1.0L;
  Real last = 1.0L;
  for (int k = 1; k < 200; ++k) {
    u *= static_cast<Real>((6 * k - 5) * (6 * k - 3) * (6 * k - 1)) /
         static_cast<Real>((2 * k - 1) * 216 * k);
    const Real v = -static_cast<Real>(6 * k + 1) / static_cast<Real>(6 * k - 1) * u;
    zpow *= -zeta;
    const Real tu = u / zpow;
    const Real tv = v / zpow;
    if (std::fabs(tu) > last) break;  // series started to diverge
    su += tu;
    sv += tv;
    last = std::fabs(tu);
    if (last < 1e-22L) break;
  }
  const Real pref = std::exp(-zeta) / (2.0L * std::sqrt(std::numbers::pi_v<Real>));
  return {pref / x4 * su, -pref * x4 * sv};
}

struct NodeTable {
  std::array<Node, kNodeCount> nodes{};

  NodeTable() {
    const int zero_index = static_cast<int>(-kTableLo / kNodeSpacing);
    nodes[zero_index] = {kAi0, kAiPrime0};
    // Oscillatory side: neutral stability, march left from the exact origin values.
    for (int i = zero_index; i > 0; --i) {
      const Real x0 = static_cast<Real>(kTableLo) + i * static_cast<Real>(kNodeSpacing);
      nodes[i - 1] = taylor_step(x0, nodes[i], -static_cast<Real>(kNodeSpacing));
    }
    // Decaying side: marching left from the asymptotic seed is the stable direction.
    nodes[kNodeCount - 1] = asymptotic_positive(static_cast<Real>(kTableHi));
    for (int i = kNodeCount - 1; i > zero_index + 1; --i) {
      const Real x0 = static_cast<Real>(kTableLo) + i * static_cast<Real>(kNodeSpacing);
      nodes[i - 1] = taylor_step(x0, nodes[i], -static_cast<Real>(kNodeSpacing));
    }
  }
};

const NodeTable& node_table() {
  static const NodeTable table;
  return table;
}

void check_window(double x) {
  if (!std::isfinite(x) || x < -kWindow || x > kWindow) {
    throw std::domain_error("airy: argument " + std::to_string(x) +
                            " outside accuracy window [-40, 40]");
  }
}

Node evaluate(double x) {
  check_window(x);
  if (x > kTableHi) return asymptotic_positive(static_cast<Real>(x));
  const auto& table = node_table();
  const int i = static_cast<int>(std::lround((x - kTableLo) / kNodeSpacing));
  const Real x0 = static_cast<Real>(kTableLo) + i * static_cast<Real>(kNodeSpacing);
  const Real h = static_cast<Real>(x) - x0;
  if (h == 0.0L) return table.nodes[i];
  return taylor_step(x0, table.nodes[i], h);
}

double zero_estimate(int k) {
  const double t = 3.0 * std::numbers::pi / 8.0 * (4.0 * k - 1.0);
  const double t2 = 1.0 / (t * t);
  return -std::pow(t, 2.0 / 3.0) *
         (1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * 77125.0 / 82944.0)));
}

double newton_zero(int k) {
  double x = zero_estimate(k);
  for (int iter = 0; iter < 60; ++iter) {
    const Node n = evaluate(x);
    const double step = static_cast<double>(n.value / n.deriv);
    x -= step;
    if (std::fabs(step) < 1e-13) break;
  }
  return x;
}

}  // namespace

double ai(double x) { return static_cast<double>(evaluate(x).value); }

double ai_deriv(double x) { return static_cast<double>(evaluate(x).deriv); }

AiryPair ai_pair(double x) {
  const Node n = evaluate(x);
  return {static_cast<double>(n.value), static_cast<double>(n.deriv)};
}

AiryZeroTable::AiryZeroTable(int count) {
  if (count < 1 || count > kMaxZeroIndex) {
    throw std::out_of_range("airy: zero table size must lie in [1, 50]");
  }
  zeros_.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) zeros_.push_back(newton_zero(k));
}

double airy_zero(int k) {
  if (k < 1 || k > kMaxZeroIndex) {
    throw std::out_of_range("airy: zero index " + std::to_string(k) +
                            " outside [1, 50]");
  }
  static const AiryZeroTable table(kMaxZeroIndex);
  return table[static_cast<std::size_t>(k - 1)];
}

double gamma1() { return airy_zero(1); }

double ai_deriv_at_gamma1() {
  static const double value = ai_deriv(gamma1());
  return value;
}

}  // namespace bbmwave::airy
