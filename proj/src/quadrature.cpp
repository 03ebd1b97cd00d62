#include "bbmwave/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace bbmwave::quadrature {
namespace {

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment kronrod(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double value = resk * half;
  const double err = std::fabs((resk - resg) * half);
  return {a, b, value, err};
}

template <class F>
Result adaptive(const F& f, std::vector<double> cuts, const Options& opts) {
  std::priority_queue<Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    Segment s = kronrod(f, cuts[i], cuts[i + 1]);
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }
  Result r;
  r.intervals = static_cast<int>(heap.size());
  while (!heap.empty()) {
    const double target = std::max(opts.abs_tol, opts.rel_tol * std::fabs(total));
    if (total_err <= target) break;
    if (r.intervals >= opts.max_intervals) {
      r.converged = false;
      break;
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval cannot be split any further in floating point.
      r.converged = false;
      break;
    }
    const Segment left = kronrod(f, worst.a, mid);
    const Segment right = kronrod(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++r.intervals;
  }
  // Re-sum from the segments to limit drift from incremental updates.
  double sum = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  r.value = sum;
  r.abs_error = err;
  return r;
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, const Options& opts,
                 std::span<const double> breakpoints) {
  if (std::isnan(a) || std::isnan(b)) throw std::invalid_argument("integrate: NaN limit");
  if (a == b) return {};
  if (a > b) {
    Result r = integrate(f, b, a, opts, breakpoints);
    r.value = -r.value;
    return r;
  }
  const double scale = opts.tail_scale;
  if (!(scale > 0.0)) throw std::invalid_argument("integrate: tail_scale must be positive");

  std::vector<double> inner;
  for (double p : breakpoints) {
    if (p > a && p < b && std::isfinite(p)) inner.push_back(p);
  }
  std::sort(inner.begin(), inner.end());

  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf) {
    std::vector<double> cuts{a};
    cuts.insert(cuts.end(), inner.begin(), inner.end());
    cuts.push_back(b);
    return adaptive(f, std::move(cuts), opts);
  }

  // Finite core between the outermost finite points, exponential maps on the tails.
  double core_lo = lo_inf ? (inner.empty() ? (hi_inf ? 0.0 : b) : inner.front()) : a;
  double core_hi = hi_inf ? (inner.empty() ? core_lo : inner.back()) : b;
  if (core_hi < core_lo) core_hi = core_lo;

  Result total;
  if (core_hi > core_lo) {
    std::vector<double> cuts{core_lo};
    for (double p : inner) {
      if (p > core_lo && p < core_hi) cuts.push_back(p);
    }
    cuts.push_back(core_hi);
    total = adaptive(f, std::move(cuts), opts);
  }
  auto add = [&total](const Result& part) {
    total.value += part.value;
    total.abs_error += part.abs_error;
    total.intervals += part.intervals;
    total.converged = total.converged && part.converged;
  };
  // Tails only need to be resolved to the accuracy of the whole integral.
  Options tail_opts = opts;
  tail_opts.abs_tol = std::max(opts.abs_tol, 0.1 * opts.rel_tol * std::fabs(total.value));
  if (hi_inf) {
    auto mapped = [&](double w) {
      const double x = core_hi - scale * std::log(w);
      const double fx = f(x);
      return fx == 0.0 ? 0.0 : fx * scale / w;
    };
    add(adaptive(mapped, {0.0, 1.0}, tail_opts));
  }
  if (lo_inf) {
    auto mapped = [&](double w) {
      const double x = core_lo + scale * std::log(w);
      const double fx = f(x);
      return fx == 0.0 ? 0.0 : fx * scale / w;
    };
    add(adaptive(mapped, {0.0, 1.0}, tail_opts));
  }
  return total;
}

}  // namespace bbmwave::quadrature
