#ifndef NLSLAB_FIT_HPP_
#define NLSLAB_FIT_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nlslab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

// Weighted least squares y ~ intercept + slope * x.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& w = {}) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("linear_fit: need >= 2 matching samples");
  }
  const std::size_t n = x.size();
  std::vector<double> ww = w.empty() ? std::vector<double>(n, 1.0) : w;
  if (ww.size() != n) throw std::invalid_argument("linear_fit: weight size mismatch");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) { sw += ww[i]; sx += ww[i] * x[i]; sy += ww[i] * y[i]; }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += ww[i] * (x[i] - mx) * (x[i] - mx);
    sxy += ww[i] * (x[i] - mx) * (y[i] - my);
    syy += ww[i] * (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// log-log slope of y vs x (entries must be positive)
inline LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw std::invalid_argument("loglog_fit: nonpositive sample");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

// Pairwise (cascade) summation: the reduction tree is a function of the length
// only, so totals do not depend on accumulation order at call sites.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v, 0, v.size());
}

// Composite trapezoid rule over sampled values with arbitrary increasing times.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  if (t.size() != f.size() || t.size() < 2) {
    throw std::invalid_argument("trapezoid: need >= 2 matching samples");
  }
  std::vector<double> pieces(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    pieces[i] = 0.5 * (f[i] + f[i + 1]) * (t[i + 1] - t[i]);
  }
  return pairwise_sum(pieces);
}

}  // namespace nlslab

#endif  // NLSLAB_FIT_HPP_
