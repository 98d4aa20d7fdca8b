#pragma once

// Small statistics helpers: the OLS slope test used to decide whether the
// loss increase grows with the entropy coefficient, and tie-aware Spearman
// rank correlation for the monotone-trend check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "entcoef/errors.hpp"

namespace entcoef {

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x with a two-sided t-test
// of slope = 0 on n-2 degrees of freedom.
inline RegressionResult slope_t_test(const std::vector<std::pair<double, double>>& points) {
  const std::size_t n = points.size();
  if (n < 3) fail_input("regression needs at least 3 points, got " + std::to_string(n));

  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (sxx <= 0.0) fail_input("degenerate regressor: x is constant");

  RegressionResult r;
  r.n = n;
  r.slope = sxy / sxx;
  r.intercept = mean_y - r.slope * mean_x;

  double sse = 0.0;
  for (const auto& [x, y] : points) {
    double resid = y - (r.intercept + r.slope * x);
    sse += resid * resid;
  }
  double se2 = sse / static_cast<double>(n - 2) / sxx;
  if (se2 <= 0.0) {
    r.p_value = 0.0;  // exact fit, infinitely strong evidence
    return r;
  }
  double t = r.slope / std::sqrt(se2);
  boost::math::students_t dist(static_cast<double>(n - 2));
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return r;
}

namespace detail {

// Average ranks, ties shared.
inline std::vector<double> ranks_of(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) fail_input("degenerate correlation: a variable is constant");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

inline double spearman(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) fail_input("correlation needs at least 2 points");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& [x, y] : points) {
    xs.push_back(x);
    ys.push_back(y);
  }
  return detail::pearson(detail::ranks_of(xs), detail::ranks_of(ys));
}

}  // namespace entcoef
