#pragma once

// Exact discrete information theory over explicitly enumerated outcome
// spaces. All quantities are in nats, computed in double precision; the
// identities these support are checked at a 1e-12 tolerance, with the
// remaining slack coming purely from floating-point rounding.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "entcoef/errors.hpp"

namespace entcoef {

struct DiscretePmf {
  std::vector<std::string> outcomes;
  std::vector<double> probs;
};

struct DiscreteJoint {
  std::vector<std::string> outcomes_x;
  std::vector<std::string> outcomes_y;
  std::vector<std::vector<double>> probs;  // row x, column y
};

// A deterministic map between outcome spaces: image index per outcome.
using OutcomeMap = std::vector<std::size_t>;

namespace detail {

inline std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

inline DiscretePmf make_pmf(std::vector<double> probs, std::vector<std::string> outcomes = {}) {
  DiscretePmf pmf;
  pmf.probs = std::move(probs);
  pmf.outcomes = outcomes.empty() ? detail::default_labels(pmf.probs.size()) : std::move(outcomes);
  return pmf;
}

inline void validate_pmf(const DiscretePmf& pmf, double tol = 1e-12) {
  if (pmf.probs.empty()) fail_input("empty pmf");
  if (pmf.outcomes.size() != pmf.probs.size()) fail_input("pmf labels do not match outcomes");
  double total = 0.0;
  for (double p : pmf.probs) {
    if (!(p >= 0.0)) fail_input("pmf has a negative or non-finite probability");
    total += p;
  }
  if (std::abs(total - 1.0) > tol) {
    fail_input("pmf does not sum to 1 (off by " + std::to_string(total - 1.0) + ")");
  }
}

inline void validate_joint(const DiscreteJoint& j, double tol = 1e-12) {
  if (j.probs.empty() || j.probs[0].empty()) fail_input("empty joint");
  if (j.outcomes_x.size() != j.probs.size()) fail_input("joint row labels mismatch");
  double total = 0.0;
  for (const auto& row : j.probs) {
    if (row.size() != j.probs[0].size()) fail_input("ragged joint");
    for (double p : row) {
      if (!(p >= 0.0)) fail_input("joint has a negative or non-finite probability");
      total += p;
    }
  }
  if (j.outcomes_y.size() != j.probs[0].size()) fail_input("joint column labels mismatch");
  if (std::abs(total - 1.0) > tol) {
    fail_input("joint does not sum to 1 (off by " + std::to_string(total - 1.0) + ")");
  }
}

inline double entropy(const DiscretePmf& pmf) {
  double h = 0.0;
  for (double p : pmf.probs) h -= detail::xlogx(p);
  return h;
}

inline DiscretePmf marginal_x(const DiscreteJoint& j) {
  DiscretePmf pmf;
  pmf.outcomes = j.outcomes_x;
  pmf.probs.assign(j.probs.size(), 0.0);
  for (std::size_t x = 0; x < j.probs.size(); ++x) {
    for (double p : j.probs[x]) pmf.probs[x] += p;
  }
  return pmf;
}

inline DiscretePmf marginal_y(const DiscreteJoint& j) {
  DiscretePmf pmf;
  pmf.outcomes = j.outcomes_y;
  pmf.probs.assign(j.probs[0].size(), 0.0);
  for (const auto& row : j.probs) {
    for (std::size_t y = 0; y < row.size(); ++y) pmf.probs[y] += row[y];
  }
  return pmf;
}

inline double joint_entropy(const DiscreteJoint& j) {
  double h = 0.0;
  for (const auto& row : j.probs) {
    for (double p : row) h -= detail::xlogx(p);
  }
  return h;
}

// H[Y|X]
inline double conditional_entropy(const DiscreteJoint& j) {
  DiscretePmf px = marginal_x(j);
  double h = 0.0;
  for (std::size_t x = 0; x < j.probs.size(); ++x) {
    for (double p : j.probs[x]) {
      if (p > 0.0) h -= p * std::log(p / px.probs[x]);
    }
  }
  return h;
}

// H[X|Y]
inline double conditional_entropy_given_y(const DiscreteJoint& j) {
  DiscretePmf py = marginal_y(j);
  double h = 0.0;
  for (const auto& row : j.probs) {
    for (std::size_t y = 0; y < row.size(); ++y) {
      if (row[y] > 0.0) h -= row[y] * std::log(row[y] / py.probs[y]);
    }
  }
  return h;
}

inline double mutual_information(const DiscreteJoint& j) {
  DiscretePmf px = marginal_x(j);
  DiscretePmf py = marginal_y(j);
  double mi = 0.0;
  for (std::size_t x = 0; x < j.probs.size(); ++x) {
    for (std::size_t y = 0; y < j.probs[x].size(); ++y) {
      double p = j.probs[x][y];
      if (p > 0.0) mi += p * std::log(p / (px.probs[x] * py.probs[y]));
    }
  }
  return mi;
}

inline void validate_map(const OutcomeMap& map, std::size_t domain, std::size_t image) {
  if (map.size() != domain) fail_input("map does not cover the outcome space");
  for (std::size_t v : map) {
    if (v >= image) fail_input("map image index out of range");
  }
}

// Distribution of f(X).
inline DiscretePmf push_forward(const DiscretePmf& pmf, const OutcomeMap& f,
                                std::size_t image_size) {
  validate_map(f, pmf.probs.size(), image_size);
  DiscretePmf out;
  out.outcomes = detail::default_labels(image_size);
  out.probs.assign(image_size, 0.0);
  for (std::size_t i = 0; i < pmf.probs.size(); ++i) out.probs[f[i]] += pmf.probs[i];
  return out;
}

// Joint distribution of (f(X), g(X)) for X ~ pmf.
inline DiscreteJoint joint_of_maps(const DiscretePmf& pmf, const OutcomeMap& f,
                                   std::size_t f_size, const OutcomeMap& g,
                                   std::size_t g_size) {
  validate_map(f, pmf.probs.size(), f_size);
  validate_map(g, pmf.probs.size(), g_size);
  DiscreteJoint j;
  j.outcomes_x = detail::default_labels(f_size);
  j.outcomes_y = detail::default_labels(g_size);
  j.probs.assign(f_size, std::vector<double>(g_size, 0.0));
  for (std::size_t i = 0; i < pmf.probs.size(); ++i) j.probs[f[i]][g[i]] += pmf.probs[i];
  return j;
}

// Joint of (X, f(Y)) obtained by merging Y columns.
inline DiscreteJoint apply_map_to_y(const DiscreteJoint& j, const OutcomeMap& f,
                                    std::size_t image_size) {
  validate_map(f, j.probs[0].size(), image_size);
  DiscreteJoint out;
  out.outcomes_x = j.outcomes_x;
  out.outcomes_y = detail::default_labels(image_size);
  out.probs.assign(j.probs.size(), std::vector<double>(image_size, 0.0));
  for (std::size_t x = 0; x < j.probs.size(); ++x) {
    for (std::size_t y = 0; y < j.probs[x].size(); ++y) {
      out.probs[x][f[y]] += j.probs[x][y];
    }
  }
  return out;
}

struct PropertyCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // amount by which the identity/inequality misses
  bool pass = false;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;
  bool all_pass = true;
  double max_residual = 0.0;
};

// Checks the standard identities on a joint (X, Y) and a deterministic map
// f applied to Y: entropy can only shrink under a map, a determined variable
// has zero conditional entropy, the three mutual-information identities, and
// the post-processing inequality.
inline PropertyReport verify_properties(const DiscreteJoint& j, const OutcomeMap& f_on_y,
                                        std::size_t image_size, double tol = 1e-12) {
  validate_joint(j);
  validate_map(f_on_y, j.probs[0].size(), image_size);

  PropertyReport report;
  auto equality = [&](const std::string& name, double lhs, double rhs) {
    PropertyCheck c{name, lhs, rhs, std::abs(lhs - rhs), std::abs(lhs - rhs) <= tol};
    report.checks.push_back(c);
  };
  auto at_least = [&](const std::string& name, double lhs, double rhs) {
    // lhs >= rhs - tol; residual is the shortfall when violated
    double shortfall = rhs - lhs;
    PropertyCheck c{name, lhs, rhs, std::max(0.0, shortfall), shortfall <= tol};
    report.checks.push_back(c);
  };

  DiscretePmf py = marginal_y(j);
  DiscretePmf pfy = push_forward(py, f_on_y, image_size);
  double h_y = entropy(py);
  double h_x = entropy(marginal_x(j));
  double mi = mutual_information(j);

  at_least("entropy_shrinks_under_map", h_y, entropy(pfy));

  // H[f(Y) | Y] from the joint of (Y, f(Y)).
  OutcomeMap identity(py.probs.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  DiscreteJoint y_and_fy = joint_of_maps(py, identity, py.probs.size(), f_on_y, image_size);
  equality("determined_variable_has_zero_conditional_entropy",
           conditional_entropy(y_and_fy), 0.0);

  equality("mi_is_hx_minus_conditional", mi, h_x - conditional_entropy_given_y(j));
  equality("mi_is_hy_minus_conditional", mi, h_y - conditional_entropy(j));
  at_least("mi_nonnegative", mi, 0.0);
  at_least("postprocessing_cannot_increase_information", mi,
           mutual_information(apply_map_to_y(j, f_on_y, image_size)));
  equality("joint_entropy_chain_rule", joint_entropy(j), h_x + h_y - mi);

  for (const auto& c : report.checks) {
    report.all_pass = report.all_pass && c.pass;
    report.max_residual = std::max(report.max_residual, c.residual);
  }
  return report;
}

}  // namespace entcoef
