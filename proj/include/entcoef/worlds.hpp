#pragma once

// Tiny exactly-enumerable worlds for verifying the information bounds. A
// world is a distribution over sentence outcomes w together with three
// deterministic maps: the annotation t = f_T(w), the embedding x = g_x(w),
// and the filtered embedding xt = h_xtilde(w). Validity requires
// I[t; xt] = 0, the absence-of-information condition the removal bound
// assumes.
//
// The random generator builds worlds on a product space w = (a, b) with
// independent coordinates, making the annotation a function of a and the
// filtered embedding a function of b. Independence then holds by
// construction instead of by rejection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "entcoef/errors.hpp"
#include "entcoef/infotheory.hpp"
#include "entcoef/rng.hpp"

namespace entcoef {

struct DiscreteWorld {
  DiscretePmf w_pmf;
  OutcomeMap f_T;
  OutcomeMap g_x;
  OutcomeMap h_xtilde;
  std::size_t t_count = 0;
  std::size_t x_count = 0;
  std::size_t xt_count = 0;
};

inline void validate_world(const DiscreteWorld& world, double tol = 1e-12) {
  validate_pmf(world.w_pmf);
  validate_map(world.f_T, world.w_pmf.probs.size(), world.t_count);
  validate_map(world.g_x, world.w_pmf.probs.size(), world.x_count);
  validate_map(world.h_xtilde, world.w_pmf.probs.size(), world.xt_count);
  if (entropy(world.w_pmf) <= 0.0) fail_input("world has a deterministic sentence variable");
  double leak = mutual_information(
      joint_of_maps(world.w_pmf, world.f_T, world.t_count, world.h_xtilde, world.xt_count));
  if (std::abs(leak) > tol) {
    fail_input("filtered embedding still carries annotation information: I = " +
               std::to_string(leak));
  }
}

// Two independent fair bits; the annotation reads the first, the filtered
// embedding the second, and the embedding sees everything.
inline DiscreteWorld two_bit_world() {
  DiscreteWorld world;
  world.w_pmf = make_pmf({0.25, 0.25, 0.25, 0.25}, {"00", "01", "10", "11"});
  world.f_T = {0, 0, 1, 1};
  world.t_count = 2;
  world.g_x = {0, 1, 2, 3};
  world.x_count = 4;
  world.h_xtilde = {0, 1, 0, 1};
  world.xt_count = 2;
  return world;
}

namespace detail {

// Relabels map values to a dense 0..k-1 range, first-seen order.
inline std::size_t densify(OutcomeMap& map) {
  std::vector<std::size_t> remap(map.size(), map.size());
  std::size_t next = 0;
  for (auto& v : map) {
    if (remap[v] == map.size()) remap[v] = next++;
    v = remap[v];
  }
  return next;
}

}  // namespace detail

inline DiscreteWorld random_world(std::uint64_t seed, std::size_t max_alphabet = 16) {
  if (max_alphabet < 2) fail_config("world alphabet bound must be at least 2");
  Rng rng(seed);
  const std::size_t ka_cap = std::min<std::size_t>(8, max_alphabet);
  const std::size_t ka = 2 + rng.next_below(ka_cap - 1);
  const std::size_t kb = 1 + rng.next_below(max_alphabet / ka);
  const std::size_t n = ka * kb;

  std::vector<double> pa = rng.next_dirichlet(ka);
  std::vector<double> pb = rng.next_dirichlet(kb);

  DiscreteWorld world;
  world.w_pmf.probs.resize(n);
  world.w_pmf.outcomes.resize(n);
  for (std::size_t a = 0; a < ka; ++a) {
    for (std::size_t b = 0; b < kb; ++b) {
      world.w_pmf.probs[a * kb + b] = pa[a] * pb[b];
      world.w_pmf.outcomes[a * kb + b] = std::to_string(a) + ":" + std::to_string(b);
    }
  }

  // Annotation reads only the first coordinate, filtered embedding only the
  // second; the embedding is either lossless (injective) or a random
  // compression of the full outcome.
  OutcomeMap t_of_a(ka), xt_of_b(kb);
  for (auto& v : t_of_a) v = rng.next_below(ka);
  for (auto& v : xt_of_b) v = rng.next_below(kb);
  const bool injective_x = rng.next_double() < 0.5;
  OutcomeMap x_of_w(n);
  for (std::size_t i = 0; i < n; ++i) x_of_w[i] = injective_x ? i : rng.next_below(n);

  world.f_T.resize(n);
  world.h_xtilde.resize(n);
  for (std::size_t a = 0; a < ka; ++a) {
    for (std::size_t b = 0; b < kb; ++b) {
      world.f_T[a * kb + b] = t_of_a[a];
      world.h_xtilde[a * kb + b] = xt_of_b[b];
    }
  }
  world.g_x = x_of_w;
  world.t_count = detail::densify(world.f_T);
  world.x_count = detail::densify(world.g_x);
  world.xt_count = detail::densify(world.h_xtilde);

  validate_world(world);
  return world;
}

struct Lemma1Result {
  double rho = 0.0;
  double sigma = 0.0;
  double delta_I = 0.0;
  double bound = 0.0;
  double h_w = 0.0;
  bool applicable = false;  // requires rho > 1 - sigma
  bool holds = false;       // vacuously true when not applicable
};

inline Lemma1Result lemma1_check(const DiscreteWorld& world) {
  validate_world(world);
  Lemma1Result r;
  r.h_w = entropy(world.w_pmf);

  const auto& pmf = world.w_pmf;
  OutcomeMap identity(pmf.probs.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;

  double i_tw = mutual_information(
      joint_of_maps(pmf, world.f_T, world.t_count, identity, pmf.probs.size()));
  double i_wx = mutual_information(
      joint_of_maps(pmf, identity, pmf.probs.size(), world.g_x, world.x_count));
  double i_wxt = mutual_information(
      joint_of_maps(pmf, identity, pmf.probs.size(), world.h_xtilde, world.xt_count));

  // Exact MI can land a few ulps below zero when one variable is constant.
  r.rho = std::clamp(i_tw / r.h_w, 0.0, 1.0);
  r.sigma = std::clamp(i_wx / r.h_w, 0.0, 1.0);
  r.delta_I = i_wx - i_wxt;
  r.bound = (r.rho + r.sigma - 1.0) * r.h_w;
  r.applicable = r.rho > 1.0 - r.sigma;
  r.holds = !r.applicable || r.delta_I >= r.bound - 1e-12;
  return r;
}

struct Lemma2Result {
  double delta_I = 0.0;
  double delta_l = 0.0;
  double gap = 0.0;
  double loss_x = 0.0;        // achieved cross-entropy of the q(w|x) decoder
  double loss_xtilde = 0.0;
  bool converged = false;
};

namespace detail {

// Fits logits so softmax(logits[row]) matches p(w | row) for every row of
// positive probability, by gradient descent on the summed cross-entropies.
// Rows are decoupled, so this is exactly the full-batch fit of a softmax
// decoder on the enumerated joint. Returns the weighted cross-entropy and
// whether every row's loss is within 1e-3 nats of its entropy floor, which
// is the sense of convergence the approximation argument needs. A sup-norm
// criterion on the probabilities would never trigger for point-mass targets,
// where the softmax only approaches the target at rate 1/iters.
struct DecoderFit {
  double loss = 0.0;
  bool converged = false;
};

inline DecoderFit fit_softmax_decoder(const DiscreteJoint& joint, int iters) {
  const std::size_t rows = joint.probs.size();
  const std::size_t cols = joint.probs[0].size();
  DiscretePmf px = marginal_x(joint);

  std::vector<std::vector<double>> logits(rows, std::vector<double>(cols, 0.0));
  std::vector<std::vector<double>> q(rows, std::vector<double>(cols, 0.0));
  auto softmax_row = [&](std::size_t r) {
    double mx = logits[r][0];
    for (double v : logits[r]) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      q[r][c] = std::exp(logits[r][c] - mx);
      z += q[r][c];
    }
    for (std::size_t c = 0; c < cols; ++c) q[r][c] /= z;
  };

  // Cross-entropy in the logits is 1/2-smooth, so any rate below 4 descends
  // monotonically; 2 halves the slow 1/iters tail of point-mass targets.
  const double lr = 2.0;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t r = 0; r < rows; ++r) {
      if (px.probs[r] <= 0.0) continue;
      softmax_row(r);
      for (std::size_t c = 0; c < cols; ++c) {
        double target = joint.probs[r][c] / px.probs[r];
        logits[r][c] -= lr * (q[r][c] - target);
      }
    }
  }

  DecoderFit fit;
  fit.converged = true;
  for (std::size_t r = 0; r < rows; ++r) {
    if (px.probs[r] <= 0.0) continue;
    softmax_row(r);
    double row_loss = 0.0;
    double row_floor = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      double target = joint.probs[r][c] / px.probs[r];
      if (target > 0.0) {
        row_loss -= target * std::log(q[r][c]);
        row_floor -= target * std::log(target);
      }
    }
    if (row_loss - row_floor > 1e-3) fit.converged = false;
    fit.loss += px.probs[r] * row_loss;
  }
  return fit;
}

}  // namespace detail

inline Lemma2Result lemma2_check(const DiscreteWorld& world, int decoder_fit_iters) {
  validate_world(world);
  if (decoder_fit_iters < 0) fail_config("decoder iterations must be non-negative");

  const auto& pmf = world.w_pmf;
  OutcomeMap identity(pmf.probs.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;

  DiscreteJoint x_w = joint_of_maps(pmf, world.g_x, world.x_count, identity, pmf.probs.size());
  DiscreteJoint xt_w =
      joint_of_maps(pmf, world.h_xtilde, world.xt_count, identity, pmf.probs.size());

  detail::DecoderFit fit_x = detail::fit_softmax_decoder(x_w, decoder_fit_iters);
  detail::DecoderFit fit_xt = detail::fit_softmax_decoder(xt_w, decoder_fit_iters);

  Lemma2Result r;
  r.loss_x = fit_x.loss;
  r.loss_xtilde = fit_xt.loss;
  r.delta_l = fit_xt.loss - fit_x.loss;
  r.delta_I = mutual_information(x_w) - mutual_information(xt_w);
  r.gap = std::abs(r.delta_I - r.delta_l);
  r.converged = fit_x.converged && fit_xt.converged;
  return r;
}

// Line-oriented world fixture: probabilities on the W line, then the three
// maps as outcome-index lists.
inline void save_world(const DiscreteWorld& world, std::ostream& out) {
  out.precision(17);
  out << "W " << world.w_pmf.probs.size();
  for (double p : world.w_pmf.probs) out << ' ' << p;
  out << '\n';
  auto dump = [&](const char* name, const OutcomeMap& map) {
    out << name;
    for (std::size_t v : map) out << ' ' << v;
    out << '\n';
  };
  dump("T", world.f_T);
  dump("X", world.g_x);
  dump("XT", world.h_xtilde);
}

inline DiscreteWorld load_world(std::istream& in) {
  DiscreteWorld world;
  std::string line;
  if (!std::getline(in, line)) fail_input("empty world fixture");
  {
    std::istringstream row(line);
    std::string tag;
    std::size_t k = 0;
    if (!(row >> tag >> k) || tag != "W" || k == 0) fail_input("world fixture: bad W line");
    world.w_pmf.probs.resize(k);
    for (auto& p : world.w_pmf.probs) {
      if (!(row >> p)) fail_input("world fixture: truncated W line");
    }
    world.w_pmf.outcomes = detail::default_labels(k);
  }
  auto read_map = [&](const char* name, OutcomeMap& map, std::size_t& count) {
    if (!std::getline(in, line)) fail_input(std::string("world fixture: missing ") + name);
    std::istringstream row(line);
    std::string tag;
    if (!(row >> tag) || tag != name) fail_input(std::string("world fixture: expected ") + name);
    map.resize(world.w_pmf.probs.size());
    for (auto& v : map) {
      if (!(row >> v)) fail_input(std::string("world fixture: truncated ") + name);
    }
    count = map.empty() ? 0 : *std::max_element(map.begin(), map.end()) + 1;
  };
  read_map("T", world.f_T, world.t_count);
  read_map("X", world.g_x, world.x_count);
  read_map("XT", world.h_xtilde, world.xt_count);
  validate_world(world);
  return world;
}

}  // namespace entcoef
