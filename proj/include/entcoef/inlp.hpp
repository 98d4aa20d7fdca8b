// Iterative nullspace projection: train a linear probe for a tag, project the
// embeddings onto its nullspace, repeat until the probe cannot beat the
// majority class. Also the end-to-end loss-change measurement built on it.
#ifndef ENTCOEF_INLP_HPP
#define ENTCOEF_INLP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "entcoef/corpus.hpp"
#include "entcoef/errors.hpp"
#include "entcoef/rho.hpp"
#include "entcoef/sgns.hpp"

namespace entcoef {

struct LabeledVectors {
  RowMatrixXd X;                    // N x d
  std::vector<std::size_t> y;       // tag index per row
  std::vector<std::string> tagset;  // ordered tags
  // Optional row multiplicities; empty means every row counts once. Repeated
  // (vector, tag) rows aggregate to one weighted row without changing any fit.
  std::vector<double> weights;

  double weight_of(std::size_t row) const { return weights.empty() ? 1.0 : weights[row]; }
  double total_weight() const {
    if (weights.empty()) return static_cast<double>(y.size());
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
  }
};

inline void validate_labeled(const LabeledVectors& data) {
  if (data.tagset.empty()) fail_input("labeled vectors: empty tagset");
  if (data.y.size() != static_cast<std::size_t>(data.X.rows())) {
    fail_input("labeled vectors: label count does not match row count");
  }
  if (data.y.size() < data.tagset.size()) {
    fail_input("labeled vectors: fewer rows than tags");
  }
  if (!data.X.allFinite()) fail_input("labeled vectors: non-finite embedding row");
  if (!data.weights.empty() && data.weights.size() != data.y.size()) {
    fail_input("labeled vectors: weight count does not match row count");
  }
  std::vector<bool> seen(data.tagset.size(), false);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    if (data.y[i] >= data.tagset.size()) fail_input("labeled vectors: label out of range");
    if (data.weight_of(i) < 0.0) fail_input("labeled vectors: negative weight");
    if (data.weight_of(i) > 0.0) seen[data.y[i]] = true;
  }
  for (std::size_t t = 0; t < seen.size(); ++t) {
    if (!seen[t]) fail_input("labeled vectors: tag never occurs: " + data.tagset[t]);
  }
}

inline double majority_fraction(const LabeledVectors& data) {
  std::vector<double> mass(data.tagset.size(), 0.0);
  for (std::size_t i = 0; i < data.y.size(); ++i) mass[data.y[i]] += data.weight_of(i);
  return *std::max_element(mass.begin(), mass.end()) / data.total_weight();
}

struct LinearProbe {
  Eigen::MatrixXd U;     // c x d class weight rows
  Eigen::VectorXd bias;  // length c
  double train_accuracy = 0.0;
  bool converged = false;
};

enum class ProbeLoss { logistic, hinge };

namespace detail {

// Weighted fraction of rows whose best-scoring class (lowest index on ties)
// is the gold label.
inline double probe_accuracy(const LabeledVectors& data, const Eigen::MatrixXd& U,
                             const Eigen::VectorXd& bias) {
  double hit = 0.0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    Eigen::VectorXd z = U * data.X.row(i).transpose() + bias;
    Eigen::Index best = 0;
    z.maxCoeff(&best);
    if (static_cast<std::size_t>(best) == data.y[i]) hit += data.weight_of(i);
  }
  return hit / data.total_weight();
}

}  // namespace detail

// Multinomial logistic regression (or the one-vs-rest hinge variant) fit by
// full-batch gradient descent with Nesterov momentum. The fit starts from
// zero, which keeps the learned rows inside the span of the data; the seed
// only matters for interface symmetry, since the objective is convex and the
// optimum does not depend on it.
inline LinearProbe train_probe(const LabeledVectors& data, std::uint64_t seed = 0,
                               ProbeLoss loss_kind = ProbeLoss::logistic) {
  (void)seed;
  validate_labeled(data);
  const auto n = static_cast<std::size_t>(data.X.rows());
  const auto d = data.X.cols();
  const auto c = static_cast<Eigen::Index>(data.tagset.size());
  const double total = data.total_weight();
  const double l2 = 1e-4;

  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) w(i) = data.weight_of(i) / total;

  double max_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_sq = std::max(max_sq, data.X.row(i).squaredNorm());
  }
  const double smooth = 0.5 * (max_sq + 1.0) + l2;

  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(c, d);
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(c);
  Eigen::MatrixXd vel_u = U;
  Eigen::VectorXd vel_b = bias;
  const double lr = 1.0 / smooth;
  const double mu = 0.9;

  LinearProbe probe;
  for (int epoch = 0; epoch < 500; ++epoch) {
    Eigen::MatrixXd u_look = U + mu * vel_u;
    Eigen::VectorXd b_look = bias + mu * vel_b;

    // Score all rows against the lookahead parameters.
    Eigen::MatrixXd z = data.X * u_look.transpose();
    z.rowwise() += b_look.transpose();

    Eigen::MatrixXd grad_z(n, c);
    if (loss_kind == ProbeLoss::logistic) {
      for (std::size_t i = 0; i < n; ++i) {
        double mx = z.row(i).maxCoeff();
        Eigen::ArrayXd p = (z.row(i).transpose().array() - mx).exp();
        p /= p.sum();
        p(data.y[i]) -= 1.0;
        grad_z.row(i) = (w(i) * p).transpose();
      }
    } else {
      // One-vs-rest hinge: push the gold score above +1, the rest below -1.
      for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < c; ++k) {
          double sign = static_cast<std::size_t>(k) == data.y[i] ? 1.0 : -1.0;
          grad_z(i, k) = (1.0 - sign * z(i, k) > 0.0) ? -w(i) * sign : 0.0;
        }
      }
    }

    Eigen::MatrixXd grad_u = grad_z.transpose() * data.X + l2 * u_look;
    Eigen::VectorXd grad_b = grad_z.colwise().sum().transpose() + l2 * b_look;

    double gmax = std::max(grad_u.cwiseAbs().maxCoeff(), grad_b.cwiseAbs().maxCoeff());
    if (gmax < 1e-5) {
      probe.converged = true;
      break;
    }
    vel_u = mu * vel_u - lr * grad_u;
    vel_b = mu * vel_b - lr * grad_b;
    U += vel_u;
    bias += vel_b;
  }

  probe.U = std::move(U);
  probe.bias = std::move(bias);
  probe.train_accuracy = detail::probe_accuracy(data, probe.U, probe.bias);
  return probe;
}

// Orthogonal projector onto the nullspace of U, with singular values below
// 1e-10 of the largest treated as zero.
inline Eigen::MatrixXd nullspace_projection(const Eigen::MatrixXd& U) {
  if (U.rows() < 1 || U.cols() < 1) fail_input("nullspace projection of an empty matrix");
  if (!U.allFinite()) fail_input("nullspace projection of a non-finite matrix");
  const auto d = U.cols();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = sv.size() > 0 ? sv(0) * 1e-10 : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  if (rank == 0) return Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd vr = svd.matrixV().leftCols(rank);
  return Eigen::MatrixXd::Identity(d, d) - vr * vr.transpose();
}

struct ProjectionStack {
  std::vector<Eigen::MatrixXd> projections;  // P_1 ... P_k in removal order
  Eigen::MatrixXd composed;                  // P_k * ... * P_1
};

struct InlpResult {
  ProjectionStack stack;
  int iterations = 0;
  double final_probe_accuracy = 0.0;
  double majority = 0.0;
  RowMatrixXd filtered;
  bool converged = false;
};

inline InlpResult run_inlp(const LabeledVectors& data, double epsilon = 0.01,
                           int max_iters = -1, std::uint64_t seed = 0,
                           ProbeLoss loss_kind = ProbeLoss::logistic) {
  validate_labeled(data);
  if (epsilon < 0.0) fail_config("stopping tolerance must be non-negative");
  const auto d = data.X.cols();
  if (max_iters < 0) max_iters = static_cast<int>(d);

  InlpResult result;
  result.majority = majority_fraction(data);
  result.stack.composed = Eigen::MatrixXd::Identity(d, d);
  result.filtered = data.X;

  // The removed subspace is tracked as an explicit orthonormal basis, and the
  // composed projector is rebuilt from it every round. Multiplying the P_i
  // out instead leaves 1e-16 scale residue in the removed directions, and a
  // scale-free softmax refit can legitimately amplify that residue back into
  // the removed information. In exact arithmetic the two constructions agree,
  // because each probe is trained from zero on already-projected data, so its
  // rows are orthogonal to everything removed before.
  Eigen::MatrixXd basis(d, 0);
  LabeledVectors current = data;
  for (int iter = 0;; ++iter) {
    LinearProbe probe = train_probe(current, seed + iter, loss_kind);
    result.final_probe_accuracy = probe.train_accuracy;
    if (probe.train_accuracy <= result.majority + epsilon) {
      result.converged = true;
      break;
    }
    if (iter >= max_iters) break;  // flagged, not an error

    result.stack.projections.push_back(nullspace_projection(probe.U));

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(probe.U, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cutoff = sv.size() > 0 ? sv(0) * 1e-10 : 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) <= cutoff) continue;
      Eigen::VectorXd v = svd.matrixV().col(k);
      // Two Gram-Schmidt passes against what is already removed.
      if (basis.cols() > 0) {
        v -= basis * (basis.transpose() * v);
        v -= basis * (basis.transpose() * v);
      }
      double norm = v.norm();
      if (norm < 1e-8) continue;  // numerically nothing new
      basis.conservativeResize(d, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v / norm;
    }

    if (basis.cols() == d) {
      result.stack.composed.setZero();
      current.X.setZero();
    } else {
      result.stack.composed =
          Eigen::MatrixXd::Identity(d, d) - basis * basis.transpose();
      current.X = data.X * result.stack.composed;
    }
    result.iterations = iter + 1;
  }
  result.filtered = current.X;
  return result;
}

// Text matrix fixture for composed projections.
inline void save_projection(const Eigen::MatrixXd& p, std::ostream& out) {
  if (p.rows() != p.cols()) fail_input("projection matrix must be square");
  out.precision(17);
  out << "P " << p.rows() << '\n';
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      out << p(i, j) << (j + 1 == p.cols() ? '\n' : ' ');
    }
  }
}

inline Eigen::MatrixXd load_projection(std::istream& in) {
  std::string tag;
  Eigen::Index d = 0;
  if (!(in >> tag >> d) || tag != "P" || d < 1) fail_input("projection file: bad header");
  Eigen::MatrixXd p(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!(in >> p(i, j))) fail_input("projection file: truncated row");
    }
  }
  return p;
}

struct DeltaReport {
  RhoEstimate rho_input;
  double delta = 0.0;  // nats, filtered refit loss minus identity refit loss
  InlpResult result;
  double coverage = 0.0;
  double loss_filtered = 0.0;
  double loss_baseline = 0.0;
};

// Loss of the model whose output layer is refit with the inputs untouched.
// Deltas compare against this rather than the raw trained loss so that the
// refit procedure itself cancels out of the difference.
inline double delta_baseline(const EmbeddingSet& emb, const std::vector<std::string>& corpus) {
  EmbeddingSet refit = refit_output_layer(emb, emb.input_vectors, corpus);
  return eval_loss(refit, corpus, LossObjective::full_softmax).nats_per_prediction;
}

// One weighted row per (type, tag) pair seen on an in-vocabulary token.
// Refuses annotations the embedding vocabulary barely covers; the probe would
// then be trained on an unrepresentative sliver of the corpus.
inline LabeledVectors labeled_vectors_from_annotation(const EmbeddingSet& emb,
                                                      const AnnotatedCorpus& annotation,
                                                      double* coverage_out = nullptr) {
  validate_embeddings(emb);
  std::map<std::pair<std::size_t, std::string>, double> cells;
  std::uint64_t covered = 0, total = 0;
  for (const auto& sentence : annotation.sentences) {
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
      ++total;
      auto it = emb.index.find(sentence.tokens[i]);
      if (it == emb.index.end()) continue;
      ++covered;
      cells[std::make_pair(it->second, sentence.tags[i])] += 1.0;
    }
  }
  if (total == 0) fail_input("annotated corpus has no tokens");
  double coverage = static_cast<double>(covered) / static_cast<double>(total);
  if (coverage < 0.8) {
    fail_input("embedding vocabulary covers only " + std::to_string(coverage) +
               " of annotated tokens (need 0.8)");
  }

  LabeledVectors data;
  std::map<std::string, std::size_t> tag_ids;
  data.X.resize(cells.size(), emb.input_vectors.cols());
  std::size_t row = 0;
  for (const auto& [key, count] : cells) {
    const auto& [type_id, tag] = key;
    auto [it, fresh] = tag_ids.emplace(tag, tag_ids.size());
    data.X.row(row) = emb.input_vectors.row(type_id);
    data.y.push_back(it->second);
    data.weights.push_back(count);
    ++row;
  }
  data.tagset.resize(tag_ids.size());
  for (const auto& [tag, id] : tag_ids) data.tagset[id] = tag;
  if (coverage_out) *coverage_out = coverage;
  return data;
}

inline DeltaReport delta_loss(const EmbeddingSet& emb, const AnnotatedCorpus& annotation,
                              const std::vector<std::string>& corpus, double epsilon = 0.01,
                              const double* baseline = nullptr, int max_iters = -1,
                              const RhoOptions& rho_opt = {}) {
  DeltaReport report;
  LabeledVectors data = labeled_vectors_from_annotation(emb, annotation, &report.coverage);
  report.rho_input = estimate_rho(annotation, rho_opt);
  report.result = run_inlp(data, epsilon, max_iters);

  RowMatrixXd filtered_all = emb.input_vectors * report.result.stack.composed;
  EmbeddingSet refit = refit_output_layer(emb, filtered_all, corpus);
  report.loss_filtered =
      eval_loss(refit, corpus, LossObjective::full_softmax).nats_per_prediction;
  report.loss_baseline = baseline ? *baseline : delta_baseline(emb, corpus);
  report.delta = report.loss_filtered - report.loss_baseline;
  return report;
}

}  // namespace entcoef

#endif
