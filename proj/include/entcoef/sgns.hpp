// Skip-gram embeddings with negative sampling, plus the full-softmax
// evaluation and output-layer refit used to measure loss changes after
// information removal.
#ifndef ENTCOEF_SGNS_HPP
#define ENTCOEF_SGNS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "entcoef/errors.hpp"
#include "entcoef/rng.hpp"

namespace entcoef {

// Row-major so that per-token vector rows are contiguous in the hot loops.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class SgnsOptimizer { sgd, adam };

struct SgnsConfig {
  int dim = 200;
  int epochs = 15;
  int negatives = 5;
  int window = 5;
  int min_count = 5;
  double subsample_t = 1e-4;
  int batch = 1024;
  std::uint64_t seed = 1;
  // The frequent-word expression sqrt(t/f) + t/f is used as a keep
  // probability by default; the flag treats it as a discard probability
  // instead, for anyone who wants the other reading of the recipe.
  bool flip_subsample = false;
  SgnsOptimizer optimizer = SgnsOptimizer::sgd;
  double initial_lr = 0.025;
};

inline void validate_sgns_config(const SgnsConfig& cfg) {
  if (cfg.dim < 2) fail_config("embedding dim must be at least 2");
  if (cfg.epochs < 1) fail_config("epochs must be positive");
  if (cfg.negatives < 1) fail_config("negative sample count must be positive");
  if (cfg.window < 1) fail_config("window must be positive");
  if (cfg.min_count < 1) fail_config("min_count must be positive");
  if (!(cfg.subsample_t > 0.0)) fail_config("subsample threshold must be positive");
  if (cfg.batch < 1) fail_config("batch must be positive");
  if (!(cfg.initial_lr > 0.0)) fail_config("learning rate must be positive");
}

struct EmbeddingSet {
  std::vector<std::string> vocab;  // first-seen order
  std::unordered_map<std::string, std::size_t> index;
  RowMatrixXd input_vectors;   // |V| x d, the word vectors
  RowMatrixXd output_vectors;  // |V| x d, the context / softmax vectors
  std::vector<std::uint64_t> unigram_counts;
  SgnsConfig config;  // settings the set was trained with; eval reuses window
  std::vector<double> train_epoch_losses;

  void rebuild_index() {
    index.clear();
    for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
  }
};

inline void validate_embeddings(const EmbeddingSet& emb) {
  const auto rows = static_cast<Eigen::Index>(emb.vocab.size());
  if (emb.input_vectors.rows() != rows || emb.output_vectors.rows() != rows) {
    fail_input("embedding matrix row count does not match vocabulary size");
  }
  if (emb.input_vectors.cols() != emb.output_vectors.cols()) {
    fail_input("input and output vector dimensions differ");
  }
  if (!emb.input_vectors.allFinite() || !emb.output_vectors.allFinite()) {
    fail_input("embedding matrices contain non-finite entries");
  }
}

// Whitespace-tokenized raw text, the whole stream as one token list.
inline std::vector<std::string> read_raw_tokens(std::istream& in) {
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

enum class LossObjective { negative_sampling, full_softmax };

struct LossReport {
  LossObjective objective = LossObjective::full_softmax;
  double nats_per_prediction = 0.0;
  std::uint64_t predictions = 0;
};

namespace detail {

inline double keep_probability(double freq, double t, bool flip) {
  double keep = std::min(1.0, std::sqrt(t / freq) + t / freq);
  return flip ? 1.0 - keep : keep;
}

// Cumulative table over counts^(3/4) for drawing negative samples.
struct NegativeTable {
  std::vector<double> cumulative;

  explicit NegativeTable(const std::vector<std::uint64_t>& counts) {
    cumulative.resize(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      acc += std::pow(static_cast<double>(counts[i]), 0.75);
      cumulative[i] = acc;
    }
    if (acc <= 0.0) fail_input("negative sampling table has no mass");
  }

  std::size_t draw(Rng& rng) const {
    double u = rng.next_double() * cumulative.back();
    return static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Windows never cross these block boundaries; the raw stream has no sentence
// structure, so fixed blocks stand in for document breaks.
constexpr std::size_t kStreamChunk = 1000;

// Deterministic skip-gram pair collection with a fixed symmetric window,
// aggregated to (center type, context type) -> count. Used by evaluation and
// refitting, where no window jitter or subsampling is wanted.
struct PairSet {
  std::vector<std::size_t> centers;  // ascending type ids
  std::vector<std::vector<std::pair<std::size_t, double>>> targets;
  double total = 0.0;
};

inline PairSet collect_pairs(const std::vector<std::size_t>& ids, std::size_t vocab_size,
                             int window) {
  std::unordered_map<std::uint64_t, double> agg;
  agg.reserve(ids.size() * 4);
  for (std::size_t chunk = 0; chunk < ids.size(); chunk += kStreamChunk) {
    std::size_t end = std::min(ids.size(), chunk + kStreamChunk);
    for (std::size_t i = chunk; i < end; ++i) {
      std::size_t lo = i - std::min<std::size_t>(i - chunk, window);
      std::size_t hi = std::min(end, i + window + 1);
      for (std::size_t j = lo; j < hi; ++j) {
        if (j == i) continue;
        agg[static_cast<std::uint64_t>(ids[i]) * vocab_size + ids[j]] += 1.0;
      }
    }
  }

  std::vector<std::pair<std::uint64_t, double>> flat(agg.begin(), agg.end());
  std::sort(flat.begin(), flat.end());
  PairSet pairs;
  for (const auto& [key, count] : flat) {
    std::size_t u = key / vocab_size;
    std::size_t v = key % vocab_size;
    if (pairs.centers.empty() || pairs.centers.back() != u) {
      pairs.centers.push_back(u);
      pairs.targets.emplace_back();
    }
    pairs.targets.back().emplace_back(v, count);
    pairs.total += count;
  }
  return pairs;
}

inline std::vector<std::size_t> ids_in_vocab(const EmbeddingSet& emb,
                                             const std::vector<std::string>& tokens) {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto it = emb.index.find(tok);
    if (it != emb.index.end()) ids.push_back(it->second);
  }
  return ids;
}

// Mean cross-entropy of predicting each context type from its center's input
// vector through the output matrix, bias-free. Chunked so the logit block
// stays small.
inline double full_softmax_loss(const RowMatrixXd& inputs, const RowMatrixXd& outputs,
                                const PairSet& pairs) {
  if (pairs.total <= 0.0) fail_input("no prediction pairs in stream");
  const std::size_t block = 256;
  double loss = 0.0;
  for (std::size_t start = 0; start < pairs.centers.size(); start += block) {
    std::size_t n = std::min(block, pairs.centers.size() - start);
    RowMatrixXd xs(n, inputs.cols());
    for (std::size_t r = 0; r < n; ++r) xs.row(r) = inputs.row(pairs.centers[start + r]);
    RowMatrixXd z = xs * outputs.transpose();
    for (std::size_t r = 0; r < n; ++r) {
      double mx = z.row(r).maxCoeff();
      double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
      for (const auto& [v, count] : pairs.targets[start + r]) {
        loss += count * (lse - z(r, v));
      }
    }
  }
  return loss / pairs.total;
}

// Gradient of the loss above with respect to the output matrix only.
inline RowMatrixXd full_softmax_output_grad(const RowMatrixXd& inputs,
                                            const RowMatrixXd& outputs, const PairSet& pairs) {
  const std::size_t block = 256;
  RowMatrixXd grad = RowMatrixXd::Zero(outputs.rows(), outputs.cols());
  for (std::size_t start = 0; start < pairs.centers.size(); start += block) {
    std::size_t n = std::min(block, pairs.centers.size() - start);
    RowMatrixXd xs(n, inputs.cols());
    for (std::size_t r = 0; r < n; ++r) xs.row(r) = inputs.row(pairs.centers[start + r]);
    RowMatrixXd z = xs * outputs.transpose();
    for (std::size_t r = 0; r < n; ++r) {
      double mx = z.row(r).maxCoeff();
      Eigen::ArrayXd p = (z.row(r).array() - mx).exp();
      p /= p.sum();
      double weight = 0.0;
      for (const auto& [v, count] : pairs.targets[start + r]) weight += count;
      z.row(r) = (p * weight).matrix();
      for (const auto& [v, count] : pairs.targets[start + r]) z(r, v) -= count;
    }
    grad.noalias() += z.transpose() * xs;
  }
  return grad / pairs.total;
}

}  // namespace detail

inline EmbeddingSet train_sgns(const std::vector<std::string>& raw_tokens,
                               const SgnsConfig& config) {
  validate_sgns_config(config);

  EmbeddingSet emb;
  emb.config = config;
  {
    std::unordered_map<std::string, std::uint64_t> counts;
    std::vector<std::string> order;
    for (const auto& tok : raw_tokens) {
      if (counts[tok]++ == 0) order.push_back(tok);
    }
    for (const auto& tok : order) {
      if (counts[tok] >= static_cast<std::uint64_t>(config.min_count)) {
        emb.vocab.push_back(tok);
        emb.unigram_counts.push_back(counts[tok]);
      }
    }
  }
  emb.rebuild_index();

  std::vector<std::size_t> corpus = detail::ids_in_vocab(emb, raw_tokens);
  if (corpus.size() < static_cast<std::size_t>(10 * config.window)) {
    fail_input("corpus too small after min-count filtering: " + std::to_string(corpus.size()) +
               " tokens");
  }

  const std::size_t v = emb.vocab.size();
  const int d = config.dim;
  Rng rng(config.seed);

  emb.input_vectors.resize(v, d);
  for (std::size_t i = 0; i < v; ++i) {
    for (int j = 0; j < d; ++j) emb.input_vectors(i, j) = (rng.next_double() - 0.5) / d;
  }
  emb.output_vectors = RowMatrixXd::Zero(v, d);

  std::vector<double> keep(v);
  for (std::size_t i = 0; i < v; ++i) {
    keep[i] = detail::keep_probability(
        static_cast<double>(emb.unigram_counts[i]) / corpus.size(), config.subsample_t,
        config.flip_subsample);
  }
  detail::NegativeTable table(emb.unigram_counts);

  const bool adam = config.optimizer == SgnsOptimizer::adam;
  RowMatrixXd m_in, v_in, m_out, v_out;
  std::map<std::size_t, Eigen::RowVectorXd> batch_in, batch_out;
  std::uint64_t adam_step = 0;
  int batch_fill = 0;
  if (adam) {
    m_in = v_in = RowMatrixXd::Zero(v, d);
    m_out = v_out = RowMatrixXd::Zero(v, d);
  }

  auto flush_batch = [&]() {
    if (batch_fill == 0) return;
    ++adam_step;
    double c1 = 1.0 - std::pow(0.9, static_cast<double>(adam_step));
    double c2 = 1.0 - std::pow(0.999, static_cast<double>(adam_step));
    auto apply = [&](std::map<std::size_t, Eigen::RowVectorXd>& grads, RowMatrixXd& m,
                     RowMatrixXd& vv, RowMatrixXd& params) {
      for (auto& [row, g] : grads) {
        m.row(row) = 0.9 * m.row(row) + 0.1 * g;
        vv.row(row) = 0.999 * vv.row(row) + 0.001 * g.cwiseProduct(g);
        params.row(row).array() -= config.initial_lr * (m.row(row).array() / c1) /
                                   ((vv.row(row).array() / c2).sqrt() + 1e-8);
      }
      grads.clear();
    };
    apply(batch_in, m_in, v_in, emb.input_vectors);
    apply(batch_out, m_out, v_out, emb.output_vectors);
    batch_fill = 0;
  };

  const double total_schedule =
      static_cast<double>(config.epochs) * static_cast<double>(corpus.size()) + 1.0;
  std::uint64_t processed = 0;
  Eigen::RowVectorXd in_grad(d);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::uint64_t epoch_pairs = 0;
    std::vector<std::size_t> kept;
    kept.reserve(detail::kStreamChunk);

    for (std::size_t chunk = 0; chunk < corpus.size(); chunk += detail::kStreamChunk) {
      std::size_t end = std::min(corpus.size(), chunk + detail::kStreamChunk);
      double lr = config.initial_lr *
                  std::max(1e-4, 1.0 - static_cast<double>(processed) / total_schedule);
      kept.clear();
      for (std::size_t i = chunk; i < end; ++i) {
        if (keep[corpus[i]] >= 1.0 || rng.next_double() < keep[corpus[i]]) {
          kept.push_back(corpus[i]);
        }
      }
      processed += end - chunk;

      for (std::size_t i = 0; i < kept.size(); ++i) {
        std::size_t center = kept[i];
        std::size_t reach = 1 + rng.next_below(static_cast<std::uint64_t>(config.window));
        std::size_t lo = i - std::min(i, reach);
        std::size_t hi = std::min(kept.size(), i + reach + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          std::size_t ctx = kept[j];
          in_grad.setZero();
          auto w = emb.input_vectors.row(center);

          for (int neg = -1; neg < config.negatives; ++neg) {
            std::size_t target;
            double label;
            if (neg < 0) {
              target = ctx;
              label = 1.0;
            } else {
              target = table.draw(rng);
              if (target == ctx) continue;
              label = 0.0;
            }
            auto c = emb.output_vectors.row(target);
            double score = w.dot(c);
            double s = detail::sigmoid(score);
            epoch_loss += label > 0.5 ? -std::log(std::max(s, 1e-300))
                                      : -std::log(std::max(1.0 - s, 1e-300));
            double g = s - label;
            in_grad += g * c;
            if (adam) {
              auto [it, fresh] = batch_out.try_emplace(target, Eigen::RowVectorXd::Zero(d));
              it->second += g * w;
            } else {
              emb.output_vectors.row(target) -= lr * g * w;
            }
          }
          if (adam) {
            auto [it, fresh] = batch_in.try_emplace(center, Eigen::RowVectorXd::Zero(d));
            it->second += in_grad;
            if (++batch_fill >= config.batch) flush_batch();
          } else {
            emb.input_vectors.row(center) -= lr * in_grad;
          }
          ++epoch_pairs;
        }
      }
    }
    if (adam) flush_batch();
    emb.train_epoch_losses.push_back(epoch_pairs ? epoch_loss / epoch_pairs : 0.0);
  }

  validate_embeddings(emb);
  return emb;
}

inline LossReport eval_loss(const EmbeddingSet& emb, const std::vector<std::string>& heldout,
                            LossObjective objective) {
  validate_embeddings(emb);
  if (heldout.empty()) fail_input("held-out stream is empty");
  std::vector<std::size_t> ids = detail::ids_in_vocab(emb, heldout);
  if (ids.empty()) fail_input("held-out stream shares no vocabulary with the embeddings");

  LossReport report;
  report.objective = objective;

  if (objective == LossObjective::full_softmax) {
    detail::PairSet pairs = detail::collect_pairs(ids, emb.vocab.size(), emb.config.window);
    report.nats_per_prediction = detail::full_softmax_loss(emb.input_vectors,
                                                           emb.output_vectors, pairs);
    report.predictions = static_cast<std::uint64_t>(pairs.total);
    return report;
  }

  // Negative-sampling score, mirrored from training but with the full fixed
  // window and no subsampling. Negatives are redrawn from the held-out
  // unigram^(3/4) distribution so the score is self-contained.
  std::vector<std::uint64_t> counts(emb.vocab.size(), 0);
  for (std::size_t id : ids) ++counts[id];
  detail::NegativeTable table(counts);
  std::uint64_t eval_seed = emb.config.seed ^ 0x9e3779b97f4a7c15ULL;
  Rng rng(splitmix64(eval_seed));

  double loss = 0.0;
  std::uint64_t n = 0;
  for (std::size_t chunk = 0; chunk < ids.size(); chunk += detail::kStreamChunk) {
    std::size_t end = std::min(ids.size(), chunk + detail::kStreamChunk);
    for (std::size_t i = chunk; i < end; ++i) {
      std::size_t lo = i - std::min<std::size_t>(i - chunk, emb.config.window);
      std::size_t hi = std::min(end, i + emb.config.window + 1);
      for (std::size_t j = lo; j < hi; ++j) {
        if (j == i) continue;
        auto w = emb.input_vectors.row(ids[i]);
        double s = detail::sigmoid(w.dot(emb.output_vectors.row(ids[j])));
        double pair_loss = -std::log(std::max(s, 1e-300));
        for (int neg = 0; neg < emb.config.negatives; ++neg) {
          std::size_t target = table.draw(rng);
          if (target == ids[j]) continue;
          double sn = detail::sigmoid(w.dot(emb.output_vectors.row(target)));
          pair_loss += -std::log(std::max(1.0 - sn, 1e-300));
        }
        loss += pair_loss;
        ++n;
      }
    }
  }
  if (n == 0) fail_input("no prediction pairs in stream");
  report.nats_per_prediction = loss / n;
  report.predictions = n;
  return report;
}

// Re-optimizes the output matrix against fixed (possibly filtered) input
// vectors on the exact full-softmax objective, warm-started from the current
// outputs. Nesterov momentum with a step size from the smoothness bound of
// the softmax loss; monotonicity is enforced by restart and halving.
inline EmbeddingSet refit_output_layer(const EmbeddingSet& emb,
                                       const RowMatrixXd& filtered_inputs,
                                       const std::vector<std::string>& corpus,
                                       bool frozen = true) {
  validate_embeddings(emb);
  if (!frozen) {
    fail_config("joint fine-tuning is not supported; the encoder stays frozen");
  }
  if (filtered_inputs.rows() != static_cast<Eigen::Index>(emb.vocab.size()) ||
      filtered_inputs.cols() != emb.input_vectors.cols()) {
    fail_input("filtered input matrix does not match the vocabulary layout");
  }
  if (!filtered_inputs.allFinite()) fail_input("filtered inputs contain non-finite entries");

  std::vector<std::size_t> ids = detail::ids_in_vocab(emb, corpus);
  detail::PairSet pairs = detail::collect_pairs(ids, emb.vocab.size(), emb.config.window);
  if (pairs.total <= 0.0) fail_input("no prediction pairs in stream");

  double max_sq = 0.0;
  for (std::size_t u : pairs.centers) {
    max_sq = std::max(max_sq, filtered_inputs.row(u).squaredNorm());
  }

  EmbeddingSet out = emb;
  out.input_vectors = filtered_inputs;
  if (max_sq <= 1e-18) {
    // All-zero inputs (or float dust below any meaningful scale): the logits
    // are pinned at zero, so there is nothing to optimize. Without this floor
    // the smoothness-scaled step size would blow up on the dust and recover
    // structure that is supposed to be gone.
    return out;
  }

  RowMatrixXd theta = emb.output_vectors;
  RowMatrixXd velocity = RowMatrixXd::Zero(theta.rows(), theta.cols());
  double lr = 1.5 / max_sq;
  double prev = detail::full_softmax_loss(filtered_inputs, theta, pairs);
  const double mu = 0.9;
  int calm = 0;

  for (int iter = 0; iter < 500 && calm < 3; ++iter) {
    RowMatrixXd lookahead = theta + mu * velocity;
    RowMatrixXd grad = detail::full_softmax_output_grad(filtered_inputs, lookahead, pairs);
    velocity = mu * velocity - lr * grad;
    RowMatrixXd proposal = theta + velocity;
    double cur = detail::full_softmax_loss(filtered_inputs, proposal, pairs);
    if (cur > prev) {
      // Momentum overshoot: restart it and take a shorter plain step.
      velocity.setZero();
      lr *= 0.5;
      proposal = theta - lr * detail::full_softmax_output_grad(filtered_inputs, theta, pairs);
      cur = detail::full_softmax_loss(filtered_inputs, proposal, pairs);
      if (cur > prev) {
        calm = 3;
        break;
      }
    }
    if (std::abs(prev - cur) / std::max(1.0, cur) < 1e-7) {
      ++calm;
    } else {
      calm = 0;
    }
    theta = proposal;
    prev = cur;
  }

  out.output_vectors = theta;
  validate_embeddings(out);
  return out;
}

// Classic text embedding format: "<vocab> <dim>" header, then one token and
// its vector per line. Input and output matrices go to separate files.
inline void write_embedding_matrix(const EmbeddingSet& emb, const RowMatrixXd& matrix,
                                   std::ostream& out) {
  out.precision(17);
  out << emb.vocab.size() << ' ' << matrix.cols() << '\n';
  for (std::size_t i = 0; i < emb.vocab.size(); ++i) {
    out << emb.vocab[i];
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) out << ' ' << matrix(i, j);
    out << '\n';
  }
}

inline std::pair<std::vector<std::string>, RowMatrixXd> read_embedding_matrix(std::istream& in) {
  std::size_t v = 0, d = 0;
  if (!(in >> v >> d) || v == 0 || d == 0) fail_input("embedding file: bad header");
  std::vector<std::string> vocab(v);
  RowMatrixXd matrix(v, d);
  for (std::size_t i = 0; i < v; ++i) {
    if (!(in >> vocab[i])) fail_input("embedding file: truncated at row " + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) {
      if (!(in >> matrix(i, j))) {
        fail_input("embedding file: truncated vector for token " + vocab[i]);
      }
    }
  }
  return {std::move(vocab), std::move(matrix)};
}

inline EmbeddingSet load_embedding_set(std::istream& input_file, std::istream& output_file,
                                       const SgnsConfig& config = SgnsConfig{}) {
  auto [vocab_in, in_m] = read_embedding_matrix(input_file);
  auto [vocab_out, out_m] = read_embedding_matrix(output_file);
  if (vocab_in != vocab_out) fail_input("input and output embedding files disagree on vocabulary");
  EmbeddingSet emb;
  emb.vocab = std::move(vocab_in);
  emb.input_vectors = std::move(in_m);
  emb.output_vectors = std::move(out_m);
  emb.unigram_counts.assign(emb.vocab.size(), 0);
  emb.config = config;
  emb.rebuild_index();
  validate_embeddings(emb);
  return emb;
}

}  // namespace entcoef

#endif
