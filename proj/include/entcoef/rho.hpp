#pragma once

// Entropy coefficient estimation. For a deterministic per-token annotation
// the coefficient reduces to a ratio of sequence entropies, each estimated
// by the held-out cross-entropy of an autoregressive model:
//
//   rho = H[tags] / H[tokens]
//
// Both models are trained on the same deterministic sentence split so the
// ratio compares like with like. The ratio is clamped to [0, 1]; sampling
// noise can push the raw quotient marginally outside.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "entcoef/corpus.hpp"
#include "entcoef/errors.hpp"
#include "entcoef/ngram.hpp"

namespace entcoef {

struct RhoOptions {
  int order = 3;
  double train_fraction = 0.9;
  double heldout_fraction = 0.1;
  // Tags form a closed set, so they keep every symbol; token vocabularies
  // are open and rare tokens become <unk>.
  std::uint64_t token_min_count = 2;
  std::uint64_t tag_min_count = 1;
};

struct RhoEstimate {
  double rho = 0.0;
  EntropyEstimate h_tags;
  EntropyEstimate h_tokens;
  std::string estimator_name;
};

struct SentenceSplit {
  std::size_t train_count = 0;
  std::size_t heldout_count = 0;
};

inline SentenceSplit split_by_index(std::size_t sentence_count, double train_fraction,
                                    double heldout_fraction) {
  if (train_fraction <= 0.0 || heldout_fraction <= 0.0 ||
      train_fraction + heldout_fraction > 1.0 + 1e-12) {
    fail_config("split fractions must be positive and sum to at most 1");
  }
  SentenceSplit split;
  split.train_count = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(sentence_count) + 1e-9));
  split.heldout_count = static_cast<std::size_t>(
      std::floor(heldout_fraction * static_cast<double>(sentence_count) + 1e-9));
  if (split.train_count + split.heldout_count > sentence_count) {
    split.heldout_count = sentence_count - split.train_count;
  }
  if (split.train_count == 0 || split.heldout_count == 0) {
    fail_input("degenerate split: " + std::to_string(split.train_count) + " train / " +
               std::to_string(split.heldout_count) + " held-out sentences");
  }
  return split;
}

inline RhoEstimate rho_from_entropies(const EntropyEstimate& h_tags,
                                      const EntropyEstimate& h_tokens,
                                      const std::string& estimator_name) {
  if (h_tokens.nats_per_token <= 0.0) {
    fail_input("token entropy estimate must be positive to form a ratio");
  }
  RhoEstimate est;
  est.h_tags = h_tags;
  est.h_tokens = h_tokens;
  est.estimator_name = estimator_name;
  est.rho = std::min(1.0, std::max(0.0, h_tags.nats_per_token / h_tokens.nats_per_token));
  return est;
}

inline RhoEstimate estimate_rho(const AnnotatedCorpus& corpus, const RhoOptions& opt = {}) {
  if (corpus.sentences.size() < 2) {
    fail_input("rho estimation needs at least 2 sentences, got " +
               std::to_string(corpus.sentences.size()));
  }
  SentenceSplit split =
      split_by_index(corpus.sentences.size(), opt.train_fraction, opt.heldout_fraction);

  std::vector<std::vector<std::string>> token_train, token_held, tag_train, tag_held;
  token_train.reserve(split.train_count);
  tag_train.reserve(split.train_count);
  for (std::size_t i = 0; i < split.train_count + split.heldout_count; ++i) {
    const Sentence& s = corpus.sentences[i];
    if (i < split.train_count) {
      token_train.push_back(s.tokens);
      tag_train.push_back(s.tags);
    } else {
      token_held.push_back(s.tokens);
      tag_held.push_back(s.tags);
    }
  }

  NGramModel token_model = NGramModel::train(token_train, opt.order, opt.token_min_count);
  NGramModel tag_model = NGramModel::train(tag_train, opt.order, opt.tag_min_count);

  EntropyEstimate h_tokens = token_model.cross_entropy(token_held);
  EntropyEstimate h_tags = tag_model.cross_entropy(tag_held);
  h_tokens.source = "kn-" + std::to_string(opt.order) + ":tokens";
  h_tags.source = "kn-" + std::to_string(opt.order) + ":tags";

  return rho_from_entropies(h_tags, h_tokens, "kn-" + std::to_string(opt.order));
}

}  // namespace entcoef
