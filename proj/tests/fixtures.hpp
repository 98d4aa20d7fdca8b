#pragma once

// Shared synthetic fixtures for the test suite. Everything here is seeded
// and deterministic so expected values can be frozen in the tests.

#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "entcoef/corpus.hpp"
#include "entcoef/rng.hpp"

namespace fixtures {

// The 22-token example sentence used across the annotation tests: 14
// distinct tags, NN appears 4 times, IN 3 times.
inline std::string table_sentence_tsv() {
  return
      "When\tWRB\n"
      "a\tDT\n"
      "browser\tNN\n"
      "starts\tVBZ\n"
      "to\tTO\n"
      "edge\tVB\n"
      "near\tRB\n"
      "to\tIN\n"
      "consuming\tVBG\n"
      "500\tCD\n"
      "MB\tNNS\n"
      "of\tIN\n"
      "RAM\tNN\n"
      "on\tIN\n"
      "a\tDT\n"
      "regular\tJJ\n"
      "basis\tNN\n"
      ",\t,\n"
      "something\tNN\n"
      "is\tVBZ\n"
      "wrong\tJJ\n"
      ".\t.\n";
}

inline entcoef::AnnotatedCorpus table_sentence_corpus() {
  std::istringstream in(table_sentence_tsv());
  return entcoef::parse_corpus(in, entcoef::CorpusFormat::tsv);
}

// Draws an index from unnormalized weights.
inline std::size_t sample_weighted(entcoef::Rng& rng, const std::vector<double>& weights,
                                   double total) {
  double u = rng.next_double() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return i;
  }
  return weights.size() - 1;
}

struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t tag_classes = 12;
  std::size_t types_per_class = 40;
  std::size_t sentences = 400;
  std::size_t len_lo = 20;
  std::size_t len_hi = 40;
};

// A tagged corpus with Markov structure over tag classes and a Zipf-like
// type distribution inside each class. Each type belongs to exactly one
// class, so the annotation is a deterministic function of the token.
inline entcoef::AnnotatedCorpus make_synthetic_tagged(const SynthSpec& spec) {
  entcoef::Rng rng(spec.seed);
  const std::size_t k = spec.tag_classes;

  std::vector<std::string> tag_names(k);
  for (std::size_t c = 0; c < k; ++c) tag_names[c] = "T" + std::to_string(c);

  std::vector<double> type_weights(spec.types_per_class);
  for (std::size_t i = 0; i < spec.types_per_class; ++i) {
    type_weights[i] = 1.0 / static_cast<double>(i + 1);
  }
  const double type_total = std::accumulate(type_weights.begin(), type_weights.end(), 0.0);

  // A banded transition structure keeps the tag sequence predictable enough
  // that conflation visibly lowers its entropy.
  std::vector<std::vector<double>> trans(k, std::vector<double>(k));
  std::vector<double> trans_total(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      double w = 0.25;
      if (b == (a + 1) % k) w += 4.0;
      if (b == (a + 2) % k) w += 2.0;
      trans[a][b] = w;
      trans_total[a] += w;
    }
  }

  entcoef::AnnotatedCorpus corpus;
  corpus.source_name = "synthetic";
  corpus.sentences.reserve(spec.sentences);
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    std::size_t len = spec.len_lo + rng.next_below(spec.len_hi - spec.len_lo + 1);
    entcoef::Sentence sent;
    sent.tokens.reserve(len);
    sent.tags.reserve(len);
    std::size_t cls = rng.next_below(k);
    for (std::size_t i = 0; i < len; ++i) {
      std::size_t type = sample_weighted(rng, type_weights, type_total);
      sent.tokens.push_back("w" + std::to_string(cls) + "_" + std::to_string(type));
      sent.tags.push_back(tag_names[cls]);
      cls = sample_weighted(rng, trans[cls], trans_total[cls]);
    }
    corpus.sentences.push_back(std::move(sent));
  }
  corpus.rebuild_tagset();
  return corpus;
}

// Same corpus with the annotation replaced by a single constant tag.
inline entcoef::AnnotatedCorpus with_constant_tag(entcoef::AnnotatedCorpus corpus,
                                                  const std::string& tag = "ALL") {
  for (auto& s : corpus.sentences) {
    for (auto& t : s.tags) t = tag;
  }
  corpus.rebuild_tagset();
  return corpus;
}

// Same corpus with tag = token (the annotation carries all information).
inline entcoef::AnnotatedCorpus with_token_identity_tags(entcoef::AnnotatedCorpus corpus) {
  for (auto& s : corpus.sentences) s.tags = s.tokens;
  corpus.rebuild_tagset();
  return corpus;
}

// Random sentences over a small alphabet, for model round-trip and sum-to-1
// checks.
inline std::vector<std::vector<std::string>> random_sequences(std::uint64_t seed,
                                                              std::size_t alphabet,
                                                              std::size_t count,
                                                              std::size_t len_lo,
                                                              std::size_t len_hi) {
  entcoef::Rng rng(seed);
  std::vector<std::vector<std::string>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t len = len_lo + rng.next_below(len_hi - len_lo + 1);
    std::vector<std::string> seq;
    seq.reserve(len);
    for (std::size_t j = 0; j < len; ++j) {
      seq.push_back(std::string(1, static_cast<char>('a' + rng.next_below(alphabet))));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace fixtures
