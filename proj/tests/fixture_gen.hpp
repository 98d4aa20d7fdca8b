#pragma once

// Synthetic corpus generator for the end-to-end fixtures. The text is built
// from three layers of structure so that every stage of the pipeline has
// something real to measure:
//
//   - a sticky topic process picks which sublexicon is active, giving the
//     embeddings long-range co-occurrence clusters;
//   - a tag Markov chain (step to the next tag in a cycle with probability
//     stay_cycle, otherwise jump uniformly) gives the tag sequence real
//     entropy while keeping neighboring tags predictive of each other;
//   - the emitted token is drawn from the (topic, tag) cell of the lexicon,
//     so the tag is a deterministic function of the type and shows up in the
//     type's co-occurrence profile.
//
// Conflating tags then genuinely lowers both the tag entropy and the amount
// of linearly recoverable tag information, which is the trend the ladder
// report is supposed to expose.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "entcoef/rng.hpp"

namespace fixture {

struct CorpusSpec {
  std::size_t topics = 4;
  std::size_t tags = 8;
  std::size_t types_per_cell = 16;  // vocabulary = topics * tags * types_per_cell
  std::size_t tokens = 700000;
  std::size_t sentence_len = 20;    // annotation sentence boundary interval
  double topic_switch = 1.0 / 40.0; // per-token probability of a new topic
  double stay_cycle = 0.7;          // tag steps +1 with this probability
  std::uint64_t seed = 1;
};

struct TaggedToken {
  std::string token;
  std::string tag;
};

inline std::string type_name(std::size_t topic, std::size_t tag, std::size_t idx) {
  return "w" + std::to_string(topic) + "x" + std::to_string(tag) + "i" + std::to_string(idx);
}

inline std::string tag_name(std::size_t tag) {
  std::string num = std::to_string(tag);
  if (num.size() < 2) num = "0" + num;
  return "T" + num;
}

inline std::vector<TaggedToken> generate_corpus(const CorpusSpec& spec) {
  entcoef::Rng rng(spec.seed);
  std::vector<TaggedToken> out;
  out.reserve(spec.tokens);
  std::size_t topic = 0, tag = 0;
  for (std::size_t i = 0; i < spec.tokens; ++i) {
    if (rng.next_double() < spec.topic_switch) topic = rng.next_below(spec.topics);
    if (rng.next_double() < spec.stay_cycle) {
      tag = (tag + 1) % spec.tags;
    } else {
      tag = rng.next_below(spec.tags);
    }
    std::size_t idx = rng.next_below(spec.types_per_cell);
    out.push_back(TaggedToken{type_name(topic, tag, idx), tag_name(tag)});
  }
  return out;
}

// Raw token stream, whitespace separated.
inline void write_raw(const std::vector<TaggedToken>& corpus, const std::string& path) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i) out << ' ';
    out << corpus[i].token;
  }
  out << '\n';
}

enum class Tagging {
  generated,   // the tag the generator assigned
  token_copy,  // tag equals the token (T = W)
  constant     // one tag everywhere
};

// Annotation in the two-column format, sentence breaks every sentence_len
// tokens.
inline void write_annotation(const std::vector<TaggedToken>& corpus, std::size_t sentence_len,
                             Tagging tagging, const std::string& path) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const TaggedToken& t = corpus[i];
    const std::string& tag = tagging == Tagging::generated ? t.tag
                             : tagging == Tagging::token_copy ? t.token
                                                              : std::string("TAG");
    out << t.token << '\t' << (tagging == Tagging::constant ? "TAG" : tag) << '\n';
    if ((i + 1) % sentence_len == 0) out << '\n';
  }
}

}  // namespace fixture
