#pragma once

// Synthetic annotation ladders. Each step picks the two least frequent tags
// (ties broken by tag string) and replaces both with a fresh tag everywhere,
// so step k uses exactly m-k distinct tags. Iterated to m-1 steps this
// degrades a real tagset down to a single constant tag.

#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "entcoef/corpus.hpp"
#include "entcoef/errors.hpp"

namespace entcoef {

struct LadderStep {
  std::size_t annotation_id = 0;  // k, counting the original corpus as 0
  std::pair<std::string, std::string> merged_pair;
  std::string new_tag;
  AnnotatedCorpus corpus;
};

struct ConflationLadder {
  AnnotatedCorpus original;
  std::vector<LadderStep> steps;

  // Corpus for annotation id k, where 0 is the untouched original.
  const AnnotatedCorpus& corpus_at(std::size_t k) const {
    if (k == 0) return original;
    return steps.at(k - 1).corpus;
  }

  std::size_t annotation_count() const { return steps.size() + 1; }
};

namespace detail {

// The two least frequent tags under (count ascending, tag string ascending).
inline std::pair<std::size_t, std::size_t> least_frequent_pair(const TagHistogram& hist) {
  auto better = [&](std::size_t a, std::size_t b) {
    if (hist.counts[a] != hist.counts[b]) return hist.counts[a] < hist.counts[b];
    return hist.tags[a] < hist.tags[b];
  };
  std::size_t lo = 0, second = 1;
  if (better(second, lo)) std::swap(lo, second);
  for (std::size_t i = 2; i < hist.tags.size(); ++i) {
    if (better(i, lo)) {
      second = lo;
      lo = i;
    } else if (better(i, second)) {
      second = i;
    }
  }
  return {lo, second};
}

inline std::string fresh_tag_name(std::size_t k, const std::vector<std::string>& tagset) {
  std::string name = "X" + std::to_string(k);
  std::unordered_set<std::string> in_use(tagset.begin(), tagset.end());
  while (in_use.count(name)) name += "_";
  return name;
}

}  // namespace detail

inline AnnotatedCorpus conflate_step(const AnnotatedCorpus& corpus, std::size_t k,
                                     LadderStep* record = nullptr) {
  TagHistogram hist = tag_histogram(corpus);
  if (hist.distinct() < 2) fail_input("ladder exhausted: corpus uses a single tag");
  auto [lo, second] = detail::least_frequent_pair(hist);
  const std::string& a = hist.tags[lo];
  const std::string& b = hist.tags[second];
  const std::string merged = detail::fresh_tag_name(k, corpus.tagset);

  AnnotatedCorpus out;
  out.source_name = corpus.source_name;
  out.sentences = corpus.sentences;
  for (auto& s : out.sentences) {
    for (auto& tag : s.tags) {
      if (tag == a || tag == b) tag = merged;
    }
  }
  out.rebuild_tagset();
  if (record) {
    record->annotation_id = k;
    record->merged_pair = {a, b};
    record->new_tag = merged;
    record->corpus = out;
  }
  return out;
}

inline ConflationLadder conflate_ladder(const AnnotatedCorpus& corpus) {
  if (tag_histogram(corpus).distinct() < 2) {
    fail_input("ladder requires at least 2 distinct tags");
  }
  ConflationLadder ladder;
  ladder.original = corpus;
  const AnnotatedCorpus* current = &ladder.original;
  for (std::size_t k = 1; tag_histogram(*current).distinct() > 1; ++k) {
    LadderStep step;
    conflate_step(*current, k, &step);
    ladder.steps.push_back(std::move(step));
    current = &ladder.steps.back().corpus;
  }
  return ladder;
}

}  // namespace entcoef
