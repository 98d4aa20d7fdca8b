#pragma once

// Tagged corpora. Two input formats are supported:
//
//   tsv      one "token<TAB>tag" pair per line, blank line ends a sentence
//   conllu   the usual 10-column treebank format; FORM is column 2, the tag
//            is UPOS (column 4) or XPOS (column 5); comment lines and rows
//            whose ID is not a plain integer (multiword ranges like "3-4",
//            empty nodes like "5.1") are skipped
//
// Tags are opaque, case-sensitive symbols. A "_" in a tag column is kept
// verbatim; callers that need a real tagset should pick the column that has
// one.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entcoef/errors.hpp"

namespace entcoef {

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

struct AnnotatedCorpus {
  std::vector<Sentence> sentences;
  std::vector<std::string> tagset;  // distinct tags, first-seen order
  std::string source_name;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.tokens.size();
    return n;
  }

  // Recomputes tagset from the sentences, preserving first-seen order.
  void rebuild_tagset() {
    tagset.clear();
    std::unordered_map<std::string, bool> seen;
    for (const auto& s : sentences) {
      for (const auto& tag : s.tags) {
        if (seen.emplace(tag, true).second) tagset.push_back(tag);
      }
    }
  }
};

enum class TagColumn { upos, xpos };
enum class CorpusFormat { tsv, conllu };

namespace detail {

inline std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool integer_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(),
                     [](unsigned char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

inline AnnotatedCorpus parse_corpus(std::istream& in, CorpusFormat format,
                                    TagColumn column = TagColumn::upos) {
  AnnotatedCorpus corpus;
  Sentence current;
  std::string line;
  std::size_t lineno = 0;
  auto flush_sentence = [&] {
    if (!current.tokens.empty()) {
      corpus.sentences.push_back(std::move(current));
      current = Sentence{};
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) {
      flush_sentence();
      continue;
    }
    if (format == CorpusFormat::tsv) {
      auto fields = detail::split_on(line, '\t');
      if (fields.size() != 2) {
        fail_input("tsv line " + std::to_string(lineno) + ": expected 2 columns, got " +
                   std::to_string(fields.size()));
      }
      if (fields[0].empty() || fields[1].empty()) {
        fail_input("tsv line " + std::to_string(lineno) + ": empty token or tag");
      }
      current.tokens.emplace_back(fields[0]);
      current.tags.emplace_back(fields[1]);
    } else {
      if (line[0] == '#') continue;
      auto fields = detail::split_on(line, '\t');
      if (fields.size() < 5) {
        fail_input("conllu line " + std::to_string(lineno) +
                   ": expected at least 5 columns, got " + std::to_string(fields.size()));
      }
      if (!detail::integer_id(fields[0])) continue;  // range or empty-node row
      std::string_view form = fields[1];
      std::string_view tag = column == TagColumn::upos ? fields[3] : fields[4];
      if (form.empty()) {
        fail_input("conllu line " + std::to_string(lineno) + ": empty FORM");
      }
      if (tag.empty()) {
        fail_input("conllu line " + std::to_string(lineno) + ": empty tag column");
      }
      current.tokens.emplace_back(form);
      current.tags.emplace_back(tag);
    }
  }
  flush_sentence();
  if (corpus.sentences.empty()) fail_input("no sentences");
  corpus.rebuild_tagset();
  return corpus;
}

inline AnnotatedCorpus parse_corpus_file(const std::string& path, CorpusFormat format,
                                         TagColumn column = TagColumn::upos) {
  std::ifstream in(path);
  if (!in) fail_config("cannot open annotations file: " + path);
  AnnotatedCorpus corpus = parse_corpus(in, format, column);
  corpus.source_name = path;
  return corpus;
}

inline CorpusFormat corpus_format_from_name(const std::string& name) {
  if (name == "tsv") return CorpusFormat::tsv;
  if (name == "conllu") return CorpusFormat::conllu;
  fail_config("unknown annotations format: " + name + " (expected tsv or conllu)");
}

inline void serialize_tsv(const AnnotatedCorpus& corpus, std::ostream& out) {
  bool first = true;
  for (const auto& s : corpus.sentences) {
    if (!first) out << '\n';
    first = false;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i] << '\t' << s.tags[i] << '\n';
    }
  }
}

// Tag counts in first-seen order, so every downstream consumer iterates the
// same deterministic ordering.
struct TagHistogram {
  std::vector<std::string> tags;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t distinct() const { return tags.size(); }

  std::uint64_t count_of(const std::string& tag) const {
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i] == tag) return counts[i];
    }
    return 0;
  }
};

inline TagHistogram tag_histogram(const AnnotatedCorpus& corpus) {
  if (corpus.sentences.empty()) fail_input("tag histogram of an empty corpus is undefined");
  TagHistogram hist;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : corpus.sentences) {
    for (const auto& tag : s.tags) {
      auto [it, inserted] = index.emplace(tag, hist.tags.size());
      if (inserted) {
        hist.tags.push_back(tag);
        hist.counts.push_back(0);
      }
      ++hist.counts[it->second];
      ++hist.total;
    }
  }
  return hist;
}

// Accuracy of always guessing the most frequent tag.
inline double majority_class_accuracy(const TagHistogram& hist) {
  if (hist.total == 0) fail_input("majority class of an empty histogram is undefined");
  std::uint64_t best = *std::max_element(hist.counts.begin(), hist.counts.end());
  return static_cast<double>(best) / static_cast<double>(hist.total);
}

inline double majority_class_accuracy(const AnnotatedCorpus& corpus) {
  return majority_class_accuracy(tag_histogram(corpus));
}

}  // namespace entcoef
