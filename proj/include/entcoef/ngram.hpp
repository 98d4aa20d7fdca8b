#pragma once

// Interpolated Kneser-Ney n-gram language models over arbitrary symbol
// sequences (tokens or tags alike).
//
// Counting: each sentence is padded with order-1 <s> symbols and closed by
// </s>. Predicted positions are the real symbols plus </s>; <s> is context
// only and never a prediction target. The top level keeps raw counts; every
// lower level keeps continuation counts N1+(. w_1..w_k) derived from the raw
// counts one level up, which is what distinguishes Kneser-Ney from plain
// absolute discounting.
//
// Smoothing: one absolute discount per level, D = n1 / (n1 + 2 n2) from the
// count-of-counts of that level's table. Degenerate tables (n1 = 0, or no
// singletons/doubletons at all) fall back to D = 0.5, and D is capped just
// below 1 so that discounts stay in [0, 1) and every smoothed probability
// stays strictly positive. The base distribution is uniform over the
// predictable vocabulary (everything except <s>, so including </s> and
// <unk>), which makes every conditional distribution sum to 1 exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "entcoef/errors.hpp"

namespace entcoef {

using Symbol = std::uint32_t;

inline constexpr Symbol kBos = 0;
inline constexpr Symbol kEos = 1;
inline constexpr Symbol kUnk = 2;

struct EntropyEstimate {
  double nats_per_token = 0.0;
  std::uint64_t token_count = 0;
  int model_order = 0;
  std::string source;
};

inline EntropyEstimate import_external_entropy(double nats_per_token,
                                               std::uint64_t token_count,
                                               const std::string& name) {
  if (nats_per_token < 0.0) {
    fail_input("external entropy must be non-negative, got " + std::to_string(nats_per_token));
  }
  EntropyEstimate est;
  est.nats_per_token = nats_per_token;
  est.token_count = token_count;
  est.model_order = 0;  // not an n-gram estimate
  est.source = name;
  return est;
}

namespace detail {

inline std::string pack_ids(const Symbol* ids, std::size_t k) {
  std::string key(k * sizeof(Symbol), '\0');
  if (k > 0) std::memcpy(key.data(), ids, k * sizeof(Symbol));
  return key;
}

inline std::vector<Symbol> unpack_ids(const std::string& key) {
  std::vector<Symbol> ids(key.size() / sizeof(Symbol));
  if (!ids.empty()) std::memcpy(ids.data(), key.data(), key.size());
  return ids;
}

}  // namespace detail

class NGramModel {
 public:
  using CountTable = std::unordered_map<std::string, std::uint64_t>;
  struct ContextStats {
    std::uint64_t total = 0;     // sum of counts continuing this context
    std::uint64_t distinct = 0;  // number of distinct continuations
  };

  static NGramModel train(const std::vector<std::vector<std::string>>& sequences, int order,
                          std::uint64_t min_count = 1) {
    if (order < 1) fail_input("n-gram order must be >= 1, got " + std::to_string(order));
    if (sequences.empty()) fail_input("no training sequences");
    for (const auto& seq : sequences) {
      if (seq.empty()) fail_input("empty training sequence");
    }

    NGramModel m;
    m.order_ = order;
    m.vocab_ = {"<s>", "</s>", "<unk>"};

    // First pass: symbol frequencies, vocabulary in first-seen order.
    std::unordered_map<std::string, std::uint64_t> freq;
    std::vector<std::string> seen_order;
    for (const auto& seq : sequences) {
      for (const auto& sym : seq) {
        auto [it, inserted] = freq.emplace(sym, 0);
        if (inserted) seen_order.push_back(sym);
        ++it->second;
      }
    }
    for (const auto& sym : seen_order) {
      if (freq[sym] >= min_count && m.symbol_ids_.find(sym) == m.symbol_ids_.end()) {
        if (sym == "<s>" || sym == "</s>" || sym == "<unk>") continue;  // reserved
        m.symbol_ids_.emplace(sym, static_cast<Symbol>(m.vocab_.size()));
        m.vocab_.push_back(sym);
      }
    }

    // Second pass: raw n-gram counts at every level, one k-gram per
    // predicted position so nothing ever ends in <s>.
    m.raw_.assign(order, CountTable{});
    for (const auto& seq : sequences) {
      std::vector<Symbol> ids = m.pad(m.map_symbols(seq));
      for (std::size_t t = static_cast<std::size_t>(order) - 1; t < ids.size(); ++t) {
        for (int k = 1; k <= order; ++k) {
          ++m.raw_[k - 1][detail::pack_ids(&ids[t + 1 - k], k)];
        }
      }
    }

    m.rebuild_derived();
    return m;
  }

  int order() const { return order_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<double>& discounts() const { return discounts_; }

  // Predictable vocabulary size: everything except <s>.
  std::size_t predictable_vocab() const { return vocab_.size() - 1; }

  Symbol symbol_id(const std::string& sym) const {
    if (sym == "<s>") return kBos;
    if (sym == "</s>") return kEos;
    auto it = symbol_ids_.find(sym);
    return it == symbol_ids_.end() ? kUnk : it->second;
  }

  // p(w | history), history given oldest-first; only its last order-1
  // entries matter. Strictly positive for any w other than <s>.
  double prob(const std::vector<Symbol>& history, Symbol w) const {
    std::vector<Symbol> ctx(static_cast<std::size_t>(order_) - 1, kBos);
    const std::size_t n = std::min(history.size(), ctx.size());
    for (std::size_t i = 0; i < n; ++i) {
      ctx[ctx.size() - n + i] = history[history.size() - n + i];
    }
    return prob_level(order_, ctx.data(), w);
  }

  double prob(const std::vector<std::string>& history, const std::string& w) const {
    std::vector<Symbol> h;
    h.reserve(history.size());
    for (const auto& sym : history) h.push_back(symbol_id(sym));
    return prob(h, symbol_id(w));
  }

  // Sum of -ln p over the sequence's predicted positions (symbols + </s>).
  double neg_log_prob(const std::vector<std::string>& seq) const {
    std::vector<Symbol> ids = pad(map_symbols(seq));
    double total = 0.0;
    for (std::size_t t = static_cast<std::size_t>(order_) - 1; t < ids.size(); ++t) {
      total -= std::log(prob_level(order_, &ids[t + 1 - static_cast<std::size_t>(order_)], ids[t]));
    }
    return total;
  }

  EntropyEstimate cross_entropy(const std::vector<std::vector<std::string>>& heldout) const {
    if (heldout.empty()) fail_input("no held-out sequences");
    double total = 0.0;
    std::uint64_t positions = 0;
    for (const auto& seq : heldout) {
      if (seq.empty()) fail_input("empty held-out sequence");
      total += neg_log_prob(seq);
      positions += seq.size() + 1;  // symbols plus </s>
    }
    EntropyEstimate est;
    est.nats_per_token = total / static_cast<double>(positions);
    est.token_count = positions;
    est.model_order = order_;
    est.source = "kn-" + std::to_string(order_);
    return est;
  }

  // Line-oriented text serialization of the raw counts; everything else is
  // recomputed on load, so save/load/save round-trips byte-exactly.
  void save(std::ostream& out) const {
    out << "KN " << order_ << ' ' << vocab_.size() << '\n';
    for (const auto& sym : vocab_) out << sym << '\n';
    for (int k = 1; k <= order_; ++k) {
      std::vector<std::pair<std::string, std::uint64_t>> entries(raw_[k - 1].begin(),
                                                                 raw_[k - 1].end());
      std::sort(entries.begin(), entries.end());
      for (const auto& [key, count] : entries) {
        out << k;
        for (Symbol id : detail::unpack_ids(key)) out << ' ' << id;
        out << ' ' << count << '\n';
      }
    }
  }

  static NGramModel load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail_input("empty n-gram model stream");
    std::istringstream header(line);
    std::string magic;
    int order = 0;
    std::size_t vocab_size = 0;
    header >> magic >> order >> vocab_size;
    if (magic != "KN" || order < 1 || vocab_size < 3) {
      fail_input("malformed n-gram model header: " + line);
    }
    NGramModel m;
    m.order_ = order;
    m.vocab_.reserve(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
      if (!std::getline(in, line)) fail_input("n-gram model vocabulary truncated");
      m.vocab_.push_back(line);
      if (i >= 3) m.symbol_ids_.emplace(line, static_cast<Symbol>(i));
    }
    m.raw_.assign(order, CountTable{});
    std::size_t lineno = vocab_size + 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream row(line);
      int k = 0;
      if (!(row >> k) || k < 1 || k > order) {
        fail_input("n-gram model line " + std::to_string(lineno) + ": bad level");
      }
      std::vector<Symbol> ids(static_cast<std::size_t>(k));
      for (auto& id : ids) {
        std::uint64_t v = 0;
        if (!(row >> v) || v >= vocab_size) {
          fail_input("n-gram model line " + std::to_string(lineno) + ": bad symbol id");
        }
        id = static_cast<Symbol>(v);
      }
      std::uint64_t count = 0;
      if (!(row >> count) || count == 0) {
        fail_input("n-gram model line " + std::to_string(lineno) + ": bad count");
      }
      m.raw_[k - 1][detail::pack_ids(ids.data(), ids.size())] = count;
    }
    m.rebuild_derived();
    return m;
  }

 private:
  std::vector<Symbol> map_symbols(const std::vector<std::string>& seq) const {
    std::vector<Symbol> out;
    out.reserve(seq.size());
    for (const auto& sym : seq) out.push_back(symbol_id(sym));
    return out;
  }

  std::vector<Symbol> pad(std::vector<Symbol> body) const {
    std::vector<Symbol> ids(static_cast<std::size_t>(order_) - 1, kBos);
    ids.insert(ids.end(), body.begin(), body.end());
    ids.push_back(kEos);
    return ids;
  }

  // Table actually interpolated at a level: raw at the top, continuation
  // counts below.
  const CountTable& level_table(int k) const {
    return k == order_ ? raw_[k - 1] : cont_[k - 1];
  }

  double prob_level(int k, const Symbol* ctx, Symbol w) const {
    const double base = 1.0 / static_cast<double>(predictable_vocab());
    if (k == 1) {
      const CountTable& tab = level_table(1);
      if (unigram_total_ == 0) return base;
      const double total = static_cast<double>(unigram_total_);
      const double d = discounts_[0];
      auto it = tab.find(detail::pack_ids(&w, 1));
      const double c = it == tab.end() ? 0.0 : static_cast<double>(it->second);
      return std::max(c - d, 0.0) / total +
             d * static_cast<double>(unigram_distinct_) / total * base;
    }
    auto ctx_it = ctx_stats_[k - 1].find(detail::pack_ids(ctx, static_cast<std::size_t>(k) - 1));
    if (ctx_it == ctx_stats_[k - 1].end() || ctx_it->second.total == 0) {
      return prob_level(k - 1, ctx + 1, w);  // unseen context, defer entirely
    }
    const double total = static_cast<double>(ctx_it->second.total);
    const double d = discounts_[k - 1];
    std::vector<Symbol> key(ctx, ctx + k - 1);
    key.push_back(w);
    const CountTable& tab = level_table(k);
    auto it = tab.find(detail::pack_ids(key.data(), key.size()));
    const double c = it == tab.end() ? 0.0 : static_cast<double>(it->second);
    const double lower = prob_level(k - 1, ctx + 1, w);
    return std::max(c - d, 0.0) / total +
           d * static_cast<double>(ctx_it->second.distinct) / total * lower;
  }

  void rebuild_derived() {
    // Continuation counts: level k entry counts distinct raw predecessors
    // at level k+1.
    cont_.assign(order_, CountTable{});
    for (int k = 1; k < order_; ++k) {
      for (const auto& [key, count] : raw_[k]) {
        (void)count;
        ++cont_[k - 1][key.substr(sizeof(Symbol))];
      }
    }

    ctx_stats_.assign(order_, std::unordered_map<std::string, ContextStats>{});
    for (int k = 2; k <= order_; ++k) {
      for (const auto& [key, count] : level_table(k)) {
        ContextStats& s = ctx_stats_[k - 1][key.substr(0, key.size() - sizeof(Symbol))];
        s.total += count;
        s.distinct += 1;
      }
    }
    unigram_total_ = 0;
    unigram_distinct_ = 0;
    for (const auto& [key, count] : level_table(1)) {
      (void)key;
      unigram_total_ += count;
      unigram_distinct_ += 1;
    }

    discounts_.assign(order_, 0.0);
    for (int k = 1; k <= order_; ++k) {
      std::uint64_t n1 = 0, n2 = 0;
      for (const auto& [key, count] : level_table(k)) {
        (void)key;
        if (count == 1) ++n1;
        if (count == 2) ++n2;
      }
      double d = n1 == 0 ? 0.5
                         : static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
      discounts_[k - 1] = std::min(d, 1.0 - 1e-6);
    }
  }

  int order_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, Symbol> symbol_ids_;
  std::vector<CountTable> raw_;   // raw_[k-1]: level-k raw counts
  std::vector<CountTable> cont_;  // cont_[k-1]: level-k continuation counts (k < order)
  std::vector<std::unordered_map<std::string, ContextStats>> ctx_stats_;
  std::uint64_t unigram_total_ = 0;
  std::uint64_t unigram_distinct_ = 0;
  std::vector<double> discounts_;
};

}  // namespace entcoef
