#pragma once

// CKY chart parsing for binarized PCFGs. Every consequent item [A, i, k] of
// width two or more is entered only if the allowability predicate accepts it;
// antecedents are never re-checked.

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chartcons/constraints.hpp"
#include "chartcons/pcfg.hpp"
#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

class Chart {
 public:
  /// Best derivation of one item. rule == -1 marks a terminal seed;
  /// split == -1 marks a unary rule application.
  struct Entry {
    double score = kNegInf;
    int rule = -1;
    int split = -1;
  };

  struct Cell {
    std::vector<Entry> entries;  // dense over symbols, allocated on first use
    std::vector<SymbolId> present;
    bool empty() const { return present.empty(); }
  };

  Chart(const Pcfg& g, std::vector<std::string> tokens)
      : grammar_(&g), tokens_(std::move(tokens)), n_(static_cast<int>(tokens_.size())),
        cells_(static_cast<size_t>(n_) * (n_ + 1) / 2 + 1) {}

  int n() const { return n_; }
  const Pcfg& grammar() const { return *grammar_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  const Cell& cell(int i, int k) const { return cells_[index(i, k)]; }
  Cell& cell(int i, int k) { return cells_[index(i, k)]; }

  double score(SymbolId a, int i, int k) const {
    const Cell& c = cell(i, k);
    return c.entries.empty() ? kNegInf : c.entries[a].score;
  }
  bool has(SymbolId a, int i, int k) const { return score(a, i, k) > kNegInf; }
  const Entry& entry(SymbolId a, int i, int k) const { return cell(i, k).entries[a]; }

  /// Number of derived nonterminal items (terminal seeds are not counted).
  size_t item_count() const { return item_count_; }

  /// Calls fn(symbol, i, k, score) for every nonterminal item.
  template <typename Fn>
  void for_each_item(Fn&& fn) const {
    for (int w = 1; w <= n_; ++w)
      for (int i = 0; i + w <= n_; ++i) {
        const Cell& c = cell(i, i + w);
        for (SymbolId s : c.present)
          if (!grammar_->is_terminal(s)) fn(s, i, i + w, c.entries[s].score);
      }
  }

 private:
  friend Chart parse(const Pcfg&, const std::vector<std::string>&, const PcfgPredicate&);

  size_t index(int i, int k) const {
    // Cells ordered by start; row i holds ends i+1..n.
    return static_cast<size_t>(i) * n_ - static_cast<size_t>(i) * (i - 1) / 2 + (k - i - 1);
  }

  const Pcfg* grammar_;
  std::vector<std::string> tokens_;
  int n_;
  std::vector<Cell> cells_;
  size_t item_count_ = 0;
};

/// Fills a CKY chart for `tokens`. Tokens unknown to the grammar leave their
/// column empty; failure shows up as a missing goal item, not an exception.
inline Chart parse(const Pcfg& g, const std::vector<std::string>& tokens,
                   const PcfgPredicate& allow) {
  Chart chart(g, tokens);
  const int n = chart.n();
  const int num_symbols = g.num_symbols();
  const int num_nt = g.num_nonterminals();

  // Per-span cache of predicate answers: 0 unknown, 1 allowed, 2 banned.
  std::vector<unsigned> stamp(num_symbols, 0);
  std::vector<char> verdict(num_symbols, 0);
  unsigned generation = 0;
  int cur_i = 0, cur_k = 0;
  auto allowed = [&](SymbolId a) {
    if (stamp[a] != generation) {
      stamp[a] = generation;
      verdict[a] = allow(PcfgItem{a, g.is_new(a), cur_i, cur_k}) ? 1 : 2;
    }
    return verdict[a] == 1;
  };

  auto touch = [&](Chart::Cell& c) {
    if (c.entries.empty()) c.entries.assign(num_symbols, {});
  };
  auto add_present = [&](Chart::Cell& c, SymbolId a) {
    c.present.push_back(a);
    if (a < num_nt) ++chart.item_count_;
  };

  auto unary_closure = [&](Chart::Cell& c, bool filtered) {
    if (c.empty()) return;
    for (int pass = 0; pass < std::max(num_nt, 1); ++pass) {
      bool changed = false;
      for (size_t idx = 0; idx < c.present.size(); ++idx) {
        SymbolId b = c.present[idx];
        const double sb = c.entries[b].score;
        for (const auto& u : g.unary_by_child(b)) {
          const double cand = sb + u.logprob;
          Chart::Entry& e = c.entries[u.lhs];
          if (cand <= e.score) continue;
          if (filtered && !allowed(u.lhs)) continue;
          if (e.score == kNegInf) add_present(c, u.lhs);
          e = {cand, u.rule, -1};
          changed = true;
        }
      }
      if (!changed) break;
    }
  };

  for (int i = 0; i < n; ++i) {
    Chart::Cell& c = chart.cell(i, i + 1);
    SymbolId t = g.find_terminal(tokens[i]);
    if (t < 0) continue;
    touch(c);
    c.entries[t] = {0.0, -1, -1};
    add_present(c, t);
    unary_closure(c, false);
  }

  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      const int k = i + width;
      ++generation;
      cur_i = i;
      cur_k = k;
      if (!allow.span_may_pass(i, k)) continue;
      Chart::Cell& c = chart.cell(i, k);
      for (int j = i + 1; j < k; ++j) {
        const Chart::Cell& left = chart.cell(i, j);
        const Chart::Cell& right = chart.cell(j, k);
        if (left.empty() || right.empty()) continue;
        for (SymbolId b : left.present) {
          const double sb = left.entries[b].score;
          for (const auto& rule : g.binary_by_left(b)) {
            const double sc = right.entries[rule.right].score;
            if (sc == kNegInf) continue;
            const double cand = sb + sc + rule.logprob;
            if (!c.entries.empty()) {
              const Chart::Entry& cur = c.entries[rule.lhs];
              if (cand < cur.score) continue;
              if (cand == cur.score &&
                  (j > cur.split || (j == cur.split && rule.rule >= cur.rule)))
                continue;
            }
            if (!allowed(rule.lhs)) continue;
            touch(c);
            Chart::Entry& e = c.entries[rule.lhs];
            if (e.score == kNegInf) add_present(c, rule.lhs);
            e = {cand, rule.rule, j};
          }
        }
      }
      unary_closure(c, true);
    }
  }
  return chart;
}

struct ViterbiResult {
  Tree tree;
  double logprob;
};

namespace detail {

inline Tree build_viterbi(const Chart& chart, SymbolId a, int i, int k) {
  const Pcfg& g = chart.grammar();
  const Chart::Entry& e = chart.entry(a, i, k);
  if (e.rule < 0) return Tree(g.name(a));
  const Rule& r = g.rules()[e.rule];
  Tree node(g.name(a), {}, g.is_new(a));
  if (e.split < 0) {
    node.children.push_back(build_viterbi(chart, r.rhs[0], i, k));
  } else {
    node.children.push_back(build_viterbi(chart, r.rhs[0], i, e.split));
    node.children.push_back(build_viterbi(chart, r.rhs[1], e.split, k));
  }
  return node;
}

}  // namespace detail

/// Best derivation of [start, 0, n] by backpointer walk, or nullopt when the
/// goal item was never derived. Binary ties prefer the lower split point, then
/// the earlier rule; unary rules replace an item only on a strictly better score.
inline std::optional<ViterbiResult> viterbi(const Chart& chart, SymbolId start) {
  if (chart.n() == 0 || start < 0 || !chart.has(start, 0, chart.n())) return std::nullopt;
  return ViterbiResult{detail::build_viterbi(chart, start, 0, chart.n()),
                       chart.score(start, 0, chart.n())};
}

inline std::optional<ViterbiResult> viterbi(const Chart& chart) {
  return viterbi(chart, chart.grammar().start());
}

struct ChartStats {
  size_t item_count = 0;
  double gold_fraction = 0.0;
};

/// Spans of all internal nodes of the gold tree after binarization, so that
/// binarization intermediates count as gold.
inline std::set<std::pair<int, int>> gold_spans(const Tree& gold,
                                                Factoring factoring = Factoring::kLeft) {
  std::set<std::pair<int, int>> spans;
  const Tree bin = binarize(gold, 0, factoring);
  for (const auto& c : constituents(bin)) spans.emplace(c.begin, c.end);
  return spans;
}

/// Fraction of chart items whose span matches a gold constituent (or gold
/// binarization intermediate). An empty chart reports 0.
inline ChartStats chart_stats(const Chart& chart, const Tree& gold,
                              Factoring factoring = Factoring::kLeft) {
  const auto spans = gold_spans(gold, factoring);
  ChartStats st;
  size_t consistent = 0;
  chart.for_each_item([&](SymbolId, int i, int k, double) {
    ++st.item_count;
    if (spans.count({i, k})) ++consistent;
  });
  st.gold_fraction = st.item_count ? static_cast<double>(consistent) / st.item_count : 0.0;
  return st;
}

}  // namespace chartcons
