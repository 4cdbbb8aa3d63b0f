#pragma once

// Agenda-driven TAG recognition over dotted elementary-tree positions with
// items [X, i, j, k, l]. A position is a node plus a state: a partial dot d
// (children 0..d-1 recognized), BOT (all children, before adjunction) or TOP
// (after adjunction or null adjunction). Every consequent is filtered by the
// allowability predicate; scores are max-product over tree logprobs.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "chartcons/constraints.hpp"
#include "chartcons/tag_grammar.hpp"
#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

struct DerivationNode;

struct DerivationEdge {
  int node;             // node index in the parent's elementary tree
  std::string address;  // Gorn address of that node
  char op;              // 's' substitution, 'a' adjunction
  std::vector<DerivationNode> child;  // exactly one element
};

struct DerivationNode {
  std::string tree_name;
  int tree = -1;
  int anchor_pos = -1;
  std::vector<DerivationEdge> children;  // sorted by node index
};

/// "name{addr:op(child),...}", children in preorder of their attachment node.
inline std::string format_derivation(const DerivationNode& d) {
  std::string out = d.tree_name;
  if (d.children.empty()) return out;
  out += '{';
  for (size_t c = 0; c < d.children.size(); ++c) {
    if (c) out += ',';
    const auto& e = d.children[c];
    out += e.address;
    out += ':';
    out += e.op;
    out += '(';
    out += format_derivation(e.child[0]);
    out += ')';
  }
  out += '}';
  return out;
}

struct AdjunctionStep {
  TagItem aux;
  TagItem site;
  TagItem result;
};

class TagChart {
 public:
  enum class Back { kScan, kFoot, kCombine, kNullAdjoin, kAdjoin, kSubstitute };
  static constexpr int kBot = -1;
  static constexpr int kTop = -2;

  struct Position {
    int tree;  // grammar tree index
    int node;
    int state;  // dot >= 1, kBot or kTop
  };

  struct Item {
    TagItem span;
    double score;
    Back back;
    int a = -1;
    int b = -1;
  };

  int n() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const TagGrammar& grammar() const { return *grammar_; }
  const Position& position(int pos) const { return positions_[pos]; }
  const std::vector<Item>& items() const { return items_; }
  size_t item_count() const { return items_.size(); }
  /// Index of the best goal item, or -1.
  int goal() const { return goal_; }

  template <typename Fn>
  void for_each_item(Fn&& fn) const {
    for (const auto& it : items_) fn(it.span, it.score);
  }

  /// Position-independent identity of an item: (tree, node, state, i, j, k, l).
  std::tuple<int, int, int, int, int, int, int> signature(const Item& it) const {
    const Position& p = positions_[it.span.pos];
    return {p.tree, p.node, p.state, it.span.i, it.span.j, it.span.k, it.span.l};
  }

 private:
  friend class TagParser;
  const TagGrammar* grammar_ = nullptr;
  std::vector<std::string> tokens_;
  std::vector<Position> positions_;
  std::vector<Item> items_;
  int goal_ = -1;
};

class TagParser {
 public:
  TagParser(const TagGrammar& g, const std::vector<std::string>& tokens, const TagPredicate& allow)
      : g_(g), allow_(allow) {
    chart_.grammar_ = &g;
    chart_.tokens_ = tokens;
    n_ = static_cast<int>(tokens.size());
    if (n_ > 250) throw UsageError("tag_parse: sentences longer than 250 tokens are not supported");
  }

  TagChart run() {
    if (n_ == 0) return std::move(chart_);
    for (const auto& tok : chart_.tokens_)
      if (g_.lexicon(tok).empty()) return std::move(chart_);
    build_positions();
    for (int p = 0; p < n_; ++p)
      for (int t : g_.lexicon(chart_.tokens_[p]))
        offer(top_of(t, g_.tree(t).anchor), p, -1, -1, p + 1, g_.tree(t).logprob,
              TagChart::Back::kScan, -1, -1);
    while (!agenda_.empty()) {
      auto [width, neg_score, key, idx] = agenda_.top();
      agenda_.pop();
      const auto& it = chart_.items_[idx];
      if (-neg_score != it.score) continue;  // stale
      if (expanded_[idx] && expanded_score_[idx] == it.score) continue;
      expanded_[idx] = 1;
      expanded_score_[idx] = it.score;
      expand(idx);
    }
    find_goal();
    return std::move(chart_);
  }

 private:
  using Back = TagChart::Back;

  static uint64_t pack(int pos, int i, int j, int k, int l) {
    return (static_cast<uint64_t>(pos) << 32) | (static_cast<uint64_t>(i) << 24) |
           (static_cast<uint64_t>(j + 1) << 16) | (static_cast<uint64_t>(k + 1) << 8) |
           static_cast<uint64_t>(l);
  }
  static uint64_t pair_key(int a, int b) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
  }
  static uint64_t triple_key(int label, int a, int b) {
    return (static_cast<uint64_t>(label) << 16) | (static_cast<uint64_t>(a) << 8) |
           static_cast<uint64_t>(b);
  }

  int label_id(const std::string& s) {
    auto [it, fresh] = labels_.emplace(s, static_cast<int>(labels_.size()));
    return it->second;
  }

  void build_positions() {
    std::vector<char> active(g_.size(), 0);
    for (const auto& tok : chart_.tokens_)
      for (int t : g_.lexicon(tok)) active[t] = 1;
    base_.assign(g_.size(), {});
    for (int t = 0; t < g_.size(); ++t) {
      if (!active[t]) continue;
      const ElementaryTree& et = g_.tree(t);
      base_[t].resize(et.nodes.size());
      for (int v = 0; v < static_cast<int>(et.nodes.size()); ++v) {
        base_[t][v] = static_cast<int>(chart_.positions_.size());
        const int m = static_cast<int>(et.nodes[v].children.size());
        if (m == 0) {
          chart_.positions_.push_back({t, v, TagChart::kTop});
        } else {
          for (int d = 1; d < m; ++d) chart_.positions_.push_back({t, v, d});
          chart_.positions_.push_back({t, v, TagChart::kBot});
          chart_.positions_.push_back({t, v, TagChart::kTop});
        }
        const int lab = label_id(et.nodes[v].label);
        if (et.nodes[v].kind == NodeKind::kSubstitution) sites_[lab].push_back(top_of(t, v));
      }
      if (et.is_auxiliary()) aux_by_root_[label_id(et.root_label())].push_back(t);
    }
    const size_t np = chart_.positions_.size();
    pos_label_.resize(np);
    for (size_t p = 0; p < np; ++p) {
      const auto& pi = chart_.positions_[p];
      pos_label_[p] = label_id(g_.tree(pi.tree).nodes[pi.node].label);
    }
  }

  int top_of(int t, int v) const {
    const int m = static_cast<int>(g_.tree(t).nodes[v].children.size());
    return base_[t][v] + (m == 0 ? 0 : m);
  }
  int bot_of(int t, int v) const {
    return base_[t][v] + static_cast<int>(g_.tree(t).nodes[v].children.size()) - 1;
  }
  int dot_of(int t, int v, int d) const { return base_[t][v] + d - 1; }
  /// Position reached after recognizing `done` children of node v.
  int after_children(int t, int v, int done) const {
    const int m = static_cast<int>(g_.tree(t).nodes[v].children.size());
    return done == m ? bot_of(t, v) : dot_of(t, v, done);
  }

  void offer(int pos, int i, int j, int k, int l, double score, Back back, int a, int b) {
    const auto& pi = chart_.positions_[pos];
    TagItem span{pos, i, j, k, l, pi.state > 0};
    const uint64_t key = pack(pos, i, j, k, l);
    auto found = index_.find(key);
    if (found == index_.end()) {
      if (rejected_.count(key)) return;
      if (l - i >= 2 && (!allow_.span_may_pass(i, l) || !allow_(span))) {
        rejected_.insert(key);
        return;
      }
      const int idx = static_cast<int>(chart_.items_.size());
      chart_.items_.push_back({span, score, back, a, b});
      expanded_.push_back(0);
      expanded_score_.push_back(0.0);
      index_.emplace(key, idx);
      agenda_.push({l - i, -score, key, idx});
      return;
    }
    auto& it = chart_.items_[found->second];
    if (score <= it.score) return;
    it.score = score;
    it.back = back;
    it.a = a;
    it.b = b;
    agenda_.push({l - i, -score, key, found->second});
  }

  static std::pair<int, int> merge_gap(const TagItem& x, const TagItem& y) {
    if (x.has_gap()) return {x.j, x.k};
    return {y.j, y.k};
  }

  template <typename Map>
  static void index_once(Map& m, uint64_t key, int idx, std::unordered_set<uint64_t>& seen,
                         int tag) {
    if (seen.insert((static_cast<uint64_t>(idx) << 3) | static_cast<uint64_t>(tag)).second)
      m[key].push_back(idx);
  }

  void expand(int idx) {
    const TagChart::Item x = chart_.items_[idx];
    const TagItem& s = x.span;
    const auto& pi = chart_.positions_[s.pos];
    const ElementaryTree& et = g_.tree(pi.tree);
    const TagNode& node = et.nodes[pi.node];

    if (pi.state == TagChart::kTop) {
      if (node.parent < 0) {
        const int lab = pos_label_[s.pos];
        if (!et.is_auxiliary()) {
          for (int site : sites_[lab])
            offer(site, s.i, -1, -1, s.l, x.score, Back::kSubstitute, idx, -1);
        } else {
          index_once(aux_roots_, triple_key(lab, s.j, s.k), idx, indexed_, 0);
          auto found = bots_.find(triple_key(lab, s.j, s.k));
          if (found != bots_.end())
            for (int y : found->second) adjoin(idx, y);
        }
      } else {
        const int parent = node.parent;
        const auto& sib = et.nodes[parent].children;
        const int c = static_cast<int>(std::find(sib.begin(), sib.end(), pi.node) - sib.begin());
        if (c == 0) {
          offer(after_children(pi.tree, parent, 1), s.i, s.j, s.k, s.l, x.score, Back::kCombine,
                -1, idx);
        } else {
          auto found = ends_.find(pair_key(dot_of(pi.tree, parent, c), s.i));
          if (found != ends_.end())
            for (int y : found->second) combine(y, idx);
        }
        index_once(starts_, pair_key(s.pos, s.i), idx, indexed_, 1);
      }
      return;
    }

    if (pi.state > 0) {
      index_once(ends_, pair_key(s.pos, s.l), idx, indexed_, 2);
      const int child = node.children[pi.state];
      auto found = starts_.find(pair_key(top_of(pi.tree, child), s.l));
      if (found != starts_.end())
        for (int z : found->second) combine(idx, z);
      return;
    }

    // BOT: null adjunction, adjunction, foot prediction.
    offer(top_of(pi.tree, pi.node), s.i, s.j, s.k, s.l, x.score, Back::kNullAdjoin, idx, -1);
    const int lab = pos_label_[s.pos];
    index_once(bots_, triple_key(lab, s.i, s.l), idx, indexed_, 3);
    if (auto found = aux_roots_.find(triple_key(lab, s.i, s.l)); found != aux_roots_.end())
      for (int z : found->second) adjoin(z, idx);
    if (feet_done_.insert(triple_key(lab, s.i, s.l)).second) {
      if (auto aux = aux_by_root_.find(lab); aux != aux_by_root_.end())
        for (int t : aux->second)
          offer(top_of(t, g_.tree(t).foot), s.i, s.i, s.l, s.l, 0.0, Back::kFoot, -1, -1);
    }
  }

  void combine(int left, int right) {
    const auto& y = chart_.items_[left];
    const auto& z = chart_.items_[right];
    if (y.span.has_gap() && z.span.has_gap()) return;  // one foot per tree
    const auto& pi = chart_.positions_[y.span.pos];
    auto [j, k] = merge_gap(y.span, z.span);
    offer(after_children(pi.tree, pi.node, pi.state + 1), y.span.i, j, k, z.span.l,
          y.score + z.score, Back::kCombine, left, right);
  }

  void adjoin(int aux, int bot) {
    const auto& z = chart_.items_[aux];
    const auto& y = chart_.items_[bot];
    const auto& pi = chart_.positions_[y.span.pos];
    offer(top_of(pi.tree, pi.node), z.span.i, y.span.j, y.span.k, z.span.l, z.score + y.score,
          Back::kAdjoin, aux, bot);
  }

  void find_goal() {
    uint64_t best_key = 0;
    for (int t = 0; t < g_.size(); ++t) {
      if (base_[t].empty()) continue;
      const ElementaryTree& et = g_.tree(t);
      if (et.is_auxiliary() || et.root_label() != g_.start()) continue;
      const uint64_t key = pack(top_of(t, 0), 0, -1, -1, n_);
      auto found = index_.find(key);
      if (found == index_.end()) continue;
      const int idx = found->second;
      if (chart_.goal_ < 0 || chart_.items_[idx].score > chart_.items_[chart_.goal_].score ||
          (chart_.items_[idx].score == chart_.items_[chart_.goal_].score && key < best_key)) {
        chart_.goal_ = idx;
        best_key = key;
      }
    }
  }

  const TagGrammar& g_;
  const TagPredicate& allow_;
  int n_ = 0;
  TagChart chart_;

  std::vector<std::vector<int>> base_;
  std::vector<int> pos_label_;
  std::unordered_map<std::string, int> labels_;
  std::unordered_map<int, std::vector<int>> sites_;
  std::unordered_map<int, std::vector<int>> aux_by_root_;

  std::unordered_map<uint64_t, int> index_;
  std::unordered_set<uint64_t> rejected_;
  std::vector<char> expanded_;
  std::vector<double> expanded_score_;
  // (width, -score, key, index); narrow spans first, then better scores, then key order.
  using Entry = std::tuple<int, double, uint64_t, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> agenda_;

  std::unordered_map<uint64_t, std::vector<int>> starts_;     // TOP of a child node by (pos, i)
  std::unordered_map<uint64_t, std::vector<int>> ends_;       // partial items by (pos, l)
  std::unordered_map<uint64_t, std::vector<int>> bots_;       // BOT items by (label, i, l)
  std::unordered_map<uint64_t, std::vector<int>> aux_roots_;  // aux root TOP by (label, j, k)
  std::unordered_set<uint64_t> feet_done_;
  std::unordered_set<uint64_t> indexed_;
};

/// Parses `tokens` (each must be anchored by some tree; otherwise the chart
/// is empty) under the allowability predicate.
inline TagChart tag_parse(const TagGrammar& g, const std::vector<std::string>& tokens,
                          const TagPredicate& allow = {}) {
  return TagParser(g, tokens, allow).run();
}

struct TagParse {
  Tree derived;
  DerivationNode derivation;
  double logprob = 0.0;
  std::vector<AdjunctionStep> adjunctions;
};

namespace detail {

class TagBacktrace {
 public:
  explicit TagBacktrace(const TagChart& c) : c_(c) {}

  TagParse run() {
    TagParse out;
    const auto& goal = c_.items()[c_.goal()];
    out.derivation = start_node(c_.goal());
    out.derived = top(c_.goal(), nullptr, out.derivation);
    out.logprob = goal.score;
    out.adjunctions = std::move(steps_);
    sort_children(out.derivation);
    return out;
  }

 private:
  DerivationNode start_node(int idx) const {
    const int t = c_.position(c_.items()[idx].span.pos).tree;
    DerivationNode d;
    d.tree = t;
    d.tree_name = c_.grammar().tree(t).name;
    return d;
  }

  const TagNode& node_of(int idx) const {
    const auto& p = c_.position(c_.items()[idx].span.pos);
    return c_.grammar().tree(p.tree).nodes[p.node];
  }

  Tree top(int idx, const Tree* filler, DerivationNode& cur) {
    const auto& it = c_.items()[idx];
    const auto& p = c_.position(it.span.pos);
    const ElementaryTree& et = c_.grammar().tree(p.tree);
    switch (it.back) {
      case TagChart::Back::kScan:
        cur.anchor_pos = it.span.i;
        return Tree(et.nodes[p.node].label, {Tree(c_.tokens()[it.span.i])});
      case TagChart::Back::kFoot:
        if (!filler) throw std::logic_error("foot without filler");
        return *filler;
      case TagChart::Back::kSubstitute: {
        DerivationNode child = start_node(it.a);
        Tree t = top(it.a, nullptr, child);
        cur.children.push_back({p.node, et.address(p.node), 's', {std::move(child)}});
        return t;
      }
      case TagChart::Back::kNullAdjoin:
        return bottom(it.a, filler, cur);
      case TagChart::Back::kAdjoin: {
        Tree inner = bottom(it.b, filler, cur);
        DerivationNode child = start_node(it.a);
        Tree t = top(it.a, &inner, child);
        cur.children.push_back({p.node, et.address(p.node), 'a', {std::move(child)}});
        steps_.push_back({c_.items()[it.a].span, c_.items()[it.b].span, it.span});
        return t;
      }
      case TagChart::Back::kCombine:
        break;
    }
    throw std::logic_error("unexpected backpointer on a TOP item");
  }

  Tree bottom(int idx, const Tree* filler, DerivationNode& cur) {
    Tree t(node_of(idx).label);
    collect(idx, filler, cur, t.children);
    return t;
  }

  void collect(int idx, const Tree* filler, DerivationNode& cur, std::vector<Tree>& kids) {
    const auto& it = c_.items()[idx];
    if (it.a >= 0) collect(it.a, filler, cur, kids);
    kids.push_back(top(it.b, filler, cur));
  }

  static void sort_children(DerivationNode& d) {
    std::sort(d.children.begin(), d.children.end(),
              [](const DerivationEdge& a, const DerivationEdge& b) { return a.node < b.node; });
    for (auto& e : d.children) sort_children(e.child[0]);
  }

  const TagChart& c_;
  std::vector<AdjunctionStep> steps_;
};

}  // namespace detail

/// Backtrace of the best goal item. Ties between derivations of equal score
/// keep the one reached first in agenda order (narrower items, then item key).
inline std::optional<TagParse> best_derivation(const TagChart& chart) {
  if (chart.goal() < 0) return std::nullopt;
  return detail::TagBacktrace(chart).run();
}

/// Checks the adjunction index pattern (i,j,k,l) + (j,r,s,k) -> (i,r,s,l).
inline bool adjunction_sound(const AdjunctionStep& s) {
  return s.aux.has_gap() && s.site.i == s.aux.j && s.site.l == s.aux.k &&
         s.result.i == s.aux.i && s.result.l == s.aux.l && s.result.j == s.site.j &&
         s.result.k == s.site.k;
}

}  // namespace chartcons
