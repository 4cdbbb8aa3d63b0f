#pragma once

// Head-driven spinal extraction of a lexicalized TAG from a treebank.
//
// Each token's elementary tree is the spine of nodes it heads. Non-head
// siblings become substitution sites; a chain of same-label heads is
// collapsed to one node and its outermost, rightmost modifier becomes an
// auxiliary tree adjoined there. Other modifiers on the chain are dropped
// from the derived tree. Trees are unlexicalized (anchored by POS) and
// weighted by log P(tree | anchor POS).
//
// Head rules, one per line:
//   LABEL<TAB>left|right<TAB>priority labels
// The head is the first child, scanning in the given direction, matching the
// earliest priority label; failing that, the first child in that direction.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chartcons/tag_grammar.hpp"
#include "chartcons/tag_parser.hpp"
#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

struct HeadRule {
  bool left_to_right = true;
  std::vector<std::string> priority;
};

class HeadRules {
 public:
  HeadRules() = default;
  explicit HeadRules(std::map<std::string, HeadRule> rules) : rules_(std::move(rules)) {}

  bool has(const std::string& label) const { return rules_.count(label) > 0; }
  const std::map<std::string, HeadRule>& rules() const { return rules_; }

  /// Index of the head child; nodes with one child need no rule.
  int head_child(const Tree& n) const {
    const int m = static_cast<int>(n.children.size());
    if (m == 1) return 0;
    auto it = rules_.find(n.label);
    if (it == rules_.end()) throw DataError("no head rule for label '" + n.label + "'");
    const HeadRule& r = it->second;
    auto at = [&](int step) { return r.left_to_right ? step : m - 1 - step; };
    for (const auto& want : r.priority)
      for (int s = 0; s < m; ++s)
        if (n.children[at(s)].label == want) return at(s);
    return at(0);
  }

 private:
  std::map<std::string, HeadRule> rules_;
};

inline HeadRules read_head_rules(std::string_view text) {
  std::map<std::string, HeadRule> rules;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    auto fail = [&](const std::string& why) {
      return DataError("head rules line " + std::to_string(line_no) + ": " + why);
    };
    if (cols.size() != 2 && cols.size() != 3) throw fail("expected 'LABEL<TAB>left|right<TAB>labels'");
    HeadRule r;
    const std::string dir(trim(cols[1]));
    if (dir == "left") {
      r.left_to_right = true;
    } else if (dir == "right") {
      r.left_to_right = false;
    } else {
      throw fail("direction must be 'left' or 'right', got '" + dir + "'");
    }
    if (cols.size() == 3) r.priority = split_ws(cols[2]);
    const std::string label(trim(cols[0]));
    if (label.empty()) throw fail("empty label");
    if (!rules.emplace(label, std::move(r)).second) throw fail("duplicate label '" + label + "'");
  }
  return HeadRules(std::move(rules));
}

/// One sentence of a TAG corpus.
struct TagCorpusEntry {
  std::vector<std::string> words;
  std::vector<std::string> pos;
  std::vector<std::string> supertags;  // elementary tree name per token
  std::string derivation;              // format_derivation of the gold derivation
  Tree derived;                        // with words
};

struct SpinalExtraction {
  TagGrammar grammar;
  std::vector<long> counts;  // occurrences per grammar tree
  std::vector<TagCorpusEntry> corpus;
};

namespace detail {

class SpinalBuilder {
 public:
  explicit SpinalBuilder(const HeadRules& rules) : rules_(rules) {}

  TagCorpusEntry sentence(const Tree& t) {
    words_.clear();
    DerivationNode root;
    Tree derived = initial(t, root);
    // Markers "#<id>" stand in for anchor words until the final order is known.
    std::vector<int> position(words_.size(), -1);
    TagCorpusEntry e;
    const auto markers = leaves(derived);
    for (size_t p = 0; p < markers.size(); ++p) {
      const int id = std::stoi(markers[p].substr(1));
      position[id] = static_cast<int>(p);
      e.words.push_back(words_[id]);
    }
    derived = replace_leaves(derived, e.words);
    e.pos = preterminal_labels(derived);
    e.supertags.assign(e.words.size(), "");
    assign_positions(root, position, e.supertags);
    e.derivation = format_derivation(root);
    e.derived = std::move(derived);
    return e;
  }

  std::vector<ElementaryTree>& templates() { return templates_; }
  std::vector<long>& counts() { return counts_; }

 private:
  static int add(ElementaryTree& et, const std::string& label, NodeKind kind, int parent) {
    const int id = static_cast<int>(et.nodes.size());
    et.nodes.push_back({label, kind, parent, {}});
    if (parent >= 0) et.nodes[parent].children.push_back(id);
    if (kind == NodeKind::kAnchor) et.anchor = id;
    if (kind == NodeKind::kFoot) et.foot = id;
    return id;
  }

  void finish(ElementaryTree& et, DerivationNode& d) {
    for (auto& e : d.children) e.address = et.address(e.node);
    std::stable_sort(d.children.begin(), d.children.end(),
                     [](const DerivationEdge& a, const DerivationEdge& b) { return a.node < b.node; });
    const std::string shape = elementary_shape(et);
    auto [it, fresh] = by_shape_.emplace(shape, static_cast<int>(templates_.size()));
    if (fresh) {
      et.name = "t" + std::to_string(templates_.size());
      templates_.push_back(et);
      counts_.push_back(0);
    }
    ++counts_[it->second];
    d.tree = it->second;
    d.tree_name = templates_[it->second].name;
  }

  Tree initial(const Tree& n, DerivationNode& d) {
    ElementaryTree et;
    Tree derived = spine(n, et, -1, d);
    finish(et, d);
    return derived;
  }

  Tree spine(const Tree& n, ElementaryTree& et, int parent, DerivationNode& d) {
    if (n.is_leaf()) throw DataError("spinal extraction needs a preterminal layer");
    if (n.is_preterminal()) {
      add(et, n.label, NodeKind::kAnchor, parent);
      d.anchor_pos = static_cast<int>(words_.size());
      words_.push_back(n.children[0].label);
      return Tree(n.label, {Tree("#" + std::to_string(d.anchor_pos))});
    }
    // Walk down the chain of same-label heads.
    std::vector<std::pair<const Tree*, int>> levels;
    const Tree* cur = &n;
    while (true) {
      const int h = rules_.head_child(*cur);
      levels.emplace_back(cur, h);
      const Tree& hc = cur->children[h];
      if (hc.is_preterminal() || hc.label != n.label) break;
      cur = &hc;
    }
    const int idx = add(et, n.label, NodeKind::kInternal, parent);
    const auto [base, head] = levels.back();
    Tree here(n.label);
    for (int c = 0; c < static_cast<int>(base->children.size()); ++c) {
      const Tree& child = base->children[c];
      if (c == head) {
        here.children.push_back(spine(child, et, idx, d));
        continue;
      }
      if (child.is_leaf()) throw DataError("spinal extraction needs a preterminal layer");
      const int site = add(et, child.label, NodeKind::kSubstitution, idx);
      DerivationNode sub;
      here.children.push_back(initial(child, sub));
      d.children.push_back({site, "", 's', {std::move(sub)}});
    }
    for (size_t lv = 0; lv + 1 < levels.size(); ++lv) {
      const auto [node, h] = levels[lv];
      const int m = static_cast<int>(node->children.size());
      if (m < 2) continue;
      const int mod = h == m - 1 ? m - 2 : m - 1;
      const bool left = mod < h;
      ElementaryTree aux;
      DerivationNode ad;
      const int root = add(aux, n.label, NodeKind::kInternal, -1);
      if (!left) add(aux, n.label, NodeKind::kFoot, root);
      Tree md = spine(node->children[mod], aux, root, ad);
      if (left) add(aux, n.label, NodeKind::kFoot, root);
      finish(aux, ad);
      d.children.push_back({idx, "", 'a', {std::move(ad)}});
      here = left ? Tree(n.label, {std::move(md), std::move(here)})
                  : Tree(n.label, {std::move(here), std::move(md)});
      break;
    }
    return here;
  }

  static void assign_positions(DerivationNode& d, const std::vector<int>& position,
                               std::vector<std::string>& supertags) {
    d.anchor_pos = position[d.anchor_pos];
    supertags[d.anchor_pos] = d.tree_name;
    for (auto& e : d.children) assign_positions(e.child[0], position, supertags);
  }

  const HeadRules& rules_;
  std::vector<ElementaryTree> templates_;
  std::vector<long> counts_;
  std::unordered_map<std::string, int> by_shape_;
  std::vector<std::string> words_;
};

}  // namespace detail

/// Labels of nodes with two or more children that have no head rule.
inline std::set<std::string> missing_head_rules(const std::vector<Tree>& treebank,
                                                const HeadRules& rules) {
  std::set<std::string> out;
  auto rec = [&](auto&& self, const Tree& n) -> void {
    if (n.children.size() >= 2 && !rules.has(n.label)) out.insert(n.label);
    for (const auto& c : n.children) self(self, c);
  };
  for (const auto& t : treebank) rec(rec, t);
  return out;
}

/// Extracts the grammar, its tree counts and the derived TAG corpus. Trees
/// are named t0, t1, ... in first-seen order.
inline SpinalExtraction extract_spinal(const std::vector<Tree>& treebank, const HeadRules& rules) {
  if (auto missing = missing_head_rules(treebank, rules); !missing.empty()) {
    std::string list;
    for (const auto& l : missing) list += (list.empty() ? "" : " ") + l;
    throw DataError("no head rule for labels: " + list);
  }
  detail::SpinalBuilder b(rules);
  SpinalExtraction out;
  std::map<std::string, long> roots;
  for (const auto& t : treebank) {
    if (!has_preterminal_layer(t)) throw DataError("spinal extraction needs a preterminal layer");
    out.corpus.push_back(b.sentence(t));
    ++roots[t.label];
  }
  std::string start;
  long best = -1;
  for (const auto& [label, c] : roots)
    if (c > best) {
      best = c;
      start = label;
    }
  auto& trees = b.templates();
  std::map<std::string, long> per_pos;
  for (size_t t = 0; t < trees.size(); ++t)
    per_pos[trees[t].nodes[trees[t].anchor].label] += b.counts()[t];
  for (size_t t = 0; t < trees.size(); ++t)
    trees[t].logprob = std::log(static_cast<double>(b.counts()[t]) /
                                static_cast<double>(per_pos[trees[t].nodes[trees[t].anchor].label]));
  out.counts = std::move(b.counts());
  out.grammar = TagGrammar(start, std::move(trees));
  return out;
}

inline std::string format_tag_corpus_line(const TagCorpusEntry& e) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
    return s;
  };
  return join(e.words) + "\t" + join(e.pos) + "\t" + join(e.supertags) + "\t" + e.derivation +
         "\t" + to_ptb(e.derived);
}

/// words, POS tags, supertags, derivation and derived tree, tab-separated.
inline std::string write_tag_corpus(const std::vector<TagCorpusEntry>& corpus) {
  std::string out;
  for (const auto& e : corpus) out += format_tag_corpus_line(e) + "\n";
  return out;
}

inline std::vector<TagCorpusEntry> read_tag_corpus(std::string_view text) {
  std::vector<TagCorpusEntry> out;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError("tag corpus line " + std::to_string(line_no) + ": " + why);
    };
    auto cols = split(line, '\t');
    if (cols.size() != 5) throw fail("expected 5 tab-separated columns");
    TagCorpusEntry e;
    e.words = split_ws(cols[0]);
    e.pos = split_ws(cols[1]);
    e.supertags = split_ws(cols[2]);
    e.derivation = std::string(trim(cols[3]));
    std::vector<Tree> trees;
    try {
      trees = read_ptb(cols[4]);
    } catch (const DataError& err) {
      throw fail(err.what());
    }
    if (trees.size() != 1) throw fail("expected one derived tree");
    e.derived = std::move(trees[0]);
    if (e.pos.size() != e.words.size() || e.supertags.size() != e.words.size())
      throw fail("column lengths differ");
    if (leaves(e.derived) != e.words) throw fail("derived tree yield differs from the words");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace chartcons
