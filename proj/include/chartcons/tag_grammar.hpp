#pragma once

// Lexicalized tree-adjoining grammars: elementary trees, a one-tree-per-line
// text format, and lexicon lookup.
//
//   start: S
//   name<TAB>logprob<TAB>(S (NP! ) (VP (V @) (S* )))[<TAB>anchor_word]
//
// "X!" is a substitution site, "X*" the foot, "(X @)" the anchor node. Without
// an anchor word the anchor label itself is the token (POS-level grammars).

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

enum class NodeKind { kInternal, kAnchor, kSubstitution, kFoot };

struct TagNode {
  std::string label;
  NodeKind kind = NodeKind::kInternal;
  int parent = -1;
  std::vector<int> children;
};

struct ElementaryTree {
  std::string name;
  double logprob = 0.0;
  std::vector<TagNode> nodes;  // preorder; nodes[0] is the root
  std::string anchor_word;
  int anchor = -1;
  int foot = -1;

  bool is_auxiliary() const { return foot >= 0; }
  const std::string& root_label() const { return nodes[0].label; }
  /// The token the anchor matches.
  const std::string& token() const { return anchor_word.empty() ? nodes[anchor].label : anchor_word; }
  /// Gorn address: "0" for the root, then 1-based child indices ("0.2.1").
  std::string address(int node) const {
    std::vector<int> path;
    for (int v = node; nodes[v].parent >= 0; v = nodes[v].parent) {
      const auto& sib = nodes[nodes[v].parent].children;
      path.push_back(static_cast<int>(std::find(sib.begin(), sib.end(), v) - sib.begin()) + 1);
    }
    std::string out = "0";
    for (auto it = path.rbegin(); it != path.rend(); ++it) out += "." + std::to_string(*it);
    return out;
  }
};

namespace detail {

inline void write_elementary(const ElementaryTree& t, int v, std::string& out) {
  const TagNode& n = t.nodes[v];
  out += '(';
  out += n.label;
  switch (n.kind) {
    case NodeKind::kAnchor: out += " @)"; return;
    case NodeKind::kSubstitution: out += "! )"; return;
    case NodeKind::kFoot: out += "* )"; return;
    case NodeKind::kInternal: break;
  }
  for (int c : n.children) {
    out += ' ';
    write_elementary(t, c, out);
  }
  out += ')';
}

}  // namespace detail

/// Bracketed shape of the tree, without name, weight or anchor word.
inline std::string elementary_shape(const ElementaryTree& t) {
  std::string out;
  detail::write_elementary(t, 0, out);
  return out;
}

/// Parses one bracketed elementary tree and validates it.
inline ElementaryTree parse_elementary(std::string_view text, std::string name = "",
                                       double logprob = 0.0, std::string anchor_word = "") {
  ElementaryTree et;
  et.name = std::move(name);
  et.logprob = logprob;
  et.anchor_word = std::move(anchor_word);
  // "(X! )" and "(X* )" read as a node with no children; "(X @)" as a node
  // whose single leaf is "@".
  std::vector<Tree> trees;
  try {
    std::string fixed;
    for (size_t i = 0; i < text.size(); ++i) {
      // read_ptb rejects empty constituents, so give marked leaves a dummy child.
      fixed += text[i];
      if ((text[i] == '!' || text[i] == '*') && i + 1 < text.size()) {
        size_t j = i + 1;
        while (j < text.size() && text[j] == ' ') ++j;
        if (j < text.size() && text[j] == ')') fixed += " #";
      }
    }
    trees = read_ptb(fixed);
  } catch (const DataError& e) {
    throw DataError(std::string("elementary tree: ") + e.what());
  }
  if (trees.size() != 1) throw DataError("elementary tree: expected exactly one bracketing");
  auto add = [&](auto&& self, const Tree& n, int parent) -> void {
    const int id = static_cast<int>(et.nodes.size());
    et.nodes.push_back({n.label, NodeKind::kInternal, parent, {}});
    if (parent >= 0) et.nodes[parent].children.push_back(id);
    if (n.is_leaf()) throw DataError("elementary tree: bare leaf '" + n.label + "'");
    if (n.children.size() == 1 && n.children[0].is_leaf()) {
      const std::string& leaf = n.children[0].label;
      std::string& label = et.nodes[id].label;
      if (leaf == "@") {
        et.nodes[id].kind = NodeKind::kAnchor;
        if (et.anchor >= 0) throw DataError("elementary tree has more than one anchor");
        et.anchor = id;
        return;
      }
      if (leaf == "#" && label.size() > 1 && (label.back() == '!' || label.back() == '*')) {
        const bool foot = label.back() == '*';
        label.pop_back();
        et.nodes[id].kind = foot ? NodeKind::kFoot : NodeKind::kSubstitution;
        if (foot) {
          if (et.foot >= 0) throw DataError("elementary tree has more than one foot");
          et.foot = id;
        }
        return;
      }
      throw DataError("elementary tree: word leaf '" + leaf + "' (use '@' for the anchor)");
    }
    for (const auto& c : n.children) self(self, c, id);
  };
  add(add, trees[0], -1);
  if (et.anchor < 0) throw DataError("elementary tree has no anchor");
  if (et.nodes[0].kind == NodeKind::kSubstitution || et.nodes[0].kind == NodeKind::kFoot)
    throw DataError("elementary tree root cannot be a substitution site or foot");
  if (et.foot >= 0 && et.nodes[et.foot].label != et.root_label())
    throw DataError("foot label '" + et.nodes[et.foot].label + "' differs from root label '" +
                    et.root_label() + "'");
  return et;
}

class TagGrammar {
 public:
  TagGrammar() = default;
  TagGrammar(std::string start, std::vector<ElementaryTree> trees)
      : start_(std::move(start)), trees_(std::move(trees)) {
    for (int t = 0; t < static_cast<int>(trees_.size()); ++t) {
      if (!names_.emplace(trees_[t].name, t).second)
        throw DataError("duplicate elementary tree name '" + trees_[t].name + "'");
      lexicon_[trees_[t].token()].push_back(t);
    }
  }

  const std::string& start() const { return start_; }
  const std::vector<ElementaryTree>& trees() const { return trees_; }
  const ElementaryTree& tree(int t) const { return trees_[t]; }
  int size() const { return static_cast<int>(trees_.size()); }

  /// Trees anchored by `token`, in file order.
  const std::vector<int>& lexicon(const std::string& token) const {
    static const std::vector<int> none;
    auto it = lexicon_.find(token);
    return it == lexicon_.end() ? none : it->second;
  }
  int find(const std::string& name) const {
    auto it = names_.find(name);
    return it == names_.end() ? -1 : it->second;
  }

 private:
  std::string start_;
  std::vector<ElementaryTree> trees_;
  std::unordered_map<std::string, int> names_;
  std::unordered_map<std::string, std::vector<int>> lexicon_;
};

inline std::string format_elementary_line(const ElementaryTree& t) {
  std::string out = t.name + "\t" + format_double(t.logprob) + "\t" + elementary_shape(t);
  if (!t.anchor_word.empty()) out += "\t" + t.anchor_word;
  return out;
}

inline std::string write_tag_grammar(const TagGrammar& g) {
  std::string out = "start: " + g.start() + "\n";
  for (const auto& t : g.trees()) out += format_elementary_line(t) + "\n";
  return out;
}

inline TagGrammar read_tag_grammar(std::string_view text) {
  std::string start;
  std::vector<ElementaryTree> trees;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      return DataError("tag grammar line " + std::to_string(line_no) + ": " + why);
    };
    if (line.rfind("start:", 0) == 0) {
      start = std::string(trim(line.substr(6)));
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 3 && cols.size() != 4)
      throw fail("expected 'name<TAB>logprob<TAB>tree[<TAB>anchor]'");
    try {
      trees.push_back(parse_elementary(cols[2], std::string(trim(cols[0])), parse_double(cols[1]),
                                       cols.size() == 4 ? std::string(trim(cols[3])) : ""));
    } catch (const DataError& e) {
      throw fail(e.what());
    }
  }
  if (start.empty()) throw DataError("tag grammar has no 'start:' header");
  try {
    return TagGrammar(start, std::move(trees));
  } catch (const DataError& e) {
    throw DataError(std::string("tag grammar: ") + e.what());
  }
}

}  // namespace chartcons
