#pragma once

// Constituent trees: Penn-Treebank bracket I/O, span enumeration and
// (de)binarization with horizontal markovization.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "chartcons/util.hpp"

namespace chartcons {

struct Tree {
  std::string label;
  std::vector<Tree> children;
  /// True iff the node was introduced by binarization.
  bool is_new = false;

  Tree() = default;
  explicit Tree(std::string l, std::vector<Tree> c = {}, bool fresh = false)
      : label(std::move(l)), children(std::move(c)), is_new(fresh) {}

  bool is_leaf() const { return children.empty(); }
  bool is_preterminal() const { return children.size() == 1 && children[0].is_leaf(); }

  size_t num_leaves() const {
    if (is_leaf()) return 1;
    size_t n = 0;
    for (const auto& c : children) n += c.num_leaves();
    return n;
  }

  bool operator==(const Tree&) const = default;
};

/// A node together with its end-exclusive leaf span.
struct Constituent {
  const Tree* node;
  int begin;
  int end;
  int width() const { return end - begin; }
};

namespace detail {

inline int collect_constituents(const Tree& t, int begin, std::vector<Constituent>& out,
                                bool include_leaves) {
  if (t.is_leaf()) {
    if (include_leaves) out.push_back({&t, begin, begin + 1});
    return begin + 1;
  }
  size_t slot = out.size();
  out.push_back({&t, begin, begin});
  int pos = begin;
  for (const auto& c : t.children) pos = collect_constituents(c, pos, out, include_leaves);
  out[slot].end = pos;
  return pos;
}

inline void collect_leaves(const Tree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.label);
    return;
  }
  for (const auto& c : t.children) collect_leaves(c, out);
}

inline void write_ptb(const Tree& t, std::string& out) {
  if (t.is_leaf()) {
    out += t.label;
    return;
  }
  out += '(';
  out += t.label;
  for (const auto& c : t.children) {
    out += ' ';
    write_ptb(c, out);
  }
  out += ')';
}

}  // namespace detail

/// Internal (non-leaf) nodes in preorder with their spans.
inline std::vector<Constituent> constituents(const Tree& t) {
  std::vector<Constituent> out;
  detail::collect_constituents(t, 0, out, false);
  return out;
}

inline std::vector<std::string> leaves(const Tree& t) {
  std::vector<std::string> out;
  detail::collect_leaves(t, out);
  return out;
}

/// POS tags of a tree whose leaves all sit under unary preterminals.
inline std::vector<std::string> preterminal_labels(const Tree& t) {
  std::vector<std::string> out;
  auto rec = [&](auto&& self, const Tree& n) -> void {
    if (n.is_preterminal()) {
      out.push_back(n.label);
      return;
    }
    if (n.is_leaf()) {
      out.push_back(n.label);
      return;
    }
    for (const auto& c : n.children) self(self, c);
  };
  rec(rec, t);
  return out;
}

/// True iff every leaf is the only child of its parent (a complete POS layer).
inline bool has_preterminal_layer(const Tree& t) {
  if (t.is_leaf()) return false;
  if (t.is_preterminal()) return true;
  return std::all_of(t.children.begin(), t.children.end(),
                     [](const Tree& c) { return !c.is_leaf() && has_preterminal_layer(c); });
}

inline std::string to_ptb(const Tree& t) {
  std::string out;
  detail::write_ptb(t, out);
  return out;
}

struct ReadOptions {
  /// Accept "@"-prefixed labels and flag them is_new (re-reading binarized output).
  bool allow_new_labels = false;
};

/// Parses Penn-Treebank bracketings. Trees may span lines; a wrapping node with
/// an empty label and a single child is stripped.
inline std::vector<Tree> read_ptb(std::string_view text, ReadOptions opts = {}) {
  struct Token {
    enum Kind { kOpen, kClose, kAtom } kind;
    std::string text;
    int line;
  };
  std::vector<Token> toks;
  int line = 1;
  for (size_t i = 0; i < text.size();) {
    char ch = text[i];
    if (ch == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
    } else if (ch == '(') {
      toks.push_back({Token::kOpen, "", line});
      ++i;
    } else if (ch == ')') {
      toks.push_back({Token::kClose, "", line});
      ++i;
    } else {
      size_t j = i;
      while (j < text.size() && text[j] != '(' && text[j] != ')' &&
             !std::isspace(static_cast<unsigned char>(text[j])))
        ++j;
      toks.push_back({Token::kAtom, std::string(text.substr(i, j - i)), line});
      i = j;
    }
  }

  std::vector<Tree> trees;
  size_t pos = 0;
  auto unbalanced = [](int at) {
    return DataError("unbalanced at line " + std::to_string(at));
  };
  // Recursive descent; pos points just past an opening bracket.
  auto parse_node = [&](auto&& self, int open_line) -> Tree {
    Tree node;
    if (pos < toks.size() && toks[pos].kind == Token::kAtom) {
      node.label = toks[pos].text;
      ++pos;
      if (!node.label.empty() && node.label[0] == '@') {
        if (!opts.allow_new_labels)
          throw DataError("label '" + node.label + "' at line " +
                          std::to_string(toks[pos - 1].line) +
                          " uses the reserved '@' prefix");
        node.is_new = true;
      }
    }
    while (true) {
      if (pos >= toks.size()) throw unbalanced(open_line);
      const Token& tk = toks[pos];
      if (tk.kind == Token::kClose) {
        ++pos;
        break;
      }
      if (tk.kind == Token::kOpen) {
        ++pos;
        node.children.push_back(self(self, tk.line));
      } else {
        node.children.emplace_back(tk.text);
        ++pos;
      }
    }
    if (node.children.empty())
      throw DataError("empty constituent at line " + std::to_string(open_line));
    return node;
  };

  while (pos < toks.size()) {
    const Token& tk = toks[pos];
    if (tk.kind == Token::kClose) throw unbalanced(tk.line);
    if (tk.kind == Token::kAtom)
      throw DataError("stray token '" + tk.text + "' at line " + std::to_string(tk.line));
    ++pos;
    Tree t = parse_node(parse_node, tk.line);
    while (t.label.empty() && t.children.size() == 1 && !t.children[0].is_leaf()) {
      Tree inner = std::move(t.children[0]);
      t = std::move(inner);
    }
    trees.push_back(std::move(t));
  }
  return trees;
}

enum class Factoring {
  /// Intermediate nodes group the leftmost children and share the parent's start.
  kLeft,
  /// Intermediate nodes group the rightmost children and share the parent's end.
  kRight,
};

namespace detail {

inline std::string intermediate_label(const std::string& parent,
                                      const std::vector<Tree>& kids, size_t from, size_t to) {
  std::string out = "@" + parent + "[";
  for (size_t i = from; i < to; ++i) {
    if (i > from) out += ',';
    out += kids[i].label;
  }
  out += ']';
  return out;
}

}  // namespace detail

/// Binarizes every node with more than two children into a chain of "@A[σ]"
/// nodes, σ being the nearest min(h, consumed) sibling labels outside the
/// intermediate node. Unary and binary nodes are kept as they are.
inline Tree binarize(const Tree& t, int h, Factoring factoring = Factoring::kLeft) {
  if (t.is_leaf()) return t;
  std::vector<Tree> kids;
  kids.reserve(t.children.size());
  for (const auto& c : t.children) kids.push_back(binarize(c, h, factoring));
  const size_t m = kids.size();
  if (m <= 2) return Tree(t.label, std::move(kids), t.is_new);

  const size_t order = static_cast<size_t>(std::max(h, 0));
  if (factoring == Factoring::kRight) {
    // A -> C1 @A[C1]; @A[..] -> C2 @A[..]; ...; last -> C(m-1) Cm
    Tree tail(detail::intermediate_label(t.label, kids, m - 2 - std::min(order, m - 2), m - 2),
              {kids[m - 2], kids[m - 1]}, true);
    for (size_t idx = m - 2; idx-- > 1;) {
      size_t consumed = idx;
      std::string label =
          detail::intermediate_label(t.label, kids, consumed - std::min(order, consumed), consumed);
      tail = Tree(std::move(label), {kids[idx], std::move(tail)}, true);
    }
    return Tree(t.label, {std::move(kids[0]), std::move(tail)}, t.is_new);
  }
  // A -> @A[Cm] Cm; @A[Cm] -> @A[..] C(m-1); ...; innermost -> C1 C2
  Tree head(detail::intermediate_label(t.label, kids, 2, 2 + std::min(order, m - 2)),
            {kids[0], kids[1]}, true);
  for (size_t idx = 2; idx + 1 < m; ++idx) {
    size_t first_consumed = idx + 1;
    std::string label = detail::intermediate_label(
        t.label, kids, first_consumed, first_consumed + std::min(order, m - first_consumed));
    head = Tree(std::move(label), {std::move(head), kids[idx]}, true);
  }
  return Tree(t.label, {std::move(head), std::move(kids[m - 1])}, t.is_new);
}

/// Splices out every is_new node, re-attaching its children to the parent.
inline Tree debinarize(const Tree& t) {
  if (t.is_leaf()) return t;
  Tree out(t.label, {}, t.is_new);
  auto append = [&](auto&& self, const Tree& c) -> void {
    if (c.is_new && !c.is_leaf()) {
      for (const auto& g : c.children) self(self, g);
    } else {
      out.children.push_back(debinarize(c));
    }
  };
  for (const auto& c : t.children) append(append, c);
  return out;
}

/// Replaces leaf i (0-based) by words[i]; structure is unchanged.
inline Tree replace_leaves(const Tree& t, const std::vector<std::string>& words) {
  size_t next = 0;
  auto rec = [&](auto&& self, const Tree& n) -> Tree {
    if (n.is_leaf()) {
      if (next >= words.size()) throw UsageError("replace_leaves: too few words");
      return Tree(words[next++]);
    }
    Tree out(n.label, {}, n.is_new);
    for (const auto& c : n.children) out.children.push_back(self(self, c));
    return out;
  };
  Tree out = rec(rec, t);
  if (next != words.size()) throw UsageError("replace_leaves: too many words");
  return out;
}

/// Turns bare leaves into (leaf word) preterminals, e.g. after parsing POS
/// strings with a grammar whose terminals are tags.
inline Tree attach_words(const Tree& t, const std::vector<std::string>& words) {
  size_t next = 0;
  auto rec = [&](auto&& self, const Tree& n) -> Tree {
    if (n.is_leaf()) {
      if (next >= words.size()) throw UsageError("attach_words: too few words");
      return Tree(n.label, {Tree(words[next++])});
    }
    Tree out(n.label, {}, n.is_new);
    for (const auto& c : n.children) out.children.push_back(self(self, c));
    return out;
  };
  Tree out = rec(rec, t);
  if (next != words.size()) throw UsageError("attach_words: too many words");
  return out;
}

/// Drops the word leaves so the preterminal layer becomes the yield.
inline Tree strip_words(const Tree& t) {
  if (t.is_preterminal()) return Tree(t.label);
  Tree out(t.label, {}, t.is_new);
  for (const auto& c : t.children) out.children.push_back(strip_words(c));
  return out;
}

}  // namespace chartcons
