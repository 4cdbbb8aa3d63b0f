#pragma once

// Probabilistic context-free grammars: maximum-likelihood extraction from a
// binarized treebank and a line-oriented text format.

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

/// Symbols are indexed in one space: nonterminals occupy [0, num_nonterminals),
/// terminals follow.
using SymbolId = int;

struct Rule {
  SymbolId lhs;
  std::vector<SymbolId> rhs;
  double logprob;
};

class Pcfg {
 public:
  struct BinaryEntry {
    SymbolId lhs;
    SymbolId right;
    double logprob;
    int rule;
  };
  struct UnaryEntry {
    SymbolId lhs;
    double logprob;
    int rule;
  };

  /// Builds a grammar from rules over symbol names. Nonterminals are exactly
  /// the symbols that occur as a left-hand side; a leading "@" marks a
  /// binarization nonterminal.
  static Pcfg from_rules(const std::string& start,
                         const std::vector<std::tuple<std::string, std::vector<std::string>, double>>&
                             rules) {
    Pcfg g;
    std::vector<std::string> nts;
    std::unordered_map<std::string, int> seen;
    for (const auto& [lhs, rhs, lp] : rules) {
      if (!seen.count(lhs)) {
        seen.emplace(lhs, static_cast<int>(nts.size()));
        nts.push_back(lhs);
      }
    }
    if (!seen.count(start)) throw DataError("start symbol '" + start + "' has no rules");
    for (const auto& name : nts) g.add_symbol(name, false);
    g.num_nonterminals_ = static_cast<int>(nts.size());
    for (const auto& [lhs, rhs, lp] : rules) {
      if (rhs.empty() || rhs.size() > 2)
        throw DataError("rule for '" + lhs + "' must have one or two right-hand symbols");
      for (const auto& s : rhs)
        if (!g.index_.count(s)) g.add_symbol(s, true);
    }
    for (const auto& [lhs, rhs, lp] : rules) {
      Rule r{g.index_.at(lhs), {}, lp};
      for (const auto& s : rhs) r.rhs.push_back(g.index_.at(s));
      g.rules_.push_back(std::move(r));
    }
    g.start_ = g.index_.at(start);
    g.build_indexes();
    return g;
  }

  int num_symbols() const { return static_cast<int>(names_.size()); }
  int num_nonterminals() const { return num_nonterminals_; }
  bool is_terminal(SymbolId s) const { return s >= num_nonterminals_; }
  bool is_new(SymbolId s) const { return is_new_[s]; }
  const std::string& name(SymbolId s) const { return names_[s]; }
  SymbolId start() const { return start_; }
  const std::vector<Rule>& rules() const { return rules_; }

  SymbolId find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  SymbolId find_terminal(const std::string& name) const {
    SymbolId s = find(name);
    return (s >= 0 && is_terminal(s)) ? s : -1;
  }

  const std::vector<BinaryEntry>& binary_by_left(SymbolId left) const {
    return binary_by_left_[left];
  }
  const std::vector<UnaryEntry>& unary_by_child(SymbolId child) const {
    return unary_by_child_[child];
  }

 private:
  void add_symbol(const std::string& name, bool terminal) {
    index_.emplace(name, static_cast<int>(names_.size()));
    names_.push_back(name);
    is_new_.push_back(!terminal && !name.empty() && name[0] == '@');
  }

  void build_indexes() {
    binary_by_left_.assign(names_.size(), {});
    unary_by_child_.assign(names_.size(), {});
    for (int r = 0; r < static_cast<int>(rules_.size()); ++r) {
      const Rule& rule = rules_[r];
      if (rule.rhs.size() == 2)
        binary_by_left_[rule.rhs[0]].push_back({rule.lhs, rule.rhs[1], rule.logprob, r});
      else
        unary_by_child_[rule.rhs[0]].push_back({rule.lhs, rule.logprob, r});
    }
  }

  std::vector<std::string> names_;
  std::vector<bool> is_new_;
  std::unordered_map<std::string, int> index_;
  int num_nonterminals_ = 0;
  SymbolId start_ = -1;
  std::vector<Rule> rules_;
  std::vector<std::vector<BinaryEntry>> binary_by_left_;
  std::vector<std::vector<UnaryEntry>> unary_by_child_;
};

/// Relative-frequency estimate over already binarized trees. With
/// pos_as_terminals the preterminal layer becomes the yield and words are
/// dropped. Rules are kept in first-seen order.
inline Pcfg extract_pcfg(const std::vector<Tree>& trees, bool pos_as_terminals) {
  if (trees.empty()) throw DataError("extract_pcfg: empty corpus");
  using Key = std::pair<std::string, std::vector<std::string>>;
  std::map<Key, int> rule_slot;
  std::vector<Key> order;
  std::vector<double> counts;
  std::unordered_map<std::string, double> lhs_counts;
  std::map<std::string, int> root_counts;

  auto visit = [&](auto&& self, const Tree& n) -> void {
    if (n.is_leaf()) return;
    if (pos_as_terminals && n.is_preterminal()) return;
    Key key{n.label, {}};
    for (const auto& c : n.children)
      key.second.push_back(c.label);
    auto [it, fresh] = rule_slot.emplace(key, static_cast<int>(order.size()));
    if (fresh) {
      order.push_back(key);
      counts.push_back(0);
    }
    counts[it->second] += 1;
    lhs_counts[n.label] += 1;
    for (const auto& c : n.children) self(self, c);
  };
  for (const auto& t : trees) {
    Tree use = t;
    if (pos_as_terminals && use.is_preterminal())
      throw DataError("extract_pcfg: tree consists of a single preterminal");
    root_counts[use.label] += 1;
    visit(visit, use);
  }
  std::string start;
  int best = -1;
  for (const auto& [label, c] : root_counts)
    if (c > best) {
      best = c;
      start = label;
    }
  std::vector<std::tuple<std::string, std::vector<std::string>, double>> rules;
  rules.reserve(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& [lhs, rhs] = order[i];
    if (rhs.size() > 2)
      throw DataError("extract_pcfg: rule for '" + lhs + "' has arity " +
                      std::to_string(rhs.size()) + "; binarize first");
    rules.emplace_back(lhs, rhs, std::log(counts[i] / lhs_counts[lhs]));
  }
  return Pcfg::from_rules(start, rules);
}

/// "start: S" header, then one rule per line: "LHS -> R1 [R2]\tlogprob".
inline std::string write_pcfg(const Pcfg& g) {
  std::string out = "start: " + g.name(g.start()) + "\n";
  for (const auto& r : g.rules()) {
    out += g.name(r.lhs);
    out += " ->";
    for (SymbolId s : r.rhs) {
      out += ' ';
      out += g.name(s);
    }
    out += '\t';
    out += format_double(r.logprob);
    out += '\n';
  }
  return out;
}

inline Pcfg read_pcfg(std::string_view text) {
  std::string start;
  std::vector<std::tuple<std::string, std::vector<std::string>, double>> rules;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      return DataError("grammar line " + std::to_string(line_no) + ": " + why);
    };
    if (line.rfind("start:", 0) == 0) {
      start = std::string(trim(line.substr(6)));
      continue;
    }
    auto cols = split(raw, '\t');
    if (cols.size() != 2) throw fail("expected '<rule>\\t<logprob>'");
    auto syms = split_ws(cols[0]);
    if (syms.size() < 3 || syms[1] != "->") throw fail("expected 'LHS -> RHS'");
    double lp;
    try {
      lp = parse_double(cols[1]);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    rules.emplace_back(syms[0], std::vector<std::string>(syms.begin() + 2, syms.end()), lp);
  }
  if (start.empty()) throw DataError("grammar has no 'start:' header");
  return Pcfg::from_rules(start, rules);
}

}  // namespace chartcons
