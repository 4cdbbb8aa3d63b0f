#pragma once

// Supertagging: the unlexicalized tree inventory, a smoothed frequency model,
// top-k selection and per-sentence grammars over the artificial string
// "1 2 ... n".

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chartcons/spinal.hpp"
#include "chartcons/tag_grammar.hpp"
#include "chartcons/tag_parser.hpp"
#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

struct Inventory {
  TagGrammar grammar;        // unlexicalized trees, names unique
  std::vector<long> counts;  // corpus frequency per tree

  int size() const { return grammar.size(); }
};

/// Deduplicates the trees used in `corpus` by shape, summing frequencies.
/// The first name seen for a shape is kept.
inline Inventory extract_inventory(const std::vector<TagCorpusEntry>& corpus, const TagGrammar& g) {
  std::vector<ElementaryTree> trees;
  std::vector<long> counts;
  std::unordered_map<std::string, int> by_shape;
  for (const auto& e : corpus)
    for (const auto& name : e.supertags) {
      const int t = g.find(name);
      if (t < 0) throw DataError("supertag '" + name + "' is not in the grammar");
      auto [it, fresh] = by_shape.emplace(elementary_shape(g.tree(t)), static_cast<int>(trees.size()));
      if (fresh) {
        trees.push_back(g.tree(t));
        counts.push_back(0);
      }
      ++counts[it->second];
    }
  return {TagGrammar(g.start(), std::move(trees)), std::move(counts)};
}

/// Renames each supertag to the inventory tree of the same shape. Sentences
/// with a tree outside the inventory are dropped when `drop_unknown`, else an
/// error.
inline std::vector<TagCorpusEntry> to_inventory_names(std::vector<TagCorpusEntry> corpus, const TagGrammar& g,
                                                      const TagGrammar& inventory, bool drop_unknown) {
  std::unordered_map<std::string, std::string> by_shape;
  for (const auto& t : inventory.trees()) by_shape.emplace(elementary_shape(t), t.name);
  std::vector<TagCorpusEntry> out;
  for (auto& e : corpus) {
    bool known = true;
    for (auto& name : e.supertags) {
      const int t = g.find(name);
      auto it = t < 0 ? by_shape.end() : by_shape.find(elementary_shape(g.tree(t)));
      if (it == by_shape.end()) {
        if (!drop_unknown) throw DataError("supertag '" + name + "' is not in the inventory");
        known = false;
        break;
      }
      name = it->second;
    }
    if (known) out.push_back(std::move(e));
  }
  return out;
}

struct ScoredSupertag {
  std::string name;
  double logprob;
};

/// Per token, up to k supertags sorted by descending logprob.
using SupertagAssignment = std::vector<std::vector<ScoredSupertag>>;

class SupertagModel {
 public:
  virtual ~SupertagModel() = default;
  virtual const TagGrammar& inventory() const = 0;
  /// Per token, a probability for every inventory tree (sums to 1).
  virtual std::vector<std::vector<double>> distributions(const std::vector<std::string>& words,
                                                         const std::vector<std::string>& pos) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

/// P(tree | POS context) interpolated with P(tree | word, POS), then
/// P(tree | POS), then uniform, using Witten-Bell weights N / (N + T).
class FrequencySupertagger : public SupertagModel {
 public:
  using Counts = std::map<int, long>;

  static FrequencySupertagger train(const std::vector<TagCorpusEntry>& corpus, const TagGrammar& inv) {
    FrequencySupertagger m;
    m.inventory_ = inv;
    for (const auto& e : corpus)
      for (size_t i = 0; i < e.words.size(); ++i) {
        const int t = inv.find(e.supertags[i]);
        if (t < 0) throw DataError("supertag '" + e.supertags[i] + "' is not in the inventory");
        ++m.by_pos_[e.pos[i]][t];
        ++m.by_word_[e.words[i] + "\t" + e.pos[i]][t];
        ++m.by_context_[context(e.pos, i)][t];
      }
    return m;
  }

  const TagGrammar& inventory() const override { return inventory_; }

  std::vector<std::vector<double>> distributions(const std::vector<std::string>& words,
                                                 const std::vector<std::string>& pos) const override {
    if (words.size() != pos.size()) throw UsageError("supertagger: words and POS differ in length");
    const size_t k = static_cast<size_t>(inventory_.size());
    std::vector<std::vector<double>> out;
    for (size_t i = 0; i < words.size(); ++i) {
      std::vector<double> p(k, k ? 1.0 / static_cast<double>(k) : 0.0);
      p = interpolate(find(by_pos_, pos[i]), p);
      p = interpolate(find(by_word_, words[i] + "\t" + pos[i]), p);
      p = interpolate(find(by_context_, context(pos, i)), p);
      out.push_back(std::move(p));
    }
    return out;
  }

  nlohmann::json to_json() const override {
    auto table = [](const std::unordered_map<std::string, Counts>& m) {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& [key, counts] : m) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& [t, c] : counts) row.push_back({t, c});
        j[key] = row;
      }
      return j;
    };
    return {{"kind", "supertag-frequency"},
            {"inventory", write_tag_grammar(inventory_)},
            {"by_pos", table(by_pos_)},
            {"by_word", table(by_word_)},
            {"by_context", table(by_context_)}};
  }

  static FrequencySupertagger from_json(const nlohmann::json& j) {
    FrequencySupertagger m;
    m.inventory_ = read_tag_grammar(j.at("inventory").get<std::string>());
    auto table = [&](const nlohmann::json& src, std::unordered_map<std::string, Counts>& dst) {
      for (const auto& [key, row] : src.items())
        for (const auto& cell : row) {
          const int t = cell.at(0).get<int>();
          if (t < 0 || t >= m.inventory_.size()) throw DataError("supertag model: tree index out of range");
          dst[key][t] = cell.at(1).get<long>();
        }
    };
    table(j.at("by_pos"), m.by_pos_);
    table(j.at("by_word"), m.by_word_);
    table(j.at("by_context"), m.by_context_);
    return m;
  }

 private:
  static std::string context(const std::vector<std::string>& pos, size_t i) {
    const std::string prev = i == 0 ? "<s>" : pos[i - 1];
    const std::string next = i + 1 == pos.size() ? "</s>" : pos[i + 1];
    return prev + "\t" + pos[i] + "\t" + next;
  }

  static const Counts* find(const std::unordered_map<std::string, Counts>& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  }

  static std::vector<double> interpolate(const Counts* counts, std::vector<double> backoff) {
    if (!counts || counts->empty()) return backoff;
    double total = 0;
    for (const auto& [t, c] : *counts) total += static_cast<double>(c);
    const double types = static_cast<double>(counts->size());
    const double lambda = total / (total + types);
    for (auto& p : backoff) p *= 1.0 - lambda;
    for (const auto& [t, c] : *counts) backoff[t] += lambda * static_cast<double>(c) / total;
    return backoff;
  }

  TagGrammar inventory_;
  std::unordered_map<std::string, Counts> by_pos_;
  std::unordered_map<std::string, Counts> by_word_;
  std::unordered_map<std::string, Counts> by_context_;
};

/// k best trees per token; equal probabilities keep inventory order.
inline SupertagAssignment topk(const TagGrammar& inventory,
                               const std::vector<std::vector<double>>& distributions, int k) {
  if (k < 1) throw UsageError("topk: k must be at least 1");
  SupertagAssignment out;
  for (const auto& p : distributions) {
    std::vector<int> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
    std::vector<ScoredSupertag> row;
    for (int r = 0; r < std::min<int>(k, static_cast<int>(order.size())); ++r)
      row.push_back({inventory.tree(order[r]).name, std::log(p[order[r]])});
    out.push_back(std::move(row));
  }
  return out;
}

inline SupertagAssignment topk(const SupertagModel& m, const std::vector<std::string>& words,
                               const std::vector<std::string>& pos, int k) {
  return topk(m.inventory(), m.distributions(words, pos), k);
}

/// The gold supertags of a corpus sentence, each with logprob 0.
inline SupertagAssignment gold_assignment(const TagCorpusEntry& e) {
  SupertagAssignment out;
  for (const auto& name : e.supertags) out.push_back({{name, 0.0}});
  return out;
}

inline std::vector<std::string> artificial_tokens(size_t n) {
  std::vector<std::string> out;
  for (size_t i = 1; i <= n; ++i) out.push_back(std::to_string(i));
  return out;
}

/// Trees for position i are anchored by the token "i" (1-based), named
/// "<tree>_<i>" and weighted by their supertag logprob.
inline TagGrammar sentence_grammar(const SupertagAssignment& a, const TagGrammar& inventory) {
  std::vector<ElementaryTree> trees;
  for (size_t i = 0; i < a.size(); ++i)
    for (const auto& s : a[i]) {
      const int t = inventory.find(s.name);
      if (t < 0) throw DataError("supertag '" + s.name + "' is not in the inventory");
      ElementaryTree et = inventory.tree(t);
      et.anchor_word = std::to_string(i + 1);
      et.name = s.name + "_" + et.anchor_word;
      et.logprob = s.logprob;
      trees.push_back(std::move(et));
    }
  return TagGrammar(inventory.start(), std::move(trees));
}

/// Replaces the artificial leaves "1".."n" by the original tokens.
inline Tree relabel(const Tree& t, const std::vector<std::string>& tokens) {
  if (t.is_leaf()) {
    long i = 0;
    try {
      i = parse_long(t.label);
    } catch (const DataError&) {
      throw DataError("relabel: leaf '" + t.label + "' is not a token index");
    }
    if (i < 1 || i > static_cast<long>(tokens.size()))
      throw DataError("relabel: leaf index " + t.label + " out of range");
    return Tree(tokens[i - 1]);
  }
  Tree out(t.label, {}, t.is_new);
  for (const auto& c : t.children) out.children.push_back(relabel(c, tokens));
  return out;
}

/// Drops the "_<i>" position suffix that sentence_grammar adds to names.
inline void strip_positions(DerivationNode& d) {
  if (auto cut = d.tree_name.rfind('_'); cut != std::string::npos) d.tree_name.resize(cut);
  for (auto& e : d.children) strip_positions(e.child[0]);
}

}  // namespace chartcons
