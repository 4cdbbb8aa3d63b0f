#pragma once

// A small English-like generative PCFG used to produce synthetic treebanks of
// known provenance (n-ary rules, POS preterminals, numbers, attachment
// ambiguity) for tests, benchmarks and the bundled toy corpus.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "chartcons/tree.hpp"

namespace chartcons {

struct GenerativeRule {
  std::vector<std::string> rhs;
  double weight;
};

struct GenerativeGrammar {
  std::string start = "S";
  std::map<std::string, std::vector<GenerativeRule>> rules;
  std::map<std::string, std::vector<std::string>> lexicon;  // POS -> words
};

inline GenerativeGrammar toy_english_grammar() {
  GenerativeGrammar g;
  g.start = "TOP";
  auto& r = g.rules;
  r["S"] = {{{"NP", "VP", "."}, 0.40},         {{"NP", "VP"}, 0.10},
            {{"PP", ",", "NP", "VP", "."}, 0.07}, {{"ADVP", ",", "NP", "VP", "."}, 0.05},
            {{"SBAR", ",", "NP", "VP", "."}, 0.05}, {{"NP", "ADVP", "VP", "."}, 0.05},
            {{"NP", "VP", ",", "SBAR", "."}, 0.05}, {{"S", ",", "CC", "S", "."}, 0.05},
            {{"NP", "MD", "VP", "."}, 0.08},    {{"S", "CC", "S"}, 0.04},
            {{"CC", "NP", "VP", "."}, 0.03},    {{"NP", "VP", "PP", "."}, 0.03},
            {{"VP", "."}, 0.03},                {{"S", ":", "S", "."}, 0.02},
            {{"NP", ",", "NP", "VP", "."}, 0.02}, {{"PP", "NP", "VP", "."}, 0.02},
            {{"NP", "PRN", "VP", "."}, 0.02},  {{"S", ",", "NP", "VP", "."}, 0.02}};
  r["SINV"] = {{{"VBD", "NP", "."}, 0.5}, {{"VP", "VBD", "NP", "."}, 0.5}};
  r["FRAG"] = {{{"NP", "."}, 0.4}, {{"PP", "."}, 0.2}, {{"ADVP", "NP", "."}, 0.2},
               {{"NP", ":", "NP", "."}, 0.2}};
  r["PRN"] = {{{",", "S", ","}, 0.4}, {{"-LRB-", "NP", "-RRB-"}, 0.4},
              {{":", "NP", ":"}, 0.2}};
  r["UCP"] = {{{"ADJP", "CC", "NP"}, 0.5}, {{"NP", "CC", "ADJP"}, 0.5}};
  r["TOP"] = {{{"S"}, 0.88}, {{"SINV"}, 0.04}, {{"FRAG"}, 0.08}};
  r["NP"] = {{{"DT", "NN"}, 0.14},         {{"DT", "JJ", "NN"}, 0.08},
             {{"DT", "NN", "NN"}, 0.04},   {{"DT", "JJ", "NN", "NN"}, 0.02},
             {{"DT", "ADJP", "NN"}, 0.02}, {{"NNP"}, 0.04},
             {{"NNP", "NNP"}, 0.04},       {{"NNP", "NNP", "NNP"}, 0.01},
             {{"PRP"}, 0.07},              {{"NNS"}, 0.04},
             {{"JJ", "NNS"}, 0.04},        {{"CD", "NNS"}, 0.03},
             {{"QP", "NNS"}, 0.02},        {{"DT", "NNS"}, 0.03},
             {{"PRP$", "NN"}, 0.03},       {{"PRP$", "JJ", "NNS"}, 0.02},
             {{"NN"}, 0.02},               {{"DT", "JJS", "NN"}, 0.01},
             {{"NN", "NNS"}, 0.02},        {{"NP", "PP"}, 0.20},
             {{"NP", "SBAR"}, 0.06},       {{"NP", ",", "NP", ","}, 0.02},
             {{"NP", "CC", "NP"}, 0.04},   {{"NP", "VP"}, 0.02},
             {{"CD"}, 0.01},               {{"DT"}, 0.01},
             {{"NP", "NP"}, 0.02},         {{"DT", "NN", "POS", "NN"}, 0.01},
             {{"NP", "POS", "NNS"}, 0.01}, {{"ADJP", "NNS"}, 0.02},
             {{"DT", "UCP", "NN"}, 0.01},  {{"NP", "PRN"}, 0.01},
             {{"NNP", "CD"}, 0.01},        {{"CD", "NN"}, 0.01},
             {{"DT", "VBG", "NN"}, 0.01},  {{"NP", ",", "NP", "CC", "NP"}, 0.01}};
  r["VP"] = {{{"VBD", "NP"}, 0.13},        {{"VBD", "NP", "PP"}, 0.07},
             {{"VBD", "PP"}, 0.05},        {{"VBD"}, 0.02},
             {{"VBZ", "NP"}, 0.07},        {{"VBZ", "ADJP"}, 0.04},
             {{"VBP", "NP"}, 0.05},        {{"MD", "VP"}, 0.04},
             {{"TO", "VP"}, 0.04},         {{"VB", "NP"}, 0.06},
             {{"VB", "NP", "PP"}, 0.03},   {{"VBD", "SBAR"}, 0.04},
             {{"VBD", "S"}, 0.02},         {{"VP", "CC", "VP"}, 0.03},
             {{"VP", "PP"}, 0.04},         {{"VP", "ADVP"}, 0.02},
             {{"ADVP", "VP"}, 0.02},       {{"VBN", "PP"}, 0.03},
             {{"VBN", "NP", "PP"}, 0.02},  {{"VBD", "NP", "ADVP"}, 0.02},
             {{"VBG", "NP"}, 0.03},        {{"VBZ", "VP"}, 0.03},
             {{"VBD", "VP"}, 0.03},        {{"VBD", "NP", "NP"}, 0.01},
             {{"VBD", "ADJP"}, 0.02},      {{"VBP", "VP"}, 0.02},
             {{"VBD", "NP", "TO", "NP"}, 0.01}, {{"VBD", "NP", "SBAR"}, 0.02},
             {{"VBD", "NP", "PP", "PP"}, 0.02}, {{"VBD", "PP", "PP"}, 0.01},
             {{"VB", "PP"}, 0.02},            {{"VBN", "NP"}, 0.01},
             {{"VBD", "ADVP", "PP"}, 0.01},   {{"VBD", "NP", ",", "SBAR"}, 0.01},
             {{"VBD", "S", "PP"}, 0.01},      {{"VBZ", "NP", "PP"}, 0.02}};
  r["PP"] = {{{"IN", "NP"}, 0.80}, {{"TO", "NP"}, 0.08}, {{"RB", "IN", "NP"}, 0.04},
             {{"IN", "S"}, 0.03}, {{"IN", "PP"}, 0.02}, {{"NP", "IN", "NP"}, 0.02},
             {{"IN"}, 0.01}};
  r["SBAR"] = {{{"IN", "S"}, 0.45}, {{"WHNP", "S"}, 0.25}, {{"WHADVP", "S"}, 0.15}, {{"S"}, 0.15}};
  r["WHNP"] = {{{"WDT"}, 0.6}, {{"WP"}, 0.4}};
  r["WHADVP"] = {{{"WRB"}, 1.0}};
  r["ADJP"] = {{{"JJ"}, 0.45}, {{"RB", "JJ"}, 0.2}, {{"JJ", "PP"}, 0.1}, {{"JJR"}, 0.1},
               {{"RBR", "JJ"}, 0.05}, {{"JJ", "CC", "JJ"}, 0.1}, {{"NP", "JJ"}, 0.05},
               {{"RB", "JJ", "PP"}, 0.03}, {{"QP"}, 0.02}};
  r["ADVP"] = {{{"RB"}, 0.6}, {{"RB", "RB"}, 0.15}, {{"RBR"}, 0.1}, {{"NP", "RB"}, 0.1},
               {{"RB", "PP"}, 0.05}};
  r["QP"] = {{{"RB", "CD"}, 0.3}, {{"IN", "CD"}, 0.3}, {{"CD", "TO", "CD"}, 0.2},
             {{"CD", "CD"}, 0.2}};
  auto& lex = g.lexicon;
  lex["DT"] = {"the", "a", "this", "every", "that", "some", "an", "no"};
  lex["JJ"] = {"big", "old", "red", "quick", "small", "happy", "green", "new",
               "strange", "loud", "federal", "local", "financial", "major", "recent"};
  lex["JJR"] = {"bigger", "older", "higher", "lower"};
  lex["JJS"] = {"biggest", "largest", "best"};
  lex["NN"] = {"cat",    "dog",  "man",  "park",   "telescope", "house", "car",
               "report", "city", "tree", "river",  "table",     "book",  "market",
               "plan",   "idea", "road", "company", "price",    "stock", "bank",
               "year",   "week", "government", "share", "deal", "board"};
  lex["NNS"] = {"cats", "dogs", "reports", "books", "markets", "ideas", "trees",
                "shares", "prices", "investors", "years", "companies", "analysts"};
  lex["NNP"] = {"John", "Mary", "London", "Acme", "Smith", "Paris", "Corp.", "Inc.", "Friday"};
  lex["PRP"] = {"he", "she", "it", "they", "we", "I"};
  lex["PRP$"] = {"his", "her", "their", "its", "our"};
  lex["CD"] = {"3", "12", "1,000", "2.5", "40", "1987", "seven", "two", "million", "100"};
  lex["VBD"] = {"saw", "bought", "liked", "found", "sold", "watched", "said",
                "built", "ran", "was", "rose", "fell", "reported", "had"};
  lex["VBZ"] = {"sees", "likes", "is", "owns", "wants", "has", "says"};
  lex["VBP"] = {"see", "like", "are", "have", "own", "say"};
  lex["VB"] = {"see", "buy", "like", "sell", "build", "be", "make"};
  lex["VBN"] = {"sold", "built", "reported", "expected", "made", "based"};
  lex["VBG"] = {"buying", "selling", "making", "rising", "building"};
  lex["MD"] = {"will", "can", "should", "would", "could"};
  lex["TO"] = {"to"};
  lex["RB"] = {"quickly", "very", "often", "never", "also", "not", "still", "about"};
  lex["RBR"] = {"more", "less"};
  lex["IN"] = {"with", "in", "on", "near", "that", "of", "from", "for", "by", "because",
               "if", "after"};
  lex["WDT"] = {"which", "that"};
  lex["WP"] = {"who", "what"};
  lex["WRB"] = {"when", "where"};
  lex["CC"] = {"and", "or", "but"};
  lex["POS"] = {"'s", "'"};
  lex[":"] = {"--", ";", ":"};
  lex["-LRB-"] = {"-LRB-"};
  lex["-RRB-"] = {"-RRB-"};
  lex["."] = {"."};
  lex[","] = {","};
  return g;
}

namespace detail {

inline Tree generate_node(const GenerativeGrammar& g, const std::string& label,
                          std::mt19937_64& rng, int depth, int max_depth, bool& too_deep) {
  auto lex = g.lexicon.find(label);
  if (lex != g.lexicon.end()) {
    std::uniform_int_distribution<size_t> pick(0, lex->second.size() - 1);
    return Tree(label, {Tree(lex->second[pick(rng)])});
  }
  const auto& options = g.rules.at(label);
  std::vector<double> w;
  for (const auto& o : options) {
    // Damp recursion as depth grows so generated lengths stay bounded.
    bool recursive = false;
    for (const auto& s : o.rhs)
      if (g.rules.count(s) && s == label) recursive = true;
    w.push_back(recursive ? o.weight * std::pow(0.85, depth / 2) : o.weight);
  }
  std::discrete_distribution<size_t> pick(w.begin(), w.end());
  const auto& choice = options[pick(rng)];
  Tree node(label);
  if (depth >= max_depth) {
    too_deep = true;
    return node;
  }
  for (const auto& s : choice.rhs) {
    node.children.push_back(generate_node(g, s, rng, depth + 1, max_depth, too_deep));
    if (too_deep) return node;
  }
  return node;
}

}  // namespace detail

/// Samples `count` trees whose yields have between min_len and max_len words.
inline std::vector<Tree> generate_treebank(const GenerativeGrammar& g, size_t count,
                                           uint64_t seed, int min_len = 2, int max_len = 40) {
  std::mt19937_64 rng(seed);
  std::vector<Tree> out;
  while (out.size() < count) {
    bool too_deep = false;
    Tree t = detail::generate_node(g, g.start, rng, 0, 30, too_deep);
    if (too_deep) continue;
    int n = static_cast<int>(t.num_leaves());
    if (n < min_len || n > max_len) continue;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace chartcons
