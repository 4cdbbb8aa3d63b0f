#pragma once

// PARSEVAL scoring, per-sentence benchmark runs and corpus reports.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "chartcons/cky.hpp"
#include "chartcons/constraints.hpp"
#include "chartcons/pcfg.hpp"
#include "chartcons/supertag.hpp"
#include "chartcons/tag_parser.hpp"
#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

struct ParsevalCounts {
  long matched = 0;
  long gold = 0;
  long pred = 0;

  double precision() const { return pred ? 100.0 * static_cast<double>(matched) / static_cast<double>(pred) : 0.0; }
  double recall() const { return gold ? 100.0 * static_cast<double>(matched) / static_cast<double>(gold) : 0.0; }
  double fscore() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  ParsevalCounts& operator+=(const ParsevalCounts& o) {
    matched += o.matched;
    gold += o.gold;
    pred += o.pred;
    return *this;
  }
};

inline constexpr const char* kParsevalConventions =
    "labeled (label,i,k) bracket multisets; root included; preterminals excluded when the tree has a "
    "preterminal layer; unparsed sentences score 0 matched against their gold brackets";

/// Labeled bracket multiset of a debinarized tree.
inline std::multiset<std::tuple<std::string, int, int>> brackets(const Tree& t) {
  const bool skip_pos = has_preterminal_layer(t);
  std::multiset<std::tuple<std::string, int, int>> out;
  for (const auto& c : constituents(t)) {
    if (c.node->is_leaf() || (skip_pos && c.node->is_preterminal())) continue;
    out.emplace(c.node->label, c.begin, c.end);
  }
  return out;
}

inline ParsevalCounts parseval(const Tree& gold, const Tree& pred) {
  if (gold.num_leaves() != pred.num_leaves())
    throw DataError("parseval: yields differ in length (" + std::to_string(gold.num_leaves()) + " vs " +
                    std::to_string(pred.num_leaves()) + ")");
  const auto g = brackets(gold), p = brackets(pred);
  ParsevalCounts c;
  c.gold = static_cast<long>(g.size());
  c.pred = static_cast<long>(p.size());
  auto gi = g.begin();
  auto pi = p.begin();
  while (gi != g.end() && pi != p.end()) {
    if (*gi < *pi) ++gi;
    else if (*pi < *gi) ++pi;
    else {
      ++c.matched;
      ++gi;
      ++pi;
    }
  }
  return c;
}

/// One sentence of one benchmark run.
struct SentenceResult {
  long sent_id = 0;
  int n = 0;
  bool parsed = false;
  double chart_ms = 0.0;  // chart construction only, min over repeats
  double total_ms = 0.0;  // predicate setup + chart + best-derivation extraction
  size_t items = 0;
  double gold_fraction = 0.0;
  ParsevalCounts counts;
  std::optional<Tree> tree;  // debinarized, with words
};

struct BenchOptions {
  int warmup = 10;   // leading sentences parsed once, untimed, before the run
  int repeats = 3;   // chart constructions per sentence; the minimum is reported
  unsigned jobs = 1;
};

/// Builds the allowability predicate of one sentence (index into the corpus).
using PcfgPredicateFactory = std::function<PcfgPredicate(size_t)>;
using TagPredicateFactory = std::function<TagPredicate(size_t)>;

/// Parses POS sequences of `gold` trees; sentence ids are 1-based corpus positions.
inline std::vector<SentenceResult> bench_pcfg(const Pcfg& g, const std::vector<Tree>& gold,
                                              const PcfgPredicateFactory& make_predicate,
                                              const BenchOptions& opt = {}) {
  if (opt.repeats < 1) throw UsageError("bench: repeats must be at least 1");
  std::vector<SentenceResult> rows(gold.size());
  auto run = [&](size_t s, bool keep) {
    const Tree& t = gold[s];
    const auto tags = preterminal_labels(t);
    SentenceResult r;
    r.sent_id = static_cast<long>(s) + 1;
    r.n = static_cast<int>(tags.size());
    Stopwatch setup;
    const PcfgPredicate allow = make_predicate ? make_predicate(s) : PcfgPredicate{};
    const double setup_ms = setup.elapsed_ms();
    std::optional<Chart> chart;
    double best = 0.0;
    for (int rep = 0; rep < opt.repeats; ++rep) {
      Stopwatch sw;
      Chart c = parse(g, tags, allow);
      const double ms = sw.elapsed_ms();
      if (!chart || ms < best) best = ms;
      if (!chart) chart.emplace(std::move(c));
    }
    r.chart_ms = best;
    Stopwatch extract;
    auto v = viterbi(*chart);
    r.total_ms = setup_ms + best + extract.elapsed_ms();
    const auto st = chart_stats(*chart, t);
    r.items = st.item_count;
    r.gold_fraction = st.gold_fraction;
    r.parsed = v.has_value();
    if (v) {
      r.tree = attach_words(debinarize(v->tree), leaves(t));
      r.counts = parseval(t, *r.tree);
    } else {
      r.counts.gold = static_cast<long>(brackets(t).size());
    }
    if (keep) rows[s] = std::move(r);
  };
  for (size_t s = 0; s < std::min<size_t>(static_cast<size_t>(std::max(opt.warmup, 0)), gold.size()); ++s)
    run(s, false);
  parallel_for(gold.size(), opt.jobs, [&](size_t s) { run(s, true); });
  return rows;
}

/// Parses supertagged TAG corpus sentences. `grammar_for(s)` gives the
/// grammar and token string of sentence s; derived trees get the corpus words
/// as leaves.
struct TagSentence {
  TagGrammar grammar;
  std::vector<std::string> tokens;
};

inline std::vector<SentenceResult> bench_tag(const std::vector<TagCorpusEntry>& corpus,
                                             const std::function<TagSentence(size_t)>& grammar_for,
                                             const TagPredicateFactory& make_predicate,
                                             const BenchOptions& opt = {}) {
  if (opt.repeats < 1) throw UsageError("bench: repeats must be at least 1");
  std::vector<SentenceResult> rows(corpus.size());
  auto run = [&](size_t s, bool keep) {
    const TagCorpusEntry& e = corpus[s];
    SentenceResult r;
    r.sent_id = static_cast<long>(s) + 1;
    r.n = static_cast<int>(e.words.size());
    Stopwatch setup;
    const TagSentence ts = grammar_for(s);
    const TagPredicate allow = make_predicate ? make_predicate(s) : TagPredicate{};
    const double setup_ms = setup.elapsed_ms();
    std::optional<TagChart> chart;
    double best = 0.0;
    for (int rep = 0; rep < opt.repeats; ++rep) {
      Stopwatch sw;
      TagChart c = tag_parse(ts.grammar, ts.tokens, allow);
      const double ms = sw.elapsed_ms();
      if (!chart || ms < best) best = ms;
      if (!chart) chart.emplace(std::move(c));
    }
    r.chart_ms = best;
    Stopwatch extract;
    auto d = best_derivation(*chart);
    r.total_ms = setup_ms + best + extract.elapsed_ms();
    r.items = chart->item_count();
    const auto spans = gold_spans(e.derived);
    size_t consistent = 0;
    chart->for_each_item([&](const TagItem& x, double) { consistent += spans.count({x.i, x.l}); });
    r.gold_fraction = r.items ? static_cast<double>(consistent) / static_cast<double>(r.items) : 0.0;
    r.parsed = d.has_value();
    if (d) {
      r.tree = replace_leaves(d->derived, e.words);
      r.counts = parseval(e.derived, *r.tree);
    } else {
      r.counts.gold = static_cast<long>(brackets(e.derived).size());
    }
    if (keep) rows[s] = std::move(r);
  };
  for (size_t s = 0; s < std::min<size_t>(static_cast<size_t>(std::max(opt.warmup, 0)), corpus.size()); ++s)
    run(s, false);
  parallel_for(corpus.size(), opt.jobs, [&](size_t s) { run(s, true); });
  return rows;
}

struct EvalReport {
  std::string run;
  std::string baseline;
  long sentences = 0;
  long parsed = 0;
  double coverage = 0.0;  // percent
  ParsevalCounts all;     // coverage-penalized
  ParsevalCounts parsed_only;
  double mean_chart_ms = 0.0;
  double mean_total_ms = 0.0;
  double mean_items = 0.0;
  double mean_gold_pct = 0.0;
  double speedup = 1.0;  // over sentences parsed by both runs
};

inline EvalReport summarize(const std::string& run, const std::vector<SentenceResult>& rows,
                            const std::string& baseline_name = "",
                            const std::vector<SentenceResult>* baseline = nullptr) {
  EvalReport r;
  r.run = run;
  r.baseline = baseline ? baseline_name : run;
  r.sentences = static_cast<long>(rows.size());
  for (const auto& s : rows) {
    r.parsed += s.parsed;
    r.all += s.counts;
    if (s.parsed) r.parsed_only += s.counts;
    r.mean_chart_ms += s.chart_ms;
    r.mean_total_ms += s.total_ms;
    r.mean_items += static_cast<double>(s.items);
    r.mean_gold_pct += 100.0 * s.gold_fraction;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    r.coverage = 100.0 * static_cast<double>(r.parsed) / n;
    r.mean_chart_ms /= n;
    r.mean_total_ms /= n;
    r.mean_items /= n;
    r.mean_gold_pct /= n;
  }
  if (baseline) {
    if (baseline->size() != rows.size()) throw UsageError("bench: baseline covers a different corpus");
    double mine = 0.0, theirs = 0.0;
    for (size_t s = 0; s < rows.size(); ++s)
      if (rows[s].parsed && (*baseline)[s].parsed) {
        mine += rows[s].chart_ms;
        theirs += (*baseline)[s].chart_ms;
      }
    r.speedup = mine > 0 ? theirs / mine : 1.0;
  }
  return r;
}

/// Reports for named runs, each against `baseline` (which must be one of them).
inline std::vector<EvalReport> summarize_runs(const std::vector<std::pair<std::string, std::vector<SentenceResult>>>& runs,
                                              const std::string& baseline) {
  const std::vector<SentenceResult>* base = nullptr;
  for (const auto& [name, rows] : runs)
    if (name == baseline) base = &rows;
  if (!base) throw UsageError("bench: no run named '" + baseline + "' for the baseline");
  std::vector<EvalReport> out;
  for (const auto& [name, rows] : runs) out.push_back(summarize(name, rows, baseline, base));
  return out;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline constexpr const char* kReportHeader =
    "run\tbaseline\tsentences\tparsed\tcoverage\tprecision\trecall\tfscore\tprecision_parsed\trecall_parsed\t"
    "fscore_parsed\tchart_ms\ttotal_ms\titems\tgold_pct\tspeedup";

inline std::string format_report(const std::vector<EvalReport>& reports) {
  std::string out = "# report v1; parseval: ";
  out += kParsevalConventions;
  out += "; speedup over sentences parsed by both runs\n";
  out += kReportHeader;
  out += '\n';
  for (const auto& r : reports) {
    out += r.run + "\t" + r.baseline + "\t" + std::to_string(r.sentences) + "\t" + std::to_string(r.parsed) + "\t" +
           format_fixed(r.coverage, 2) + "\t" + format_fixed(r.all.precision(), 2) + "\t" +
           format_fixed(r.all.recall(), 2) + "\t" + format_fixed(r.all.fscore(), 2) + "\t" +
           format_fixed(r.parsed_only.precision(), 2) + "\t" + format_fixed(r.parsed_only.recall(), 2) + "\t" +
           format_fixed(r.parsed_only.fscore(), 2) + "\t" + format_fixed(r.mean_chart_ms, 3) + "\t" +
           format_fixed(r.mean_total_ms, 3) + "\t" + format_fixed(r.mean_items, 1) + "\t" +
           format_fixed(r.mean_gold_pct, 2) + "\t" + format_fixed(r.speedup, 2) + "x\n";
  }
  return out;
}

inline constexpr const char* kSentenceHeader =
    "run\tsent_id\tn\tparsed\tchart_ms\ttotal_ms\titems\tgold_pct\tmatched\tgold\tpred";

/// Per-sentence rows of all runs, stably sorted by sent_id.
inline std::string format_sentence_rows(
    const std::vector<std::pair<std::string, std::vector<SentenceResult>>>& runs) {
  struct Row {
    long id;
    std::string text;
  };
  std::vector<Row> rows;
  for (const auto& [name, results] : runs)
    for (const auto& s : results)
      rows.push_back({s.sent_id, name + "\t" + std::to_string(s.sent_id) + "\t" + std::to_string(s.n) + "\t" +
                                     (s.parsed ? "1" : "0") + "\t" + format_fixed(s.chart_ms, 4) + "\t" +
                                     format_fixed(s.total_ms, 4) + "\t" + std::to_string(s.items) + "\t" +
                                     format_fixed(100.0 * s.gold_fraction, 2) + "\t" +
                                     std::to_string(s.counts.matched) + "\t" + std::to_string(s.counts.gold) +
                                     "\t" + std::to_string(s.counts.pred)});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
  std::string out = kSentenceHeader;
  out += '\n';
  for (const auto& r : rows) out += r.text + "\n";
  return out;
}

}  // namespace chartcons
