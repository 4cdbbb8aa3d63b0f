// chartcons command-line interface. Exit status: 0 success, 1 usage error,
// 2 data error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "chartcons/cky.hpp"
#include "chartcons/constraints.hpp"
#include "chartcons/ctf.hpp"
#include "chartcons/eval.hpp"
#include "chartcons/pcfg.hpp"
#include "chartcons/spinal.hpp"
#include "chartcons/supertag.hpp"
#include "chartcons/synth.hpp"
#include "chartcons/tag_parser.hpp"
#include "chartcons/tagger.hpp"
#include "chartcons/tree.hpp"

using namespace chartcons;

namespace {

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write '" + path + "'");
}

std::vector<Tree> read_treebank(const std::string& path) {
  try {
    return read_ptb(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<TagCorpusEntry> read_corpus(const std::string& path) {
  try {
    return read_tag_corpus(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Words, tags and gold trees from a PTB treebank or a TAG corpus file.
struct Sentences {
  std::vector<std::vector<std::string>> words;
  std::vector<std::vector<std::string>> pos;
  std::vector<Tree> gold;
};

Sentences read_sentences(const std::string& path, const std::string& format) {
  Sentences s;
  if (format == "tag") {
    for (auto& e : read_corpus(path)) {
      s.words.push_back(e.words);
      s.pos.push_back(e.pos);
      s.gold.push_back(std::move(e.derived));
    }
    return s;
  }
  for (auto& t : read_treebank(path)) {
    if (!has_preterminal_layer(t)) throw DataError(path + ": trees need a preterminal layer");
    s.words.push_back(leaves(t));
    s.pos.push_back(preterminal_labels(t));
    s.gold.push_back(std::move(t));
  }
  return s;
}

/// Constraint records indexed by sentence: record with sent_id i goes to slot i-1.
std::vector<BeginEndConstraints> read_constraints(const std::string& path, const std::vector<int>& lengths) {
  std::vector<ConstraintRecord> records;
  try {
    records = constraints_from_file(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  std::vector<BeginEndConstraints> out(lengths.size());
  std::vector<char> seen(lengths.size(), 0);
  for (auto& r : records) {
    if (r.sent_id < 1 || r.sent_id > static_cast<long>(lengths.size()))
      throw DataError(path + ": sentence id " + std::to_string(r.sent_id) + " out of range");
    const size_t s = static_cast<size_t>(r.sent_id - 1);
    if (r.constraints.n() != lengths[s])
      throw DataError(path + ": sentence " + std::to_string(r.sent_id) + " has length " +
                      std::to_string(lengths[s]) + ", constraints say " + std::to_string(r.constraints.n()));
    out[s] = std::move(r.constraints);
    seen[s] = 1;
  }
  for (size_t s = 0; s < lengths.size(); ++s)
    if (!seen[s]) out[s] = BeginEndConstraints::none(lengths[s]);
  return out;
}

std::vector<int> lengths_of(const std::vector<std::vector<std::string>>& words) {
  std::vector<int> out;
  for (const auto& w : words) out.push_back(static_cast<int>(w.size()));
  return out;
}

TagStrategy parse_strategy(const std::string& s) {
  if (s == "cc") return TagStrategy::kCC;
  if (s == "be") return TagStrategy::kBE;
  throw UsageError("unknown strategy '" + s + "' (cc or be)");
}

Factoring parse_factoring(const std::string& s) {
  if (s == "left") return Factoring::kLeft;
  if (s == "right") return Factoring::kRight;
  throw UsageError("unknown factoring '" + s + "' (left or right)");
}

struct LstmFlags {
  int epochs = 6;
  double lr = 5e-4;
  double decay = 0.1;
  int hidden = 100;
  int layers = 2;
  int word_dim = 32;
  int pos_dim = 8;
  int min_count = 2;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", lr, "Initial RMSProp learning rate")->capture_default_str();
    app->add_option("--decay", decay, "Learning-rate decay per epoch")->capture_default_str();
    app->add_option("--hidden", hidden, "LSTM units per direction and layer")->capture_default_str();
    app->add_option("--layers", layers, "Stacked bidirectional layers")->capture_default_str();
    app->add_option("--word-dim", word_dim, "Word embedding size")->capture_default_str();
    app->add_option("--pos-dim", pos_dim, "POS embedding size")->capture_default_str();
    app->add_option("--min-count", min_count, "Words seen fewer times map to UNK")->capture_default_str();
  }

  TaggerConfig config(uint64_t seed) const {
    if (epochs < 1 || hidden < 1 || layers < 1 || word_dim < 1 || pos_dim < 1)
      throw UsageError("network sizes and epochs must be positive");
    TaggerConfig c;
    c.word_dim = word_dim;
    c.pos_dim = pos_dim;
    c.hidden = hidden;
    c.layers = layers;
    c.min_count = min_count;
    c.train.epochs = epochs;
    c.train.lr0 = lr;
    c.train.decay = decay;
    c.train.seed = seed;
    return c;
  }
};

void log_epoch(const EpochLog& l) {
  std::cerr << "epoch " << l.epoch << "\tloss " << format_fixed(l.train_loss, 4) << "\tdev "
            << format_fixed(l.dev_score, 2) << "\tlr " << l.lr << "\n";
}

std::string format_tagger_report(const TaggerReport& r) {
  std::string out = "set\taccuracy\tprecision\trecall\tbanned_pred\tbanned_gold\n";
  auto row = [&](const char* name, const Prf& p) {
    out += std::string(name) + "\t" + format_fixed(p.accuracy, 2) + "\t" + format_fixed(p.precision, 2) + "\t" +
           format_fixed(p.recall, 2) + "\t" + std::to_string(p.true_pos + p.false_pos) + "\t" +
           std::to_string(p.true_pos + p.false_neg) + "\n";
  };
  row("B", r.begin);
  row("E", r.end);
  return out;
}

/// "name=spec" with spec parts joined by '+'.
std::pair<std::string, std::vector<std::string>> parse_run(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("run '" + text + "' must look like name=spec");
  auto parts = split(text.substr(eq + 1), '+');
  if (parts.empty()) throw UsageError("run '" + text + "' has an empty spec");
  return {text.substr(0, eq), parts};
}

int run(int argc, char** argv) {
  CLI::App app{"Chart-constrained PCFG and TAG parsing"};
  app.set_config("--config", "", "TOML-style config file");
  app.require_subcommand(1);
  app.fallthrough();
  uint64_t seed = 1;
  unsigned jobs = 1;
  app.add_option("--seed", seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for parsing")->capture_default_str();

  // treebank ------------------------------------------------------------------
  auto* tb = app.add_subcommand("treebank", "Treebank tools");
  tb->require_subcommand(1);
  std::string tb_in, tb_out, factoring = "left", head_rules, grammar_out, corpus_out;
  int markov = 2, count = 2000, min_len = 2, max_len = 40;

  auto* tb_bin = tb->add_subcommand("binarize", "Binarize trees with horizontal markovization");
  tb_bin->add_option("--treebank", tb_in, "PTB trees")->required();
  tb_bin->add_option("--markov", markov, "Sibling context size h (0 = full)")->capture_default_str();
  tb_bin->add_option("--factoring", factoring, "left or right")->capture_default_str();
  tb_bin->add_option("--out", tb_out, "Output file (default stdout)");
  tb_bin->callback([&] {
    const Factoring f = parse_factoring(factoring);
    std::string out;
    for (const auto& t : read_treebank(tb_in)) out += to_ptb(binarize(t, markov, f)) + "\n";
    write_file(tb_out, out);
  });

  auto* tb_pcfg = tb->add_subcommand("extract-pcfg", "Binarize and read off a PCFG over POS tags");
  tb_pcfg->add_option("--treebank", tb_in, "PTB trees")->required();
  tb_pcfg->add_option("--markov", markov, "Sibling context size h")->capture_default_str();
  tb_pcfg->add_option("--factoring", factoring, "left or right")->capture_default_str();
  tb_pcfg->add_option("--out", tb_out, "Grammar file (default stdout)");
  tb_pcfg->callback([&] {
    const Factoring f = parse_factoring(factoring);
    std::vector<Tree> bin;
    for (const auto& t : read_treebank(tb_in)) {
      if (!has_preterminal_layer(t)) throw DataError(tb_in + ": trees need a preterminal layer");
      bin.push_back(binarize(t, markov, f));
    }
    write_file(tb_out, write_pcfg(extract_pcfg(bin, true)));
  });

  auto* tb_tag = tb->add_subcommand("extract-tag", "Extract a spinal TAG grammar and derivation corpus");
  tb_tag->add_option("--treebank", tb_in, "PTB trees")->required();
  tb_tag->add_option("--head-rules", head_rules, "Head rule table")->required();
  tb_tag->add_option("--grammar-out", grammar_out, "TAG grammar file")->required();
  tb_tag->add_option("--corpus-out", corpus_out, "TAG corpus file")->required();
  tb_tag->callback([&] {
    auto x = extract_spinal(read_treebank(tb_in), read_head_rules(read_file(head_rules)));
    write_file(grammar_out, write_tag_grammar(x.grammar));
    write_file(corpus_out, write_tag_corpus(x.corpus));
  });

  auto* tb_gen = tb->add_subcommand("generate", "Sample a synthetic treebank");
  tb_gen->add_option("--count", count, "Number of trees")->capture_default_str();
  tb_gen->add_option("--min-len", min_len, "Shortest sentence")->capture_default_str();
  tb_gen->add_option("--max-len", max_len, "Longest sentence")->capture_default_str();
  tb_gen->add_option("--out", tb_out, "Output file (default stdout)");
  tb_gen->callback([&] {
    if (count < 0 || min_len < 1 || max_len < min_len) throw UsageError("bad --count or length range");
    std::string out;
    for (const auto& t : generate_treebank(toy_english_grammar(), static_cast<size_t>(count), seed, min_len, max_len))
      out += to_ptb(t) + "\n";
    write_file(tb_out, out);
  });

  // constraints ----------------------------------------------------------------
  auto* cons = app.add_subcommand("constraints", "Chart constraint files");
  cons->require_subcommand(1);
  std::string c_in, c_format = "ptb", c_out, c_pred, c_gold;

  auto* c_gold_cmd = cons->add_subcommand("gold", "Gold constraints of a treebank");
  c_gold_cmd->add_option("--treebank", c_in, "PTB trees or TAG corpus")->required();
  c_gold_cmd->add_option("--input-format", c_format, "ptb or tag")->capture_default_str();
  c_gold_cmd->add_option("--out", c_out, "Constraints file (default stdout)");
  c_gold_cmd->callback([&] {
    const auto s = read_sentences(c_in, c_format);
    std::vector<ConstraintRecord> recs;
    for (size_t i = 0; i < s.gold.size(); ++i)
      recs.push_back({static_cast<long>(i) + 1, gold_constraints(s.gold[i])});
    write_file(c_out, constraints_to_file(recs));
  });

  auto* c_eval = cons->add_subcommand("eval", "Precision, recall and accuracy of predicted constraints");
  c_eval->add_option("--pred", c_pred, "Predicted constraints")->required();
  c_eval->add_option("--gold", c_gold, "Gold constraints")->required();
  c_eval->add_option("--out", c_out, "Report (default stdout)");
  c_eval->callback([&] {
    auto load = [](const std::string& path) {
      try {
        return constraints_from_file(read_file(path));
      } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
      }
    };
    auto pred = load(c_pred), gold = load(c_gold);
    if (pred.size() != gold.size()) throw DataError("constraints eval: files cover different sentence counts");
    std::vector<BeginEndConstraints> p, g;
    for (size_t i = 0; i < pred.size(); ++i) {
      if (pred[i].sent_id != gold[i].sent_id)
        throw DataError("constraints eval: sentence ids differ at record " + std::to_string(i + 1));
      if (pred[i].constraints.n() != gold[i].constraints.n())
        throw DataError("constraints eval: length mismatch for sentence " + std::to_string(pred[i].sent_id));
      p.push_back(pred[i].constraints);
      g.push_back(gold[i].constraints);
    }
    write_file(c_out, format_tagger_report(tagger_prf(p, g)));
  });

  // tagger ---------------------------------------------------------------------
  auto* tag = app.add_subcommand("tagger", "Boundary tagger");
  tag->require_subcommand(1);
  std::string t_train, t_dev, t_out, t_model, t_kind = "lstm", t_input, t_format = "ptb";
  double theta = 0.5;
  LstmFlags t_flags;

  auto* t_train_cmd = tag->add_subcommand("train", "Train a boundary tagger");
  t_train_cmd->add_option("--treebank", t_train, "Training trees (PTB or TAG corpus)")->required();
  t_train_cmd->add_option("--dev", t_dev, "Held-out trees for model selection");
  t_train_cmd->add_option("--input-format", t_format, "ptb or tag")->capture_default_str();
  t_train_cmd->add_option("--model", t_kind, "lstm or logistic")->capture_default_str();
  t_train_cmd->add_option("--out", t_out, "Model file")->required();
  t_flags.add(t_train_cmd);
  t_train_cmd->callback([&] {
    auto to_tagged = [&](const std::string& path) {
      const auto s = read_sentences(path, t_format);
      std::vector<TaggedSentence> out;
      for (size_t i = 0; i < s.gold.size(); ++i) out.push_back({s.words[i], s.pos[i], gold_constraints(s.gold[i])});
      return out;
    };
    const auto train = to_tagged(t_train);
    const auto dev = t_dev.empty() ? std::vector<TaggedSentence>{} : to_tagged(t_dev);
    if (t_kind == "lstm") {
      auto m = NeuralBoundaryTagger::train(train, dev, t_flags.config(seed), nullptr, log_epoch);
      write_file(t_out, model_to_text(m.to_json()));
    } else if (t_kind == "logistic") {
      LogisticBoundaryTagger::Options o;
      o.seed = seed;
      auto m = LogisticBoundaryTagger::train(train, o);
      if (!dev.empty()) std::cerr << "dev accuracy " << format_fixed(boundary_dev_score(m, dev), 2) << "\n";
      write_file(t_out, model_to_text(m.to_json()));
    } else {
      throw UsageError("unknown tagger model '" + t_kind + "' (lstm or logistic)");
    }
  });

  auto* t_pred = tag->add_subcommand("predict", "Predict constraints");
  t_pred->add_option("--model", t_model, "Model file")->required();
  t_pred->add_option("--input", t_input, "Sentences (PTB trees or TAG corpus, gold POS)")->required();
  t_pred->add_option("--input-format", t_format, "ptb or tag")->capture_default_str();
  t_pred->add_option("--theta", theta, "Threshold in [0.5, 1)")->capture_default_str();
  t_pred->add_option("--out", t_out, "Constraints file (default stdout)");
  t_pred->callback([&] {
    auto m = load_boundary_model(read_file(t_model));
    const auto s = read_sentences(t_input, t_format);
    std::vector<ConstraintRecord> recs(s.words.size());
    parallel_for(s.words.size(), jobs, [&](size_t i) {
      recs[i] = {static_cast<long>(i) + 1, predict_constraints(*m, s.words[i], s.pos[i], theta)};
    });
    write_file(t_out, constraints_to_file(recs));
  });

  // parse ----------------------------------------------------------------------
  auto* parse_cmd = app.add_subcommand("parse", "Parse with chart constraints");
  parse_cmd->require_subcommand(1);
  std::string p_grammar, p_input, p_format = "ptb", p_cons, p_out, p_coarse, p_strategy = "cc", p_model;
  std::string p_tokens = "pos";
  bool p_gold = false, p_ctf = false;
  double p_tau = 1e-5;
  int p_k = 3;

  auto* pp = parse_cmd->add_subcommand("pcfg", "CKY parsing of POS sequences");
  pp->add_option("--grammar", p_grammar, "PCFG file")->required();
  pp->add_option("--input", p_input, "PTB trees (their POS are parsed) or token lines")->required();
  pp->add_option("--input-format", p_format, "ptb or tokens")->capture_default_str();
  pp->add_option("--constraints", p_cons, "Constraints file");
  pp->add_flag("--gold-constraints", p_gold, "Use the gold constraints of the input trees");
  pp->add_flag("--ctf", p_ctf, "Coarse-to-fine pruning");
  pp->add_option("--ctf-threshold", p_tau, "Posterior threshold")->capture_default_str();
  pp->add_option("--coarse-map", p_coarse, "Fine-to-coarse label map");
  pp->add_option("--out", p_out, "Parses, one per line, empty when none (default stdout)");
  pp->callback([&] {
    const Pcfg g = read_pcfg(read_file(p_grammar));
    std::vector<std::vector<std::string>> tokens, words;
    std::vector<Tree> gold;
    if (p_format == "tokens") {
      for (const auto& line : split(read_file(p_input), '\n'))
        if (!trim(line).empty()) tokens.push_back(split_ws(line));
      words = tokens;
      if (p_gold) throw UsageError("--gold-constraints needs --input-format ptb");
    } else if (p_format == "ptb") {
      auto s = read_sentences(p_input, "ptb");
      tokens = std::move(s.pos);
      words = std::move(s.words);
      gold = std::move(s.gold);
    } else {
      throw UsageError("unknown input format '" + p_format + "' (ptb or tokens)");
    }
    const auto lengths = lengths_of(tokens);
    std::vector<BeginEndConstraints> file_cons;
    if (!p_cons.empty()) file_cons = read_constraints(p_cons, lengths);
    std::optional<CtfModel> ctf;
    if (p_ctf) ctf = CtfModel::build(g, p_coarse.empty() ? CoarseMap{} : read_coarse_map(read_file(p_coarse)));
    std::vector<std::string> lines(tokens.size());
    parallel_for(tokens.size(), jobs, [&](size_t i) {
      PcfgPredicate allow;
      if (!file_cons.empty()) allow = allow && pcfg_predicate(file_cons[i]);
      if (p_gold) allow = allow && pcfg_predicate(gold_constraints(gold[i]));
      if (ctf) allow = allow && ctf_predicate(*ctf, tokens[i], p_tau);
      if (auto v = viterbi(parse(g, tokens[i], allow))) {
        Tree t = debinarize(v->tree);
        lines[i] = to_ptb(p_format == "ptb" ? attach_words(t, words[i]) : t);
      }
    });
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    write_file(p_out, out);
  });

  auto* pt = parse_cmd->add_subcommand("tag", "TAG parsing of corpus sentences");
  std::string pt_format = "tag";
  pt->add_option("--grammar", p_grammar, "TAG grammar; not needed with a supertagger");
  pt->add_option("--input", p_input, "TAG corpus, or token lines")->required();
  pt->add_option("--input-format", pt_format, "tag or tokens (words only; POS = words)")->capture_default_str();
  pt->add_option("--supertag-model", p_model, "Supertagger model; parse the top-k trees per token");
  pt->add_option("--k", p_k, "Supertags per token")->capture_default_str();
  pt->add_option("--constraints", p_cons, "Constraints file");
  pt->add_flag("--gold-constraints", p_gold, "Use the gold constraints of the corpus trees");
  pt->add_option("--strategy", p_strategy, "cc or be")->capture_default_str();
  pt->add_option("--tokens", p_tokens, "What --grammar anchors match: pos or words")->capture_default_str();
  pt->add_option("--out", p_out, "Derived trees, one per line, empty when none (default stdout)");
  pt->callback([&] {
    const TagStrategy strategy = parse_strategy(p_strategy);
    if (p_tokens != "pos" && p_tokens != "words") throw UsageError("--tokens must be pos or words");
    if (p_grammar.empty() == p_model.empty()) throw UsageError("give exactly one of --grammar and --supertag-model");
    std::vector<TagCorpusEntry> corpus;
    if (pt_format == "tag") {
      corpus = read_corpus(p_input);
    } else if (pt_format == "tokens") {
      if (p_gold) throw UsageError("--gold-constraints needs --input-format tag");
      for (const auto& line : split(read_file(p_input), '\n'))
        if (!trim(line).empty()) {
          TagCorpusEntry e;
          e.words = split_ws(line);
          e.pos = e.words;
          corpus.push_back(std::move(e));
        }
    } else {
      throw UsageError("unknown input format '" + pt_format + "' (tag or tokens)");
    }
    std::vector<int> lengths;
    for (const auto& e : corpus) lengths.push_back(static_cast<int>(e.words.size()));
    std::vector<BeginEndConstraints> file_cons;
    if (!p_cons.empty()) file_cons = read_constraints(p_cons, lengths);
    std::optional<TagGrammar> full;
    std::unique_ptr<SupertagModel> st;
    if (!p_grammar.empty()) full = read_tag_grammar(read_file(p_grammar));
    else st = load_supertag_model(read_file(p_model));
    std::vector<std::string> lines(corpus.size());
    parallel_for(corpus.size(), jobs, [&](size_t i) {
      const auto& e = corpus[i];
      TagPredicate allow;
      if (!file_cons.empty()) allow = allow && tag_predicate(file_cons[i], strategy);
      if (p_gold) allow = allow && tag_predicate(gold_constraints(e.derived), strategy);
      std::optional<TagParse> d;
      if (full) {
        d = best_derivation(tag_parse(*full, p_tokens == "pos" ? e.pos : e.words, allow));
      } else {
        const TagGrammar sg = sentence_grammar(topk(*st, e.words, e.pos, p_k), st->inventory());
        d = best_derivation(tag_parse(sg, artificial_tokens(e.words.size()), allow));
      }
      if (d) lines[i] = to_ptb(replace_leaves(d->derived, e.words));
    });
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    write_file(p_out, out);
  });

  // supertag -------------------------------------------------------------------
  auto* sup = app.add_subcommand("supertag", "Supertagger");
  sup->require_subcommand(1);
  std::string s_corpus, s_dev, s_grammar, s_out, s_kind = "frequency", s_model, s_input;
  int s_k = 3;
  LstmFlags s_flags;

  auto* s_train = sup->add_subcommand("train", "Train a supertagger");
  s_train->add_option("--corpus", s_corpus, "TAG corpus")->required();
  s_train->add_option("--grammar", s_grammar, "TAG grammar the corpus refers to")->required();
  s_train->add_option("--dev", s_dev, "Held-out TAG corpus");
  s_train->add_option("--model", s_kind, "frequency or lstm")->capture_default_str();
  s_train->add_option("--out", s_out, "Model file")->required();
  s_flags.add(s_train);
  s_train->callback([&] {
    auto corpus = read_corpus(s_corpus);
    const TagGrammar g = read_tag_grammar(read_file(s_grammar));
    const Inventory inv = extract_inventory(corpus, g);
    corpus = to_inventory_names(std::move(corpus), g, inv.grammar, false);
    if (s_kind == "frequency") {
      write_file(s_out, model_to_text(FrequencySupertagger::train(corpus, inv.grammar).to_json()));
    } else if (s_kind == "lstm") {
      // Held-out sentences using trees unseen in training are left out of model selection.
      std::vector<TagCorpusEntry> dev;
      if (!s_dev.empty()) dev = to_inventory_names(read_corpus(s_dev), g, inv.grammar, true);
      auto m = NeuralSupertagger::train(corpus, dev, inv.grammar, s_flags.config(seed), log_epoch);
      write_file(s_out, model_to_text(m.to_json()));
    } else {
      throw UsageError("unknown supertagger model '" + s_kind + "' (frequency or lstm)");
    }
  });

  auto* s_pred = sup->add_subcommand("predict", "Top-k supertags per token");
  s_pred->add_option("--model", s_model, "Model file")->required();
  s_pred->add_option("--input", s_input, "TAG corpus")->required();
  s_pred->add_option("--k", s_k, "Supertags per token")->capture_default_str();
  s_pred->add_option("--out", s_out, "One line per sentence: tokens by TAB, 'tree:logprob' by space");
  s_pred->callback([&] {
    auto m = load_supertag_model(read_file(s_model));
    std::string out;
    for (const auto& e : read_corpus(s_input)) {
      const auto a = topk(*m, e.words, e.pos, s_k);
      for (size_t i = 0; i < a.size(); ++i) {
        if (i) out += '\t';
        for (size_t r = 0; r < a[i].size(); ++r)
          out += (r ? " " : "") + a[i][r].name + ":" + format_double(a[i][r].logprob);
      }
      out += '\n';
    }
    write_file(s_out, out);
  });

  // eval -----------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Evaluation");
  ev->require_subcommand(1);
  std::string e_gold, e_pred, e_out;
  auto* e_pv = ev->add_subcommand("parseval", "Labeled bracket scores");
  e_pv->add_option("--gold", e_gold, "Gold PTB trees")->required();
  e_pv->add_option("--pred", e_pred, "Parses, one per line, empty when none")->required();
  e_pv->add_option("--out", e_out, "Report (default stdout)");
  e_pv->callback([&] {
    const auto gold = read_treebank(e_gold);
    auto lines = split(read_file(e_pred), '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() != gold.size())
      throw DataError("parseval: " + std::to_string(gold.size()) + " gold trees but " + std::to_string(lines.size()) +
                      " parse lines");
    std::vector<SentenceResult> rows(gold.size());
    for (size_t i = 0; i < gold.size(); ++i) {
      rows[i].sent_id = static_cast<long>(i) + 1;
      rows[i].n = static_cast<int>(gold[i].num_leaves());
      if (trim(lines[i]).empty()) {
        rows[i].counts.gold = static_cast<long>(brackets(gold[i]).size());
        continue;
      }
      std::vector<Tree> t;
      try {
        t = read_ptb(lines[i]);
      } catch (const DataError& err) {
        throw DataError(e_pred + " line " + std::to_string(i + 1) + ": " + err.what());
      }
      if (t.size() != 1) throw DataError(e_pred + " line " + std::to_string(i + 1) + ": expected one tree");
      rows[i].parsed = true;
      rows[i].counts = parseval(gold[i], t[0]);
    }
    const auto r = summarize("parseval", rows);
    std::string out = std::string("# ") + kParsevalConventions + "\n";
    out += "sentences\tparsed\tcoverage\tprecision\trecall\tfscore\tprecision_parsed\trecall_parsed\tfscore_parsed\n";
    out += std::to_string(r.sentences) + "\t" + std::to_string(r.parsed) + "\t" + format_fixed(r.coverage, 2) +
           "\t" + format_fixed(r.all.precision(), 2) + "\t" + format_fixed(r.all.recall(), 2) + "\t" +
           format_fixed(r.all.fscore(), 2) + "\t" + format_fixed(r.parsed_only.precision(), 2) + "\t" +
           format_fixed(r.parsed_only.recall(), 2) + "\t" + format_fixed(r.parsed_only.fscore(), 2) + "\n";
    write_file(e_out, out);
  });

  // bench ----------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Timing and pruning benchmark");
  bench->require_subcommand(1);
  std::string b_grammar, b_input, b_baseline, b_out, b_rows, b_coarse, b_model;
  std::vector<std::string> b_runs;
  BenchOptions b_opt;
  double b_tau = 1e-5;
  int b_k = 3;
  auto common = [&](CLI::App* c) {
    c->add_option("--run", b_runs, "name=spec, repeatable")->required();
    c->add_option("--baseline", b_baseline, "Run the speedup is relative to (default: the first)");
    c->add_option("--warmup", b_opt.warmup, "Untimed warmup sentences")->capture_default_str();
    c->add_option("--repeats", b_opt.repeats, "Chart constructions per sentence (min is kept)")->capture_default_str();
    c->add_option("--out", b_out, "Report (default stdout)");
    c->add_option("--sentences-out", b_rows, "Per-sentence TSV");
  };
  auto finish = [&](const std::vector<std::pair<std::string, std::vector<SentenceResult>>>& runs) {
    const std::string base = b_baseline.empty() ? runs.front().first : b_baseline;
    write_file(b_out, format_report(summarize_runs(runs, base)));
    if (!b_rows.empty()) write_file(b_rows, format_sentence_rows(runs));
  };

  auto* bp = bench->add_subcommand("pcfg", "Runs: none, gold, ctf, file:PATH, joined by '+'");
  bp->add_option("--grammar", b_grammar, "PCFG file")->required();
  bp->add_option("--treebank", b_input, "Gold PTB trees")->required();
  bp->add_option("--ctf-threshold", b_tau, "Posterior threshold for ctf")->capture_default_str();
  bp->add_option("--coarse-map", b_coarse, "Fine-to-coarse label map");
  common(bp);
  bp->callback([&] {
    const Pcfg g = read_pcfg(read_file(b_grammar));
    const auto gold = read_treebank(b_input);
    std::vector<int> lengths;
    for (const auto& t : gold) {
      if (!has_preterminal_layer(t)) throw DataError(b_input + ": trees need a preterminal layer");
      lengths.push_back(static_cast<int>(t.num_leaves()));
    }
    std::optional<CtfModel> ctf;
    b_opt.jobs = jobs;
    std::vector<std::pair<std::string, std::vector<SentenceResult>>> runs;
    for (const auto& text : b_runs) {
      auto [name, parts] = parse_run(text);
      bool use_gold = false, use_ctf = false;
      std::vector<BeginEndConstraints> file_cons;
      for (const auto& p : parts) {
        if (p == "none") continue;
        if (p == "gold") use_gold = true;
        else if (p == "ctf") use_ctf = true;
        else if (p.rfind("file:", 0) == 0) file_cons = read_constraints(p.substr(5), lengths);
        else throw UsageError("unknown run part '" + p + "' (none, gold, ctf, file:PATH)");
      }
      if (use_ctf && !ctf) ctf = CtfModel::build(g, b_coarse.empty() ? CoarseMap{} : read_coarse_map(read_file(b_coarse)));
      auto factory = [&](size_t s) {
        PcfgPredicate allow;
        if (use_ctf) allow = allow && ctf_predicate(*ctf, preterminal_labels(gold[s]), b_tau);
        if (use_gold) allow = allow && pcfg_predicate(gold_constraints(gold[s]));
        if (!file_cons.empty()) allow = allow && pcfg_predicate(file_cons[s]);
        return allow;
      };
      std::cerr << "run " << name << "\n";
      runs.emplace_back(name, bench_pcfg(g, gold, factory, b_opt));
    }
    finish(runs);
  });

  const std::string b_strategy_default = "cc";
  auto* bt = bench->add_subcommand("tag", "Runs: none, gold, file:PATH with cc: or be: prefix, joined by '+'");
  bt->add_option("--grammar", b_grammar, "TAG grammar");
  bt->add_option("--supertag-model", b_model, "Supertagger; parse the top-k trees per token");
  bt->add_option("--k", b_k, "Supertags per token")->capture_default_str();
  bt->add_option("--tokens", p_tokens, "What --grammar anchors match: pos or words")->capture_default_str();
  bt->add_option("--corpus", b_input, "TAG corpus")->required();
  common(bt);
  bt->callback([&] {
    if (b_grammar.empty() == b_model.empty()) throw UsageError("give exactly one of --grammar and --supertag-model");
    if (p_tokens != "pos" && p_tokens != "words") throw UsageError("--tokens must be pos or words");
    const auto corpus = read_corpus(b_input);
    std::vector<int> lengths;
    for (const auto& e : corpus) lengths.push_back(static_cast<int>(e.words.size()));
    std::optional<TagGrammar> full;
    std::unique_ptr<SupertagModel> st;
    std::vector<TagGrammar> per_sentence;
    if (!b_grammar.empty()) {
      full = read_tag_grammar(read_file(b_grammar));
    } else {
      st = load_supertag_model(read_file(b_model));
      for (const auto& e : corpus) per_sentence.push_back(sentence_grammar(topk(*st, e.words, e.pos, b_k), st->inventory()));
    }
    auto grammar_for = [&](size_t s) {
      if (full) return TagSentence{*full, p_tokens == "pos" ? corpus[s].pos : corpus[s].words};
      return TagSentence{per_sentence[s], artificial_tokens(corpus[s].words.size())};
    };
    b_opt.jobs = jobs;
    std::vector<std::pair<std::string, std::vector<SentenceResult>>> runs;
    for (const auto& text : b_runs) {
      auto [name, parts] = parse_run(text);
      std::vector<std::pair<TagStrategy, std::optional<std::vector<BeginEndConstraints>>>> filters;
      for (const auto& p : parts) {
        if (p == "none") continue;
        std::string body = p;
        TagStrategy strategy = parse_strategy(b_strategy_default);
        if (body.rfind("cc:", 0) == 0 || body.rfind("be:", 0) == 0) {
          strategy = parse_strategy(body.substr(0, 2));
          body = body.substr(3);
        }
        if (body == "gold") filters.emplace_back(strategy, std::nullopt);
        else if (body.rfind("file:", 0) == 0) filters.emplace_back(strategy, read_constraints(body.substr(5), lengths));
        else throw UsageError("unknown run part '" + p + "' ([cc:|be:]gold, [cc:|be:]file:PATH)");
      }
      auto factory = [&](size_t s) {
        TagPredicate allow;
        for (const auto& [strategy, cons] : filters)
          allow = allow && tag_predicate(cons ? (*cons)[s] : gold_constraints(corpus[s].derived), strategy);
        return allow;
      };
      std::cerr << "run " << name << "\n";
      runs.emplace_back(name, bench_tag(corpus, grammar_for, factory, b_opt));
    }
    finish(runs);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
