#pragma once

// Boundary taggers: per token, P(a constituent of width >= 2 may begin here)
// and P(one may end right after it). The BiLSTM model is the default; a
// windowed logistic model is a fast fallback. Also the BiLSTM supertagger.

#include <cmath>
#include <memory>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chartcons/constraints.hpp"
#include "chartcons/lstm.hpp"
#include "chartcons/spinal.hpp"
#include "chartcons/supertag.hpp"
#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

inline bool is_number_token(const std::string& w) {
  static const std::regex re(R"([+-]?(\d+([.,/]\d+)*|[.,]\d+))");
  return std::regex_match(w, re);
}

/// Word or tag vocabulary. Index 0 is UNK; word vocabularies reserve 1 for
/// NUMBER.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kNumber = 1;

  Vocab() = default;
  Vocab(std::vector<std::string> entries, bool numbers) : numbers_(numbers), entries_(std::move(entries)) {
    for (int i = 0; i < static_cast<int>(entries_.size()); ++i) index_.emplace(entries_[i], i);
  }

  /// Entries seen at least `min_count` times (numbers excluded when mapped).
  static Vocab build(const std::vector<std::vector<std::string>>& sentences, int min_count, bool numbers) {
    std::unordered_map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto& s : sentences)
      for (const auto& w : s) {
        if (numbers && is_number_token(w)) continue;
        if (counts[w]++ == 0) order.push_back(w);
      }
    std::vector<std::string> entries = {"<unk>"};
    if (numbers) entries.push_back("<number>");
    for (const auto& w : order)
      if (counts[w] >= min_count) entries.push_back(w);
    return Vocab(std::move(entries), numbers);
  }

  int id(const std::string& w) const {
    if (numbers_ && is_number_token(w)) return kNumber;
    auto it = index_.find(w);
    return it == index_.end() ? kUnk : it->second;
  }
  std::vector<int> ids(const std::vector<std::string>& ws) const {
    std::vector<int> out;
    for (const auto& w : ws) out.push_back(id(w));
    return out;
  }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<std::string>& entries() const { return entries_; }
  bool numbers() const { return numbers_; }

  nlohmann::json to_json() const { return {{"numbers", numbers_}, {"entries", entries_}}; }
  static Vocab from_json(const nlohmann::json& j) {
    return Vocab(j.at("entries").get<std::vector<std::string>>(), j.at("numbers").get<bool>());
  }

 private:
  bool numbers_ = false;
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
};

struct TaggedSentence {
  std::vector<std::string> words;
  std::vector<std::string> pos;
  BeginEndConstraints gold;
};

/// Words, POS tags and gold constraints of treebank trees with a POS layer.
inline std::vector<TaggedSentence> tagged_corpus(const std::vector<Tree>& trees) {
  std::vector<TaggedSentence> out;
  for (const auto& t : trees) {
    if (!has_preterminal_layer(t)) throw DataError("tagger corpus trees need a preterminal layer");
    out.push_back({leaves(t), preterminal_labels(t), gold_constraints(t)});
  }
  return out;
}

/// Class 1 = "may begin" / "may end after"; positions outside the candidate
/// windows are fixed to 1.
inline std::vector<std::vector<int>> boundary_targets(const BeginEndConstraints& c) {
  const int n = c.n();
  std::vector<int> b(n, 1), e(n, 1);
  for (int t = 0; t < n; ++t) {
    if (t <= n - 2) b[t] = c.begin_banned(t) ? 0 : 1;
    if (t + 1 >= 2 && t + 1 <= n - 1) e[t] = c.end_banned(t + 1) ? 0 : 1;
  }
  return {b, e};
}

struct BoundaryProbs {
  std::vector<double> begin;  // P(class 1) per token
  std::vector<double> end;
};

class BoundaryPredictor {
 public:
  virtual ~BoundaryPredictor() = default;
  virtual BoundaryProbs predict(const std::vector<std::string>& words,
                                const std::vector<std::string>& pos) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

struct Prf {
  double accuracy = 100.0;
  double precision = 100.0;
  double recall = 100.0;
  long true_pos = 0, false_pos = 0, false_neg = 0, true_neg = 0;
};

struct TaggerReport {
  Prf begin;
  Prf end;
};

namespace detail {

inline Prf finish_prf(long tp, long fp, long fn, long tn) {
  Prf r;
  r.true_pos = tp;
  r.false_pos = fp;
  r.false_neg = fn;
  r.true_neg = tn;
  const long all = tp + fp + fn + tn;
  r.accuracy = all ? 100.0 * static_cast<double>(tp + tn) / static_cast<double>(all) : 100.0;
  r.precision = tp + fp ? 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp) : 100.0;
  r.recall = tp + fn ? 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn) : 100.0;
  return r;
}

}  // namespace detail

/// Precision and recall of the banned sets, accuracy over candidate positions
/// (begin 0..n-2, end 2..n-1). An empty prediction has precision 100; an
/// empty gold set has recall 100.
inline TaggerReport tagger_prf(const std::vector<BeginEndConstraints>& pred,
                               const std::vector<BeginEndConstraints>& gold) {
  if (pred.size() != gold.size()) throw UsageError("tagger_prf: different number of sentences");
  long b[4] = {0, 0, 0, 0}, e[4] = {0, 0, 0, 0};
  auto tally = [](long* acc, bool p, bool g) {
    if (p && g) ++acc[0];
    else if (p) ++acc[1];
    else if (g) ++acc[2];
    else ++acc[3];
  };
  for (size_t s = 0; s < pred.size(); ++s) {
    const int n = gold[s].n();
    if (pred[s].n() != n) throw UsageError("tagger_prf: sentence " + std::to_string(s) + " length mismatch");
    for (int i = 0; i <= n - 2; ++i) tally(b, pred[s].begin_banned(i), gold[s].begin_banned(i));
    for (int k = 2; k <= n - 1; ++k) tally(e, pred[s].end_banned(k), gold[s].end_banned(k));
  }
  return {detail::finish_prf(b[0], b[1], b[2], b[3]), detail::finish_prf(e[0], e[1], e[2], e[3])};
}

inline BeginEndConstraints predict_constraints(const BoundaryPredictor& m, const std::vector<std::string>& words,
                                               const std::vector<std::string>& pos, double theta) {
  auto p = m.predict(words, pos);
  return from_probs(p.begin, p.end, theta);
}

/// Mean of begin and end accuracy at theta = 0.5.
inline double boundary_dev_score(const BoundaryPredictor& m, const std::vector<TaggedSentence>& dev) {
  std::vector<BeginEndConstraints> pred, gold;
  for (const auto& s : dev) {
    pred.push_back(predict_constraints(m, s.words, s.pos, 0.5));
    gold.push_back(s.gold);
  }
  auto r = tagger_prf(pred, gold);
  return (r.begin.accuracy + r.end.accuracy) / 2.0;
}

struct TaggerConfig {
  int word_dim = 32;
  int pos_dim = 8;
  int hidden = 100;
  int layers = 2;
  int min_count = 2;
  TrainOptions train;
};

class NeuralBoundaryTagger : public BoundaryPredictor {
 public:
  NeuralBoundaryTagger() = default;
  NeuralBoundaryTagger(Vocab words, Vocab pos, BiLstm net)
      : words_(std::move(words)), pos_(std::move(pos)), net_(std::move(net)) {}

  /// Trains on `train`, keeping the epoch with the best `dev` score (the
  /// training set itself when `dev` is empty).
  static NeuralBoundaryTagger train(const std::vector<TaggedSentence>& train,
                                    const std::vector<TaggedSentence>& dev, const TaggerConfig& cfg,
                                    std::vector<EpochLog>* logs = nullptr,
                                    const std::function<void(const EpochLog&)>& on_epoch = {}) {
    if (train.empty()) throw UsageError("tagger train: empty corpus");
    std::vector<std::vector<std::string>> ws, ps;
    for (const auto& s : train) {
      ws.push_back(s.words);
      ps.push_back(s.pos);
    }
    Vocab words = Vocab::build(ws, cfg.min_count, true);
    Vocab pos = Vocab::build(ps, 1, false);
    BiLstmShape shape{words.size(), pos.size(), cfg.word_dim, cfg.pos_dim, cfg.hidden, cfg.layers, {2, 2}};
    NeuralBoundaryTagger m(std::move(words), std::move(pos), BiLstm(shape, cfg.train.seed));
    std::vector<LstmExample> data;
    for (const auto& s : train) data.push_back(m.example(s));
    const auto& held = dev.empty() ? train : dev;
    auto l = train_bilstm(
        m.net_, data, cfg.train,
        [&](const BiLstm& net) {
          NeuralBoundaryTagger view(m.words_, m.pos_, net);
          return boundary_dev_score(view, held);
        },
        on_epoch);
    if (logs) *logs = std::move(l);
    return m;
  }

  LstmExample example(const TaggedSentence& s) const {
    return {words_.ids(s.words), pos_.ids(s.pos), boundary_targets(s.gold)};
  }

  BoundaryProbs predict(const std::vector<std::string>& words,
                        const std::vector<std::string>& pos) const override {
    BoundaryProbs out;
    if (words.empty()) return out;
    auto probs = net_.predict(words_.ids(words), pos_.ids(pos));
    for (Eigen::Index t = 0; t < probs[0].cols(); ++t) {
      out.begin.push_back(probs[0](1, t));
      out.end.push_back(probs[1](1, t));
    }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "boundary-lstm"}, {"words", words_.to_json()}, {"pos", pos_.to_json()}, {"net", net_.to_json()}};
  }
  static NeuralBoundaryTagger from_json(const nlohmann::json& j) {
    return NeuralBoundaryTagger(Vocab::from_json(j.at("words")), Vocab::from_json(j.at("pos")),
                                BiLstm::from_json(j.at("net")));
  }

  BiLstm& net() { return net_; }
  const Vocab& words() const { return words_; }

 private:
  Vocab words_;
  Vocab pos_;
  BiLstm net_;
};

/// Two logistic regressions over words and tags in a +-2 window.
class LogisticBoundaryTagger : public BoundaryPredictor {
 public:
  struct Options {
    int epochs = 5;
    double lr = 0.1;
    uint64_t seed = 1;
  };

  static LogisticBoundaryTagger train(const std::vector<TaggedSentence>& corpus, const Options& opt) {
    if (corpus.empty()) throw UsageError("tagger train: empty corpus");
    LogisticBoundaryTagger m;
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(opt.seed);
    for (int e = 0; e < opt.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      const double lr = opt.lr / (1.0 + e);
      for (size_t idx : order) {
        const auto& s = corpus[idx];
        const auto targets = boundary_targets(s.gold);
        for (size_t t = 0; t < s.words.size(); ++t) {
          const auto f = features(s.words, s.pos, t);
          for (int head = 0; head < 2; ++head) {
            auto& w = m.weights_[head];
            const double p = sigmoid(score(w, f));
            const double g = static_cast<double>(targets[head][t]) - p;
            for (const auto& name : f) w[name] += lr * g;
          }
        }
      }
    }
    return m;
  }

  BoundaryProbs predict(const std::vector<std::string>& words,
                        const std::vector<std::string>& pos) const override {
    if (words.size() != pos.size()) throw UsageError("tagger: words and POS differ in length");
    BoundaryProbs out;
    for (size_t t = 0; t < words.size(); ++t) {
      const auto f = features(words, pos, t);
      out.begin.push_back(sigmoid(score(weights_[0], f)));
      out.end.push_back(sigmoid(score(weights_[1], f)));
    }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "boundary-logistic"}, {"begin", weights_[0]}, {"end", weights_[1]}};
  }
  static LogisticBoundaryTagger from_json(const nlohmann::json& j) {
    LogisticBoundaryTagger m;
    m.weights_[0] = j.at("begin").get<std::unordered_map<std::string, double>>();
    m.weights_[1] = j.at("end").get<std::unordered_map<std::string, double>>();
    return m;
  }

 private:
  using Weights = std::unordered_map<std::string, double>;

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  static std::vector<std::string> features(const std::vector<std::string>& words,
                                           const std::vector<std::string>& pos, size_t t) {
    std::vector<std::string> f = {"bias"};
    const long n = static_cast<long>(words.size());
    for (long o = -2; o <= 2; ++o) {
      const long i = static_cast<long>(t) + o;
      const std::string at = std::to_string(o);
      const bool in = i >= 0 && i < n;
      const std::string w = in ? (is_number_token(words[i]) ? "<number>" : words[i]) : "<pad>";
      f.push_back("w" + at + "=" + w);
      f.push_back("p" + at + "=" + (in ? pos[i] : "<pad>"));
    }
    f.push_back("p-1,0=" + (t > 0 ? pos[t - 1] : "<pad>") + "," + pos[t]);
    f.push_back("p0,1=" + pos[t] + "," + (t + 1 < words.size() ? pos[t + 1] : "<pad>"));
    return f;
  }

  static double score(const Weights& w, const std::vector<std::string>& f) {
    double s = 0.0;
    for (const auto& name : f)
      if (auto it = w.find(name); it != w.end()) s += it->second;
    return s;
  }

  Weights weights_[2];
};

/// BiLSTM with one softmax over the supertag inventory.
class NeuralSupertagger : public SupertagModel {
 public:
  NeuralSupertagger() = default;
  NeuralSupertagger(TagGrammar inventory, Vocab words, Vocab pos, BiLstm net)
      : inventory_(std::move(inventory)), words_(std::move(words)), pos_(std::move(pos)), net_(std::move(net)) {}

  static NeuralSupertagger train(const std::vector<TagCorpusEntry>& train, const std::vector<TagCorpusEntry>& dev,
                                 const TagGrammar& inventory, const TaggerConfig& cfg,
                                 const std::function<void(const EpochLog&)>& on_epoch = {}) {
    if (train.empty()) throw UsageError("supertag train: empty corpus");
    std::vector<std::vector<std::string>> ws, ps;
    for (const auto& e : train) {
      ws.push_back(e.words);
      ps.push_back(e.pos);
    }
    Vocab words = Vocab::build(ws, cfg.min_count, true);
    Vocab pos = Vocab::build(ps, 1, false);
    BiLstmShape shape{words.size(), pos.size(), cfg.word_dim, cfg.pos_dim, cfg.hidden, cfg.layers,
                      {inventory.size()}};
    NeuralSupertagger m(inventory, std::move(words), std::move(pos), BiLstm(shape, cfg.train.seed));
    auto to_example = [&](const TagCorpusEntry& e) {
      std::vector<int> tags;
      for (const auto& name : e.supertags) {
        const int t = inventory.find(name);
        if (t < 0) throw DataError("supertag '" + name + "' is not in the inventory");
        tags.push_back(t);
      }
      return LstmExample{m.words_.ids(e.words), m.pos_.ids(e.pos), {tags}};
    };
    std::vector<LstmExample> data, held;
    for (const auto& e : train) data.push_back(to_example(e));
    for (const auto& e : dev.empty() ? train : dev) held.push_back(to_example(e));
    train_bilstm(
        m.net_, data, cfg.train,
        [&](const BiLstm& net) {
          long right = 0, total = 0;
          for (const auto& ex : held) {
            auto p = net.predict(ex.words, ex.pos)[0];
            for (Eigen::Index t = 0; t < p.cols(); ++t) {
              Eigen::Index best;
              p.col(t).maxCoeff(&best);
              right += best == ex.targets[0][t];
              ++total;
            }
          }
          return total ? static_cast<double>(right) / static_cast<double>(total) : 0.0;
        },
        on_epoch);
    return m;
  }

  const TagGrammar& inventory() const override { return inventory_; }

  std::vector<std::vector<double>> distributions(const std::vector<std::string>& words,
                                                 const std::vector<std::string>& pos) const override {
    std::vector<std::vector<double>> out;
    if (words.empty()) return out;
    auto p = net_.predict(words_.ids(words), pos_.ids(pos))[0];
    for (Eigen::Index t = 0; t < p.cols(); ++t) out.emplace_back(p.col(t).data(), p.col(t).data() + p.rows());
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "supertag-lstm"},
            {"inventory", write_tag_grammar(inventory_)},
            {"words", words_.to_json()},
            {"pos", pos_.to_json()},
            {"net", net_.to_json()}};
  }
  static NeuralSupertagger from_json(const nlohmann::json& j) {
    return NeuralSupertagger(read_tag_grammar(j.at("inventory").get<std::string>()), Vocab::from_json(j.at("words")),
                             Vocab::from_json(j.at("pos")), BiLstm::from_json(j.at("net")));
  }

 private:
  TagGrammar inventory_;
  Vocab words_;
  Vocab pos_;
  BiLstm net_;
};

// ---------------------------------------------------------------------------
// Model files: {"format": "chartcons-model", "version": 1, "kind": ..., ...}

inline constexpr int kModelVersion = 1;

inline std::string model_to_text(nlohmann::json body) {
  body["format"] = "chartcons-model";
  body["version"] = kModelVersion;
  return body.dump() + "\n";
}

inline nlohmann::json model_from_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "chartcons-model")
    throw DataError("model file: not a chartcons model");
  if (j.value("version", 0) != kModelVersion)
    throw DataError("model file: unsupported version " + std::to_string(j.value("version", 0)));
  return j;
}

inline std::unique_ptr<BoundaryPredictor> load_boundary_model(std::string_view text) {
  const auto j = model_from_text(text);
  const std::string kind = j.value("kind", "");
  try {
    if (kind == "boundary-lstm") return std::make_unique<NeuralBoundaryTagger>(NeuralBoundaryTagger::from_json(j));
    if (kind == "boundary-logistic")
      return std::make_unique<LogisticBoundaryTagger>(LogisticBoundaryTagger::from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  throw DataError("model file: '" + kind + "' is not a boundary tagger");
}

inline std::unique_ptr<SupertagModel> load_supertag_model(std::string_view text) {
  const auto j = model_from_text(text);
  const std::string kind = j.value("kind", "");
  try {
    if (kind == "supertag-frequency")
      return std::make_unique<FrequencySupertagger>(FrequencySupertagger::from_json(j));
    if (kind == "supertag-lstm") return std::make_unique<NeuralSupertagger>(NeuralSupertagger::from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  throw DataError("model file: '" + kind + "' is not a supertagger");
}

}  // namespace chartcons
