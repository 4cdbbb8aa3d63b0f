#pragma once

// Single-level coarse-to-fine pruning: project the fine grammar onto coarse
// symbols, run inside-outside over the coarse grammar, and allow a fine item
// only when its coarse posterior reaches a threshold.

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "chartcons/constraints.hpp"
#include "chartcons/pcfg.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

/// "@NP[DT,JJ]" -> "NP", "NP-SBJ" -> "NP"; labels without an alphanumeric
/// prefix ("-NONE-", ".") are kept whole.
inline std::string default_coarse_label(std::string_view label) {
  if (!label.empty() && label[0] == '@') {
    label.remove_prefix(1);
    if (auto br = label.find('['); br != std::string_view::npos) label = label.substr(0, br);
  }
  size_t len = 0;
  while (len < label.size() && std::isalnum(static_cast<unsigned char>(label[len]))) ++len;
  return std::string(len ? label.substr(0, len) : label);
}

/// Fine nonterminal -> coarse symbol. Explicit entries win; anything else goes
/// through default_coarse_label, so the map is total.
class CoarseMap {
 public:
  CoarseMap() = default;
  explicit CoarseMap(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  static CoarseMap identity() {
    CoarseMap m;
    m.identity_ = true;
    return m;
  }

  std::string operator()(const std::string& fine) const {
    if (identity_) return fine;
    auto it = entries_.find(fine);
    return it != entries_.end() ? it->second : default_coarse_label(fine);
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  bool identity_ = false;
};

/// "fine<TAB>coarse" per line; blank lines and '#' comments skipped.
inline CoarseMap read_coarse_map(std::string_view text) {
  std::map<std::string, std::string> entries;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty())
      throw DataError("coarse map line " + std::to_string(line_no) + ": expected 'fine\\tcoarse'");
    entries[std::string(trim(cols[0]))] = std::string(trim(cols[1]));
  }
  return CoarseMap(std::move(entries));
}

/// Maps rules symbol-wise (terminals unchanged), sums the probabilities of
/// rules that collide, then renormalizes per left-hand side.
inline Pcfg project(const Pcfg& g, const CoarseMap& m) {
  auto map_symbol = [&](SymbolId s) { return g.is_terminal(s) ? g.name(s) : m(g.name(s)); };
  using Key = std::pair<std::string, std::vector<std::string>>;
  std::map<Key, int> slot;
  std::vector<Key> order;
  std::vector<double> mass;
  std::unordered_map<std::string, double> lhs_mass;
  for (const auto& r : g.rules()) {
    Key key{map_symbol(r.lhs), {}};
    for (SymbolId s : r.rhs) key.second.push_back(map_symbol(s));
    auto [it, fresh] = slot.emplace(key, static_cast<int>(order.size()));
    if (fresh) {
      order.push_back(key);
      mass.push_back(0.0);
    }
    const double p = std::exp(r.logprob);
    mass[it->second] += p;
    lhs_mass[key.first] += p;
  }
  std::vector<std::tuple<std::string, std::vector<std::string>, double>> rules;
  for (size_t i = 0; i < order.size(); ++i)
    rules.emplace_back(order[i].first, order[i].second,
                       std::log(mass[i] / lhs_mass[order[i].first]));
  return Pcfg::from_rules(m(g.name(g.start())), rules);
}

/// U* = sum_{t=0..|S|} U^t over all symbols, U[a][b] = P(a -> b).
inline std::vector<double> unary_closure_matrix(const Pcfg& g) {
  const int s = g.num_symbols();
  const size_t sz = static_cast<size_t>(s) * s;
  std::vector<double> u(sz, 0.0);
  bool any = false;
  for (const auto& r : g.rules())
    if (r.rhs.size() == 1) {
      u[static_cast<size_t>(r.lhs) * s + r.rhs[0]] += std::exp(r.logprob);
      any = true;
    }
  std::vector<double> closure(sz, 0.0), power(sz, 0.0);
  for (int a = 0; a < s; ++a) power[static_cast<size_t>(a) * s + a] = 1.0;
  for (int t = 0; t <= s; ++t) {
    bool nonzero = false;
    for (size_t x = 0; x < sz; ++x) {
      closure[x] += power[x];
      nonzero |= power[x] != 0.0;
    }
    if (!nonzero || !any) break;
    std::vector<double> next(sz, 0.0);
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) {
        const double pab = power[static_cast<size_t>(a) * s + b];
        if (pab == 0.0) continue;
        for (int c = 0; c < s; ++c) next[static_cast<size_t>(a) * s + c] += pab * u[static_cast<size_t>(b) * s + c];
      }
    power = std::move(next);
  }
  return closure;
}

/// Inside and outside log scores of every item of a (coarse) grammar over all
/// symbols; terminal seeds have inside 0.
class InsideOutside {
 public:
  InsideOutside(const Pcfg& g, const std::vector<double>& closure,
                const std::vector<std::string>& tokens)
      : g_(&g), closure_(&closure), n_(static_cast<int>(tokens.size())), ns_(g.num_symbols()),
        inside_(cells() * ns_, kNegInf), outside_(cells() * ns_, kNegInf) {
    run_inside(tokens);
    goal_ = n_ > 0 ? inside(g.start(), 0, n_) : kNegInf;
    if (goal_ > kNegInf) run_outside();
  }

  int n() const { return n_; }
  double goal() const { return goal_; }
  bool parsed() const { return goal_ > kNegInf; }
  double inside(SymbolId a, int i, int k) const { return inside_[at(a, i, k)]; }
  double outside(SymbolId a, int i, int k) const { return outside_[at(a, i, k)]; }
  /// log P(item used | sentence), or -inf. With unary cycles this is an
  /// expected count and may exceed 0.
  double posterior(SymbolId a, int i, int k) const {
    const double in = inside(a, i, k);
    if (in == kNegInf || !parsed()) return kNegInf;
    return in + outside(a, i, k) - goal_;
  }

 private:
  size_t cells() const { return static_cast<size_t>(n_) * (n_ + 1) / 2 + 1; }
  size_t at(SymbolId a, int i, int k) const {
    const size_t cell =
        static_cast<size_t>(i) * n_ - static_cast<size_t>(i) * (i - 1) / 2 + (k - i - 1);
    return cell * ns_ + a;
  }

  /// dst[a] = log sum_b U*[a][b] exp(src[b]); transposed: U*[b][a].
  void apply_closure(const std::vector<double>& src, double* dst, bool transpose) const {
    const std::vector<double>& u = *closure_;
    double top = kNegInf;
    for (double v : src) top = std::max(top, v);
    for (int a = 0; a < ns_; ++a) dst[a] = kNegInf;
    if (top == kNegInf) return;
    std::vector<double> scaled(ns_);
    for (int b = 0; b < ns_; ++b) scaled[b] = src[b] == kNegInf ? 0.0 : std::exp(src[b] - top);
    for (int a = 0; a < ns_; ++a) {
      double sum = 0.0;
      for (int b = 0; b < ns_; ++b) {
        if (scaled[b] == 0.0) continue;
        sum += u[transpose ? static_cast<size_t>(b) * ns_ + a : static_cast<size_t>(a) * ns_ + b] *
               scaled[b];
      }
      if (sum > 0.0) dst[a] = top + std::log(sum);
    }
  }

  void run_inside(const std::vector<std::string>& tokens) {
    std::vector<double> pre(ns_);
    for (int i = 0; i < n_; ++i) {
      std::fill(pre.begin(), pre.end(), kNegInf);
      const SymbolId t = g_->find_terminal(tokens[i]);
      if (t >= 0) pre[t] = 0.0;
      apply_closure(pre, &inside_[at(0, i, i + 1)], false);
    }
    for (int w = 2; w <= n_; ++w)
      for (int i = 0; i + w <= n_; ++i) {
        const int k = i + w;
        std::fill(pre.begin(), pre.end(), kNegInf);
        for (int j = i + 1; j < k; ++j)
          for (SymbolId b = 0; b < ns_; ++b) {
            const double sb = inside(b, i, j);
            if (sb == kNegInf) continue;
            for (const auto& r : g_->binary_by_left(b)) {
              const double sc = inside(r.right, j, k);
              if (sc == kNegInf) continue;
              pre[r.lhs] = log_add(pre[r.lhs], sb + sc + r.logprob);
            }
          }
        apply_closure(pre, &inside_[at(0, i, k)], false);
      }
  }

  void run_outside() {
    // outside_ first collects contexts from binary parents (and the goal);
    // each span is then closed under unary parents before feeding its children.
    outside_[at(g_->start(), 0, n_)] = 0.0;
    std::vector<double> ctx(ns_);
    for (int w = n_; w >= 1; --w)
      for (int i = 0; i + w <= n_; ++i) {
        const int k = i + w;
        double* out = &outside_[at(0, i, k)];
        ctx.assign(out, out + ns_);
        apply_closure(ctx, out, true);
        for (int j = i + 1; j < k; ++j)
          for (SymbolId b = 0; b < ns_; ++b) {
            const double sb = inside(b, i, j);
            if (sb == kNegInf) continue;
            for (const auto& r : g_->binary_by_left(b)) {
              if (out[r.lhs] == kNegInf) continue;
              const double sc = inside(r.right, j, k);
              if (sc == kNegInf) continue;
              const double base = out[r.lhs] + r.logprob;
              double& ob = outside_[at(b, i, j)];
              ob = log_add(ob, base + sc);
              double& oc = outside_[at(r.right, j, k)];
              oc = log_add(oc, base + sb);
            }
          }
      }
  }

  const Pcfg* g_;
  const std::vector<double>* closure_;
  int n_;
  int ns_;
  std::vector<double> inside_;
  std::vector<double> outside_;
  double goal_ = kNegInf;
};

/// Coarse grammar plus everything ctf_predicate needs that does not depend
/// on the sentence.
struct CtfModel {
  Pcfg coarse;
  CoarseMap map;
  std::vector<double> closure;
  std::vector<SymbolId> fine_to_coarse;  // -1 when the image is not a coarse nonterminal

  static CtfModel build(const Pcfg& fine, CoarseMap m = {}) {
    CtfModel out{project(fine, m), std::move(m), {}, {}};
    out.closure = unary_closure_matrix(out.coarse);
    for (SymbolId a = 0; a < fine.num_nonterminals(); ++a) {
      const SymbolId c = out.coarse.find(out.map(fine.name(a)));
      out.fine_to_coarse.push_back(c >= 0 && !out.coarse.is_terminal(c) ? c : -1);
    }
    return out;
  }
};

/// Fine item [A, i, k] (width >= 2) passes iff its coarse image is in the
/// coarse chart and has posterior >= log(tau). Falls open to allow_all when the coarse parse fails.
inline PcfgPredicate ctf_predicate(const CtfModel& model, const std::vector<std::string>& tokens,
                                   double tau = 1e-5) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("ctf threshold must lie in [0, 1]");
  InsideOutside io(model.coarse, model.closure, tokens);
  if (!io.parsed()) return PcfgPredicate::allow_all();
  const int n = io.n();
  const int cnt = model.coarse.num_nonterminals();
  const double cut = tau > 0.0 ? std::log(tau) : kNegInf;
  auto pass = std::make_shared<std::vector<char>>(static_cast<size_t>(n + 1) * (n + 1) * cnt, 0);
  auto span_any = std::make_shared<std::vector<char>>(static_cast<size_t>(n + 1) * (n + 1), 0);
  for (int w = 2; w <= n; ++w)
    for (int i = 0; i + w <= n; ++i)
      for (SymbolId c = 0; c < cnt; ++c) {
        if (io.inside(c, i, i + w) == kNegInf) continue;
        if (io.posterior(c, i, i + w) >= cut) {
          (*pass)[(static_cast<size_t>(i) * (n + 1) + i + w) * cnt + c] = 1;
          (*span_any)[static_cast<size_t>(i) * (n + 1) + i + w] = 1;
        }
      }
  auto map = std::make_shared<const std::vector<SymbolId>>(model.fine_to_coarse);
  return PcfgPredicate(
      [pass, map, n, cnt](const PcfgItem& x) {
        if (x.end - x.begin < 2) return true;
        const SymbolId c = x.label < static_cast<int>(map->size()) ? (*map)[x.label] : -1;
        if (c < 0) return false;
        return (*pass)[(static_cast<size_t>(x.begin) * (n + 1) + x.end) * cnt + c] != 0;
      },
      [span_any, n](int i, int k) {
        return k - i < 2 || (*span_any)[static_cast<size_t>(i) * (n + 1) + k] != 0;
      });
}

}  // namespace chartcons
