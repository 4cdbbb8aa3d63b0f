#pragma once

// Begin/end chart constraints and the allowable-item predicates built from
// them. A constraint set bans positions where a constituent of width two or
// more may not begin (begin_banned) or may not end (end_banned).

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "chartcons/tree.hpp"
#include "chartcons/util.hpp"

namespace chartcons {

/// CKY item [A, i, k] over the end-exclusive span [begin, end).
struct PcfgItem {
  int label;
  bool is_new;
  int begin;
  int end;
};

/// TAG item [X, i, j, k, l]. gap_begin/gap_end are both -1 when the item has
/// no foot below it. is_new marks intermediate (partially recognized) nodes.
struct TagItem {
  int pos;
  int i;
  int j;
  int k;
  int l;
  bool is_new = false;
  bool has_gap() const { return j >= 0; }
};

/// Pure item filter; conjunction composes filters. An optional span hint
/// answers false when no item of outer span [i, k) (width >= 2) can pass, which
/// lets parsers skip the whole cell.
template <typename Item>
class AllowabilityPredicate {
 public:
  using Fn = std::function<bool(const Item&)>;
  using SpanFn = std::function<bool(int, int)>;

  AllowabilityPredicate() = default;
  explicit AllowabilityPredicate(Fn fn, SpanFn span = {})
      : fn_(std::make_shared<Fn>(std::move(fn))),
        span_(span ? std::make_shared<SpanFn>(std::move(span)) : nullptr) {}

  static AllowabilityPredicate allow_all() { return AllowabilityPredicate(); }

  bool operator()(const Item& item) const { return !fn_ || (*fn_)(item); }
  bool span_may_pass(int i, int k) const { return !span_ || (*span_)(i, k); }
  bool is_trivial() const { return !fn_; }

  friend AllowabilityPredicate operator&&(const AllowabilityPredicate& a,
                                          const AllowabilityPredicate& b) {
    if (a.is_trivial()) return b;
    if (b.is_trivial()) return a;
    SpanFn span;
    if (a.span_ || b.span_)
      span = [a, b](int i, int k) { return a.span_may_pass(i, k) && b.span_may_pass(i, k); };
    return AllowabilityPredicate([a, b](const Item& x) { return a(x) && b(x); }, std::move(span));
  }

 private:
  std::shared_ptr<const Fn> fn_;
  std::shared_ptr<const SpanFn> span_;
};

using PcfgPredicate = AllowabilityPredicate<PcfgItem>;
using TagPredicate = AllowabilityPredicate<TagItem>;

class BeginEndConstraints {
 public:
  BeginEndConstraints() = default;

  /// begin_banned must lie in [0, n-2], end_banned in [2, n].
  BeginEndConstraints(int n, const std::vector<int>& begin_banned,
                      const std::vector<int>& end_banned)
      : n_(n), begin_(static_cast<size_t>(std::max(n, 0)) + 1, 0),
        end_(static_cast<size_t>(std::max(n, 0)) + 1, 0) {
    if (n < 0) throw UsageError("constraints: negative sentence length");
    for (int i : begin_banned) {
      if (i < 0 || i > n - 2)
        throw UsageError("begin constraint " + std::to_string(i) + " outside [0, " +
                         std::to_string(n - 2) + "]");
      begin_[i] = 1;
    }
    for (int k : end_banned) {
      if (k < 2 || k > n)
        throw UsageError("end constraint " + std::to_string(k) + " outside [2, " +
                         std::to_string(n) + "]");
      end_[k] = 1;
    }
  }

  static BeginEndConstraints none(int n) { return BeginEndConstraints(n, {}, {}); }

  int n() const { return n_; }
  bool begin_banned(int i) const { return i >= 0 && i <= n_ && begin_[i]; }
  bool end_banned(int k) const { return k >= 0 && k <= n_ && end_[k]; }

  std::vector<int> begin_set() const { return positions(begin_); }
  std::vector<int> end_set() const { return positions(end_); }

  bool empty() const {
    return std::none_of(begin_.begin(), begin_.end(), [](char c) { return c; }) &&
           std::none_of(end_.begin(), end_.end(), [](char c) { return c; });
  }

  bool operator==(const BeginEndConstraints&) const = default;

 private:
  static std::vector<int> positions(const std::vector<char>& mask) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i)
      if (mask[i]) out.push_back(i);
    return out;
  }

  int n_ = 0;
  std::vector<char> begin_;
  std::vector<char> end_;
};

/// Complement of the begin/end positions of the gold constituents of width >= 2.
inline BeginEndConstraints gold_constraints(const Tree& t) {
  const int n = static_cast<int>(t.num_leaves());
  std::vector<char> begins(n + 1, 0), ends(n + 1, 0);
  for (const auto& c : constituents(t)) {
    if (c.width() < 2) continue;
    begins[c.begin] = 1;
    ends[c.end] = 1;
  }
  std::vector<int> b, e;
  for (int i = 0; i <= n - 2; ++i)
    if (!begins[i]) b.push_back(i);
  for (int k = 2; k <= n; ++k)
    if (!ends[k]) e.push_back(k);
  return BeginEndConstraints(n, b, e);
}

/// Thresholds per-token boundary probabilities. p_begin[i] is P(a constituent
/// of width >= 2 begins at token i); p_end[t] is P(one ends after token t,
/// i.e. at position t+1). A position is banned when its probability is below
/// 1 - theta. The sentence end n is never banned.
inline BeginEndConstraints from_probs(const std::vector<double>& p_begin,
                                      const std::vector<double>& p_end, double theta) {
  if (!(theta >= 0.5 && theta < 1.0))
    throw UsageError("theta must lie in [0.5, 1), got " + format_double(theta));
  if (p_begin.size() != p_end.size()) throw UsageError("from_probs: length mismatch");
  const int n = static_cast<int>(p_begin.size());
  const double cut = 1.0 - theta;
  std::vector<int> b, e;
  for (int i = 0; i <= n - 2; ++i)
    if (p_begin[i] < cut) b.push_back(i);
  for (int k = 2; k <= n - 1; ++k)
    if (p_end[k - 1] < cut) e.push_back(k);
  return BeginEndConstraints(n, b, e);
}

/// Width-1 items always pass; otherwise the start must not be begin-banned and
/// the end must not be end-banned unless the label is a binarization symbol.
inline bool pcfg_allowable(const PcfgItem& item, const BeginEndConstraints& c) {
  if (item.end - item.begin == 1) return true;
  return !c.begin_banned(item.begin) && (item.is_new || !c.end_banned(item.end));
}

struct TagCcOptions {
  /// Gaps of width one are never checked (their adjunction site is a preterminal).
  bool exempt_unit_gaps = true;
};

namespace detail {

inline bool tag_outer_ok(const TagItem& x, const BeginEndConstraints& c) {
  if (x.l - x.i < 2) return true;
  return !c.begin_banned(x.i) && (x.is_new || !c.end_banned(x.l));
}

}  // namespace detail

/// Constrains both the outer span and, when present, the gap.
inline bool tag_allowable_cc(const TagItem& x, const BeginEndConstraints& c,
                             TagCcOptions opts = {}) {
  if (!detail::tag_outer_ok(x, c)) return false;
  if (!x.has_gap()) return true;
  if (opts.exempt_unit_gaps && x.k - x.j < 2) return true;
  return !c.begin_banned(x.j) && !c.end_banned(x.k);
}

/// Constrains only the outer span, ignoring the gap.
inline bool tag_allowable_be(const TagItem& x, const BeginEndConstraints& c) {
  return detail::tag_outer_ok(x, c);
}

inline PcfgPredicate pcfg_predicate(BeginEndConstraints c) {
  auto shared = std::make_shared<const BeginEndConstraints>(std::move(c));
  return PcfgPredicate([shared](const PcfgItem& x) { return pcfg_allowable(x, *shared); },
                       [shared](int i, int) { return !shared->begin_banned(i); });
}

enum class TagStrategy { kCC, kBE };

inline TagPredicate tag_predicate(BeginEndConstraints c, TagStrategy strategy,
                                  TagCcOptions opts = {}) {
  auto shared = std::make_shared<const BeginEndConstraints>(std::move(c));
  auto span = [shared](int i, int) { return !shared->begin_banned(i); };
  if (strategy == TagStrategy::kBE)
    return TagPredicate([shared](const TagItem& x) { return tag_allowable_be(x, *shared); }, span);
  return TagPredicate(
      [shared, opts](const TagItem& x) { return tag_allowable_cc(x, *shared, opts); }, span);
}

// ---------------------------------------------------------------------------
// Constraint files: "sent_id\tn\tB: i1 i2 ...\tE: k1 k2 ..."

struct ConstraintRecord {
  long sent_id = 0;
  BeginEndConstraints constraints;
  bool operator==(const ConstraintRecord&) const = default;
};

inline std::string format_constraint_line(const ConstraintRecord& r) {
  std::string out = std::to_string(r.sent_id) + "\t" + std::to_string(r.constraints.n()) + "\tB:";
  for (int i : r.constraints.begin_set()) out += " " + std::to_string(i);
  out += "\tE:";
  for (int k : r.constraints.end_set()) out += " " + std::to_string(k);
  return out;
}

inline std::string constraints_to_file(const std::vector<ConstraintRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += format_constraint_line(r);
    out += '\n';
  }
  return out;
}

inline std::vector<ConstraintRecord> constraints_from_file(std::string_view text) {
  std::vector<ConstraintRecord> out;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    if (trim(raw).empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError("constraints line " + std::to_string(line_no) + ": " + why);
    };
    auto cols = split(raw, '\t');
    if (cols.size() != 4) throw fail("expected 4 tab-separated fields");
    if (cols[2].rfind("B:", 0) != 0 || cols[3].rfind("E:", 0) != 0)
      throw fail("expected 'B:' and 'E:' fields");
    try {
      ConstraintRecord r;
      r.sent_id = parse_long(cols[0]);
      int n = static_cast<int>(parse_long(cols[1]));
      std::vector<int> b, e;
      for (const auto& s : split_ws(std::string_view(cols[2]).substr(2)))
        b.push_back(static_cast<int>(parse_long(s)));
      for (const auto& s : split_ws(std::string_view(cols[3]).substr(2)))
        e.push_back(static_cast<int>(parse_long(s)));
      r.constraints = BeginEndConstraints(n, b, e);
      out.push_back(std::move(r));
    } catch (const std::exception& ex) {
      throw fail(ex.what());
    }
  }
  return out;
}

}  // namespace chartcons
