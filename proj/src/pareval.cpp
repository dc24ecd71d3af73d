#include "sheetpram/pareval.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>

#include "sheetpram/classify.hpp"

namespace sheetpram {

namespace {

Int ceil_log2(Int n) {
  Int k = 0;
  while ((Int{1} << k) < n) ++k;
  return k;
}

// Signed product of factors; a factor is an atom or a comparison of atoms.
struct Term {
  bool negative = false;
  std::vector<const Expr*> factors;
};

std::vector<Term> expand(const Expr& e) {
  if (e.kind == Expr::Kind::Neg) {
    auto ts = expand(e.args[0]);
    for (auto& t : ts) t.negative = !t.negative;
    return ts;
  }
  if (e.kind == Expr::Kind::Binary && !is_comparison(e.op)) {
    auto l = expand(e.args[0]);
    auto r = expand(e.args[1]);
    if (e.op == BinOp::Add || e.op == BinOp::Sub) {
      for (auto& t : r) {
        if (e.op == BinOp::Sub) t.negative = !t.negative;
        l.push_back(std::move(t));
      }
      return l;
    }
    std::vector<Term> out;
    for (const auto& a : l) {
      for (const auto& b : r) {
        Term t{a.negative != b.negative, a.factors};
        t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
        out.push_back(std::move(t));
      }
    }
    return out;
  }
  return {Term{false, {&e}}};
}

void collect_range_exprs(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Range) out.push_back(&e);
  if (e.kind == Expr::Kind::Call) return;
  for (const auto& a : e.args) collect_range_exprs(a, out);
}

bool is_literal(const Expr& e) {
  return e.kind == Expr::Kind::Int || e.kind == Expr::Kind::Bool ||
         (e.kind == Expr::Kind::Neg && e.args[0].kind == Expr::Kind::Int);
}

Value literal_value(const Expr& e) {
  if (e.kind == Expr::Kind::Bool) return Value::boolean(e.num != 0);
  if (e.kind == Expr::Kind::Neg) return Value::integer(arith::neg(e.args[0].num));
  return Value::integer(e.num);
}

bool holds(BinOp op, const Value& l, const Value& r) {
  if (op == BinOp::Eq) return l == r;
  if (op == BinOp::Ne) return !(l == r);
  int c = compare_values(l, r);
  switch (op) {
    case BinOp::Lt: return c < 0;
    case BinOp::Gt: return c > 0;
    case BinOp::Le: return c <= 0;
    case BinOp::Ge: return c >= 0;
    default: throw SheetError("not a comparison");
  }
}

BinOp mirror(BinOp op) {
  switch (op) {
    case BinOp::Lt: return BinOp::Gt;
    case BinOp::Gt: return BinOp::Lt;
    case BinOp::Le: return BinOp::Ge;
    case BinOp::Ge: return BinOp::Le;
    default: return op;
  }
}

// Exclusive-access log: within one step no cell may be touched by two processors.
class Accountant {
 public:
  using Key = std::array<Int, 3>;

  void touch(const Key& k, Int proc) {
    auto [it, fresh] = step_.emplace(k, proc);
    if (!fresh && it->second != proc)
      throw std::logic_error("exclusive access violated in step " + std::to_string(steps_));
  }
  void next() {
    step_.clear();
    ++steps_;
  }
  Int steps() const { return steps_; }

 private:
  std::map<Key, Int> step_;
  Int steps_ = 0;
};

struct RangeInfo {
  const Expr* e = nullptr;
  Region r;
  bool multi = false;
  Int orth = 0;    // row of a horizontal range, column of a vertical one
  Int anchor = 0;  // first position along the axis
};

// Shape of one array formula at one placement.
struct Desc {
  bool ok = false;
  bool horizontal = true;
  bool fixed = false;  // every multi-cell range has absolute ends along the axis
  bool direct = false; // every multi-cell range has relative ends along the axis
  Int length = 0;
  std::vector<RangeInfo> ranges;
  std::size_t first = 0;  // index of the first multi-cell range
  std::vector<Int> key;
};

struct Structure {
  bool single = false;
  Int x_lo = 0;
  Int leaves = 0;  // power of two
  // node -> per-term prefix array; node 1 is the root
  std::vector<std::vector<PrefixArray>> nodes;
};

}  // namespace

struct RoundState::Impl : CellSource {
  Grid g;
  Region F;
  Int c = 0;
  CellAddr ext;
  bool row_org = true;
  Int window = 0;
  std::set<Int> pinned;
  Int current = 0;
  std::map<Int, std::vector<Value>> rows;
  std::map<Int, std::vector<SortedEntry>> sorted;
  std::map<Int, std::vector<Int>> row_errors, col_errors;
  std::map<Int, std::vector<Int>> input_cols, input_rows;  // present input positions per row / column
  std::map<Int, SumTree> col_trees;
  Int tree_nodes = 0;
  std::map<const Expr*, std::vector<Term>> terms;
  std::map<CellAddr, std::vector<CellRef>, RowMajorLess> scalar_refs;
  std::map<std::vector<Int>, Structure> structures;
  Int build_steps = 0;
  Int init = 0;
  Int peak = 0;
  Int input_count = 0;
  Int max_refs = 0;
  const std::vector<SortedEntry> none;

  explicit Impl(const Grid& grid);

  Value value(const CellAddr& a) const override {
    if (F.contains(a)) {
      if (a.row >= current) throw NotDirectedError("cell " + to_a1(a) + " read before its row is computed");
      auto it = rows.find(a.row);
      if (it == rows.end()) throw std::logic_error("row " + std::to_string(a.row) + " is no longer retained");
      return it->second[static_cast<std::size_t>(a.col - F.col_lo)];
    }
    if (auto v = g.input_at(a)) return Value::integer(*v);
    return Value::integer(0);
  }
  bool present(const CellAddr& a) const override {
    if (F.contains(a)) return g.formula_ptr(a) != nullptr;
    return g.input_at(a).has_value();
  }
  CellAddr extent() const override { return ext; }

  Int join_cost() const { return ceil_log2(std::max<Int>(c, 2)); }

  const std::vector<SortedEntry>& row_entries(Int row) const {
    if (row >= F.row_lo && row <= F.row_hi) {
      if (row >= current) throw NotDirectedError("row " + std::to_string(row) + " read before it is computed");
      auto it = sorted.find(row);
      if (it == sorted.end()) throw std::logic_error("row " + std::to_string(row) + " is no longer retained");
      return it->second;
    }
    auto it = sorted.find(row);
    return it == sorted.end() ? none : it->second;
  }

  // Last present position in [lo, hi] of a row (horizontal) or column, or 0.
  Int last_present(bool horizontal, Int line, Int lo, Int hi) const {
    Int best = 0;
    const auto& inputs = horizontal ? input_cols : input_rows;
    if (auto it = inputs.find(line); it != inputs.end()) {
      auto p = std::upper_bound(it->second.begin(), it->second.end(), hi);
      if (p != it->second.begin() && *std::prev(p) >= lo) best = *std::prev(p);
    }
    const Region& k = g.source().computing;
    if (horizontal && line >= F.row_lo && line <= F.row_hi) {
      Int stop = std::max(lo, F.col_lo);
      for (Int x = std::min(hi, F.col_hi), seen = 0; x >= stop && seen < k.width(); --x, ++seen)
        if (g.formula_ptr({x, line})) return std::max(best, x);
    } else if (!horizontal && line >= F.col_lo && line <= F.col_hi) {
      Int stop = std::max(lo, F.row_lo);
      for (Int y = std::min(hi, F.row_hi), seen = 0; y >= stop && seen < k.height(); --y, ++seen)
        if (g.formula_ptr({line, y})) return std::max(best, y);
    }
    return best;
  }

  bool span_has_error(const RangeInfo& ri, bool horizontal, Int lo, Int hi) const {
    const auto& errs = horizontal ? row_errors : col_errors;
    if (!horizontal && row_org && ri.r.intersects(F)) return true;  // not tracked; take the exact path
    auto it = errs.find(ri.orth);
    if (it == errs.end()) return false;
    auto p = std::lower_bound(it->second.begin(), it->second.end(), lo);
    return p != it->second.end() && *p <= hi;
  }

  const std::vector<Term>& terms_of(const Expr& array) {
    auto it = terms.find(&array);
    if (it == terms.end()) it = terms.emplace(&array, expand(array.args[0])).first;
    return it->second;
  }

  Int gather(Int row);
  std::vector<Value> compute(Int row, Int* steps);
  Int update(Int row, const std::vector<Value>& values);
  Int memory() const;
};

namespace {

class ParEvaluator : public FormulaEvaluator {
 public:
  explicit ParEvaluator(RoundState::Impl& s) : FormulaEvaluator(s), s_(s) {}

 protected:
  Value do_match(const Value& lookup, const Region& range, int match_type, const Ctx& ctx) override {
    Region r = clip(range);
    bool h = r.row_lo == r.row_hi, v = r.col_lo == r.col_hi;
    ops_ += static_cast<std::uint64_t>(s_.join_cost());
    if (!h && !v) return Value::error(ErrorKind::NA);
    const Int n = h ? r.width() : r.height();
    if (n <= 0) return Value::error(ErrorKind::NA);
    const Int lo = h ? r.col_lo : r.row_lo, hi = h ? r.col_hi : r.row_hi;
    if (match_type == 0) {
      if (h) {
        const auto& entries = s_.row_entries(r.row_lo);
        SortedEntry probe{lookup, lo};
        std::size_t a = 0, b = entries.size();
        while (a < b) {
          ++ops_;
          std::size_t mid = a + (b - a) / 2;
          if (entry_less(entries[mid], probe)) a = mid + 1;
          else b = mid;
        }
        if (a < entries.size() && entries[a].value == lookup && entries[a].pos <= hi)
          return Value::integer(entries[a].pos - lo + 1);
        return Value::error(ErrorKind::NA);
      }
      if (s_.row_org && r.intersects(s_.F)) return FormulaEvaluator::do_match(lookup, range, match_type, ctx);
      if (r.row_hi >= s_.current && r.intersects(s_.F))
        throw NotDirectedError("column range read before it is computed");
      auto it = s_.col_trees.find(r.col_lo);
      if (it == s_.col_trees.end()) return Value::error(ErrorKind::NA);
      Int visited = 0;
      auto found = it->second.lower_bound({lookup, lo}, &visited);
      ops_ += static_cast<std::uint64_t>(visited);
      if (found && found->value == lookup && found->pos <= hi) return Value::integer(found->pos - lo + 1);
      return Value::error(ErrorKind::NA);
    }
    auto at = [&](Int p) { return h ? CellAddr{r.col_lo + p, r.row_lo} : CellAddr{r.col_lo, r.row_lo + p}; };
    Int a = 0, b = n;
    while (a < b) {
      ++ops_;
      Int mid = a + (b - a) / 2;
      Value x = src_.value(at(mid));
      bool q = !x.is_error() && (match_type > 0 ? compare_values(x, lookup) >= 0 : compare_values(x, lookup) <= 0);
      if (q) b = mid;
      else a = mid + 1;
    }
    if (a < n) return Value::integer(a + 1);
    ops_ += static_cast<std::uint64_t>(ceil_log2(std::max<Int>(n, 2)));
    Int last = s_.last_present(h, h ? r.row_lo : r.col_lo, lo, hi);
    if (last == 0) return Value::error(ErrorKind::NA);
    return Value::integer(last - lo + 1);
  }

  Value do_index(const Region& range, Int first, Int second, bool two_d, const Ctx& ctx) override {
    ops_ += static_cast<std::uint64_t>(s_.join_cost() + 1);
    return FormulaEvaluator::do_index(range, first, second, two_d, ctx);
  }

  Value do_array(const Expr& array, const Ctx& ctx) override {
    ops_ += static_cast<std::uint64_t>(s_.join_cost());
    Desc d = describe(array, ctx);
    if (!d.ok || d.direct) return FormulaEvaluator::do_array(array, ctx);
    for (const auto& ri : d.ranges)
      if (ri.multi && s_.span_has_error(ri, d.horizontal, ri.anchor, ri.anchor + d.length - 1))
        return FormulaEvaluator::do_array(array, ctx);

    const auto& terms = s_.terms_of(array);
    auto info = [&](const Expr* e) -> const RangeInfo* {
      for (const auto& ri : d.ranges)
        if (ri.e == e) return &ri;
      return nullptr;
    };
    auto multi = [&](const Expr& e) {
      const RangeInfo* ri = e.kind == Expr::Kind::Range ? info(&e) : nullptr;
      return ri && ri->multi;
    };
    // Scalar value of an atom at this placement.
    auto scalar = [&](const Expr& e) -> Value {
      ++ops_;
      if (is_literal(e)) return literal_value(e);
      if (e.kind == Expr::Kind::Cell) return cell_value(e.cell, ctx);
      const RangeInfo* ri = info(&e);
      return src_.value({ri->r.col_lo, ri->r.row_lo});
    };

    struct Query {
      bool negative = false;
      Int scale = 1;
      std::vector<Value> eq;
      std::optional<BinOp> op;
      Value y;
    };
    std::vector<Query> queries;
    for (const auto& t : terms) {
      Query q;
      q.negative = t.negative;
      for (const Expr* f : t.factors) {
        if (f->kind == Expr::Kind::Binary) {
          const Expr& l = f->args[0];
          const Expr& r = f->args[1];
          bool ml = multi(l), mr = multi(r);
          if (!ml && !mr) {
            Value a = scalar(l), b = scalar(r);
            if (a.is_error() || b.is_error()) return FormulaEvaluator::do_array(array, ctx);
            q.scale = arith::mul(q.scale, holds(f->op, a, b) ? 1 : 0);
            continue;
          }
          if (ml && mr) continue;
          const Expr& other = ml ? r : l;
          if (is_literal(other)) continue;
          Value y = scalar(other);
          if (y.is_error()) return FormulaEvaluator::do_array(array, ctx);
          if (f->op == BinOp::Eq) {
            q.eq.push_back(y);
          } else {
            if (q.op) return FormulaEvaluator::do_array(array, ctx);
            q.op = ml ? f->op : mirror(f->op);
            q.y = y;
          }
          continue;
        }
        if (multi(*f)) continue;
        Value v = scalar(*f);
        if (v.is_error()) return FormulaEvaluator::do_array(array, ctx);
        q.scale = arith::mul(q.scale, v.numeric());
      }
      queries.push_back(std::move(q));
    }

    Structure& st = structure(array, ctx, d, terms);
    const Int qlo = d.ranges[d.first].anchor - st.x_lo;
    const Int qhi = qlo + d.length - 1;
    Int steps = 0;
    Int total = 0;
    for (std::size_t ti = 0; ti < queries.size(); ++ti) {
      const Query& q = queries[ti];
      Int sum = 0;
      auto add = [&](const PrefixArray& pa) { sum = arith::add(sum, pa.query(q.eq, q.op, q.y, &steps)); };
      if (st.single) {
        add(st.nodes[1][ti]);
      } else {
        for (Int a = qlo + st.leaves, b = qhi + st.leaves + 1; a < b; a >>= 1, b >>= 1) {
          if (a & 1) add(st.nodes[static_cast<std::size_t>(a++)][ti]);
          if (b & 1) add(st.nodes[static_cast<std::size_t>(--b)][ti]);
        }
      }
      Int term = arith::mul(q.scale, sum);
      total = q.negative ? arith::sub(total, term) : arith::add(total, term);
    }
    ops_ += static_cast<std::uint64_t>(steps);
    return Value::integer(total);
  }

 private:
  RoundState::Impl& s_;

  Desc describe(const Expr& array, const Ctx& ctx) const {
    Desc d;
    std::vector<const Expr*> exprs;
    collect_range_exprs(array.args[0], exprs);
    bool have_axis = false, all_fixed = true, all_rel = true;
    for (const Expr* e : exprs) {
      RangeInfo ri;
      ri.e = e;
      try {
        ri.r = resolve_range(e->range, ctx.origin, ctx.placed);
      } catch (const OutOfGridError&) {
        return d;
      }
      if (ri.r.col_hi == kUnbounded || ri.r.row_hi == kUnbounded) return d;
      bool single = ri.r.width() == 1 && ri.r.height() == 1;
      if (!single) {
        bool h = ri.r.height() == 1, v = ri.r.width() == 1;
        if (!h && !v) return d;
        Int len = h ? ri.r.width() : ri.r.height();
        if (have_axis && (h != d.horizontal || len != d.length)) return d;
        have_axis = true;
        d.horizontal = h;
        d.length = len;
        ri.multi = true;
      }
      d.ranges.push_back(ri);
    }
    if (!have_axis) return d;
    bool seen = false;
    for (std::size_t i = 0; i < d.ranges.size(); ++i) {
      auto& ri = d.ranges[i];
      if (!ri.multi) continue;
      const RangeRef& rr = ri.e->range;
      bool fa = d.horizontal ? rr.from.col_absolute : rr.from.row_absolute;
      bool ta = d.horizontal ? rr.to.col_absolute : rr.to.row_absolute;
      all_fixed = all_fixed && fa && ta;
      all_rel = all_rel && !fa && !ta;
      ri.orth = d.horizontal ? ri.r.row_lo : ri.r.col_lo;
      ri.anchor = d.horizontal ? ri.r.col_lo : ri.r.row_lo;
      if (!seen) d.first = i;
      seen = true;
    }
    d.fixed = all_fixed;
    d.direct = all_rel;
    d.ok = true;
    d.key = {ctx.origin.col, ctx.origin.row, static_cast<Int>(reinterpret_cast<std::uintptr_t>(&array)), d.horizontal,
             d.fixed};
    if (d.fixed) d.key.push_back(d.length);
    for (const auto& ri : d.ranges) {
      d.key.push_back(ri.multi);
      if (!ri.multi) continue;
      d.key.push_back(ri.orth);
      d.key.push_back(d.fixed ? ri.anchor : ri.anchor - d.ranges[d.first].anchor);
    }
    return d;
  }

  Value positional(const Expr& e, const Desc& d, Int x) const {
    for (const auto& ri : d.ranges) {
      if (ri.e != &e) continue;
      Int p = x + (ri.anchor - d.ranges[d.first].anchor);
      return s_.value(d.horizontal ? CellAddr{p, ri.orth} : CellAddr{ri.orth, p});
    }
    return literal_value(e);
  }

  PrefixArray::Record record(const Term& t, const Desc& d, Int x) const {
    PrefixArray::Record rec;
    rec.pos = x;
    rec.weight = 1;
    std::optional<Value> ineq;
    auto is_multi = [&](const Expr& e) {
      if (e.kind != Expr::Kind::Range) return false;
      for (const auto& ri : d.ranges)
        if (ri.e == &e) return ri.multi;
      return false;
    };
    for (const Expr* f : t.factors) {
      if (f->kind == Expr::Kind::Binary) {
        const Expr& l = f->args[0];
        const Expr& r = f->args[1];
        bool ml = is_multi(l), mr = is_multi(r);
        if (!ml && !mr) continue;
        if (ml && mr) {
          rec.weight = arith::mul(rec.weight, holds(f->op, positional(l, d, x), positional(r, d, x)) ? 1 : 0);
          continue;
        }
        const Expr& other = ml ? r : l;
        const Expr& side = ml ? l : r;
        if (is_literal(other)) {
          Value a = positional(l, d, x), b = positional(r, d, x);
          rec.weight = arith::mul(rec.weight, holds(f->op, a, b) ? 1 : 0);
        } else if (f->op == BinOp::Eq) {
          rec.key.push_back(positional(side, d, x));
        } else {
          ineq = positional(side, d, x);
        }
        continue;
      }
      if (is_multi(*f)) rec.weight = arith::mul(rec.weight, positional(*f, d, x).numeric());
    }
    if (ineq) rec.key.push_back(*ineq);
    return rec;
  }

  Structure& structure(const Expr& array, const Ctx& ctx, const Desc& d, const std::vector<Term>& terms) {
    auto found = s_.structures.find(d.key);
    if (found != s_.structures.end()) return found->second;
    Structure st;
    Int x_lo = d.ranges[d.first].anchor, x_hi = d.ranges[d.first].anchor + d.length - 1;
    if (!d.fixed) {
      // span every processor of this type that shares the layout
      const Region& k = s_.g.source().computing;
      for (Int col = s_.F.col_lo + (ctx.origin.col - k.col_lo); col <= s_.F.col_hi; col += k.width()) {
        Desc other = describe(array, {ctx.origin, {col, ctx.placed.row}});
        if (!other.ok || other.key != d.key) continue;
        x_lo = std::min(x_lo, other.ranges[other.first].anchor);
        x_hi = std::max(x_hi, other.ranges[other.first].anchor + other.length - 1);
      }
    }
    const Int n = x_hi - x_lo + 1;
    st.x_lo = x_lo;
    st.single = d.fixed;
    st.leaves = d.fixed ? 1 : Int{1} << ceil_log2(n);
    st.nodes.assign(static_cast<std::size_t>(2 * st.leaves), std::vector<PrefixArray>(terms.size()));
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
      for (Int x = 0; x < n; ++x) {
        auto rec = record(terms[ti], d, x_lo + x);
        if (d.fixed) st.nodes[1][ti].records.push_back(std::move(rec));
        else st.nodes[static_cast<std::size_t>(st.leaves + x)][ti].records.push_back(std::move(rec));
      }
      if (!d.fixed) {
        for (Int v = st.leaves - 1; v >= 1; --v) {
          auto& out = st.nodes[static_cast<std::size_t>(v)][ti].records;
          for (Int child : {2 * v, 2 * v + 1}) {
            const auto& in = st.nodes[static_cast<std::size_t>(child)][ti].records;
            out.insert(out.end(), in.begin(), in.end());
          }
        }
      }
      for (auto& node : st.nodes) node[ti].build();
    }
    Int levels = ceil_log2(std::max<Int>(n, 2));
    Int factors = 0;
    for (const auto& t : terms) factors = std::max<Int>(factors, static_cast<Int>(t.factors.size()));
    s_.build_steps += factors + (d.fixed ? 2 * levels + 1 : levels * (levels + 1) + 1);
    return s_.structures.emplace(d.key, std::move(st)).first->second;
  }
};

}  // namespace

RoundState::Impl::Impl(const Grid& grid) : g(grid), F(grid.filled()), c(grid.filled().width()), ext(grid.extent()) {
  const Template& t = g.source();
  row_org = classify_template(t).row_organized();
  current = F.row_lo;
  bool keep_all = !row_org;
  auto pin = [&](Int lo, Int hi) {
    for (Int y = std::max(lo, F.row_lo); y <= std::min(hi, F.row_hi); ++y) pinned.insert(y);
  };
  for (const auto& [o, f] : t.formulas) {
    std::vector<CellRef> scalars;
    for (const auto& ref : references_of(*f)) {
      if (ref.address_only) continue;
      if (!ref.is_range) {
        scalars.push_back(ref.cell);
        if (ref.cell.row_absolute) pin(ref.cell.addr.row, ref.cell.addr.row);
        else window = std::max(window, o.row - ref.cell.addr.row);
        continue;
      }
      const RangeRef& rr = ref.range;
      if (rr.shape == RangeRef::Shape::WholeColumns || rr.from.row_absolute != rr.to.row_absolute) {
        keep_all = true;
      } else if (rr.from.row_absolute) {
        Int a = std::min(rr.from.addr.row, rr.to.addr.row), b = std::max(rr.from.addr.row, rr.to.addr.row);
        if (b - a > t.computing.height()) keep_all = true;
        else pin(a, b);
      } else {
        window = std::max(window, o.row - std::min(rr.from.addr.row, rr.to.addr.row));
      }
    }
    max_refs = std::max<Int>(max_refs, static_cast<Int>(scalars.size()));
    scalar_refs[o] = std::move(scalars);
  }
  if (keep_all) window = kUnbounded;

  std::map<Int, Int> per_row;
  for (const auto& [a, v] : t.inputs) {
    if (F.contains(a)) continue;
    ++input_count;
    Value val = Value::integer(v);
    sorted[a.row].push_back({val, a.col});
    input_cols[a.row].push_back(a.col);
    input_rows[a.col].push_back(a.row);
    ++per_row[a.row];
  }
  Int widest = 1, deepest = 0;
  for (auto& [row, e] : sorted) std::sort(e.begin(), e.end(), entry_less);
  for (auto& [row, cols] : input_cols) std::sort(cols.begin(), cols.end());
  for (auto& [col, rs] : input_rows) {
    std::sort(rs.begin(), rs.end());
    for (Int y : rs) {
      deepest = std::max(deepest, col_trees[col].insert({Value::integer(*g.input_at({col, y})), y}));
      ++tree_nodes;
    }
  }
  for (const auto& [row, n] : per_row) widest = std::max(widest, n);
  init = ceil_log2(std::max<Int>(widest, 2)) + 1 + deepest;
  peak = memory();
}

Int RoundState::Impl::gather(Int row) {
  std::map<CellAddr, std::vector<Int>, RowMajorLess> groups;  // origin -> columns
  for (Int x = F.col_lo; x <= F.col_hi; ++x) {
    CellAddr o;
    if (g.formula_ptr({x, row}, &o)) groups[o].push_back(x);
  }
  Accountant acc;
  Int copy_id = 0;
  for (const auto& [o, cols] : groups) {
    for (const CellRef& ref : scalar_refs[o]) {
      ++copy_id;
      if (ref.col_absolute) {
        // the first processor reads, the others receive copies by doubling
        const Int n = static_cast<Int>(cols.size());
        try {
          CellAddr a = resolve_ref(ref, o, {cols[0], row});
          acc.touch({0, a.col, a.row}, cols[0]);
        } catch (const OutOfGridError&) {
        }
        acc.touch({1, copy_id, 0}, cols[0]);
        acc.next();
        for (Int d = 1; d < n; d *= 2) {
          for (Int j = 0; j < d && j + d < n; ++j) {
            acc.touch({1, copy_id, j}, cols[static_cast<std::size_t>(j)]);
            acc.touch({1, copy_id, j + d}, cols[static_cast<std::size_t>(j)]);
          }
          acc.next();
        }
        continue;
      }
      for (Int x : cols) {
        try {
          CellAddr a = resolve_ref(ref, o, {x, row});
          acc.touch({0, a.col, a.row}, x);
        } catch (const OutOfGridError&) {
        }
      }
      acc.next();
    }
  }
  return acc.steps();
}

std::vector<Value> RoundState::Impl::compute(Int row, Int* steps) {
  if (row != current) throw std::logic_error("rounds must run in row order");
  structures.clear();
  build_steps = 0;
  Int gathered = gather(row);
  ParEvaluator ev(*this);
  std::vector<Value> out(static_cast<std::size_t>(c), Value::integer(0));
  std::uint64_t slowest = 0;
  for (Int x = F.col_lo; x <= F.col_hi; ++x) {
    CellAddr o;
    const Expr* f = g.formula_ptr({x, row}, &o);
    if (!f) continue;
    std::uint64_t before = ev.ops();
    out[static_cast<std::size_t>(x - F.col_lo)] = ev.eval(*f, o, {x, row});
    slowest = std::max(slowest, ev.ops() - before);
  }
  peak = std::max(peak, memory());
  if (steps) *steps = gathered + build_steps + static_cast<Int>(slowest) + 1;
  return out;
}

Int RoundState::Impl::update(Int row, const std::vector<Value>& values) {
  if (row != current || static_cast<Int>(values.size()) != c) throw std::logic_error("update out of order");
  rows[row] = values;
  std::vector<SortedEntry>& e = sorted[row];
  std::vector<Int>& errs = row_errors[row];
  Int deepest = 0;
  for (Int i = 0; i < c; ++i) {
    Int x = F.col_lo + i;
    if (!g.formula_ptr({x, row})) continue;
    const Value& v = values[static_cast<std::size_t>(i)];
    if (v.is_error()) {
      errs.push_back(x);
      if (!row_org) col_errors[x].push_back(row);
      continue;
    }
    e.push_back({v, x});
    if (!row_org) {
      deepest = std::max(deepest, col_trees[x].insert({v, row}));
      ++tree_nodes;
    }
  }
  std::sort(e.begin(), e.end(), entry_less);
  current = row + 1;
  if (window != kUnbounded) {
    for (auto it = rows.begin(); it != rows.end() && it->first < current - window;) {
      if (pinned.count(it->first)) {
        ++it;
        continue;
      }
      sorted.erase(it->first);
      row_errors.erase(it->first);
      it = rows.erase(it);
    }
  }
  Int levels = ceil_log2(std::max<Int>(c, 2));
  peak = std::max(peak, memory());
  return 2 * levels + 1 + deepest;
}

Int RoundState::Impl::memory() const {
  Int m = input_count + tree_nodes + c * (max_refs + 2);
  m += static_cast<Int>(rows.size()) * c;
  for (const auto& [r, e] : sorted) m += static_cast<Int>(e.size());
  for (const auto& [r, e] : row_errors) m += static_cast<Int>(e.size());
  for (const auto& [r, e] : col_errors) m += static_cast<Int>(e.size());
  for (const auto& [key, st] : structures)
    for (const auto& node : st.nodes)
      for (const auto& pa : node) m += static_cast<Int>(pa.records.size());
  return m;
}

RoundState::RoundState(const Grid& g) : impl_(std::make_unique<Impl>(g)) {}
RoundState::~RoundState() = default;

Int RoundState::first_row() const { return impl_->F.row_lo; }
Int RoundState::last_row() const { return impl_->F.row_hi; }
bool RoundState::row_organized() const { return impl_->row_org; }

std::vector<Value> RoundState::round_compute(Int row, Int* steps) { return impl_->compute(row, steps); }
Int RoundState::round_update(Int row, const std::vector<Value>& values) { return impl_->update(row, values); }

const std::vector<SortedEntry>& RoundState::sorted_row(Int row) const { return impl_->row_entries(row); }

std::vector<SortedEntry> RoundState::column_tree(Int col) const {
  auto it = impl_->col_trees.find(col);
  return it == impl_->col_trees.end() ? std::vector<SortedEntry>{} : it->second.inorder();
}

const SumTree* RoundState::column_tree_ptr(Int col) const {
  auto it = impl_->col_trees.find(col);
  return it == impl_->col_trees.end() ? nullptr : &it->second;
}

std::vector<const PrefixArray*> RoundState::prefix_arrays() const {
  std::vector<const PrefixArray*> out;
  for (const auto& [key, st] : impl_->structures)
    for (const auto& node : st.nodes)
      for (const auto& pa : node)
        if (!pa.records.empty()) out.push_back(&pa);
  return out;
}

Int RoundState::init_steps() const { return impl_->init; }
Int RoundState::memory_cells() const { return impl_->peak; }


namespace {

CellAddr flip(const CellAddr& a) { return {a.row, a.col}; }
CellRef flip(const CellRef& r) { return {flip(r.addr), r.row_absolute, r.col_absolute}; }
Region flip(const Region& g) { return {g.row_lo, g.row_hi, g.col_lo, g.col_hi}; }

RangeRef flip(const RangeRef& r) {
  RangeRef out{flip(r.from), flip(r.to), r.shape};
  if (r.shape == RangeRef::Shape::WholeRows) out.shape = RangeRef::Shape::WholeColumns;
  else if (r.shape == RangeRef::Shape::WholeColumns) out.shape = RangeRef::Shape::WholeRows;
  return out;
}

bool one_row(const Expr& e) {
  if (e.kind == Expr::Kind::Cell) return true;
  const RangeRef& r = e.range;
  return r.shape != RangeRef::Shape::WholeColumns && r.from.row_absolute == r.to.row_absolute &&
         r.from.addr.row == r.to.addr.row;
}

bool one_col(const Expr& e) {
  if (e.kind == Expr::Kind::Cell) return true;
  const RangeRef& r = e.range;
  return r.shape != RangeRef::Shape::WholeRows && r.from.col_absolute == r.to.col_absolute &&
         r.from.addr.col == r.to.addr.col;
}

Expr flip(const Expr& e) {
  Expr out = e;
  if (e.kind == Expr::Kind::Cell) out.cell = flip(e.cell);
  if (e.kind == Expr::Kind::Range) out.range = flip(e.range);
  for (auto& a : out.args) a = flip(a);
  if (e.kind != Expr::Kind::Call) return out;
  if (e.fn == Func::Row) out.fn = Func::Column;
  else if (e.fn == Func::Column) out.fn = Func::Row;
  else if (e.fn == Func::Index && e.args.size() == 3) std::swap(out.args[1], out.args[2]);
  else if (e.fn == Func::Index && !one_row(e.args[0]) && !one_col(e.args[0]))
    out.args = {out.args[0], Expr::integer(1), out.args[1]};
  return out;
}

void check_arrays(const Expr& e) {
  if (e.kind == Expr::Kind::Array && !thm3_eligible(e))
    throw ArrayEligibilityError("array formula " + to_string(e) + " is outside the supported class");
  for (const auto& a : e.args) check_arrays(a);
}

std::pair<EvalResult, CostReport> run_rows(const Template& t, Int c, Int r) {
  Grid g = fill_template(t, c, r);
  RoundState st(g);
  EvalResult res = EvalResult::blank(g.extent());
  for (const auto& [a, v] : t.inputs)
    if (!g.filled().contains(a)) res.set(a, Value::integer(v), false);
  CostReport rep;
  rep.processors = c;
  rep.rounds = r;
  rep.init_steps = st.init_steps();
  rep.total_parallel_time = rep.init_steps;
  const Region& F = g.filled();
  for (Int row = F.row_lo; row <= F.row_hi; ++row) {
    Int steps = 0;
    std::vector<Value> vals = st.round_compute(row, &steps);
    steps += st.round_update(row, vals);
    rep.per_round_parallel_steps.push_back(steps);
    rep.total_parallel_time += steps;
    for (Int x = F.col_lo; x <= F.col_hi; ++x) {
      if (!g.formula_ptr({x, row})) continue;
      res.set({x, row}, vals[static_cast<std::size_t>(x - F.col_lo)], true);
      res.order.push_back({x, row});
    }
  }
  rep.peak_memory_cells = st.memory_cells();
  for (const auto& a : g.output_cells()) res.output.push_back(res.value(a));
  res.op_count = static_cast<std::uint64_t>(rep.total_parallel_time);
  return {std::move(res), rep};
}

}  // namespace

Template transpose(const Template& t) {
  Template out;
  for (const auto& [a, f] : t.formulas) out.set_formula(flip(a), flip(*f));
  for (const auto& [a, v] : t.inputs) out.set_input(flip(a), v);
  out.computing = flip(t.computing);
  for (const auto& g : t.input_part) out.input_part.push_back(flip(g));
  out.output = t.output == OutputPart::LastRow ? OutputPart::LastColumn : OutputPart::LastRow;
  return out;
}

std::pair<EvalResult, CostReport> par_evaluate(const Template& t, Int c, Int r) {
  for (const auto& [a, f] : t.formulas) check_arrays(*f);
  Classification cl = classify_template(t);
  if (cl.row_directed()) return run_rows(t, c, r);
  if (!cl.column_directed()) throw NotDirectedError("template is neither row- nor column-directed");
  auto [tres, rep] = run_rows(transpose(t), r, c);
  Grid g = fill_template(t, c, r);
  EvalResult res = EvalResult::blank(g.extent());
  for (const auto& [a, v] : t.inputs)
    if (!g.filled().contains(a)) res.set(a, Value::integer(v), false);
  for (const auto& a : tres.order) {
    res.set(flip(a), tres.value(a), true);
    res.order.push_back(flip(a));
  }
  for (const auto& a : g.output_cells()) res.output.push_back(res.value(a));
  res.op_count = tres.op_count;
  return {std::move(res), rep};
}

Template match_benchmark() {
  Template t;
  t.computing = parse_region("A2:A2");
  t.input_part = {parse_region("1:1")};
  for (Int col = 1; col <= 8; ++col) t.set_input({col, 1}, (col * 3) % 8);
  t.set_formula(parse_addr("A2"),
                "=IFERROR(MATCH(A1,1:1,0),0)+IFERROR(MATCH(COLUMN()-1,1:1,0),0)+IFERROR(MATCH(A1+1,1:1,1),0)");
  return t;
}

}  // namespace sheetpram
