#include "sheetpram/seqeval.hpp"

#include <algorithm>

namespace sheetpram {

int compare_values(const Value& a, const Value& b) {
  auto rank = [](const Value& v) { return v.is_int() ? 0 : 1; };
  if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
  if (a.as_int() == b.as_int()) return 0;
  return a.as_int() < b.as_int() ? -1 : 1;
}

Value eval_match(const Value& lookup, std::span<const RangeCell> range, int match_type, std::uint64_t* ops) {
  std::uint64_t local = 0;
  std::uint64_t& count = ops ? *ops : local;
  if (lookup.is_error()) return lookup;
  const Int n = static_cast<Int>(range.size());
  if (match_type == 0) {
    for (Int p = 0; p < n; ++p) {
      ++count;
      const RangeCell& c = range[static_cast<std::size_t>(p)];
      if (c.present && !c.value.is_error() && c.value == lookup) return Value::integer(p + 1);
    }
    return Value::error(ErrorKind::NA);
  }
  auto qualifies = [&](Int p) {
    const RangeCell& c = range[static_cast<std::size_t>(p)];
    if (c.value.is_error()) return false;
    int cmp = compare_values(c.value, lookup);
    return match_type > 0 ? cmp >= 0 : cmp <= 0;
  };
  Int lo = 0, hi = n;
  while (lo < hi) {
    ++count;
    Int mid = lo + (hi - lo) / 2;
    if (qualifies(mid)) hi = mid;
    else lo = mid + 1;
  }
  if (lo < n) return Value::integer(lo + 1);
  for (Int p = n - 1; p >= 0; --p) {
    ++count;
    if (range[static_cast<std::size_t>(p)].present) return Value::integer(p + 1);
  }
  return Value::error(ErrorKind::NA);
}

Region FormulaEvaluator::clip(const Region& r) const {
  Region out = r;
  CellAddr e = src_.extent();
  if (out.col_hi == kUnbounded) out.col_hi = std::max<Int>(e.col, out.col_lo - 1);
  if (out.row_hi == kUnbounded) out.row_hi = std::max<Int>(e.row, out.row_lo - 1);
  return out;
}

Value FormulaEvaluator::eval(const Expr& e, const CellAddr& origin, const CellAddr& placed) {
  Ctx ctx{origin, placed};
  if (e.kind == Expr::Kind::Array) return do_array(e, ctx);
  return eval_node(e, ctx);
}

Value FormulaEvaluator::cell_value(const CellRef& r, const Ctx& ctx) {
  CellAddr a;
  try {
    a = resolve_ref(r, ctx.origin, ctx.placed);
  } catch (const OutOfGridError&) {
    return Value::error(ErrorKind::Ref);
  }
  return src_.value(a);
}

namespace {

Value arithmetic(BinOp op, const Value& l, const Value& r) {
  if (l.is_error()) return l;
  if (r.is_error()) return r;
  Int a = l.numeric(), b = r.numeric();
  switch (op) {
    case BinOp::Add: return Value::integer(arith::add(a, b));
    case BinOp::Sub: return Value::integer(arith::sub(a, b));
    case BinOp::Mul: return Value::integer(arith::mul(a, b));
    case BinOp::Div:
      if (b == 0) return Value::error(ErrorKind::Div0);
      return Value::integer(arith::div(a, b));
    default: break;
  }
  if (op == BinOp::Eq) return Value::boolean(l == r);
  if (op == BinOp::Ne) return Value::boolean(!(l == r));
  int c = compare_values(l, r);
  switch (op) {
    case BinOp::Lt: return Value::boolean(c < 0);
    case BinOp::Gt: return Value::boolean(c > 0);
    case BinOp::Le: return Value::boolean(c <= 0);
    case BinOp::Ge: return Value::boolean(c >= 0);
    default: break;
  }
  return Value::error(ErrorKind::Value);
}

}  // namespace

Value FormulaEvaluator::eval_node(const Expr& e, const Ctx& ctx) {
  ++ops_;
  switch (e.kind) {
    case Expr::Kind::Int: return Value::integer(e.num);
    case Expr::Kind::Bool: return Value::boolean(e.num != 0);
    case Expr::Kind::Cell: return cell_value(e.cell, ctx);
    case Expr::Kind::Range: return Value::error(ErrorKind::Value);
    case Expr::Kind::Array: return do_array(e, ctx);
    case Expr::Kind::Neg: {
      Value v = eval_node(e.args[0], ctx);
      if (v.is_error()) return v;
      return Value::integer(arith::neg(v.numeric()));
    }
    case Expr::Kind::Binary:
      return arithmetic(e.op, eval_node(e.args[0], ctx), eval_node(e.args[1], ctx));
    case Expr::Kind::Call: break;
  }

  const auto& a = e.args;
  switch (e.fn) {
    case Func::If: {
      Value t = eval_node(a[0], ctx);
      if (t.is_error()) return t;
      if (!t.is_bool()) return Value::error(ErrorKind::Value);
      return eval_node(t.as_bool() ? a[1] : a[2], ctx);
    }
    case Func::IfError: {
      Value v = eval_node(a[0], ctx);
      return v.is_error() ? eval_node(a[1], ctx) : v;
    }
    case Func::Choose: {
      Value idx = eval_node(a[0], ctx);
      if (idx.is_error()) return idx;
      if (!idx.is_int()) return Value::error(ErrorKind::Value);
      Int k = idx.as_int();
      if (k < 1 || k > 29 || k >= static_cast<Int>(a.size())) return Value::error(ErrorKind::Value);
      return eval_node(a[static_cast<std::size_t>(k)], ctx);
    }
    case Func::And:
    case Func::Or: {
      bool acc = e.fn == Func::And;
      for (const auto& arg : a) {
        Value v = eval_node(arg, ctx);
        if (v.is_error()) return v;
        if (e.fn == Func::And) acc = acc && v.numeric() != 0;
        else acc = acc || v.numeric() != 0;
      }
      return Value::boolean(acc);
    }
    case Func::Row:
    case Func::Column: {
      CellAddr at = ctx.placed;
      if (!a.empty()) {
        try {
          at = resolve_ref(a[0].cell, ctx.origin, ctx.placed);
        } catch (const OutOfGridError&) {
          return Value::error(ErrorKind::Ref);
        }
      }
      return Value::integer(e.fn == Func::Row ? at.row : at.col);
    }
    case Func::Match: {
      Value lookup = eval_node(a[0], ctx);
      if (lookup.is_error()) return lookup;
      Value type = eval_node(a[2], ctx);
      if (type.is_error()) return type;
      if (!type.is_int()) return Value::error(ErrorKind::Value);
      int mt = type.as_int() > 0 ? 1 : (type.as_int() < 0 ? -1 : 0);
      Region r;
      try {
        r = a[1].kind == Expr::Kind::Range ? resolve_range(a[1].range, ctx.origin, ctx.placed)
                                           : [&] {
                                               CellAddr c = resolve_ref(a[1].cell, ctx.origin, ctx.placed);
                                               return Region{c.col, c.col, c.row, c.row};
                                             }();
      } catch (const OutOfGridError&) {
        return Value::error(ErrorKind::Ref);
      }
      return do_match(lookup, r, mt, ctx);
    }
    case Func::Index: {
      Region r;
      try {
        r = a[0].kind == Expr::Kind::Range ? resolve_range(a[0].range, ctx.origin, ctx.placed)
                                           : [&] {
                                               CellAddr c = resolve_ref(a[0].cell, ctx.origin, ctx.placed);
                                               return Region{c.col, c.col, c.row, c.row};
                                             }();
      } catch (const OutOfGridError&) {
        return Value::error(ErrorKind::Ref);
      }
      Value v1 = eval_node(a[1], ctx);
      if (v1.is_error()) return v1;
      if (!v1.is_int()) return Value::error(ErrorKind::Value);
      Int second = 1;
      if (a.size() == 3) {
        Value v2 = eval_node(a[2], ctx);
        if (v2.is_error()) return v2;
        if (!v2.is_int()) return Value::error(ErrorKind::Value);
        second = v2.as_int();
      }
      return do_index(r, v1.as_int(), second, a.size() == 3, ctx);
    }
    case Func::Sum: break;
  }
  return Value::error(ErrorKind::Value);
}

Value FormulaEvaluator::do_match(const Value& lookup, const Region& range, int match_type, const Ctx&) {
  Region r = clip(range);
  bool horizontal = r.row_lo == r.row_hi;
  bool vertical = r.col_lo == r.col_hi;
  if (!horizontal && !vertical) return Value::error(ErrorKind::NA);
  std::vector<RangeCell> cells;
  if (horizontal) {
    cells.reserve(static_cast<std::size_t>(std::max<Int>(0, r.width())));
    for (Int c = r.col_lo; c <= r.col_hi; ++c) {
      CellAddr at{c, r.row_lo};
      cells.push_back({src_.value(at), src_.present(at)});
    }
  } else {
    for (Int w = r.row_lo; w <= r.row_hi; ++w) {
      CellAddr at{r.col_lo, w};
      cells.push_back({src_.value(at), src_.present(at)});
    }
  }
  ops_ += cells.size();
  return eval_match(lookup, cells, match_type, &ops_);
}

Value FormulaEvaluator::do_index(const Region& range, Int first, Int second, bool two_d, const Ctx&) {
  Int row_off, col_off;
  bool horizontal = range.row_lo == range.row_hi;
  bool vertical = range.col_lo == range.col_hi;
  if (!two_d && horizontal && !vertical) {
    row_off = 1;
    col_off = first;
  } else {
    row_off = first;
    col_off = second;
  }
  if (row_off < 1 || col_off < 1) return Value::error(ErrorKind::Ref);
  if (range.row_hi != kUnbounded && row_off > range.height()) return Value::error(ErrorKind::Ref);
  if (range.col_hi != kUnbounded && col_off > range.width()) return Value::error(ErrorKind::Ref);
  return src_.value({range.col_lo + col_off - 1, range.row_lo + row_off - 1});
}

Value FormulaEvaluator::eval_positional(const Expr& e, const Ctx& ctx, Int pos, bool horizontal) {
  ++ops_;
  switch (e.kind) {
    case Expr::Kind::Range: {
      Region r;
      try {
        r = resolve_range(e.range, ctx.origin, ctx.placed);
      } catch (const OutOfGridError&) {
        return Value::error(ErrorKind::Ref);
      }
      CellAddr at = horizontal ? CellAddr{r.col_lo + pos, r.row_lo} : CellAddr{r.col_lo, r.row_lo + pos};
      if (r.width() == 1 && r.height() == 1) at = {r.col_lo, r.row_lo};
      return src_.value(at);
    }
    case Expr::Kind::Neg: {
      Value v = eval_positional(e.args[0], ctx, pos, horizontal);
      if (v.is_error()) return v;
      return Value::integer(arith::neg(v.numeric()));
    }
    case Expr::Kind::Binary:
      return arithmetic(e.op, eval_positional(e.args[0], ctx, pos, horizontal),
                        eval_positional(e.args[1], ctx, pos, horizontal));
    default:
      return eval_node(e, ctx);
  }
}

namespace {

void collect_ranges(const Expr& e, std::vector<const RangeRef*>& out) {
  if (e.kind == Expr::Kind::Range) out.push_back(&e.range);
  if (e.kind == Expr::Kind::Call) return;  // scalar context
  for (const auto& a : e.args) collect_ranges(a, out);
}

}  // namespace

Value FormulaEvaluator::do_array(const Expr& array, const Ctx& ctx) {
  const Expr& inner = array.args[0];
  std::vector<const RangeRef*> ranges;
  collect_ranges(inner, ranges);
  Int length = 1;
  bool horizontal = true;
  bool have_axis = false;
  for (const RangeRef* rr : ranges) {
    Region r;
    try {
      r = resolve_range(*rr, ctx.origin, ctx.placed);
    } catch (const OutOfGridError&) {
      return Value::error(ErrorKind::Ref);
    }
    if (r.col_hi == kUnbounded || r.row_hi == kUnbounded) return Value::error(ErrorKind::Value);
    if (r.width() == 1 && r.height() == 1) continue;
    bool h = r.height() == 1;
    bool v = r.width() == 1;
    if (!h && !v) return Value::error(ErrorKind::Value);
    Int len = h ? r.width() : r.height();
    if (have_axis && (h != horizontal || len != length)) return Value::error(ErrorKind::Value);
    have_axis = true;
    horizontal = h;
    length = len;
  }
  Int sum = 0;
  for (Int p = 0; p < length; ++p) {
    Value v = eval_positional(inner, ctx, p, horizontal);
    if (v.is_error()) return v;
    sum = arith::add(sum, v.numeric());
  }
  return Value::integer(sum);
}

Value EvalResult::value(const CellAddr& a) const {
  if (a.col > extent_.col || a.row > extent_.row || a.col < 1 || a.row < 1) return Value::integer(0);
  return values_[index(a)];
}

bool EvalResult::present(const CellAddr& a) const {
  if (a.col > extent_.col || a.row > extent_.row || a.col < 1 || a.row < 1) return false;
  return state_[index(a)] != 0;
}

EvalResult EvalResult::blank(CellAddr extent) {
  EvalResult res;
  res.extent_ = extent;
  std::size_t total = static_cast<std::size_t>(std::max<Int>(0, extent.col) * std::max<Int>(0, extent.row));
  res.values_.assign(total, Value::integer(0));
  res.state_.assign(total, 0);
  return res;
}

void EvalResult::set(const CellAddr& a, const Value& v, bool formula) {
  if (a.col > extent_.col || a.row > extent_.row || a.col < 1 || a.row < 1) throw OutOfGridError("cell " + to_a1(a) + " lies outside the result");
  values_[index(a)] = v;
  state_[index(a)] = formula ? 2 : 1;
}

class SequentialEvaluator {
 public:
  SequentialEvaluator(const Grid& g, const EvalOptions& opts) : g_(g), opts_(opts) {}

  EvalResult run() {
    EvalResult res;
    res.extent_ = g_.extent();
    CellAddr e = res.extent_;
    std::size_t total = static_cast<std::size_t>(std::max<Int>(0, e.col) * std::max<Int>(0, e.row));
    res.values_.assign(total, Value::integer(0));
    res.state_.assign(total, 0);
    for (const auto& [a, v] : g_.source().inputs) {
      if (g_.filled().contains(a)) continue;
      res.values_[res.index(a)] = Value::integer(v);
      res.state_[res.index(a)] = 1;
    }
    cells_ = g_.formula_cells();
    formula_.assign(total, nullptr);
    origin_.assign(total, CellAddr{});
    row_count_.assign(static_cast<std::size_t>(e.row + 1), 0);
    row_done_.assign(static_cast<std::size_t>(e.row + 1), 0);
    for (const auto& a : cells_) {
      CellAddr o;
      formula_[res.index(a)] = g_.formula_ptr(a, &o);
      origin_[res.index(a)] = o;
      res.state_[res.index(a)] = 2;
      ++row_count_[static_cast<std::size_t>(a.row)];
    }
    mark_.assign(total, 0);
    res_ = &res;
    order(res);
    FormulaEvaluator ev(res);
    for (const auto& a : res.order) {
      std::size_t i = res.index(a);
      res.values_[i] = ev.eval(*formula_[i], origin_[i], a);
    }
    for (const auto& a : g_.output_cells()) res.output.push_back(res.value(a));
    res.op_count = ev.ops() + edges_;
    return res;
  }

 private:
  const Grid& g_;
  EvalOptions opts_;
  std::vector<CellAddr> cells_;
  std::vector<const Expr*> formula_;
  std::vector<CellAddr> origin_;
  std::vector<Int> row_count_, row_done_;
  std::vector<std::uint8_t> mark_;  // 0 new, 1 on stack, 2 done
  EvalResult* res_ = nullptr;
  std::uint64_t edges_ = 0;

  bool is_formula(const CellAddr& a) const {
    const CellAddr& e = res_->extent_;
    if (a.col < 1 || a.row < 1 || a.col > e.col || a.row > e.row) return false;
    return formula_[res_->index(a)] != nullptr;
  }

  void deps_of(const CellAddr& a, std::vector<CellAddr>& out) {
    out.clear();
    std::size_t i = res_->index(a);
    const CellAddr& o = origin_[i];
    const CellAddr& e = res_->extent_;
    for (const auto& ref : references_of(*formula_[i])) {
      if (ref.address_only) continue;
      if (!ref.is_range) {
        try {
          CellAddr t = resolve_ref(ref.cell, o, a);
          ++edges_;
          if (is_formula(t) && mark_[res_->index(t)] != 2) out.push_back(t);
        } catch (const OutOfGridError&) {
        }
        continue;
      }
      Region r;
      try {
        r = resolve_range(ref.range, o, a);
      } catch (const OutOfGridError&) {
        continue;
      }
      Int rhi = std::min(r.row_hi, e.row), chi = std::min(r.col_hi, e.col);
      for (Int row = r.row_lo; row <= rhi; ++row) {
        ++edges_;
        if (row_done_[static_cast<std::size_t>(row)] == row_count_[static_cast<std::size_t>(row)]) continue;
        for (Int col = r.col_lo; col <= chi; ++col) {
          ++edges_;
          CellAddr t{col, row};
          if (is_formula(t) && mark_[res_->index(t)] != 2) out.push_back(t);
        }
      }
    }
  }

  void order(EvalResult& res) {
    struct Frame {
      CellAddr at;
      std::vector<CellAddr> deps;
      std::size_t next = 0;
    };
    std::vector<Frame> stack;
    auto visit_root = [&](const CellAddr& root) {
      if (mark_[res.index(root)] != 0) return;
      stack.push_back({root, {}, 0});
      mark_[res.index(root)] = 1;
      deps_of(root, stack.back().deps);
      while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.deps.size()) {
          CellAddr d = f.deps[f.next++];
          std::uint8_t m = mark_[res.index(d)];
          if (m == 2) continue;
          if (m == 1) throw CircularReferenceError("circular reference through " + to_a1(d));
          mark_[res.index(d)] = 1;
          stack.push_back({d, {}, 0});
          deps_of(d, stack.back().deps);
          continue;
        }
        mark_[res.index(f.at)] = 2;
        ++row_done_[static_cast<std::size_t>(f.at.row)];
        res.order.push_back(f.at);
        stack.pop_back();
      }
    };
    if (opts_.reverse_tiebreak) {
      for (auto it = cells_.rbegin(); it != cells_.rend(); ++it) visit_root(*it);
    } else {
      for (const auto& a : cells_) visit_root(a);
    }
  }
};

EvalResult evaluate(const Grid& g, const EvalOptions& opts) { return SequentialEvaluator(g, opts).run(); }

}  // namespace sheetpram
