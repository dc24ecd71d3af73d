#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "compile_asm.hpp"
#include "sheetpram/bridge.hpp"
#include "sheetpram/classify.hpp"

namespace sheetpram {

namespace {

using detail::Block;
using detail::if_lt;
using detail::Labels;
using detail::nops;
using detail::when_k_equals;
using detail::when_s_at_most;

std::string num(Int v) { return std::to_string(v); }

// Row of a reference: an input row (absolute) or `back` rows above the cell.
struct RowSpec {
  bool absolute = false;
  Int v = 0;
};

// Column end of a reference: absolute column, or offset from the cell.
struct ColSpec {
  bool absolute = false;
  Int v = 0;
};

enum class Ty { Int, Bool };

[[noreturn]] void refuse(const std::string& why) { throw NotCompilableError("not compilable: " + why); }

// Memory map. Rows window: slot q, column x at q*W + x. Join records: field
// f of record q at jb + f*n + q. Per-processor planes: plane x of processor
// s at pb + x*A + s.
struct Layout {
  Int c = 0, r = 0, w = 0, h = 0, r0 = 0;
  Int depth = 0;  // rows looked back
  Int W = 0;      // stored row width
  Int n = 0;      // join records, 0 without lookups
  Int A = 0;      // active processors
  Int jb = 0, pb = 0;

  Int slots() const { return depth + 1; }
  Int field(Int f) const { return jb + f * n; }
  Int plane(Int x) const { return pb + x * A; }
  // I layout: values of rows 1..r0-1, then their presence flags.
  Int in_value(Int row, Int col) const { return 2 + (row - 1) * W + col - 1; }
  Int in_present(Int row, Int col) const { return in_value(row, col) + (r0 - 1) * W; }
};

enum Field : Int { kK1 = 0, kK2 = 1, kPl = 2, kTag = 3 };
// scan buffer b, part g (0 has, 1 key, 2 payload)
Int scan_field(Int b, Int g) { return 4 + 3 * b + g; }

enum Plane : Int { kRowP = 0, kTypeP, kSlo, kSdir, kSgt, kSlt, kOwnH, kOwnK, kOwnP, kNbH, kNbK, kNbP, kFirstTemp };

RowSpec row_spec(const CellRef& ref, const CellAddr& origin) {
  if (ref.row_absolute) return {true, ref.addr.row};
  return {false, origin.row - ref.addr.row};
}

ColSpec col_spec(const CellRef& ref, const CellAddr& origin) {
  if (ref.col_absolute) return {true, ref.addr.col};
  return {false, ref.addr.col - origin.col};
}

struct Analysis {
  Layout lay;
  bool lookups = false;
  Int max_right = 0;   // largest positive column offset
  Int max_abs_col = 0;
};

class Checker {
 public:
  explicit Checker(Analysis& an) : an_(an) {}

  void row(const RowSpec& rs) {
    if (rs.absolute) {
      if (rs.v >= an_.lay.r0) refuse("absolute row reference into the computing rows");
    } else {
      if (rs.v < 1) refuse("reference not strictly above");
      an_.lay.depth = std::max(an_.lay.depth, rs.v);
    }
  }
  void col(const ColSpec& cs) {
    if (cs.absolute) an_.max_abs_col = std::max(an_.max_abs_col, cs.v);
    else an_.max_right = std::max(an_.max_right, cs.v);
  }

  void range(const RangeRef& rr, const CellAddr& origin) {
    if (rr.shape == RangeRef::Shape::WholeColumns) refuse("column range");
    RowSpec a = row_spec(rr.from, origin), b = row_spec(rr.to, origin);
    if (a.absolute != b.absolute || a.v != b.v) refuse("range spanning several rows");
    row(a);
    if (rr.shape == RangeRef::Shape::Cells) {
      col(col_spec(rr.from, origin));
      col(col_spec(rr.to, origin));
    }
  }

  Ty type(const Expr& e, const CellAddr& origin) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::Int: return Ty::Int;
      case K::Bool: return Ty::Bool;
      case K::Cell: {
        RowSpec rs = row_spec(e.cell, origin);
        ColSpec cs = col_spec(e.cell, origin);
        row(rs);
        if (!rs.absolute && cs.absolute) refuse("absolute column into the computing rows");
        col(cs);
        return Ty::Int;
      }
      case K::Range: refuse("bare range");
      case K::Array: refuse("array formula");
      case K::Neg: type(e.args[0], origin); return Ty::Int;
      case K::Binary: {
        Ty a = type(e.args[0], origin), b = type(e.args[1], origin);
        if (!is_comparison(e.op)) return Ty::Int;
        if (a != b) refuse("comparison between a number and a Boolean");
        return Ty::Bool;
      }
      case K::Call: return call(e, origin);
    }
    refuse("unknown node");
  }

 private:
  Ty call(const Expr& e, const CellAddr& origin) {
    switch (e.fn) {
      case Func::Row:
      case Func::Column:
        if (!e.args.empty()) refuse("ROW/COLUMN with an argument");
        return Ty::Int;
      case Func::If: {
        if (e.args.size() != 3) refuse("IF needs three arguments");
        if (type(e.args[0], origin) != Ty::Bool) refuse("IF test is not Boolean");
        Ty a = type(e.args[1], origin), b = type(e.args[2], origin);
        if (a != b) refuse("IF branches of different types");
        return a;
      }
      case Func::IfError: {
        if (e.args.size() != 2) refuse("IFERROR needs two arguments");
        const Expr& x = e.args[0];
        if (x.kind != Expr::Kind::Call || (x.fn != Func::Match && x.fn != Func::Index))
          refuse("IFERROR around something other than MATCH or INDEX");
        type(x, origin);
        if (type(e.args[1], origin) != Ty::Int) refuse("IFERROR fallback is not a number");
        return Ty::Int;
      }
      case Func::Choose: {
        if (type(e.args[0], origin) != Ty::Int) refuse("CHOOSE index is not a number");
        Ty first = type(e.args[1], origin);
        for (std::size_t x = 2; x < e.args.size(); ++x)
          if (type(e.args[x], origin) != first) refuse("CHOOSE options of different types");
        return first;
      }
      case Func::And:
      case Func::Or:
        for (const auto& a : e.args) type(a, origin);
        return Ty::Bool;
      case Func::Match: {
        an_.lookups = true;
        if (e.args.size() != 3 || e.args[2].kind != Expr::Kind::Int || e.args[2].num != 0)
          refuse("MATCH without literal match type 0");
        if (type(e.args[0], origin) != Ty::Int) refuse("MATCH key is not a number");
        if (e.args[1].kind != Expr::Kind::Range) refuse("MATCH without a range");
        range(e.args[1].range, origin);
        return Ty::Int;
      }
      case Func::Index: {
        an_.lookups = true;
        if (e.args[0].kind != Expr::Kind::Range) refuse("INDEX without a range");
        range(e.args[0].range, origin);
        if (e.args.size() == 3 && !(e.args[1].kind == Expr::Kind::Int && e.args[1].num == 1))
          refuse("INDEX row argument other than 1");
        if (type(e.args.back(), origin) != Ty::Int) refuse("INDEX position is not a number");
        return Ty::Int;
      }
      case Func::Sum: refuse("SUM outside array formulas");
    }
    refuse("unknown function");
  }

  Analysis& an_;
};

Int pow2_at_least(Int x) {
  Int n = 1;
  while (n < x) n *= 2;
  return n;
}

Analysis analyse(const Template& t, Int c, Int r) {
  t.validate();
  if (c < 1 || r < 1) throw DimensionError("fill dimensions must be positive");
  Analysis an;
  Layout& lay = an.lay;
  lay.c = c;
  lay.r = r;
  lay.w = t.computing.width();
  lay.h = t.computing.height();
  lay.r0 = t.computing.row_lo;
  if (t.computing.col_lo != 1) refuse("computing part must start in column A");
  if (c < lay.w || r < lay.h) throw DimensionError("fill is smaller than the computing part");
  Classification cl = classify_template(t);
  if (!cl.row_organized() || !cl.row_directed()) refuse("template must be row-organized and row-directed");
  for (Int y = t.computing.row_lo; y <= t.computing.row_hi; ++y)
    for (Int x = t.computing.col_lo; x <= t.computing.col_hi; ++x)
      if (!t.formulas.count({x, y})) refuse("computing part must be full of formulas");
  Int max_in_col = 0;
  for (const auto& [a, v] : t.inputs) {
    if (a.row >= lay.r0) refuse("input cell at or below the computing part");
    max_in_col = std::max(max_in_col, a.col);
  }
  Checker chk(an);
  for (const auto& [a, f] : t.formulas)
    if (chk.type(*f, a) != Ty::Int) refuse("formula at " + to_a1(a) + " is not numeric");
  lay.W = std::max({c + an.max_right, an.max_abs_col, max_in_col, Int{1}});
  lay.n = an.lookups ? pow2_at_least(lay.W + c) : 0;
  lay.A = std::max(c, lay.n);
  lay.jb = lay.slots() * lay.W;
  lay.pb = lay.jb + 10 * lay.n;
  return an;
}


class Gen {
 public:
  Gen(const Template& t, const Layout& lay) : t_(t), L(lay) {}

  // Whole program; sets steps().
  Block program();
  Int planes() const { return planes_; }
  Int steps() const { return steps_; }

 private:
  struct Lookup {
    Int key = 0, lo = 0, hi = 0, val = 0, ok = 0;
  };

  Int alloc() {
    Int x = kFirstTemp;
    while (used_.count(x)) ++x;
    used_.insert(x);
    planes_ = std::max(planes_, x + 1);
    return x;
  }
  void release(Int x) {
    if (!pinned_.count(x)) used_.erase(x);
  }

  std::string pa(Int plane) const { return "s + " + num(L.plane(plane)); }
  Block load(Int plane) const {
    Block b;
    b << "i := " + pa(plane) << "k := M[i]";
    return b;
  }
  Block store(Int plane) const {
    Block b;
    b << "i := " + pa(plane) << "M[i] := k";
    return b;
  }
  Block set_plane(Int plane, const std::string& v) const {
    Block b;
    b << "i := " + pa(plane) << "M[i] := " + v;
    return b;
  }
  // own record field f (record index s + offset)
  Block set_field(Int f, Int offset, const std::string& v) const {
    Block b;
    b << "i := s + " + num(L.field(f) + offset) << "M[i] := " + v;
    return b;
  }
  // k := slot base (slot * W) of row k
  Block slot_of_row() const {
    Block b;
    b << "i := k / " + num(L.slots()) << "i := i * " + num(L.slots()) << "k := k - i" << "k := k * " + num(L.W);
    return b;
  }
  Block k_from(const std::string& v) const {
    Block b;
    b << "k := " + v;
    return b;
  }
  // k := 1 if M[i] = M[j] else 0
  Block k_equal() { return if_lt(lab_, "M[i]", "M[j]", k_from("0"), if_lt(lab_, "M[j]", "M[i]", k_from("0"), k_from("1"))); }
  Block typed(Int tx, Block code) {
    Block b = load(kTypeP);
    return b + when_k_equals(lab_, tx, std::move(code));
  }

  Block read_cell(const RowSpec& rs, const ColSpec& cs);
  Int gen(const Expr& e, Block& b);
  Int gen_call(const Expr& e, Block& b);
  void collect(const Expr& e, std::vector<const Expr*>& out) const;
  Block lookup(const Expr& e, Int tx, const CellAddr& origin);
  Block data_records(const Expr& e, const CellAddr& origin);
  Block sort();
  Block scan_and_deliver(const Lookup& lk);
  Block round(Int dy);

  const Template& t_;
  const Layout& L;
  Labels lab_;
  std::set<Int> used_, pinned_;
  std::map<const Expr*, Lookup> lookups_;
  CellAddr origin_;
  Int planes_ = kFirstTemp;
  Int steps_ = 0;
  Int final_buffer_ = 0;
};

Block Gen::read_cell(const RowSpec& rs, const ColSpec& cs) {
  Block zero = k_from("0");
  auto guard_col = [&](Block b) {
    if (cs.absolute || cs.v >= 0) return b;
    return if_lt(lab_, "s", num(1 - cs.v), zero, std::move(b));
  };
  Block b;
  if (rs.absolute) {
    Block in;
    if (cs.absolute) in << "j := " + num(L.in_value(rs.v, cs.v)) << "k := I[j]";
    else in << "j := s + " + num(L.in_value(rs.v, 1) - 1 + cs.v) << "k := I[j]";
    return guard_col(std::move(in));
  }
  b << "i := " + pa(kRowP) << "k := M[i]" << "k := k - " + num(rs.v);
  Block in;
  in << "j := k * " + num(L.W) << "j := j + s" << "j := j + " + num(1 - L.W + cs.v) << "k := I[j]";
  Block input = if_lt(lab_, "k", "1", zero, guard_col(std::move(in)));
  Block comp = slot_of_row();
  comp << "k := k + s" << "k := k + " + num(cs.v) << "k := M[k]";
  b += if_lt(lab_, "k", num(L.r0), std::move(input), guard_col(std::move(comp)));
  return b;
}

Int Gen::gen(const Expr& e, Block& b) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Int:
    case K::Bool: {
      Int t = alloc();
      b += set_plane(t, num(e.num));
      return t;
    }
    case K::Cell: {
      Int t = alloc();
      b += read_cell(row_spec(e.cell, origin_), col_spec(e.cell, origin_));
      b += store(t);
      return t;
    }
    case K::Neg: {
      Int x = gen(e.args[0], b);
      release(x);
      Int t = alloc();
      b << "i := " + pa(x) << "k := 0 - M[i]";
      b += store(t);
      return t;
    }
    case K::Binary: {
      Int x = gen(e.args[0], b), y = gen(e.args[1], b);
      release(x);
      release(y);
      Int t = alloc();
      b << "i := " + pa(x) << "j := " + pa(y);
      switch (e.op) {
        case BinOp::Add: b << "k := M[i] + M[j]"; break;
        case BinOp::Sub: b << "k := M[i] - M[j]"; break;
        case BinOp::Mul: b << "k := M[i] * M[j]"; break;
        case BinOp::Div: {
          Block div = k_from("M[i] / M[j]");
          b += if_lt(lab_, "M[j]", "0", div, if_lt(lab_, "0", "M[j]", div, k_from("0")));
          break;
        }
        case BinOp::Lt: b += if_lt(lab_, "M[i]", "M[j]", k_from("1"), k_from("0")); break;
        case BinOp::Gt: b += if_lt(lab_, "M[j]", "M[i]", k_from("1"), k_from("0")); break;
        case BinOp::Le: b += if_lt(lab_, "M[j]", "M[i]", k_from("0"), k_from("1")); break;
        case BinOp::Ge: b += if_lt(lab_, "M[i]", "M[j]", k_from("0"), k_from("1")); break;
        case BinOp::Eq: b += k_equal(); break;
        case BinOp::Ne: b += k_equal(); b << "k := 1 - k"; break;
      }
      b += store(t);
      return t;
    }
    case K::Call: return gen_call(e, b);
    case K::Range:
    case K::Array: break;
  }
  refuse("unexpected node");
}

Int Gen::gen_call(const Expr& e, Block& b) {
  // res := y + flag * (x - y)
  auto select = [&](Int flag, Int x, Int y, Int t) {
    b << "i := " + pa(x) << "j := " + pa(y) << "k := M[i] - M[j]" << "i := " + pa(flag) << "k := k * M[i]"
      << "k := k + M[j]";
    b += store(t);
  };
  // plane t := 1 if plane x is nonzero
  auto truth = [&](Int x, Int t) {
    b << "i := " + pa(x);
    b += if_lt(lab_, "M[i]", "0", k_from("1"), if_lt(lab_, "0", "M[i]", k_from("1"), k_from("0")));
    b += store(t);
  };
  switch (e.fn) {
    case Func::Row: {
      Int t = alloc();
      b += load(kRowP);
      b += store(t);
      return t;
    }
    case Func::Column: {
      Int t = alloc();
      b += set_plane(t, "s");
      return t;
    }
    case Func::If: {
      Int c = gen(e.args[0], b), x = gen(e.args[1], b), y = gen(e.args[2], b);
      release(c);
      release(x);
      release(y);
      Int t = alloc();
      select(c, x, y, t);
      return t;
    }
    case Func::IfError: {
      const Lookup& lk = lookups_.at(&e.args[0]);
      Int y = gen(e.args[1], b);
      release(y);
      Int t = alloc();
      select(lk.ok, lk.val, y, t);
      return t;
    }
    case Func::Choose: {
      Int idx = gen(e.args[0], b);
      std::vector<Int> opts;
      for (std::size_t x = 1; x < e.args.size(); ++x) opts.push_back(gen(e.args[x], b));
      Int t = alloc();
      release(idx);
      for (Int o : opts) release(o);
      b += set_plane(t, "0");
      for (std::size_t x = 0; x < opts.size(); ++x) {
        std::string want = num(static_cast<Int>(x) + 1);
        b << "j := " + pa(idx);
        b += if_lt(lab_, "M[j]", want, k_from("0"), if_lt(lab_, want, "M[j]", k_from("0"), k_from("1")));
        b << "i := " + pa(opts[x]) << "k := k * M[i]" << "i := " + pa(t) << "k := k + M[i]" << "M[i] := k";
      }
      return t;
    }
    case Func::And:
    case Func::Or: {
      bool is_and = e.fn == Func::And;
      Int t = alloc();
      b += set_plane(t, "1");
      for (const auto& a : e.args) {
        Int x = gen(a, b);
        Int f = alloc();
        truth(x, f);
        release(x);
        release(f);
        b << "i := " + pa(f);
        if (is_and) b << "k := M[i]";
        else b << "k := 1 - M[i]";
        b << "i := " + pa(t) << "k := k * M[i]" << "M[i] := k";
      }
      if (!is_and) b << "i := " + pa(t) << "k := 1 - M[i]" << "M[i] := k";
      return t;
    }
    case Func::Match:
    case Func::Index: return lookups_.at(&e).val;
    case Func::Sum: break;
  }
  refuse("unexpected function");
}

void Gen::collect(const Expr& e, std::vector<const Expr*>& out) const {
  for (const auto& a : e.args) collect(a, out);
  if (e.kind == Expr::Kind::Call && (e.fn == Func::Match || e.fn == Func::Index)) out.push_back(&e);
}

Block Gen::data_records(const Expr& e, const CellAddr& origin) {
  bool match = e.fn == Func::Match;
  const RangeRef& rr = (match ? e.args[1] : e.args[0]).range;
  RowSpec rs = row_spec(rr.from, origin);
  const std::string big = num(std::numeric_limits<Int>::max());
  Block pad = set_field(kK1, 0, big) + set_field(kK2, 0, big) + set_field(kPl, 0, "0") + set_field(kTag, 0, "0");

  // value of this processor's position into kOwnK, presence into kOwnH
  Block fetch;
  if (rs.absolute) {
    fetch << "j := s + " + num(L.in_value(rs.v, 1) - 1) << "k := I[j]";
    fetch += store(kOwnK);
    fetch << "j := s + " + num(L.in_present(rs.v, 1) - 1) << "k := I[j]";
    fetch += store(kOwnH);
  } else {
    fetch << "i := " + pa(kRowP) << "k := M[i]" << "k := k - " + num(rs.v);
    Block none = set_plane(kOwnK, "0") + set_plane(kOwnH, "0");
    Block in;
    in << "j := k * " + num(L.W) << "j := j + s" << "j := j + " + num(1 - L.W) << "i := I[j]"
       << "j := j + " + num((L.r0 - 1) * L.W) << "j := I[j]" << "k := " + pa(kOwnK) << "M[k] := i"
       << "k := " + pa(kOwnH) << "M[k] := j";
    Block comp = slot_of_row();
    comp << "k := k + s" << "k := M[k]";
    comp += store(kOwnK);
    comp += if_lt(lab_, num(L.c), "s", set_plane(kOwnH, "0"), set_plane(kOwnH, "1"));
    fetch += if_lt(lab_, "k", num(L.r0), if_lt(lab_, "k", "1", none, in), comp);
  }

  Block write;
  if (match) {
    Block present = load(kOwnK);
    present << "i := s + " + num(L.field(kK1)) << "M[i] := k" << "k := s * 2" << "k := k + 1"
            << "i := s + " + num(L.field(kK2)) << "M[i] := k";
    present += set_field(kPl, 0, "s") + set_field(kTag, 0, "1");
    write = load(kOwnH) + if_lt(lab_, "0", "k", present, pad);
  } else {
    write = set_field(kK1, 0, "s") + set_field(kK2, 0, "1") + load(kOwnK);
    write << "i := s + " + num(L.field(kPl)) << "M[i] := k";
    write += set_field(kTag, 0, "1");
  }
  return if_lt(lab_, num(L.W), "s", pad, fetch + write);
}

Block Gen::sort() {
  Block b;
  auto pair = [&](Int f, Int stride) {
    Block x;
    x << "i := " + pa(kSlo) << "i := M[i]" << "i := i + " + num(L.field(f) + 1) << "j := i + " + num(stride);
    return x;
  };
  auto bit = [&](const std::string& u, const std::string& v) { return if_lt(lab_, u, v, k_from("1"), k_from("0")); };
  for (Int size = 2; size <= L.n; size *= 2) {
    for (Int stride = size / 2; stride >= 1; stride /= 2) {
      Block st;
      st << "k := s - 1" << "i := k / " + num(stride) << "j := i * " + num(stride) << "k := k - j"
         << "i := i * " + num(2 * stride) << "k := k + i";
      st += store(kSlo);
      st << "i := k / " + num(size) << "j := i / 2" << "j := j * 2" << "i := i - j" << "j := " + pa(kSdir) << "M[j] := i";
      // lower record greater than upper, then the reverse
      st += pair(kK1, stride);
      st += if_lt(lab_, "M[j]", "M[i]", k_from("1"),
                  if_lt(lab_, "M[i]", "M[j]", k_from("0"), pair(kK2, stride) + bit("M[j]", "M[i]")));
      st += store(kSgt);
      st += pair(kK1, stride);
      st += if_lt(lab_, "M[i]", "M[j]", k_from("1"),
                  if_lt(lab_, "M[j]", "M[i]", k_from("0"), pair(kK2, stride) + bit("M[i]", "M[j]")));
      st += store(kSlt);
      // ascending pairs swap when greater, descending ones when smaller
      st << "i := " + pa(kSlt) << "k := M[i]" << "j := " + pa(kSgt) << "k := k - M[j]" << "i := " + pa(kSdir)
         << "k := k * M[i]" << "k := k + M[j]";
      Block swap;
      for (Int f = kK1; f <= kTag; ++f) {
        swap += pair(f, stride);
        swap << "k := M[i]" << "M[i] := M[j]" << "M[j] := k";
      }
      st += if_lt(lab_, "0", "k", swap, Block{});
      b += when_s_at_most(lab_, L.n / 2, st);
    }
  }
  return b;
}

Block Gen::scan_and_deliver(const Lookup& lk) {
  auto at = [&](Int f) { return "s + " + num(L.field(f)); };
  Block init;
  init << "i := " + at(kTag) << "k := M[i]";
  init += if_lt(lab_, "k", "1", k_from("0"), if_lt(lab_, "1", "k", k_from("0"), k_from("1")));
  init << "i := " + at(scan_field(0, 0)) << "M[i] := k";
  init << "i := " + at(kK1) << "k := M[i]" << "i := " + at(scan_field(0, 1)) << "M[i] := k";
  init << "i := " + at(kPl) << "k := M[i]" << "i := " + at(scan_field(0, 2)) << "M[i] := k";
  Block b = when_s_at_most(lab_, L.n, init);

  // after doubling step d each entry holds the first data record in [q, q + 2d)
  const Int own[] = {kOwnH, kOwnK, kOwnP}, nb[] = {kNbH, kNbK, kNbP};
  Int cur = 0;
  for (Int d = 1; d < L.n; d *= 2) {
    Block st;
    for (Int g = 0; g < 3; ++g) {
      st << "i := " + at(scan_field(cur, g)) << "k := M[i]";
      st += store(own[g]);
    }
    st += set_plane(kNbH, "0");
    Block from;
    for (Int g = 0; g < 3; ++g) {
      from << "i := s + " + num(L.field(scan_field(cur, g)) + d) << "k := M[i]";
      from += store(nb[g]);
    }
    st += when_s_at_most(lab_, L.n - d, from);
    for (Int g = 0; g < 3; ++g)
      st << "i := " + pa(own[g]) << "j := " + pa(nb[g]) << "k := M[i] - M[j]" << "i := " + pa(kOwnH) << "k := k * M[i]"
         << "k := k + M[j]" << "i := " + at(scan_field(1 - cur, g)) << "M[i] := k";
    b += when_s_at_most(lab_, L.n, st);
    cur = 1 - cur;
  }

  Block q;
  q << "i := " + at(scan_field(cur, 1)) << "j := " + at(kK1);
  q += k_equal();
  q << "i := " + at(scan_field(cur, 0)) << "k := k * M[i]";
  q << "i := " + at(kPl) << "i := M[i]" << "i := i + " + num(L.plane(lk.ok)) << "M[i] := k";
  q << "i := " + at(scan_field(cur, 2)) << "k := M[i]" << "j := " + at(kPl) << "j := M[j]"
    << "j := j + " + num(L.plane(lk.val)) << "M[j] := k";
  Block dl;
  dl << "i := " + at(kTag) << "k := M[i]";
  dl += when_k_equals(lab_, 2, q);
  b += when_s_at_most(lab_, L.n, dl);
  return b;
}

Block Gen::lookup(const Expr& e, Int tx, const CellAddr& origin) {
  const Lookup& lk = lookups_.at(&e);
  bool match = e.fn == Func::Match;
  const RangeRef& rr = (match ? e.args[1] : e.args[0]).range;
  Block b = data_records(e, origin);

  Block q;
  Int x = gen(match ? e.args[0] : e.args.back(), q);
  q << "i := " + pa(x) << "k := M[i]";
  q += store(lk.key);
  release(x);
  if (rr.shape == RangeRef::Shape::WholeRows) {
    // positions past the stored width are empty cells
    q += set_plane(lk.lo, "1") + set_plane(lk.hi, match ? num(L.W) : num(std::numeric_limits<Int>::max()));
  } else {
    auto end = [&](const CellRef& ref, Int plane) {
      ColSpec cs = col_spec(ref, origin);
      if (cs.absolute) {
        q += set_plane(plane, num(cs.v));
        return;
      }
      q << "i := " + pa(plane) << "k := s + " + num(cs.v) << "M[i] := k";
    };
    end(rr.from, lk.lo);
    end(rr.to, lk.hi);
    Block swap;
    swap << "k := M[i]" << "M[i] := M[j]" << "M[j] := k";
    q << "i := " + pa(lk.lo) << "j := " + pa(lk.hi);
    q += if_lt(lab_, "M[j]", "M[i]", swap, Block{});
  }
  if (match) {
    q += load(lk.key);
    q << "i := s + " + num(L.field(kK1) + L.W) << "M[i] := k";
    q += load(lk.lo);
    q << "k := k * 2" << "i := s + " + num(L.field(kK2) + L.W) << "M[i] := k";
  } else {
    q << "i := " + pa(lk.lo) << "j := " + pa(lk.key) << "k := M[i] + M[j]" << "k := k - 1" << "M[j] := k"
      << "i := s + " + num(L.field(kK1) + L.W) << "M[i] := k";
    q += set_field(kK2, L.W, "0");
  }
  q += set_field(kPl, L.W, "s") + set_field(kTag, L.W, "2");
  b += typed(tx, q);

  b += sort();
  b += scan_and_deliver(lk);

  Block post;
  if (match) {
    post << "i := " + pa(lk.val) << "j := " + pa(lk.hi);
    post += if_lt(lab_, "M[j]", "M[i]", k_from("0"), k_from("1"));
    post << "i := " + pa(lk.ok) << "k := k * M[i]" << "M[i] := k";
    post << "i := " + pa(lk.val) << "j := " + pa(lk.lo) << "k := M[i] - M[j]" << "k := k + 1" << "M[i] := k";
  } else {
    Block low;
    low << "j := " + pa(lk.lo);
    low += if_lt(lab_, "M[i]", "M[j]", k_from("0"), k_from("1"));
    post << "i := " + pa(lk.ok) << "k := M[i]" << "i := " + pa(lk.val) << "k := k * M[i]" << "M[i] := k";
    post << "i := " + pa(lk.key) << "j := " + pa(lk.hi);
    post += if_lt(lab_, "M[j]", "M[i]", k_from("0"), low);
    post += store(lk.ok);
  }
  b += typed(tx, post);
  return b;
}

Block Gen::round(Int dy) {
  Block b;
  for (Int tx = 0; tx < L.w; ++tx) {
    CellAddr origin{1 + tx, L.r0 + dy};
    origin_ = origin;
    const Expr& f = *t_.formulas.at(origin);
    std::vector<const Expr*> ls;
    collect(f, ls);
    lookups_.clear();
    for (const Expr* e : ls) {
      Lookup lk{alloc(), alloc(), alloc(), alloc(), alloc()};
      pinned_.insert({lk.key, lk.lo, lk.hi, lk.val, lk.ok});
      lookups_[e] = lk;
    }
    for (const Expr* e : ls) b += lookup(*e, tx, origin);
    Block ev;
    Int v = gen(f, ev);
    ev += load(kRowP);
    ev += slot_of_row();
    ev << "k := k + s" << "j := " + pa(v) << "j := M[j]" << "M[k] := j";
    b += typed(tx, ev);
    pinned_.clear();
    used_.clear();
  }
  return b;
}

Block Gen::program() {
  Block p;
  p << "if " + num(L.A) + " < s goto @HALT";
  Block init;
  init << "k := s - 1" << "j := k / " + num(L.w) << "j := j * " + num(L.w) << "k := k - j";
  init += if_lt(lab_, num(L.c), "s", k_from(num(L.w)), Block{});
  init += store(kTypeP);
  init += set_plane(kRowP, num(L.r0));
  p += init;

  std::vector<Block> bodies;
  for (Int dy = 0; dy < L.h; ++dy) bodies.push_back(round(dy));

  p += detail::mark("@LOOP");
  p << "i := " + pa(kRowP) << "k := M[i]" << "k := k - " + num(L.r0) << "j := k / " + num(L.h) << "j := j * " + num(L.h)
    << "k := k - j";
  for (Int d = 0; d + 1 < L.h; ++d) p << "if k < " + num(d + 1) + " goto @R" + num(d);
  p << "if 0 < 1 goto @R" + num(L.h - 1);
  for (Int d = 0; d < L.h; ++d) {
    p += detail::mark("@R" + num(d));
    p += bodies[static_cast<std::size_t>(d)];
    p << "if 0 < 1 goto @NEXT";
  }
  p += detail::mark("@NEXT");
  p << "i := " + pa(kRowP) << "k := M[i]" << "k := k + 1" << "M[i] := k" << "if k < " + num(L.r0 + L.r) + " goto @LOOP";
  p += detail::mark("@HALT");
  p << "k := k";

  steps_ = 1 + init.steps + 1;
  for (Int row = 0; row < L.r; ++row) {
    Int dy = row % L.h;
    Int dispatch = dy + 1 < L.h ? dy + 1 : L.h;
    steps_ += 6 + dispatch + bodies[static_cast<std::size_t>(dy)].steps + 1 + 5;
  }
  return p;
}

}  // namespace

CompiledProgram compile_to_pram(const Template& t, Int c, Int r) {
  Analysis an = analyse(t, c, r);
  const Layout& L = an.lay;
  Gen g(t, L);
  Block code = g.program();
  CompiledProgram cp;
  cp.program = detail::assemble(code);
  cp.m = L.pb + g.planes() * L.A;
  cp.p = cp.m;
  std::vector<Int> payload(static_cast<std::size_t>(2 * (L.r0 - 1) * L.W), 0);
  for (const auto& [a, v] : t.inputs) {
    payload[static_cast<std::size_t>(L.in_value(a.row, a.col) - 2)] = v;
    payload[static_cast<std::size_t>(L.in_present(a.row, a.col) - 2)] = 1;
  }
  cp.input = make_input(payload);
  cp.step_budget = g.steps();
  cp.out_base = ((L.r0 + r - 1) % L.slots()) * L.W;
  cp.cols = c;
  cp.rows = r;
  return cp;
}

std::vector<Int> compiled_outputs(const CompiledProgram& cp, const std::vector<Int>& shared) {
  std::vector<Int> out;
  for (Int s = 1; s <= cp.cols; ++s) out.push_back(shared.at(static_cast<std::size_t>(cp.out_base + s - 1)));
  return out;
}

RoundtripReport roundtrip_check(const Template& t, Int c, Int r, Int sheet_cell_limit) {
  RoundtripReport rep;
  CompiledProgram cp = compile_to_pram(t, c, r);

  EvalResult ev = evaluate(fill_template(t, c, r));
  bool contract = true;
  for (Int col = 1; col <= c; ++col) {
    CellAddr a{col, t.computing.row_lo + r - 1};
    Value v = ev.value(a);
    if (!v.is_int()) {
      if (contract) rep.note = "sequential evaluation gives " + v.to_string() + " at " + to_a1(a);
      contract = false;
      rep.expected.push_back(0);
    } else {
      rep.expected.push_back(v.as_int());
    }
  }

  Pram machine(cp.program, cp.input, cp.p, cp.m);
  ErewChecker erew;
  while (!machine.state().all_halted() && machine.state().time <= cp.step_budget) {
    erew.observe(machine.state().time, machine.next_accesses());
    machine.step();
  }
  rep.steps = machine.state().time;
  rep.erew_clean = erew.report().clean;
  rep.rows_used = 10 * rep.steps + 10;
  rep.overhead_factor = static_cast<double>(rep.rows_used) / static_cast<double>(r);
  rep.got = compiled_outputs(cp, machine.state().shared);
  if (!machine.state().all_halted()) rep.note = "program did not halt within its step budget";

  if (cp.p * rep.rows_used <= sheet_cell_limit) {
    Grid sheet = fill_universal(load_universal(cp.program, cp.input), cp.p, rep.steps);
    EvalResult sv = evaluate(sheet);
    PramState st = universal_snapshot(sv, cp.program, cp.p, rep.steps);
    if (st.shared != machine.state().shared && rep.note.empty()) rep.note = "spreadsheet and interpreter disagree";
    rep.got = compiled_outputs(cp, st.shared);
    rep.via_sheet = true;
  }
  rep.match = contract && rep.got == rep.expected;
  return rep;
}

}  // namespace sheetpram
