#include "sheetpram/classify.hpp"

#include <algorithm>
#include <cstdlib>

namespace sheetpram {

std::string to_string(Organized o) {
  switch (o) {
    case Organized::Row: return "row";
    case Organized::Column: return "column";
    case Organized::Both: return "both";
    case Organized::None: return "none";
  }
  return "none";
}

std::string to_string(Directed d) {
  switch (d) {
    case Directed::Row: return "row";
    case Directed::Column: return "column";
    case Directed::Bi: return "bi";
    case Directed::None: return "none";
  }
  return "none";
}

namespace {

struct Judge {
  const Template& t;
  bool horizontal = true, vertical = true;
  bool above = true, left = true;

  bool exempt(const Region& r) const {
    if (r.width() == 1 && r.height() == 1 && t.in_input_part(CellAddr{r.col_lo, r.row_lo})) return true;
    return t.in_input_part(r);
  }

  void cell(const Expr& e, const CellAddr& origin, const CellAddr& placed) {
    for (const auto& ref : references_of(e)) {
      if (ref.address_only) continue;
      Region r;
      try {
        if (ref.is_range) {
          r = resolve_range(ref.range, origin, placed);
        } else {
          CellAddr a = resolve_ref(ref.cell, origin, placed);
          r = {a.col, a.col, a.row, a.row};
        }
      } catch (const OutOfGridError&) {
        continue;  // no such cell at this placement
      }
      if (exempt(r)) continue;
      if (ref.is_range) {
        bool h = r.row_lo == r.row_hi, v = r.col_lo == r.col_hi;
        if (!(h && v)) {
          horizontal = horizontal && h;
          vertical = vertical && v;
        }
      }
      above = above && r.row_hi < placed.row;
      left = left && r.col_hi < placed.col;
    }
  }

  Classification result() const {
    Classification c;
    c.organized = horizontal && vertical ? Organized::Both
                  : horizontal           ? Organized::Row
                  : vertical             ? Organized::Column
                                         : Organized::None;
    c.directed = above && left ? Directed::Bi : above ? Directed::Row : left ? Directed::Column : Directed::None;
    return c;
  }
};

Classification judge_grid(const Grid& g) {
  Judge j{g.source()};
  for (const auto& a : g.formula_cells()) {
    CellAddr origin;
    const Expr* e = g.formula_ptr(a, &origin);
    j.cell(*e, origin, a);
  }
  return j.result();
}

}  // namespace

std::pair<Int, Int> canonical_fill(const Template& t) {
  Int dc = 0, dr = 0;
  auto reach = [&](const CellRef& r, const CellAddr& origin, bool cols, bool rows) {
    if (cols && !r.col_absolute) dc = std::max<Int>(dc, std::abs(r.addr.col - origin.col));
    if (rows && !r.row_absolute) dr = std::max<Int>(dr, std::abs(r.addr.row - origin.row));
  };
  for (const auto& [origin, e] : t.formulas) {
    for (const auto& ref : references_of(*e)) {
      if (!ref.is_range) {
        reach(ref.cell, origin, true, true);
        continue;
      }
      bool cols = ref.range.shape != RangeRef::Shape::WholeRows;
      bool rows = ref.range.shape != RangeRef::Shape::WholeColumns;
      reach(ref.range.from, origin, cols, rows);
      reach(ref.range.to, origin, cols, rows);
    }
  }
  Int w = t.computing.width(), h = t.computing.height();
  return {w * std::max<Int>(3, 2 + (dc + w - 1) / w), h * std::max<Int>(3, 2 + (dr + h - 1) / h)};
}

Classification classify_template(const Template& t) {
  // overlap of the canonical fill with input cells is irrelevant here
  auto [c, r] = canonical_fill(t);
  return judge_grid(Grid(t, c, r));
}

Classification classify_grid(const Grid& g) { return judge_grid(g); }

FillInvarianceReport check_fill_invariance(const Template& t, const std::vector<std::pair<Int, Int>>& samples) {
  FillInvarianceReport rep;
  rep.expected = classify_template(t);
  rep.found = rep.expected;
  for (const auto& [c, r] : samples) {
    Classification got = classify_grid(fill_template(t, c, r));
    if (got != rep.expected) {
      rep.pass = false;
      rep.counterexample = std::make_pair(c, r);
      rep.found = got;
      break;
    }
  }
  return rep;
}

}  // namespace sheetpram
