#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sheetpram/address.hpp"

namespace sheetpram {

enum class BinOp { Add, Sub, Mul, Div, Eq, Lt, Gt, Le, Ge, Ne };
enum class Func { If, IfError, Choose, And, Or, Row, Column, Match, Index, Sum };

bool is_comparison(BinOp op);
std::string_view to_string(BinOp op);
std::string_view to_string(Func f);

// Formula syntax tree. Ranges appear only as MATCH/INDEX arrays or inside
// array formulas; the parser enforces that.
struct Expr {
  enum class Kind { Int, Bool, Cell, Range, Neg, Binary, Call, Array };

  Kind kind = Kind::Int;
  Int num = 0;              // Int literal value; Bool literal as 0/1
  BinOp op = BinOp::Add;    // Binary
  Func fn = Func::If;       // Call
  CellRef cell;             // Cell
  RangeRef range;           // Range
  std::vector<Expr> args;   // Neg: 1, Binary: 2, Call: n, Array: 1 (inner of SUM)

  static Expr integer(Int n) { Expr e; e.kind = Kind::Int; e.num = n; return e; }
  static Expr boolean(bool b) { Expr e; e.kind = Kind::Bool; e.num = b; return e; }
  static Expr cell_use(CellRef r) { Expr e; e.kind = Kind::Cell; e.cell = r; return e; }
  static Expr range_use(RangeRef r) { Expr e; e.kind = Kind::Range; e.range = r; return e; }
  static Expr negate(Expr x) { Expr e; e.kind = Kind::Neg; e.args.push_back(std::move(x)); return e; }
  static Expr binary(BinOp op, Expr l, Expr r) {
    Expr e; e.kind = Kind::Binary; e.op = op;
    e.args.push_back(std::move(l)); e.args.push_back(std::move(r));
    return e;
  }
  static Expr call(Func f, std::vector<Expr> args) { Expr e; e.kind = Kind::Call; e.fn = f; e.args = std::move(args); return e; }
  static Expr array_sum(Expr inner) { Expr e; e.kind = Kind::Array; e.fn = Func::Sum; e.args.push_back(std::move(inner)); return e; }

  bool operator==(const Expr&) const = default;
};

using ExprPtr = std::shared_ptr<const Expr>;

// Accepts "=..." and "{=SUM(...)}"; the leading '=' is optional. Function
// names are case-insensitive. Throws ParseError.
Expr parse_formula(std::string_view text);

// Canonical text, including the leading '=' (or "{=...}" for array formulas).
std::string to_string(const Expr& e);

struct Reference {
  bool is_range = false;
  CellRef cell;
  RangeRef range;
  bool address_only = false;  // argument of ROW()/COLUMN(): position read, value not
  bool to_input = false;      // filled in by template-aware callers
};

// Every reference in source order.
std::vector<Reference> references_of(const Expr& e);

// Array formulas admitting the prefix-sum / sum-tree evaluation: SUM outer,
// inner built from + - * and comparisons applied directly to ranges, cells
// and constants, with at most one range-vs-cell comparison other than '='.
bool thm3_eligible(const Expr& array_formula);

// Shifted copy of a formula (relative parts move by dcol/drow).
Expr shift_formula(const Expr& e, Int dcol, Int drow);

}  // namespace sheetpram
