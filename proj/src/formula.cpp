#include "sheetpram/formula.hpp"

#include <cctype>
#include <utility>

namespace sheetpram {

bool is_comparison(BinOp op) {
  return op == BinOp::Eq || op == BinOp::Lt || op == BinOp::Gt || op == BinOp::Le || op == BinOp::Ge ||
         op == BinOp::Ne;
}

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Eq: return "=";
    case BinOp::Lt: return "<";
    case BinOp::Gt: return ">";
    case BinOp::Le: return "<=";
    case BinOp::Ge: return ">=";
    case BinOp::Ne: return "<>";
  }
  return "?";
}

std::string_view to_string(Func f) {
  switch (f) {
    case Func::If: return "IF";
    case Func::IfError: return "IFERROR";
    case Func::Choose: return "CHOOSE";
    case Func::And: return "AND";
    case Func::Or: return "OR";
    case Func::Row: return "ROW";
    case Func::Column: return "COLUMN";
    case Func::Match: return "MATCH";
    case Func::Index: return "INDEX";
    case Func::Sum: return "SUM";
  }
  return "?";
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : t_(text) {}

  Expr parse_top() {
    skip_ws();
    bool array = false;
    if (peek() == '{') {
      ++i_;
      array = true;
      skip_ws();
      if (peek() != '=') fail("array formula must start with {=");
    }
    if (peek() == '=') ++i_;
    skip_ws();
    if (i_ >= t_.size()) fail("empty formula");
    Expr e;
    if (array) {
      e = parse_array_body();
      skip_ws();
      if (peek() != '}') fail("expected '}'");
      ++i_;
    } else {
      e = parse_comparison();
      check_no_bare_range(e);
    }
    skip_ws();
    if (i_ != t_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view t_;
  std::size_t i_ = 0;
  int array_depth_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, i_); }
  char peek(std::size_t k = 0) const { return i_ + k < t_.size() ? t_[i_ + k] : '\0'; }
  void skip_ws() {
    while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) ++i_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  Expr parse_array_body() {
    std::size_t start = i_;
    std::string name = read_word();
    if (upper(name) != "SUM") {
      i_ = start;
      fail("array formulas must aggregate with SUM");
    }
    expect('(');
    ++array_depth_;
    Expr inner = parse_comparison();
    --array_depth_;
    expect(')');
    return Expr::array_sum(std::move(inner));
  }

  Expr parse_comparison() {
    Expr lhs = parse_additive();
    for (;;) {
      skip_ws();
      BinOp op;
      if (peek() == '<' && peek(1) == '=') { op = BinOp::Le; i_ += 2; }
      else if (peek() == '>' && peek(1) == '=') { op = BinOp::Ge; i_ += 2; }
      else if (peek() == '<' && peek(1) == '>') { op = BinOp::Ne; i_ += 2; }
      else if (peek() == '<') { op = BinOp::Lt; ++i_; }
      else if (peek() == '>') { op = BinOp::Gt; ++i_; }
      else if (peek() == '=') { op = BinOp::Eq; ++i_; }
      else return lhs;
      Expr rhs = parse_additive();
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    for (;;) {
      skip_ws();
      BinOp op;
      if (peek() == '+') op = BinOp::Add;
      else if (peek() == '-') op = BinOp::Sub;
      else return lhs;
      ++i_;
      Expr rhs = parse_multiplicative();
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    for (;;) {
      skip_ws();
      BinOp op;
      if (peek() == '*') op = BinOp::Mul;
      else if (peek() == '/') op = BinOp::Div;
      else return lhs;
      ++i_;
      Expr rhs = parse_unary();
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
  }

  Expr parse_unary() {
    skip_ws();
    if (peek() == '-') {
      ++i_;
      return Expr::negate(parse_unary());
    }
    if (peek() == '+') {
      ++i_;
      return parse_unary();
    }
    return parse_primary();
  }

  static std::string upper(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
  }

  std::string read_word() {
    std::size_t start = i_;
    while (std::isalpha(static_cast<unsigned char>(peek()))) ++i_;
    return std::string(t_.substr(start, i_ - start));
  }

  Int read_number() {
    std::size_t start = i_;
    Int n = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      n = arith::add(arith::mul(n, 10), peek() - '0');
      ++i_;
    }
    if (i_ == start) fail("expected number");
    return n;
  }

  Expr parse_primary() {
    skip_ws();
    char c = peek();
    if (c == '(') {
      ++i_;
      Expr e = parse_comparison();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t save = i_;
      Int n = read_number();
      if (peek() == ':') {
        i_ = save;
        return parse_reference();
      }
      return Expr::integer(n);
    }
    if (c == '$') return parse_reference();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t save = i_;
      std::string word = read_word();
      std::size_t after_word = i_;
      skip_ws();
      if (peek() == '(') return parse_call(upper(word), save);
      i_ = after_word;
      std::string up = upper(word);
      if (!std::isdigit(static_cast<unsigned char>(peek())) && peek() != '$' && peek() != ':') {
        if (up == "TRUE") return Expr::boolean(true);
        if (up == "FALSE") return Expr::boolean(false);
        i_ = save;
        fail("unknown name '" + word + "'");
      }
      i_ = save;
      return parse_reference();
    }
    fail("unexpected character");
  }

  // One endpoint: [$]col[$]row, [$]row (whole-row form) or [$]col (whole-column form).
  struct Endpoint {
    CellRef ref;
    bool has_col = false, has_row = false;
  };

  Endpoint parse_endpoint() {
    Endpoint ep;
    bool abs1 = false;
    if (peek() == '$') { abs1 = true; ++i_; }
    if (std::isalpha(static_cast<unsigned char>(peek()))) {
      std::size_t start = i_;
      Int col = 0;
      while (std::isalpha(static_cast<unsigned char>(peek()))) {
        col = col * 26 + (std::toupper(static_cast<unsigned char>(peek())) - 'A' + 1);
        ++i_;
        if (i_ - start > 6) fail("column name too long");
      }
      ep.ref.addr.col = col;
      ep.ref.col_absolute = abs1;
      ep.has_col = true;
      bool abs2 = false;
      if (peek() == '$') { abs2 = true; ++i_; }
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        ep.ref.addr.row = read_number();
        if (ep.ref.addr.row < 1) fail("row must be positive");
        ep.ref.row_absolute = abs2;
        ep.has_row = true;
      } else if (abs2) {
        fail("malformed reference");
      }
    } else if (std::isdigit(static_cast<unsigned char>(peek()))) {
      ep.ref.addr.row = read_number();
      if (ep.ref.addr.row < 1) fail("row must be positive");
      ep.ref.row_absolute = abs1;
      ep.has_row = true;
    } else {
      fail("malformed reference");
    }
    return ep;
  }

  Expr parse_reference() {
    std::size_t start = i_;
    Endpoint a = parse_endpoint();
    if (peek() != ':') {
      if (!(a.has_col && a.has_row)) {
        i_ = start;
        fail("malformed reference");
      }
      return Expr::cell_use(a.ref);
    }
    ++i_;
    Endpoint b = parse_endpoint();
    RangeRef r;
    r.from = a.ref;
    r.to = b.ref;
    if (a.has_col && a.has_row && b.has_col && b.has_row) {
      r.shape = RangeRef::Shape::Cells;
    } else if (!a.has_col && !b.has_col) {
      r.shape = RangeRef::Shape::WholeRows;
      r.from.addr.col = r.to.addr.col = 1;
    } else if (!a.has_row && !b.has_row) {
      r.shape = RangeRef::Shape::WholeColumns;
      r.from.addr.row = r.to.addr.row = 1;
    } else {
      i_ = start;
      fail("malformed range");
    }
    return Expr::range_use(r);
  }

  Expr parse_call(const std::string& name, std::size_t name_pos) {
    Func f;
    if (name == "IF") f = Func::If;
    else if (name == "IFERROR") f = Func::IfError;
    else if (name == "CHOOSE") f = Func::Choose;
    else if (name == "AND") f = Func::And;
    else if (name == "OR") f = Func::Or;
    else if (name == "ROW") f = Func::Row;
    else if (name == "COLUMN") f = Func::Column;
    else if (name == "MATCH") f = Func::Match;
    else if (name == "INDEX") f = Func::Index;
    else {
      i_ = name_pos;
      fail("unknown function '" + name + "'");
    }
    expect('(');
    std::vector<Expr> args;
    skip_ws();
    if (peek() != ')') {
      for (;;) {
        args.push_back(parse_comparison());
        skip_ws();
        if (peek() == ',') { ++i_; continue; }
        break;
      }
    }
    expect(')');
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi) {
        i_ = name_pos;
        fail("wrong number of arguments to " + name);
      }
    };
    switch (f) {
      case Func::If: arity(3, 3); break;
      case Func::IfError: arity(2, 2); break;
      case Func::Choose: arity(2, 30); break;
      case Func::And:
      case Func::Or: arity(1, 30); break;
      case Func::Row:
      case Func::Column:
        arity(0, 1);
        if (args.size() == 1 && args[0].kind != Expr::Kind::Cell) {
          i_ = name_pos;
          fail(name + " takes a single cell reference");
        }
        break;
      case Func::Match:
        arity(3, 3);
        if (args[1].kind != Expr::Kind::Range && args[1].kind != Expr::Kind::Cell) {
          i_ = name_pos;
          fail("MATCH needs a range as lookup-array");
        }
        break;
      case Func::Index:
        arity(2, 3);
        if (args[0].kind != Expr::Kind::Range && args[0].kind != Expr::Kind::Cell) {
          i_ = name_pos;
          fail("INDEX needs a range as array");
        }
        break;
      case Func::Sum: break;
    }
    return Expr::call(f, std::move(args));
  }

  // Outside array formulas a range may only be a MATCH/INDEX array argument.
  void check_no_bare_range(const Expr& e, bool range_ok = false) {
    if (e.kind == Expr::Kind::Range && !range_ok) fail("range used outside MATCH/INDEX");
    for (std::size_t k = 0; k < e.args.size(); ++k) {
      bool ok = e.kind == Expr::Kind::Call &&
                ((e.fn == Func::Match && k == 1) || (e.fn == Func::Index && k == 0));
      check_no_bare_range(e.args[k], ok);
    }
  }
};

int precedence(const Expr& e) {
  if (e.kind == Expr::Kind::Binary) {
    if (is_comparison(e.op)) return 1;
    if (e.op == BinOp::Add || e.op == BinOp::Sub) return 2;
    return 3;
  }
  if (e.kind == Expr::Kind::Neg) return 4;
  return 5;
}

void print(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Int: out += std::to_string(e.num); return;
    case Expr::Kind::Bool: out += e.num ? "TRUE" : "FALSE"; return;
    case Expr::Kind::Cell: out += to_string(e.cell); return;
    case Expr::Kind::Range: out += to_string(e.range); return;
    case Expr::Kind::Neg: {
      out += '-';
      bool paren = precedence(e.args[0]) < 4;
      if (paren) out += '(';
      print(e.args[0], out);
      if (paren) out += ')';
      return;
    }
    case Expr::Kind::Binary: {
      int p = precedence(e);
      // Left-associative: right operand needs parentheses at equal precedence.
      bool lp = precedence(e.args[0]) < p;
      bool rp = precedence(e.args[1]) <= p;
      if (lp) out += '(';
      print(e.args[0], out);
      if (lp) out += ')';
      out += to_string(e.op);
      if (rp) out += '(';
      print(e.args[1], out);
      if (rp) out += ')';
      return;
    }
    case Expr::Kind::Call: {
      out += to_string(e.fn);
      out += '(';
      for (std::size_t k = 0; k < e.args.size(); ++k) {
        if (k) out += ',';
        print(e.args[k], out);
      }
      out += ')';
      return;
    }
    case Expr::Kind::Array:
      out += "SUM(";
      print(e.args[0], out);
      out += ')';
      return;
  }
}

void collect(const Expr& e, std::vector<Reference>& out, bool address_only) {
  if (e.kind == Expr::Kind::Cell) {
    Reference r;
    r.cell = e.cell;
    r.address_only = address_only;
    out.push_back(r);
    return;
  }
  if (e.kind == Expr::Kind::Range) {
    Reference r;
    r.is_range = true;
    r.range = e.range;
    out.push_back(r);
    return;
  }
  bool addr = e.kind == Expr::Kind::Call && (e.fn == Func::Row || e.fn == Func::Column);
  for (const auto& a : e.args) collect(a, out, addr);
}

bool is_atom(const Expr& e) {
  return e.kind == Expr::Kind::Range || e.kind == Expr::Kind::Cell || e.kind == Expr::Kind::Int ||
         e.kind == Expr::Kind::Bool ||
         (e.kind == Expr::Kind::Neg && e.args[0].kind == Expr::Kind::Int);
}

// Returns false on a disallowed node; counts range-vs-cell non-equality comparisons.
bool eligible_inner(const Expr& e, int& inequalities) {
  switch (e.kind) {
    case Expr::Kind::Int:
    case Expr::Kind::Bool:
    case Expr::Kind::Cell:
    case Expr::Kind::Range:
      return true;
    case Expr::Kind::Neg:
      return eligible_inner(e.args[0], inequalities);
    case Expr::Kind::Binary: {
      if (e.op == BinOp::Div) return false;
      if (is_comparison(e.op)) {
        const Expr& l = e.args[0];
        const Expr& r = e.args[1];
        if (!is_atom(l) || !is_atom(r)) return false;
        bool lr = l.kind == Expr::Kind::Range, rr = r.kind == Expr::Kind::Range;
        if (lr != rr && e.op != BinOp::Eq) ++inequalities;
        return true;
      }
      return eligible_inner(e.args[0], inequalities) && eligible_inner(e.args[1], inequalities);
    }
    case Expr::Kind::Call:
    case Expr::Kind::Array:
      return false;
  }
  return false;
}

}  // namespace

Expr parse_formula(std::string_view text) { return Parser(text).parse_top(); }

std::string to_string(const Expr& e) {
  std::string out;
  if (e.kind == Expr::Kind::Array) {
    out = "{=";
    print(e, out);
    out += '}';
  } else {
    out = "=";
    print(e, out);
  }
  return out;
}

std::vector<Reference> references_of(const Expr& e) {
  std::vector<Reference> out;
  collect(e, out, false);
  return out;
}

bool thm3_eligible(const Expr& a) {
  if (a.kind != Expr::Kind::Array || a.fn != Func::Sum) return false;
  int inequalities = 0;
  if (!eligible_inner(a.args[0], inequalities)) return false;
  return inequalities <= 1;
}

Expr shift_formula(const Expr& e, Int dcol, Int drow) {
  Expr out = e;
  if (e.kind == Expr::Kind::Cell) {
    out.cell = shift_ref(e.cell, dcol, drow);
    return out;
  }
  if (e.kind == Expr::Kind::Range) {
    out.range = shift_range(e.range, dcol, drow);
    return out;
  }
  for (auto& a : out.args) a = shift_formula(a, dcol, drow);
  return out;
}

}  // namespace sheetpram
