#include "sheetpram/address.hpp"

#include <algorithm>
#include <cctype>

namespace sheetpram {

std::string to_string(ErrorKind e) {
  switch (e) {
    case ErrorKind::Value: return "#VALUE!";
    case ErrorKind::NA: return "#N/A!";
    case ErrorKind::Div0: return "#DIV/0!";
    case ErrorKind::Ref: return "#REF!";
  }
  return "#?";
}

std::string Value::to_string() const {
  switch (kind_) {
    case Kind::Integer: return std::to_string(n_);
    case Kind::Boolean: return n_ ? "TRUE" : "FALSE";
    case Kind::Error: return sheetpram::to_string(err_);
  }
  return "";
}

std::string column_name(Int col) {
  std::string out;
  while (col > 0) {
    Int rem = (col - 1) % 26;
    out.push_back(static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string to_a1(const CellAddr& a) { return column_name(a.col) + std::to_string(a.row); }

std::string to_string(const CellRef& r) {
  std::string s;
  if (r.col_absolute) s += '$';
  s += column_name(r.addr.col);
  if (r.row_absolute) s += '$';
  s += std::to_string(r.addr.row);
  return s;
}

std::string to_string(const RangeRef& r) {
  switch (r.shape) {
    case RangeRef::Shape::Cells:
      return to_string(r.from) + ":" + to_string(r.to);
    case RangeRef::Shape::WholeRows:
      return std::string(r.from.row_absolute ? "$" : "") + std::to_string(r.from.addr.row) + ":" +
             (r.to.row_absolute ? "$" : "") + std::to_string(r.to.addr.row);
    case RangeRef::Shape::WholeColumns:
      return std::string(r.from.col_absolute ? "$" : "") + column_name(r.from.addr.col) + ":" +
             (r.to.col_absolute ? "$" : "") + column_name(r.to.addr.col);
  }
  return "";
}

std::string to_string(const Region& r) {
  bool rows = r.col_lo == 1 && r.col_hi == kUnbounded;
  bool cols = r.row_lo == 1 && r.row_hi == kUnbounded;
  if (rows && !cols) return std::to_string(r.row_lo) + ":" + std::to_string(r.row_hi);
  if (cols && !rows) return column_name(r.col_lo) + ":" + column_name(r.col_hi);
  CellAddr a{r.col_lo, r.row_lo}, b{r.col_hi, r.row_hi};
  if (a == b) return to_a1(a);
  return to_a1(a) + ":" + to_a1(b);
}

namespace {

Int parse_letters(std::string_view t, std::size_t& i) {
  Int col = 0;
  std::size_t start = i;
  while (i < t.size() && std::isalpha(static_cast<unsigned char>(t[i]))) {
    col = col * 26 + (std::toupper(static_cast<unsigned char>(t[i])) - 'A' + 1);
    ++i;
  }
  if (i == start) throw ParseError("expected column letters", i);
  return col;
}

Int parse_digits(std::string_view t, std::size_t& i) {
  Int row = 0;
  std::size_t start = i;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
    row = row * 10 + (t[i] - '0');
    ++i;
  }
  if (i == start) throw ParseError("expected row number", i);
  if (row < 1) throw ParseError("row must be positive", start);
  return row;
}

}  // namespace

CellAddr parse_addr(std::string_view text) {
  std::size_t i = 0;
  CellAddr a;
  a.col = parse_letters(text, i);
  a.row = parse_digits(text, i);
  if (i != text.size()) throw ParseError("trailing characters in address", i);
  return a;
}

Region parse_region(std::string_view text) {
  auto colon = text.find(':');
  auto lhs = text.substr(0, colon);
  if (colon == std::string_view::npos) {
    CellAddr a = parse_addr(lhs);
    return {a.col, a.col, a.row, a.row};
  }
  auto rhs = text.substr(colon + 1);
  auto all_digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
  };
  auto all_alpha = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) { return std::isalpha(static_cast<unsigned char>(ch)); });
  };
  if (all_digits(lhs) && all_digits(rhs)) {
    std::size_t i = 0, j = 0;
    Int a = parse_digits(lhs, i), b = parse_digits(rhs, j);
    return {1, kUnbounded, std::min(a, b), std::max(a, b)};
  }
  if (all_alpha(lhs) && all_alpha(rhs)) {
    std::size_t i = 0, j = 0;
    Int a = parse_letters(lhs, i), b = parse_letters(rhs, j);
    return {std::min(a, b), std::max(a, b), 1, kUnbounded};
  }
  CellAddr a = parse_addr(lhs), b = parse_addr(rhs);
  return {std::min(a.col, b.col), std::max(a.col, b.col), std::min(a.row, b.row), std::max(a.row, b.row)};
}

CellAddr resolve_ref(const CellRef& ref, const CellAddr& origin, const CellAddr& placed_at) {
  CellAddr out;
  out.col = ref.col_absolute ? ref.addr.col : ref.addr.col + (placed_at.col - origin.col);
  out.row = ref.row_absolute ? ref.addr.row : ref.addr.row + (placed_at.row - origin.row);
  if (out.col < 1 || out.row < 1) throw OutOfGridError("reference " + to_string(ref) + " leaves the grid");
  return out;
}

Region resolve_range(const RangeRef& ref, const CellAddr& origin, const CellAddr& placed_at) {
  Int dcol = placed_at.col - origin.col, drow = placed_at.row - origin.row;
  auto col_of = [&](const CellRef& r) { return r.col_absolute ? r.addr.col : r.addr.col + dcol; };
  auto row_of = [&](const CellRef& r) { return r.row_absolute ? r.addr.row : r.addr.row + drow; };
  Region out;
  if (ref.shape != RangeRef::Shape::WholeRows) {
    Int a = col_of(ref.from), b = col_of(ref.to);
    out.col_lo = std::min(a, b);
    out.col_hi = std::max(a, b);
  } else {
    out.col_lo = 1;
    out.col_hi = kUnbounded;
  }
  if (ref.shape != RangeRef::Shape::WholeColumns) {
    Int a = row_of(ref.from), b = row_of(ref.to);
    out.row_lo = std::min(a, b);
    out.row_hi = std::max(a, b);
  } else {
    out.row_lo = 1;
    out.row_hi = kUnbounded;
  }
  if (out.col_lo < 1 || out.row_lo < 1) throw OutOfGridError("range " + to_string(ref) + " leaves the grid");
  return out;
}

CellRef shift_ref(const CellRef& ref, Int dcol, Int drow) {
  CellRef out = ref;
  if (!ref.col_absolute) out.addr.col += dcol;
  if (!ref.row_absolute) out.addr.row += drow;
  if (out.addr.col < 1 || out.addr.row < 1) throw OutOfGridError("reference " + to_string(ref) + " leaves the grid");
  return out;
}

RangeRef shift_range(const RangeRef& ref, Int dcol, Int drow) {
  RangeRef out = ref;
  Int dc = ref.shape == RangeRef::Shape::WholeRows ? 0 : dcol;
  Int dr = ref.shape == RangeRef::Shape::WholeColumns ? 0 : drow;
  out.from = shift_ref(ref.from, dc, dr);
  out.to = shift_ref(ref.to, dc, dr);
  return out;
}

}  // namespace sheetpram
