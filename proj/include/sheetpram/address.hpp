#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "sheetpram/value.hpp"

namespace sheetpram {

inline constexpr Int kUnbounded = std::numeric_limits<Int>::max();

// 1-based column/row. The grid is unbounded to the right and downwards.
struct CellAddr {
  Int col = 1;
  Int row = 1;

  auto operator<=>(const CellAddr&) const = default;
};

// Row-major ordering, used for deterministic iteration.
struct RowMajorLess {
  bool operator()(const CellAddr& a, const CellAddr& b) const {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  }
};

struct CellRef {
  CellAddr addr;
  bool col_absolute = false;
  bool row_absolute = false;

  bool operator==(const CellRef&) const = default;
};

struct RangeRef {
  enum class Shape { Cells, WholeRows, WholeColumns };
  CellRef from;
  CellRef to;
  Shape shape = Shape::Cells;

  bool operator==(const RangeRef&) const = default;
};

// Rectangle; hi bounds may be kUnbounded.
struct Region {
  Int col_lo = 1, col_hi = 1, row_lo = 1, row_hi = 1;

  bool contains(const CellAddr& a) const {
    return a.col >= col_lo && a.col <= col_hi && a.row >= row_lo && a.row <= row_hi;
  }
  bool intersects(const Region& o) const {
    return col_lo <= o.col_hi && o.col_lo <= col_hi && row_lo <= o.row_hi && o.row_lo <= row_hi;
  }
  Int width() const { return col_hi - col_lo + 1; }
  Int height() const { return row_hi - row_lo + 1; }
  bool operator==(const Region&) const = default;
};

std::string column_name(Int col);
std::string to_a1(const CellAddr& a);
std::string to_string(const CellRef& r);
std::string to_string(const RangeRef& r);
std::string to_string(const Region& r);

// Parses "B7"; throws ParseError.
CellAddr parse_addr(std::string_view text);
// Parses "A1:C4", "B2", "3:5" (whole rows) or "A:C" (whole columns).
Region parse_region(std::string_view text);

// Shifts the relative components of `ref` by (placed_at - origin).
CellAddr resolve_ref(const CellRef& ref, const CellAddr& origin, const CellAddr& placed_at);

// Resolves a range; whole-row ranges get an unbounded column span and vice versa.
// Endpoints are normalised so that lo <= hi.
Region resolve_range(const RangeRef& ref, const CellAddr& origin, const CellAddr& placed_at);

// Shifted copy of a reference (absolute parts unchanged). Throws OutOfGridError.
CellRef shift_ref(const CellRef& ref, Int dcol, Int drow);
RangeRef shift_range(const RangeRef& ref, Int dcol, Int drow);

}  // namespace sheetpram
