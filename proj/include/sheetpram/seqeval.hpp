#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sheetpram/grid.hpp"
#include "sheetpram/value.hpp"

namespace sheetpram {

// Read access to evaluated cells. Empty cells read as integer 0 but are
// reported as not present (MATCH skips them).
class CellSource {
 public:
  virtual ~CellSource() = default;
  virtual Value value(const CellAddr& a) const = 0;
  virtual bool present(const CellAddr& a) const = 0;
  virtual CellAddr extent() const = 0;
};

struct RangeCell {
  Value value;
  bool present = true;
};

// MATCH over already-resolved values. Type 0: first exact (same-kind) match.
// Types 1/-1: binary-search-style scan for the first value >= (resp. <=) the
// lookup, which is the first such value when the range is sorted; when none
// qualifies the last non-empty position is returned. Returns #N/A! when the
// range holds nothing usable.
Value eval_match(const Value& lookup, std::span<const RangeCell> range, int match_type,
                 std::uint64_t* ops = nullptr);

// Total order used by comparisons: integers before booleans.
int compare_values(const Value& a, const Value& b);

// Evaluates formulas against a CellSource. MATCH/INDEX/array formulas are
// virtual so the round-based engine can substitute its own lookups.
class FormulaEvaluator {
 public:
  explicit FormulaEvaluator(const CellSource& src) : src_(src) {}
  virtual ~FormulaEvaluator() = default;

  Value eval(const Expr& e, const CellAddr& origin, const CellAddr& placed);
  std::uint64_t ops() const { return ops_; }

 protected:
  struct Ctx {
    CellAddr origin;
    CellAddr placed;
  };

  virtual Value do_match(const Value& lookup, const Region& range, int match_type, const Ctx& ctx);
  virtual Value do_index(const Region& range, Int row, Int col, bool two_d, const Ctx& ctx);
  virtual Value do_array(const Expr& array, const Ctx& ctx);

  Value eval_node(const Expr& e, const Ctx& ctx);
  Value cell_value(const CellRef& r, const Ctx& ctx);
  // Clips unbounded spans to the source extent.
  Region clip(const Region& r) const;
  // Positionwise evaluation for array formulas; `pos` indexes along the common axis.
  Value eval_positional(const Expr& e, const Ctx& ctx, Int pos, bool horizontal);

  const CellSource& src_;
  std::uint64_t ops_ = 0;
};

struct EvalOptions {
  bool reverse_tiebreak = false;  // visit roots in reverse row-major order
};

// Values of a fully evaluated grid, stored densely over [1..extent].
class EvalResult : public CellSource {
 public:
  Value value(const CellAddr& a) const override;
  bool present(const CellAddr& a) const override;
  CellAddr extent() const override { return extent_; }

  std::vector<CellAddr> order;   // formula cells in evaluation order
  std::vector<Value> output;     // values of the output part
  std::uint64_t op_count = 0;

  // Blank result over [1..extent] for engines that compute values themselves.
  static EvalResult blank(CellAddr extent);
  void set(const CellAddr& a, const Value& v, bool formula);

 private:
  friend class SequentialEvaluator;
  std::size_t index(const CellAddr& a) const {
    return static_cast<std::size_t>((a.row - 1) * extent_.col + (a.col - 1));
  }
  CellAddr extent_{0, 0};
  std::vector<Value> values_;
  std::vector<std::uint8_t> state_;  // 0 empty, 1 input, 2 formula
};

// Dependency-ordered evaluation of a filled grid. Every formula cell is
// evaluated once, after all cells it references (ranges count as references
// to every cell they cover). Throws CircularReferenceError on a cycle.
EvalResult evaluate(const Grid& g, const EvalOptions& opts = {});

}  // namespace sheetpram
