#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sheetpram/address.hpp"
#include "sheetpram/formula.hpp"

namespace sheetpram {

enum class OutputPart { LastRow, LastColumn };

// The small initial spreadsheet: formulas in the computing part, integers in
// the input part. Only the computing part is replicated by fill.
struct Template {
  std::map<CellAddr, ExprPtr, RowMajorLess> formulas;
  std::map<CellAddr, Int, RowMajorLess> inputs;
  Region computing;
  std::vector<Region> input_part;
  OutputPart output = OutputPart::LastRow;

  void set_formula(const CellAddr& a, std::string_view text);
  void set_formula(const CellAddr& a, Expr e);
  void set_input(const CellAddr& a, Int v) { inputs[a] = v; }

  bool in_input_part(const CellAddr& a) const;
  bool in_input_part(const Region& r) const;  // whole region inside one input region

  // Throws DimensionError when the invariants are violated.
  void validate() const;
};

// A template filled to c columns and r rows of computing area. Cells are
// resolved on demand from the template, so a Grid is cheap to copy and
// safe to share read-only.
class Grid {
 public:
  Grid() = default;
  Grid(Template t, Int cols, Int rows);

  const Template& source() const { return t_; }
  Int cols() const { return cols_; }
  Int rows() const { return rows_; }
  const Region& filled() const { return filled_; }

  // Template cell whose copy sits at `a`, if `a` holds a formula.
  std::optional<CellAddr> origin_of(const CellAddr& a) const;
  const Expr* formula_ptr(const CellAddr& a, CellAddr* origin = nullptr) const;
  std::optional<Expr> formula_at(const CellAddr& a) const;  // shifted copy
  std::optional<Int> input_at(const CellAddr& a) const;
  bool is_empty(const CellAddr& a) const;

  // Largest column/row holding any cell.
  CellAddr extent() const;

  // All formula cells in row-major order.
  std::vector<CellAddr> formula_cells() const;

  // Addresses of the output part (last created row or column).
  std::vector<CellAddr> output_cells() const;

 private:
  Template t_;
  Int cols_ = 0, rows_ = 0;
  Region filled_;
};

// Replicates the computing part right to `cols` columns, then down to `rows` rows.
Grid fill_template(const Template& t, Int cols, Int rows);

struct SheetFile {
  Template tmpl;
  std::optional<std::pair<Int, Int>> fill;  // "#fill CxR" header
};

// Line format: "<A1>\t<content>", headers "#computing", "#input", "#output", "#fill".
SheetFile read_sheet(std::istream& in);
SheetFile read_sheet_file(const std::string& path);
void write_template(std::ostream& out, const Template& t, std::optional<std::pair<Int, Int>> fill = {});
// Materialises every cell of a filled grid; reading it back yields an equal grid.
void write_grid(std::ostream& out, const Grid& g);

}  // namespace sheetpram
