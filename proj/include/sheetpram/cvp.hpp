#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sheetpram/grid.hpp"

namespace sheetpram {

enum class Conn : int { And = 1, Or = 2, Not = 3 };

// Operands are 0, 1 or a variable number >= 2.
struct Gate {
  Conn conn = Conn::And;
  std::vector<Int> args;

  bool operator==(const Gate&) const = default;
};

// gates[0] defines p2, gates[k] defines p(k+2).
struct CvpInstance {
  std::vector<Gate> gates;

  Int size() const { return static_cast<Int>(gates.size()); }
  // Throws DimensionError on arity or forward references.
  void validate() const;
  bool operator==(const CvpInstance&) const = default;
};

// "p<i> := <conn>(<arg>,<arg>)", one gate per line, variables in order from p2.
CvpInstance parse_cvp(std::string_view text);
CvpInstance read_cvp_file(const std::string& path);
std::string to_string(const CvpInstance& inst);

// Value of the last variable, evaluated top-down.
int cvp_solve(const CvpInstance& inst);
// Memoized recursion from the last variable; an independent cross-check.
int cvp_solve_recursive(const CvpInstance& inst);

CvpInstance gen_random(Int n, std::uint64_t seed);

struct CvpEncoding {
  Template tmpl;
  Int cols = 0, rows = 0;  // fill dimensions
  CellAddr answer;         // cell holding the last variable
};

enum class S4Orientation { Rows, Columns };

// One gate per row (or column), six formula cells each.
CvpEncoding encode_s4(const CvpInstance& inst, S4Orientation orient = S4Orientation::Rows);
// Gates packed into 4x2 blocks on a c-wide, r-high block grid; n must be c*r.
CvpEncoding encode_s5(const CvpInstance& inst, Int c, Int r);
// Gate k computed in the k-th diagonal block of 3x8 cells; every reference
// points strictly up and to the left.
CvpEncoding encode_s3_diagonal(const CvpInstance& inst);

// Fills, evaluates and reads the answer cell (0 or 1). Throws SheetError if
// the answer is not 0 or 1.
int solve_encoded(const CvpEncoding& enc);

}  // namespace sheetpram
