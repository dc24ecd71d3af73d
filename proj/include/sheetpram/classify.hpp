#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sheetpram/grid.hpp"

namespace sheetpram {

enum class Organized { Row, Column, Both, None };
enum class Directed { Row, Column, Bi, None };

struct Classification {
  Organized organized = Organized::Both;
  Directed directed = Directed::Bi;

  bool row_organized() const { return organized == Organized::Row || organized == Organized::Both; }
  bool column_organized() const { return organized == Organized::Column || organized == Organized::Both; }
  bool row_directed() const { return directed == Directed::Row || directed == Directed::Bi; }
  bool column_directed() const { return directed == Directed::Column || directed == Directed::Bi; }

  bool operator==(const Classification&) const = default;
};

std::string to_string(Organized o);
std::string to_string(Directed d);

// Smallest fill (c, r) judged by classify_template: at least 3x3 copies of
// the computing part, more when a relative reference reaches further than
// two copies, so that every reference lands outside the input part somewhere.
std::pair<Int, Int> canonical_fill(const Template& t);

// Judges every formula cell of the canonical fill. References into the
// declared input part are exempt. With no judged range the template counts
// as organized both ways; with no judged reference, as bi-directed.
Classification classify_template(const Template& t);

// Judges exactly the formula cells of a filled grid.
Classification classify_grid(const Grid& g);

struct FillInvarianceReport {
  bool pass = true;
  Classification expected;
  std::optional<std::pair<Int, Int>> counterexample;  // first failing (c, r)
  Classification found;
};

FillInvarianceReport check_fill_invariance(const Template& t, const std::vector<std::pair<Int, Int>>& samples);

}  // namespace sheetpram
