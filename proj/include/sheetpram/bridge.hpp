#pragma once

#include <string>
#include <vector>

#include "sheetpram/grid.hpp"
#include "sheetpram/pram.hpp"
#include "sheetpram/seqeval.hpp"

namespace sheetpram {

// Four integer rows, two columns per instruction (instruction l at columns
// 2l-1 and 2l):
//   row 0: form, target register or goto line
//   row 1: kind and payload of u
//   row 2: kind and payload of v
//   row 3: operator (0 for forms without one), 0
// An empty instruction (form 0) means "past the end of the program".
struct ProgramEncoding {
  std::vector<std::vector<Int>> rows;
  Int instructions() const { return rows.empty() ? 0 : static_cast<Int>(rows[0].size()) / 2; }
};

ProgramEncoding encode_program(const Program& prog);
Program decode_program(const ProgramEncoding& enc);

// Snapshot slots, offsets within a 10-row group.
enum Slot : Int {
  kMarker = 1, kOperandU = 2, kOperandV = 3, kAnnounceAddr = 4, kAnnounceVal = 5,
  kRegI = 6, kRegJ = 7, kRegK = 8, kCounter = 9, kShared = 10,
};

// Universal simulator. Computing part A11:A20; rows 1..10 are input: row 1
// holds the PRAM input I, rows 2..5 the program encoding, rows 6..10 the
// (empty) initial state. Filled to p columns with bottom row 10t+10, rows
// 10t+6..10t+10 hold the machine state after t steps (kCounter stores pc-1).
// Simulates p processors and p shared cells.
Template gen_universal();
Template load_universal(const Program& prog, const std::vector<Int>& input);
Grid fill_universal(const Template& loaded, Int p, Int t);
// State after step t read from an evaluated universal grid.
PramState universal_snapshot(const CellSource& values, const Program& prog, Int p, Int t);

// Flexible simulator. Computing part B13:B22; A2 holds p, row 1 holds I,
// rows 4..7 the program encoding, rows 8..12 the initial state. Filled to q
// columns with bottom row 10t+12, the p columns ending at column
// q - (q mod p) of the computing part hold the state after t*(q/p - 1) steps.
Template gen_flexible();
Template load_flexible(const Program& prog, const std::vector<Int>& input, Int p);
Grid fill_flexible(const Template& loaded, Int q, Int t);
PramState flexible_window(const CellSource& values, const Program& prog, Int p, Int q, Int t);
Int flexible_steps(Int p, Int q, Int t);

// Row-organized, row-directed template compiled to a program for the
// priority CRCW machine.
struct CompiledProgram {
  Program program;
  Int p = 0, m = 0;              // processors and shared cells to run with
  std::vector<Int> input;        // full I array (I[1] = length)
  Int step_budget = 0;           // steps until every processor halts
  Int out_base = 0;              // last row value of column s at M[out_base + s]
  Int cols = 0, rows = 0;
};

// Throws NotCompilableError for templates outside the supported class.
CompiledProgram compile_to_pram(const Template& t, Int c, Int r);

// Last-row values after running a compiled program.
std::vector<Int> compiled_outputs(const CompiledProgram& cp, const std::vector<Int>& shared);

struct RoundtripReport {
  bool match = false;
  Int rows_used = 0;          // bottom row of the universal grid at halting
  double overhead_factor = 0;  // rows_used / r
  Int steps = 0;
  bool erew_clean = false;
  bool via_sheet = false;     // outputs read from the simulating spreadsheet
  std::vector<Int> expected, got;
  std::string note;
};

// Compiles, runs the program inside the universal spreadsheet (or, when the
// sheet would exceed `sheet_cell_limit` cells, on the interpreter), and
// compares against sequential evaluation of the filled template.
RoundtripReport roundtrip_check(const Template& t, Int c, Int r, Int sheet_cell_limit = 2'000'000);

}  // namespace sheetpram
