#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sheetpram/bridge.hpp"
#include "sheetpram/classify.hpp"
#include "support/generators.hpp"

using namespace sheetpram;
using testing_util::sheet;

namespace {

std::vector<Int> last_row(const Template& t, Int c, Int r) {
  EvalResult ev = evaluate(fill_template(t, c, r));
  std::vector<Int> out;
  for (Int col = 1; col <= c; ++col) out.push_back(ev.value({col, t.computing.row_lo + r - 1}).as_int());
  return out;
}

// Runs to completion and checks lockstep timing and EREW safety on the way.
std::vector<Int> run_compiled(const CompiledProgram& cp) {
  Pram m(cp.program, cp.input, cp.p, cp.m);
  ErewChecker erew;
  while (!m.state().all_halted() && m.state().time <= cp.step_budget) {
    erew.observe(m.state().time, m.next_accesses());
    m.step();
  }
  CHECK(m.state().all_halted());
  CHECK(m.state().time == cp.step_budget);
  CHECK_MESSAGE(erew.report().clean, erew.report().violations << " EREW violations");
  return compiled_outputs(cp, m.state().shared);
}

const char* kRunningSum = "#input 1:1\nA1\t3\nB1\t-1\nC1\t4\nD1\t1\nE1\t5\nF1\t9\nA2\t=A1+B1\n";

}  // namespace

TEST_CASE("running-sum cascade compiles to a matching program") {
  Template t = sheet(kRunningSum);
  for (auto [c, r] : {std::pair<Int, Int>{1, 1}, {3, 2}, {5, 4}, {6, 7}}) {
    CompiledProgram cp = compile_to_pram(t, c, r);
    CHECK(cp.p == cp.m);
    CHECK(run_compiled(cp) == last_row(t, c, r));
  }
}

TEST_CASE("identity template copies the input row") {
  Template t = sheet("#input 1:1\nA1\t7\nB1\t-2\nC1\t0\nD1\t11\nA2\t=A1\n");
  CompiledProgram cp = compile_to_pram(t, 4, 3);
  CHECK(run_compiled(cp) == std::vector<Int>{7, -2, 0, 11});
}

TEST_CASE("round trip through the universal sheet") {
  RoundtripReport rep = roundtrip_check(sheet(kRunningSum), 4, 3);
  CHECK(rep.via_sheet);
  CHECK(rep.match);
  CHECK(rep.erew_clean);
  CHECK(rep.rows_used == 10 * rep.steps + 10);
  CHECK(rep.got == std::vector<Int>{13, 19, 17, 6});
}

TEST_CASE("lookups over the previous row") {
  Template t = sheet(
      "#input 1:2\nA1\t4\nB1\t2\nC1\t4\nD1\t1\nE1\t3\nA2\t1\nB2\t2\n"
      "A3\t=IFERROR(MATCH(A1,2:2,0),0-1)+INDEX($A$1:$E$1,1+COLUMN()/2)\n"
      "A4\t=IFERROR(MATCH(A3,A3:C3,0),9)*10+IFERROR(INDEX(A3:B3,2),7)\n");
  for (auto [c, r] : {std::pair<Int, Int>{1, 2}, {3, 2}, {5, 4}}) {
    CompiledProgram cp = compile_to_pram(t, c, r);
    CHECK(run_compiled(cp) == last_row(t, c, r));
  }
}

TEST_CASE("INDEX past the stored width of a whole row reads an empty cell") {
  Template t = sheet("#input 1:1\nA1\t9\nB1\t2\nC1\t4\nA2\t=IFERROR(INDEX(1:1,COLUMN()*3),4)\n");
  CompiledProgram cp = compile_to_pram(t, 3, 3);
  CHECK(run_compiled(cp) == last_row(t, 3, 3));
  CHECK(last_row(t, 3, 1) == std::vector<Int>{4, 0, 0});
}

TEST_CASE("two-column template with mixed references") {
  Template t = sheet(
      "#input 1:2\nA1\t5\nB1\t-3\nC1\t8\nD1\t2\nA2\t1\nB2\t6\nC2\t2\n"
      "A3\t=IF(A1<B2,A2*3,$B$1-ROW())\nB3\t=CHOOSE(IF(OR(A1=2,B1>0),1,2),C2/2,COLUMN()+B1)\n");
  for (auto [c, r] : {std::pair<Int, Int>{2, 1}, {4, 3}, {6, 5}}) {
    CompiledProgram cp = compile_to_pram(t, c, r);
    CHECK(run_compiled(cp) == last_row(t, c, r));
  }
}

TEST_CASE("random eligible templates") {
  std::mt19937_64 rng(41);
  testing_util::TemplateGen gen(rng, {});
  int compiled = 0;
  for (int trial = 0; trial < 12; ++trial) {
    Template t = gen();
    Int c = t.computing.width() * (1 + static_cast<Int>(rng() % 3));
    Int r = t.computing.height() + static_cast<Int>(rng() % 3);
    CompiledProgram cp = compile_to_pram(t, c, r);
    CHECK(run_compiled(cp) == last_row(t, c, r));
    ++compiled;
  }
  CHECK(compiled == 12);
}

TEST_CASE("templates outside the compiled class are refused") {
  const char* bad[] = {
      "#input 1:1\nA2\t{=SUM(A1:C1)}\n",               // array formula
      "#input 1:1\nA2\t=MATCH(1,A1:C1,1)\n",           // sorted match
      "#input 1:1\nB2\t=A1\n",                         // computing part not in column A
      "#input 1:1\nA2\t=IFERROR(A1,0)\n",              // IFERROR around a cell
      "#input 1:1\nA2\t=A1\nA3\t=$A2\n",               // absolute column into computed rows
      "#input 1:1\nA2\t=A1>0\n",                       // Boolean cell
      "#input 1:1\nA2\t=A1\nA3\t=A$2\n",               // absolute row into computed rows
      "#input 1:2\nA3\t=MATCH(1,A1:A2,0)\n",           // column range
  };
  for (const char* text : bad) CHECK_THROWS_AS(compile_to_pram(sheet(text), 2, 2), NotCompilableError);
  CHECK_THROWS_AS(compile_to_pram(sheet("A1\t=B1\n"), 2, 2), NotCompilableError);  // not row-directed
}
