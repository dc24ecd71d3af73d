#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "sheetpram/pram.hpp"

using namespace sheetpram;

namespace {

PramState final_state(const char* src, std::vector<Int> payload, Int p, Int m, Int t = 1000) {
  return run(parse_program(src), make_input(payload), p, m, t).back();
}

}  // namespace

TEST_CASE("parse program forms") {
  Program prog = parse_program("i := s\nM[i] := i + j\nif i < N goto 1\nk := I[k] / -3\nj := M[s]\n");
  REQUIRE(prog.size() == 5);
  CHECK(prog.lines[0].form == Form::Assign);
  CHECK(prog.lines[0].u.kind == OperandKind::S);
  CHECK(prog.lines[1].form == Form::StoreOp);
  CHECK(prog.lines[1].target == 1);
  CHECK(prog.lines[2].form == Form::Jump);
  CHECK(prog.lines[2].line == 1);
  CHECK(prog.lines[3].v.value == -3);
  CHECK(to_string(prog) == "i := s\nM[i] := i + j\nif i < N goto 1\nk := I[k] / -3\nj := M[s]\n");
  CHECK_THROWS_AS(parse_program("if i < N goto 2\n"), ParseError);
  CHECK_THROWS_AS(parse_program("if i < N goto 0\n"), ParseError);
  CHECK_THROWS_AS(parse_program("s := 1\n"), ParseError);
  CHECK_THROWS_AS(parse_program("M[s] := 1\n"), ParseError);
  CHECK_THROWS_AS(parse_program("i = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_program("i := 1 % 2\n"), ParseError);
}

TEST_CASE("concurrent writes: the processor with the lowest serial number wins") {
  // "the one written by the processor with the lowest serial number"
  Program prog = parse_program("i := 3\nM[i] := s\n");
  auto trace = run(prog, make_input({}), 2, 4, 10);
  CHECK(trace.back().shared[2] == 1);
  auto rep = check_erew(trace, prog);
  CHECK_FALSE(rep.clean);
  REQUIRE(!rep.examples.empty());
  CHECK(rep.examples[0].cell == 3);
  CHECK(rep.examples[0].involves_write);
}

TEST_CASE("reading is performed before writing") {
  // a reader in the same step as a writer gets the old value
  const char* src =
      "if 1 < s goto 4\n"
      "i := 3\n"
      "M[i] := 7\n"
      "k := 3\n"
      "j := M[k]\n";
  PramState st = final_state(src, {}, 2, 4);
  CHECK(st.procs[1].j == 0);
  CHECK(st.procs[0].j == 7);
  CHECK(st.shared[2] == 7);
}

TEST_CASE("writes outside shared memory have no effect") {
  PramState st = final_state("i := 0\nM[i] := 5\ni := 5\nM[i] := 6\ni := -2\nM[i] := 1\n", {}, 1, 4);
  CHECK(st.shared == std::vector<Int>{0, 0, 0, 0});
}

TEST_CASE("a processor halts when its counter passes the last line") {
  auto trace = run(parse_program("i := 5\n"), make_input({}), 1, 1, 100);
  REQUIRE(trace.size() == 2);
  CHECK(trace.back().procs[0].halted);
  CHECK(trace.back().procs[0].i == 5);
  CHECK(trace.back().procs[0].pc == 2);
  // a jump to the last line keeps it running
  auto loop = run(parse_program("i := i + 1\nif i < 3 goto 1\n"), make_input({}), 1, 1, 100);
  CHECK(loop.back().procs[0].i == 3);
  CHECK(loop.size() == 7);
}

TEST_CASE("initial state and empty program") {
  auto trace = run(Program{}, make_input({}), 3, 3, 10);
  REQUIRE(trace.size() == 1);
  for (const auto& ps : trace[0].procs) {
    CHECK(ps.i == 0);
    CHECK(ps.pc == 1);
  }
  CHECK(trace[0].shared == std::vector<Int>{0, 0, 0});
}

TEST_CASE("each processor writes its serial number") {
  auto trace = run(parse_program("i := s\nM[i] := s\n"), make_input({}), 4, 4, 10);
  CHECK(trace.back().shared == std::vector<Int>{1, 2, 3, 4});
  CHECK(trace.size() == 3);
  CHECK(check_erew(trace, parse_program("i := s\nM[i] := s\n")).clean);
}

TEST_CASE("broadcast read is a concurrent read") {
  Program prog = parse_program("i := 1\nj := M[i]\n");
  auto trace = run(prog, make_input({}), 4, 4, 10);
  auto rep = check_erew(trace, prog);
  CHECK_FALSE(rep.clean);
  CHECK_FALSE(rep.examples[0].involves_write);
}

TEST_CASE("parallel sum matches direct summation") {
  const char* src =
      "i := s + 1\n"
      "k := I[i]\n"
      "i := s\n"
      "M[i] := k\n"
      "j := 1\n"
      "k := s - 1\n"
      "k := k / j\n"
      "i := k / 2\n"
      "i := i * 2\n"
      "k := k - i\n"
      "k := 1 - k\n"
      "i := s + j\n"
      "k := k * M[i]\n"
      "i := s\n"
      "M[i] := M[i] + k\n"
      "j := j * 2\n"
      "if j < N goto 6\n";
  std::mt19937_64 rng(2);
  for (Int p : {3, 4, 7, 8}) {
    std::vector<Int> xs;
    for (Int n = 0; n < p; ++n) xs.push_back(static_cast<Int>(rng() % 100) - 20);
    Int direct = 0;
    for (Int x : xs) direct += x;
    auto trace = run(parse_program(src), make_input(xs), p, 2 * p, 1000);
    CHECK(trace.back().all_halted());
    CHECK(trace.back().shared[0] == direct);
    CHECK(check_erew(trace, parse_program(src)).clean);
  }
  CHECK(final_state(src, {3, 1, 4}, 3, 6).shared[0] == 8);
}

TEST_CASE("faults") {
  CHECK_THROWS_AS(final_state("i := M[i]\n", {}, 1, 2), PramFault);
  CHECK_THROWS_AS(final_state("j := 7\nj := M[i]\n", {}, 1, 2), PramFault);
  CHECK_THROWS_AS(final_state("i := 5\nj := I[i]\n", {1, 2}, 1, 2), PramFault);
  CHECK(final_state("i := 3\nj := I[i]\n", {1, 2}, 1, 2).procs[0].j == 2);
  CHECK(final_state("i := 1\nj := I[i]\n", {}, 1, 1).procs[0].j == 1);
  CHECK_THROWS_AS(final_state("i := 1 / j\n", {}, 1, 1), PramFault);
  auto lenient = run(parse_program("j := 7\nj := M[i]\n"), make_input({}), 1, 2, 10, FaultPolicy::ReadZero);
  CHECK(lenient.back().procs[0].j == 0);
  CHECK_THROWS_AS(Pram(Program{}, std::vector<Int>{5, 1}, 1, 1), DimensionError);
}

TEST_CASE("N and M constants") {
  PramState st = final_state("i := N\nj := M\nk := N * M\n", {}, 3, 5);
  CHECK(st.procs[2].i == 3);
  CHECK(st.procs[2].j == 5);
  CHECK(st.procs[0].k == 15);
}

TEST_CASE("priority outcome does not depend on the order writes are processed") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Int p = 2 + static_cast<Int>(rng() % 5), m = 3;
    // each processor stores a random value at a random address in one step
    std::vector<Int> addr(p), val(p);
    std::string src = "i := s\nj := s\n";
    for (Int s = 0; s < p; ++s) {
      addr[s] = static_cast<Int>(rng() % 5);  // 0 and 4 fall outside memory
      val[s] = static_cast<Int>(rng() % 100);
    }
    // encode per-processor choices through the input array
    std::vector<Int> payload;
    for (Int s = 0; s < p; ++s) payload.push_back(addr[s]);
    for (Int s = 0; s < p; ++s) payload.push_back(val[s]);
    src = "i := s + 1\nk := s + " + std::to_string(p + 1) + "\nj := I[k]\ni := I[i]\nM[i] := j\n";
    PramState st = final_state(src.c_str(), payload, p, m);
    std::vector<Int> order(p);
    for (Int s = 0; s < p; ++s) order[s] = s;
    for (int perm = 0; perm < 6; ++perm) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<Int> mem(m, 0), owner(m, p + 1);
      for (Int s : order) {
        Int a = addr[s];
        if (a < 1 || a > m) continue;
        if (s + 1 < owner[a - 1]) {
          owner[a - 1] = s + 1;
          mem[a - 1] = val[s];
        }
      }
      CHECK(mem == st.shared);
    }
  }
}

TEST_CASE("runs are prefix-consistent and deterministic") {
  Program prog = parse_program("i := s\nj := i * 3\nM[i] := j + M[i]\nif j < 40 goto 2\n");
  auto short_run = run(prog, make_input({}), 3, 3, 5);
  auto long_run = run(prog, make_input({}), 3, 3, 50);
  REQUIRE(short_run.size() <= long_run.size());
  for (std::size_t t = 0; t < short_run.size(); ++t) CHECK(short_run[t] == long_run[t]);
  CHECK(run(prog, make_input({}), 3, 3, 50) == long_run);
}
