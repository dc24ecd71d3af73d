#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sheetpram/value.hpp"

namespace sheetpram {

// Operand codes double as the spreadsheet program encoding, so their values
// are fixed.
enum class OperandKind : int {
  Const = 0, I = 1, J = 2, K = 3, S = 4, N = 5, M = 6,
  MemI = 7, MemJ = 8, MemK = 9, MemS = 10,
  InI = 11, InJ = 12, InK = 13, InS = 14,
};

struct Operand {
  OperandKind kind = OperandKind::Const;
  Int value = 0;  // Const only

  bool reads_shared() const { return kind >= OperandKind::MemI && kind <= OperandKind::MemS; }
  bool reads_input() const { return kind >= OperandKind::InI; }
  bool operator==(const Operand&) const = default;
};

enum class Form : int { Assign = 1, AssignOp = 2, Store = 3, StoreOp = 4, Jump = 5 };
enum class ArithOp : int { Add = 1, Sub = 2, Mul = 3, Div = 4 };

// x := u | x := u o v | M[x] := u | M[x] := u o v | if u < v goto line
struct Instr {
  Form form = Form::Assign;
  int target = 1;  // 1..3 for i, j, k
  Operand u, v;
  ArithOp op = ArithOp::Add;
  int line = 0;  // Jump target, 1-based

  bool operator==(const Instr&) const = default;
};

struct Program {
  std::vector<Instr> lines;
  std::size_t size() const { return lines.size(); }
};

// One instruction per line, tokens separated by spaces, lines numbered from 1.
// Blank lines and lines starting with '#' are skipped and not numbered.
// Throws ParseError (message names the line).
Program parse_program(std::string_view text);
std::string to_string(const Operand& o);
std::string to_string(const Instr& in);
std::string to_string(const Program& p);

struct PramFault : SheetError {
  PramFault(const std::string& msg, Int proc, Int time)
      : SheetError(msg + " (processor " + std::to_string(proc) + ", step " + std::to_string(time) + ")"),
        processor(proc), step(time) {}
  Int processor;
  Int step;
};

enum class FaultPolicy { Hard, ReadZero };

struct ProcState {
  Int i = 0, j = 0, k = 0;
  Int pc = 1;
  bool halted = false;

  bool operator==(const ProcState&) const = default;
};

struct PramState {
  Int time = 0;
  std::vector<ProcState> procs;  // processor s at index s-1
  std::vector<Int> shared;       // M[a] at index a-1
  bool all_halted() const;
  bool operator==(const PramState& o) const { return procs == o.procs && shared == o.shared; }
};

// I[1] holds the length of the whole input including itself.
std::vector<Int> make_input(const std::vector<Int>& payload);

struct Access {
  Int cell;   // shared address
  Int proc;   // serial number
  bool write;
};

// Shared-memory accesses performed by the step that starts from `st`.
std::vector<Access> accesses_of(const PramState& st, const Program& prog);

class Pram {
 public:
  Pram(Program prog, std::vector<Int> input, Int p, Int m, FaultPolicy policy = FaultPolicy::Hard);

  const PramState& state() const { return st_; }
  const Program& program() const { return prog_; }
  // Shared-memory accesses the next step will perform.
  std::vector<Access> next_accesses() const { return accesses_of(st_, prog_); }
  void step();
  // Steps until every processor has halted or `max_steps` steps were taken.
  void run(Int max_steps);

 private:
  Int operand(const ProcState& ps, Int s, const Operand& o) const;
  Int shared_addr(const ProcState& ps, Int s, const Operand& o) const;
  Int reg(const ProcState& ps, int r) const { return r == 1 ? ps.i : r == 2 ? ps.j : ps.k; }

  Program prog_;
  std::vector<Int> input_;
  Int p_, m_;
  FaultPolicy policy_;
  PramState st_;
};

// Trace of states 0..n, stopping early once every processor has halted.
std::vector<PramState> run(const Program& prog, const std::vector<Int>& input, Int p, Int m, Int t_max,
                           FaultPolicy policy = FaultPolicy::Hard);

struct ErewViolation {
  Int step;  // index of the state the step starts from
  Int cell;
  Int first_proc, second_proc;
  bool involves_write;
};

struct ErewReport {
  bool clean = true;
  std::uint64_t violations = 0;
  std::vector<ErewViolation> examples;  // first few only
};

// Flags any step in which two processors touch the same shared cell.
ErewReport check_erew(const std::vector<PramState>& trace, const Program& prog);

// Incremental form used for long runs that are not kept in memory.
class ErewChecker {
 public:
  void observe(Int step, std::vector<Access> accesses);
  const ErewReport& report() const { return rep_; }

 private:
  ErewReport rep_;
};

}  // namespace sheetpram
