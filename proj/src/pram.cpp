#include "sheetpram/pram.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace sheetpram {

namespace {

const char* kRegNames[] = {"", "i", "j", "k"};

int reg_index(std::string_view t) {
  if (t == "i") return 1;
  if (t == "j") return 2;
  if (t == "k") return 3;
  return 0;
}

Operand parse_operand(const std::string& t) {
  static const std::unordered_map<std::string, OperandKind> names = {
      {"i", OperandKind::I},       {"j", OperandKind::J},       {"k", OperandKind::K},
      {"s", OperandKind::S},       {"N", OperandKind::N},       {"M", OperandKind::M},
      {"M[i]", OperandKind::MemI}, {"M[j]", OperandKind::MemJ}, {"M[k]", OperandKind::MemK},
      {"M[s]", OperandKind::MemS}, {"I[i]", OperandKind::InI},  {"I[j]", OperandKind::InJ},
      {"I[k]", OperandKind::InK},  {"I[s]", OperandKind::InS},
  };
  auto it = names.find(t);
  if (it != names.end()) return {it->second, 0};
  std::size_t used = 0;
  Int v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size()) throw std::invalid_argument("bad operand '" + t + "'");
  return {OperandKind::Const, v};
}

ArithOp parse_op(const std::string& t) {
  if (t == "+") return ArithOp::Add;
  if (t == "-") return ArithOp::Sub;
  if (t == "*") return ArithOp::Mul;
  if (t == "/") return ArithOp::Div;
  throw std::invalid_argument("bad operator '" + t + "'");
}

Instr parse_line(const std::vector<std::string>& tok) {
  Instr in;
  if (tok.empty()) throw std::invalid_argument("empty instruction");
  if (tok[0] == "if") {
    if (tok.size() != 6 || tok[2] != "<" || tok[4] != "goto") throw std::invalid_argument("expected 'if u < v goto l'");
    in.form = Form::Jump;
    in.u = parse_operand(tok[1]);
    in.v = parse_operand(tok[3]);
    Operand l = parse_operand(tok[5]);
    if (l.kind != OperandKind::Const) throw std::invalid_argument("goto target must be a number");
    in.line = static_cast<int>(l.value);
    return in;
  }
  if (tok.size() != 3 && tok.size() != 5) throw std::invalid_argument("expected 'x := u' or 'x := u o v'");
  if (tok[1] != ":=") throw std::invalid_argument("expected ':='");
  bool store = false;
  const std::string& x = tok[0];
  if (x.size() == 4 && x.starts_with("M[") && x.back() == ']') {
    store = true;
    in.target = reg_index(x.substr(2, 1));
  } else {
    in.target = reg_index(x);
  }
  if (in.target == 0) throw std::invalid_argument("bad target '" + x + "'");
  in.u = parse_operand(tok[2]);
  if (tok.size() == 5) {
    in.op = parse_op(tok[3]);
    in.v = parse_operand(tok[4]);
    in.form = store ? Form::StoreOp : Form::AssignOp;
  } else {
    in.form = store ? Form::Store : Form::Assign;
  }
  return in;
}

const char* op_text(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

}  // namespace

Program parse_program(std::string_view text) {
  Program prog;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    try {
      prog.lines.push_back(parse_line(tok));
    } catch (const std::invalid_argument& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what(), 0);
    }
  }
  for (std::size_t n = 0; n < prog.lines.size(); ++n) {
    const Instr& ins = prog.lines[n];
    if (ins.form == Form::Jump && (ins.line < 1 || ins.line > static_cast<int>(prog.lines.size())))
      throw ParseError("instruction " + std::to_string(n + 1) + ": goto target " + std::to_string(ins.line) +
                           " out of range",
                       0);
  }
  return prog;
}

std::string to_string(const Operand& o) {
  static const char* names[] = {"",     "i",    "j",    "k",    "s",    "N",    "M",   "M[i]",
                                "M[j]", "M[k]", "M[s]", "I[i]", "I[j]", "I[k]", "I[s]"};
  if (o.kind == OperandKind::Const) return std::to_string(o.value);
  return names[static_cast<int>(o.kind)];
}

std::string to_string(const Instr& in) {
  std::string x = kRegNames[in.target];
  switch (in.form) {
    case Form::Assign: return x + " := " + to_string(in.u);
    case Form::AssignOp: return x + " := " + to_string(in.u) + " " + op_text(in.op) + " " + to_string(in.v);
    case Form::Store: return "M[" + x + "] := " + to_string(in.u);
    case Form::StoreOp:
      return "M[" + x + "] := " + to_string(in.u) + " " + op_text(in.op) + " " + to_string(in.v);
    case Form::Jump: return "if " + to_string(in.u) + " < " + to_string(in.v) + " goto " + std::to_string(in.line);
  }
  return "";
}

std::string to_string(const Program& p) {
  std::string out;
  for (const auto& in : p.lines) out += to_string(in) + "\n";
  return out;
}

bool PramState::all_halted() const {
  return std::all_of(procs.begin(), procs.end(), [](const ProcState& p) { return p.halted; });
}

std::vector<Int> make_input(const std::vector<Int>& payload) {
  std::vector<Int> in;
  in.reserve(payload.size() + 1);
  in.push_back(static_cast<Int>(payload.size()) + 1);
  in.insert(in.end(), payload.begin(), payload.end());
  return in;
}

namespace {

Int reg_of(const ProcState& ps, OperandKind k) {
  switch (k) {
    case OperandKind::MemI: case OperandKind::InI: return ps.i;
    case OperandKind::MemJ: case OperandKind::InJ: return ps.j;
    case OperandKind::MemK: case OperandKind::InK: return ps.k;
    default: return 0;
  }
}

}  // namespace

std::vector<Access> accesses_of(const PramState& st, const Program& prog) {
  std::vector<Access> out;
  const Int m = static_cast<Int>(st.shared.size());
  for (std::size_t n = 0; n < st.procs.size(); ++n) {
    const ProcState& ps = st.procs[n];
    if (ps.halted) continue;
    const Int s = static_cast<Int>(n) + 1;
    const Instr& in = prog.lines[static_cast<std::size_t>(ps.pc - 1)];
    auto read = [&](const Operand& o) {
      if (!o.reads_shared()) return;
      Int a = o.kind == OperandKind::MemS ? s : reg_of(ps, o.kind);
      if (a >= 1 && a <= m) out.push_back({a, s, false});
    };
    read(in.u);
    if (in.form == Form::AssignOp || in.form == Form::StoreOp || in.form == Form::Jump) read(in.v);
    if (in.form == Form::Store || in.form == Form::StoreOp) {
      Int a = in.target == 1 ? ps.i : in.target == 2 ? ps.j : ps.k;
      if (a >= 1 && a <= m) out.push_back({a, s, true});
    }
  }
  return out;
}

Pram::Pram(Program prog, std::vector<Int> input, Int p, Int m, FaultPolicy policy)
    : prog_(std::move(prog)), input_(std::move(input)), p_(p), m_(m), policy_(policy) {
  if (p < 1) throw DimensionError("need at least one processor");
  if (m < 0) throw DimensionError("negative memory size");
  if (input_.empty() || input_[0] != static_cast<Int>(input_.size()))
    throw DimensionError("I[1] must equal the input length including itself");
  st_.procs.assign(static_cast<std::size_t>(p), ProcState{});
  st_.shared.assign(static_cast<std::size_t>(m), 0);
  bool empty = prog_.lines.empty();
  for (auto& ps : st_.procs) ps.halted = empty;
}

Int Pram::shared_addr(const ProcState& ps, Int s, const Operand& o) const {
  return o.kind == OperandKind::MemS || o.kind == OperandKind::InS ? s : reg_of(ps, o.kind);
}

Int Pram::operand(const ProcState& ps, Int s, const Operand& o) const {
  switch (o.kind) {
    case OperandKind::Const: return o.value;
    case OperandKind::I: return ps.i;
    case OperandKind::J: return ps.j;
    case OperandKind::K: return ps.k;
    case OperandKind::S: return s;
    case OperandKind::N: return p_;
    case OperandKind::M: return m_;
    case OperandKind::MemI: case OperandKind::MemJ: case OperandKind::MemK: case OperandKind::MemS: {
      Int a = shared_addr(ps, s, o);
      if (a < 1 || a > m_) {
        if (policy_ == FaultPolicy::ReadZero) return 0;
        throw PramFault("shared read M[" + std::to_string(a) + "] out of range", s, st_.time);
      }
      return st_.shared[static_cast<std::size_t>(a - 1)];
    }
    default: {
      Int a = shared_addr(ps, s, o);
      if (a < 1 || a > input_[0]) {
        if (policy_ == FaultPolicy::ReadZero) return 0;
        throw PramFault("input read I[" + std::to_string(a) + "] out of range", s, st_.time);
      }
      return input_[static_cast<std::size_t>(a - 1)];
    }
  }
}

void Pram::step() {
  struct Write {
    Int addr, value, proc;
  };
  std::vector<Write> writes;
  std::vector<ProcState> next = st_.procs;
  const Int lines = static_cast<Int>(prog_.lines.size());
  for (Int s = 1; s <= p_; ++s) {
    const ProcState& ps = st_.procs[static_cast<std::size_t>(s - 1)];
    if (ps.halted) continue;
    ProcState& ns = next[static_cast<std::size_t>(s - 1)];
    const Instr& in = prog_.lines[static_cast<std::size_t>(ps.pc - 1)];
    auto apply = [&](Int a, Int b) -> Int {
      switch (in.op) {
        case ArithOp::Add: return arith::add(a, b);
        case ArithOp::Sub: return arith::sub(a, b);
        case ArithOp::Mul: return arith::mul(a, b);
        case ArithOp::Div:
          if (b == 0) throw PramFault("division by zero", s, st_.time);
          return arith::div(a, b);
      }
      return 0;
    };
    Int value = 0;
    switch (in.form) {
      case Form::Assign: case Form::Store: value = operand(ps, s, in.u); break;
      case Form::AssignOp: case Form::StoreOp: value = apply(operand(ps, s, in.u), operand(ps, s, in.v)); break;
      case Form::Jump: break;
    }
    ns.pc = ps.pc + 1;
    switch (in.form) {
      case Form::Assign: case Form::AssignOp:
        (in.target == 1 ? ns.i : in.target == 2 ? ns.j : ns.k) = value;
        break;
      case Form::Store: case Form::StoreOp:
        writes.push_back({reg(ps, in.target), value, s});
        break;
      case Form::Jump:
        if (operand(ps, s, in.u) < operand(ps, s, in.v)) ns.pc = in.line;
        break;
    }
    if (ns.pc > lines) ns.halted = true;
  }
  // lowest serial number wins; writes arrive in serial order
  std::vector<bool> written(static_cast<std::size_t>(m_), false);
  for (const auto& w : writes) {
    if (w.addr < 1 || w.addr > m_) continue;
    auto idx = static_cast<std::size_t>(w.addr - 1);
    if (written[idx]) continue;
    written[idx] = true;
    st_.shared[idx] = w.value;
  }
  st_.procs = std::move(next);
  ++st_.time;
}

void Pram::run(Int max_steps) {
  for (Int t = 0; t < max_steps && !st_.all_halted(); ++t) step();
}

std::vector<PramState> run(const Program& prog, const std::vector<Int>& input, Int p, Int m, Int t_max,
                           FaultPolicy policy) {
  Pram machine(prog, input, p, m, policy);
  std::vector<PramState> trace{machine.state()};
  for (Int t = 0; t < t_max && !machine.state().all_halted(); ++t) {
    machine.step();
    trace.push_back(machine.state());
  }
  return trace;
}

void ErewChecker::observe(Int step, std::vector<Access> acc) {
  std::sort(acc.begin(), acc.end(), [](const Access& a, const Access& b) {
    return a.cell != b.cell ? a.cell < b.cell : a.proc < b.proc;
  });
  for (std::size_t n = 0; n < acc.size();) {
    std::size_t e = n;
    bool any_write = false;
    for (; e < acc.size() && acc[e].cell == acc[n].cell; ++e) any_write = any_write || acc[e].write;
    for (std::size_t q = n + 1; q < e; ++q) {
      if (acc[q].proc == acc[n].proc) continue;
      ++rep_.violations;
      rep_.clean = false;
      if (rep_.examples.size() < 8) rep_.examples.push_back({step, acc[n].cell, acc[n].proc, acc[q].proc, any_write});
      break;
    }
    n = e;
  }
}

ErewReport check_erew(const std::vector<PramState>& trace, const Program& prog) {
  ErewChecker chk;
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) chk.observe(static_cast<Int>(t), accesses_of(trace[t], prog));
  return chk.report();
}

}  // namespace sheetpram
