#include "sheetpram/bridge.hpp"

#include <algorithm>
#include <functional>

namespace sheetpram {

ProgramEncoding encode_program(const Program& prog) {
  ProgramEncoding enc;
  enc.rows.assign(4, std::vector<Int>(2 * prog.size(), 0));
  for (std::size_t l = 0; l < prog.size(); ++l) {
    const Instr& in = prog.lines[l];
    std::size_t a = 2 * l, b = 2 * l + 1;
    enc.rows[0][a] = static_cast<Int>(in.form);
    enc.rows[0][b] = in.form == Form::Jump ? in.line : in.target;
    enc.rows[1][a] = static_cast<Int>(in.u.kind);
    enc.rows[1][b] = in.u.value;
    bool binary = in.form == Form::AssignOp || in.form == Form::StoreOp || in.form == Form::Jump;
    if (binary) {
      enc.rows[2][a] = static_cast<Int>(in.v.kind);
      enc.rows[2][b] = in.v.value;
    }
    if (in.form == Form::AssignOp || in.form == Form::StoreOp) enc.rows[3][a] = static_cast<Int>(in.op);
  }
  return enc;
}

Program decode_program(const ProgramEncoding& enc) {
  Program prog;
  if (enc.rows.size() != 4) throw DimensionError("program encoding needs 4 rows");
  for (Int l = 0; l < enc.instructions(); ++l) {
    auto at = [&](int row, Int col) { return enc.rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(2 * l + col)]; };
    if (at(0, 0) == 0) break;
    if (at(0, 0) < 1 || at(0, 0) > 5) throw DimensionError("bad form code " + std::to_string(at(0, 0)));
    Instr in;
    in.form = static_cast<Form>(at(0, 0));
    if (in.form == Form::Jump) in.line = static_cast<int>(at(0, 1));
    else in.target = static_cast<int>(at(0, 1));
    auto operand = [&](int row) {
      Int kind = at(row, 0);
      if (kind < 0 || kind > 14) throw DimensionError("bad operand kind " + std::to_string(kind));
      Operand o{static_cast<OperandKind>(kind), 0};
      if (o.kind == OperandKind::Const) o.value = at(row, 1);
      return o;
    };
    in.u = operand(1);
    if (in.form == Form::AssignOp || in.form == Form::StoreOp || in.form == Form::Jump) in.v = operand(2);
    if (in.form == Form::AssignOp || in.form == Form::StoreOp) in.op = static_cast<ArithOp>(at(3, 0));
    prog.lines.push_back(in);
  }
  return prog;
}

namespace {

// Field `f` (0 or 1) of the instruction selected by counter cell `pc0` from
// program row `row`.
std::string field(Int row, const std::string& pc0, int f) {
  std::string r = "$" + std::to_string(row) + ":$" + std::to_string(row);
  return "INDEX(" + r + ",2*" + pc0 + "+" + std::to_string(f + 1) + ")";
}

std::string choose_operand(const std::string& kind, const std::string& pay, const std::string& i, const std::string& j,
                           const std::string& k, const std::string& s, const std::string& n,
                           const std::function<std::string(const std::string&)>& mem) {
  auto in = [](const std::string& x) { return "INDEX($1:$1," + x + ")"; };
  return "CHOOSE(" + kind + "+1," + pay + "," + i + "," + j + "," + k + "," + s + "," + n + "," + n + "," + mem(i) + "," +
         mem(j) + "," + mem(k) + "," + mem(s) + "," + in(i) + "," + in(j) + "," + in(k) + "," + in(s) + ")";
}

void paste(Template& t, const ProgramEncoding& enc, Int first_row, const std::vector<Int>& input) {
  for (std::size_t c = 0; c < input.size(); ++c) t.set_input({static_cast<Int>(c) + 1, 1}, input[c]);
  for (std::size_t r = 0; r < enc.rows.size(); ++r)
    for (std::size_t c = 0; c < enc.rows[r].size(); ++c)
      if (enc.rows[r][c] != 0) t.set_input({static_cast<Int>(c) + 1, first_row + static_cast<Int>(r)}, enc.rows[r][c]);
}

PramState read_state(const CellSource& v, const Program& prog, Int p, Int first_col, Int base_row) {
  PramState st;
  const Int lines = static_cast<Int>(prog.size());
  auto get = [&](Int col, Int row) {
    Value x = v.value({col, row});
    if (!x.is_int()) throw SheetError("snapshot cell " + to_a1({col, row}) + " holds " + x.to_string());
    return x.as_int();
  };
  for (Int s = 0; s < p; ++s) {
    Int col = first_col + s;
    ProcState ps;
    ps.i = get(col, base_row + kRegI);
    ps.j = get(col, base_row + kRegJ);
    ps.k = get(col, base_row + kRegK);
    ps.pc = get(col, base_row + kCounter) + 1;
    ps.halted = ps.pc > lines;
    st.procs.push_back(ps);
    st.shared.push_back(get(col, base_row + kShared));
  }
  return st;
}

}  // namespace

Template gen_universal() {
  Template t;
  t.computing = parse_region("A11:A20");
  t.input_part = {parse_region("1:10")};
  // previous state: A6 i, A7 j, A8 k, A9 pc-1, A10 shared cell
  const std::string f = field(2, "A9", 0), x = field(2, "A9", 1);
  const std::string n = "MATCH(2,11:11,1)";
  auto mem = [](const std::string& a) { return "INDEX(10:10," + a + ")"; };
  auto operand = [&](Int row) {
    return "=" + choose_operand(field(row, "A9", 0), field(row, "A9", 1), "A6", "A7", "A8", "COLUMN()", n, mem);
  };
  t.set_formula(parse_addr("A11"), "=1");
  t.set_formula(parse_addr("A12"), operand(3));
  t.set_formula(parse_addr("A13"), operand(4));
  const std::string addr = "CHOOSE(" + x + ",A6,A7,A8)";
  t.set_formula(parse_addr("A14"), "=IF(OR(" + f + "=3," + f + "=4),IF(AND(" + addr + ">=1," + addr + "<=" + n + ")," +
                                       addr + ",0),0)");
  const std::string op = field(5, "A9", 0);
  t.set_formula(parse_addr("A15"), "=IF(OR(" + f + "=2," + f + "=4),CHOOSE(" + op + ",A12+A13,A12-A13,A12*A13,A12/A13),A12)");
  const char* regs[] = {"A6", "A7", "A8"};
  for (int r = 0; r < 3; ++r)
    t.set_formula({1, 16 + r}, "=IF(AND(OR(" + f + "=1," + f + "=2)," + x + "=" + std::to_string(r + 1) + "),A15," +
                                   regs[r] + ")");
  t.set_formula(parse_addr("A19"), "=IF(" + f + "=0,A9,IF(" + f + "=5,IF(A12<A13," + x + "-1,A9+1),A9+1))");
  // leftmost announcement wins: lowest serial number
  t.set_formula(parse_addr("A20"), "=IFERROR(INDEX(15:15,MATCH(COLUMN(),14:14,0)),A10)");
  t.validate();
  return t;
}

Template load_universal(const Program& prog, const std::vector<Int>& input) {
  Template t = gen_universal();
  paste(t, encode_program(prog), 2, input);
  return t;
}

Grid fill_universal(const Template& loaded, Int p, Int t) {
  return fill_template(loaded, p, 10 * std::max<Int>(t, 1));
}

PramState universal_snapshot(const CellSource& values, const Program& prog, Int p, Int t) {
  return read_state(values, prog, p, 1, 10 * t);
}

Template gen_flexible() {
  Template t;
  t.computing = parse_region("B13:B22");
  t.input_part = {parse_region("1:12"), parse_region("A:A")};
  const std::string P = "$A$2";
  const std::string blk = "((COLUMN()-2)/" + P + ")";
  const std::string sp = "(COLUMN()-1-" + blk + "*" + P + ")";
  // the last full block of the previous group sits at (F-1)*P + 1 .. F*P
  const std::string last = "((MATCH(2,13:13,1)-1)/" + P + "-1)*" + P;
  auto left = [&](Int row) {
    std::string r = std::to_string(row);
    return "INDEX($A" + r + ":A" + r + ",COLUMN()-" + P + ")";
  };
  auto copy = [&](Int row) { return "INDEX(" + std::to_string(row) + ":" + std::to_string(row) + "," + last + "+" + sp + "+1)"; };
  // shared cell a before this block's step: the previous block's winning
  // announcement, else the previous block's memory row
  auto mem = [&](const std::string& a) {
    return "IF(" + blk + "=0,INDEX(12:12," + last + "+" + a + "+1),IFERROR(INDEX($A17:A17,MATCH((" + blk + "-1)*" + P + "+" +
           a + ",$A16:A16,0)),INDEX($A22:A22,(" + blk + "-1)*" + P + "+" + a + "+1)))";
  };
  // own state: B18 i, B19 j, B20 k, B21 pc-1, B22 shared cell
  const std::string f = field(4, "B21", 0), x = field(4, "B21", 1);
  auto operand = [&](Int row) {
    return "=" + choose_operand(field(row, "B21", 0), field(row, "B21", 1), "B18", "B19", "B20", sp, P, mem);
  };
  t.set_formula(parse_addr("B13"), "=1");
  t.set_formula(parse_addr("B14"), operand(5));
  t.set_formula(parse_addr("B15"), operand(6));
  const std::string addr = "CHOOSE(" + x + ",B18,B19,B20)";
  t.set_formula(parse_addr("B16"), "=IF(OR(" + f + "=3," + f + "=4),IF(AND(" + addr + ">=1," + addr + "<=" + P + ")," + blk +
                                       "*" + P + "+" + addr + ",0),0)");
  const std::string op = field(7, "B21", 0);
  t.set_formula(parse_addr("B17"), "=IF(OR(" + f + "=2," + f + "=4),CHOOSE(" + op + ",B14+B15,B14-B15,B14*B15,B14/B15),B14)");
  // the previous block's instruction
  const std::string lpc = left(21);
  const std::string lf = field(4, lpc, 0), lx = field(4, lpc, 1);
  for (int r = 0; r < 3; ++r) {
    Int row = 18 + r;
    t.set_formula({2, row}, "=IF(" + blk + "=0," + copy(row - 10) + ",IF(AND(OR(" + lf + "=1," + lf + "=2)," + lx + "=" +
                                std::to_string(r + 1) + ")," + left(17) + "," + left(row) + "))");
  }
  t.set_formula(parse_addr("B21"), "=IF(" + blk + "=0," + copy(11) + ",IF(" + lf + "=0," + lpc + ",IF(" + lf + "=5,IF(" +
                                       left(14) + "<" + left(15) + "," + lx + "-1," + lpc + "+1)," + lpc + "+1)))");
  t.set_formula(parse_addr("B22"), "=IF(" + blk + "=0," + copy(12) + ",IFERROR(INDEX($A17:A17,MATCH((" + blk + "-1)*" + P +
                                       "+" + sp + ",$A16:A16,0))," + left(22) + "))");
  t.validate();
  return t;
}

Template load_flexible(const Program& prog, const std::vector<Int>& input, Int p) {
  if (p < 1) throw DimensionError("need at least one processor");
  Template t = gen_flexible();
  paste(t, encode_program(prog), 4, input);
  t.set_input({1, 2}, p);
  return t;
}

Grid fill_flexible(const Template& loaded, Int q, Int t) {
  return fill_template(loaded, q, 10 * std::max<Int>(t, 1));
}

Int flexible_steps(Int p, Int q, Int t) { return t * (q / p - 1); }

PramState flexible_window(const CellSource& values, const Program& prog, Int p, Int q, Int t) {
  if (q < p) throw DimensionError("q must be at least p");
  Int first = q - q % p - p + 1;  // computing-part column number
  return read_state(values, prog, p, first + 1, 10 * t + 2);
}

}  // namespace sheetpram
