#include "sheetpram/cvp.hpp"

#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "sheetpram/seqeval.hpp"

namespace sheetpram {

void CvpInstance::validate() const {
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const Gate& gate = gates[g];
    std::size_t want = gate.conn == Conn::Not ? 1 : 2;
    std::string name = "p" + std::to_string(g + 2);
    if (gate.args.size() != want) throw DimensionError(name + ": wrong number of inputs");
    for (Int a : gate.args) {
      if (a < 0 || a >= static_cast<Int>(g) + 2) throw DimensionError(name + ": operand " + std::to_string(a) + " is not defined yet");
    }
  }
}

namespace {

Int parse_arg(const std::string& s) {
  if (s == "0" || s == "false") return 0;
  if (s == "1" || s == "true") return 1;
  if (s.size() > 1 && s[0] == 'p') return std::stoll(s.substr(1));
  throw std::invalid_argument("bad operand '" + s + "'");
}

std::string arg_text(Int a) { return a < 2 ? std::to_string(a) : "p" + std::to_string(a); }

}  // namespace

CvpInstance parse_cvp(std::string_view text) {
  static const std::regex line_re(R"(^\s*p(\d+)\s*:=\s*(and|or|not)\s*\(\s*(\w+)\s*(?:,\s*(\w+)\s*)?\)\s*$)");
  CvpInstance inst;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) throw ParseError("line " + std::to_string(lineno) + ": expected 'p<i> := <conn>(<arg>,<arg>)'", 0);
    if (std::stoll(m[1]) != inst.size() + 2)
      throw ParseError("line " + std::to_string(lineno) + ": expected variable p" + std::to_string(inst.size() + 2), 0);
    Gate g;
    g.conn = m[2] == "and" ? Conn::And : m[2] == "or" ? Conn::Or : Conn::Not;
    try {
      g.args.push_back(parse_arg(m[3]));
      if (m[4].matched) g.args.push_back(parse_arg(m[4]));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what(), 0);
    }
    inst.gates.push_back(std::move(g));
  }
  try {
    inst.validate();
  } catch (const DimensionError& e) {
    throw ParseError(e.what(), 0);
  }
  return inst;
}

CvpInstance read_cvp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SheetError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_cvp(buf.str());
}

std::string to_string(const CvpInstance& inst) {
  std::string out;
  for (std::size_t g = 0; g < inst.gates.size(); ++g) {
    const Gate& gate = inst.gates[g];
    out += "p" + std::to_string(g + 2) + " := ";
    out += gate.conn == Conn::And ? "and(" : gate.conn == Conn::Or ? "or(" : "not(";
    for (std::size_t a = 0; a < gate.args.size(); ++a) out += (a ? "," : "") + arg_text(gate.args[a]);
    out += ")\n";
  }
  return out;
}

namespace {

int apply_gate(Conn c, int x, int y) {
  switch (c) {
    case Conn::And: return x & y;
    case Conn::Or: return x | y;
    case Conn::Not: return 1 - x;
  }
  return 0;
}

}  // namespace

int cvp_solve(const CvpInstance& inst) {
  inst.validate();
  if (inst.gates.empty()) throw DimensionError("empty instance");
  std::vector<int> val{0, 1};
  for (const Gate& g : inst.gates) {
    int x = val[static_cast<std::size_t>(g.args[0])];
    int y = g.args.size() > 1 ? val[static_cast<std::size_t>(g.args[1])] : 0;
    val.push_back(apply_gate(g.conn, x, y));
  }
  return val.back();
}

int cvp_solve_recursive(const CvpInstance& inst) {
  inst.validate();
  if (inst.gates.empty()) throw DimensionError("empty instance");
  std::vector<int> memo(inst.gates.size() + 2, -1);
  memo[0] = 0;
  memo[1] = 1;
  auto value = [&](auto& self, Int v) -> int {
    int& slot = memo[static_cast<std::size_t>(v)];
    if (slot >= 0) return slot;
    const Gate& g = inst.gates[static_cast<std::size_t>(v - 2)];
    int x = self(self, g.args[0]);
    int y = g.args.size() > 1 ? self(self, g.args[1]) : 0;
    return slot = apply_gate(g.conn, x, y);
  };
  return value(value, inst.size() + 1);
}

CvpInstance gen_random(Int n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("instance size must be positive");
  std::mt19937_64 rng(seed);
  CvpInstance inst;
  for (Int g = 0; g < n; ++g) {
    std::uniform_int_distribution<int> conn(1, 3);
    std::uniform_int_distribution<Int> arg(0, g + 1);  // 0, 1 or p2..p(g+1)
    Gate gate;
    gate.conn = static_cast<Conn>(conn(rng));
    gate.args.push_back(arg(rng));
    if (gate.conn != Conn::Not) gate.args.push_back(arg(rng));
    inst.gates.push_back(std::move(gate));
  }
  return inst;
}

namespace {

std::string col(Int c) { return column_name(c); }

// Input cells for gate k (1-based): code, first and second operand.
template <class Place>
void place_gates(Template& t, const CvpInstance& inst, Place at) {
  for (Int k = 1; k <= inst.size(); ++k) {
    const Gate& g = inst.gates[static_cast<std::size_t>(k - 1)];
    t.set_input(at(k, 0), static_cast<Int>(g.conn));
    t.set_input(at(k, 1), g.args[0]);
    if (g.args.size() > 1) t.set_input(at(k, 2), g.args[1]);
  }
}

}  // namespace

CvpEncoding encode_s4(const CvpInstance& inst, S4Orientation orient) {
  inst.validate();
  const Int n = inst.size();
  CvpEncoding enc;
  Template& t = enc.tmpl;
  if (orient == S4Orientation::Rows) {
    // gate k in row k+1: code, operands in A:C; operand values, and, or,
    // not and the selected result in D:I. Row 1 is left empty so the lookup
    // range always ends above the current row.
    t.computing = parse_region("D2:I2");
    t.input_part = {parse_region("A:C")};
    place_gates(t, inst, [](Int k, Int f) { return CellAddr{1 + f, k + 1}; });
    t.set_formula(parse_addr("D2"), "=IF($B2<2,$B2,INDEX($D$1:I1,$B2,6))");
    t.set_formula(parse_addr("E2"), "=IF($C2<2,$C2,INDEX($D$1:I1,$C2,6))");
    t.set_formula(parse_addr("F2"), "=D2*E2");
    t.set_formula(parse_addr("G2"), "=IF(D2+E2>0,1,0)");
    t.set_formula(parse_addr("H2"), "=1-D2");
    t.set_formula(parse_addr("I2"), "=CHOOSE($A2,F2,G2,H2)");
    enc.cols = 6;
    enc.rows = n;
    enc.answer = {9, n + 1};
    t.output = OutputPart::LastRow;
  } else {
    t.computing = parse_region("B4:B9");
    t.input_part = {parse_region("1:3")};
    place_gates(t, inst, [](Int k, Int f) { return CellAddr{k + 1, 1 + f}; });
    t.set_formula(parse_addr("B4"), "=IF(B$2<2,B$2,INDEX($A$4:A9,6,B$2))");
    t.set_formula(parse_addr("B5"), "=IF(B$3<2,B$3,INDEX($A$4:A9,6,B$3))");
    t.set_formula(parse_addr("B6"), "=B4*B5");
    t.set_formula(parse_addr("B7"), "=IF(B4+B5>0,1,0)");
    t.set_formula(parse_addr("B8"), "=1-B4");
    t.set_formula(parse_addr("B9"), "=CHOOSE(B$1,B6,B7,B8)");
    enc.cols = n;
    enc.rows = 6;
    enc.answer = {n + 1, 9};
    t.output = OutputPart::LastColumn;
  }
  t.validate();
  return enc;
}

CvpEncoding encode_s5(const CvpInstance& inst, Int c, Int r) {
  inst.validate();
  const Int n = inst.size();
  if (c < 1 || r < 1 || c * r != n)
    throw DimensionError("instance of size " + std::to_string(n) + " does not pack into " + std::to_string(c) + "x" +
                         std::to_string(r) + " blocks");
  // Gate k = a*c + b + 1 sits in block (a, b) at E2 + (2b, 4a):
  //   E2 code   F2 operand 1
  //   E3 val 2  F3 val 1
  //   E4 and    F4 or
  //   E5 operand 2  F5 result
  // Column D and row 1 stay empty so lookup ranges never start inside a block.
  CvpEncoding enc;
  Template& t = enc.tmpl;
  t.computing = parse_region("E2:F5");
  t.input_part = {parse_region("A:C")};
  place_gates(t, inst, [](Int k, Int f) { return CellAddr{1 + f, k + 1}; });
  const std::string cs = std::to_string(c), last = std::to_string(n + 1);
  const std::string k = "((ROW()-2)/4)*" + cs + "+(COLUMN()-5)/2+1";
  auto field = [&](const char* colname) { return "=INDEX($" + std::string(colname) + "$2:$" + colname + "$" + last + "," + k + ")"; };
  // Earlier block rows through a 2-D range above the block, earlier blocks of
  // the same block row through the result row to the left.
  auto lookup = [&](const std::string& x, const std::string& left_end) {
    std::string a = "((" + x + "-2)/" + cs + ")";
    std::string b = "(" + x + "-2-" + a + "*" + cs + ")";
    return "=IF(" + x + "<2," + x + ",IF(" + a + "<(ROW()-2)/4,INDEX($D$1:$" + col(4 + 2 * c) + "1,4*" + a + "+5,2*" + b +
           "+3),INDEX($D5:" + left_end + "5,2*" + b + "+3)))";
  };
  t.set_formula(parse_addr("E2"), field("A"));
  t.set_formula(parse_addr("F2"), field("B"));
  t.set_formula(parse_addr("E5"), field("C"));
  t.set_formula(parse_addr("F3"), lookup("F2", "E"));
  t.set_formula(parse_addr("E3"), lookup("E5", "D"));
  t.set_formula(parse_addr("E4"), "=F3*E3");
  t.set_formula(parse_addr("F4"), "=IF(F3+E3>0,1,0)");
  t.set_formula(parse_addr("F5"), "=CHOOSE(E2,E4,F4,1-F3)");
  enc.cols = 2 * c;
  enc.rows = 4 * r;
  enc.answer = {6 + 2 * (c - 1), 5 + 4 * (r - 1)};
  t.output = OutputPart::LastRow;
  t.validate();
  return enc;
}

CvpEncoding encode_s3_diagonal(const CvpInstance& inst) {
  inst.validate();
  const Int n = inst.size();
  // Gate k's fields sit in column k of rows 1..3. Block (a, b) covers rows
  // 4+3a.. and columns 1+8b..; it works on gate a+1, which only matters on
  // the diagonal a = b. The result lands at offset (5, 2) of the block.
  CvpEncoding enc;
  Template& t = enc.tmpl;
  t.computing = parse_region("A4:H6");
  t.input_part = {parse_region("1:3")};
  place_gates(t, inst, [](Int k, Int f) { return CellAddr{k, 1 + f}; });
  const std::string k = "(ROW()-4)/3+1";
  t.set_formula(parse_addr("A4"), "=INDEX($1:$1," + k + ")");
  t.set_formula(parse_addr("B4"), "=INDEX($2:$2," + k + ")");
  t.set_formula(parse_addr("C4"), "=INDEX($3:$3," + k + ")");
  t.set_formula(parse_addr("D5"), "=IF(B4<2,B4,INDEX($A$1:C4,3*(B4-2)+6,8*(B4-2)+6))");
  t.set_formula(parse_addr("E5"), "=IF(C4<2,C4,INDEX($A$1:D4,3*(C4-2)+6,8*(C4-2)+6))");
  t.set_formula(parse_addr("F6"), "=CHOOSE(A4,D5*E5,IF(D5+E5>0,1,0),1-D5)");
  enc.cols = 8 * n;
  enc.rows = 3 * n;
  enc.answer = {8 * (n - 1) + 6, 3 * (n - 1) + 6};
  t.output = OutputPart::LastRow;
  t.validate();
  return enc;
}

int solve_encoded(const CvpEncoding& enc) {
  Grid g = fill_template(enc.tmpl, enc.cols, enc.rows);
  EvalResult res = evaluate(g);
  Value v = res.value(enc.answer);
  if (!v.is_int() || (v.as_int() != 0 && v.as_int() != 1))
    throw SheetError("answer cell " + to_a1(enc.answer) + " holds " + v.to_string());
  return static_cast<int>(v.as_int());
}

}  // namespace sheetpram
