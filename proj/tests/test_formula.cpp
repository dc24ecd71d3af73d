#include <doctest.h>

#include <functional>
#include <random>

#include "sheetpram/formula.hpp"

using namespace sheetpram;

namespace {

CellRef rel(Int col, Int row) { return CellRef{{col, row}, false, false}; }

std::vector<std::string> ref_texts(const char* f) {
  std::vector<std::string> out;
  for (const auto& r : references_of(parse_formula(f))) out.push_back(r.is_range ? to_string(r.range) : to_string(r.cell));
  return out;
}

}  // namespace

TEST_CASE("parse simple arithmetic") {
  Expr e = parse_formula("=A1+1");
  CHECK(e == Expr::binary(BinOp::Add, Expr::cell_use(rel(1, 1)), Expr::integer(1)));
}

TEST_CASE("parse MATCH with a range") {
  Expr e = parse_formula("=MATCH(5,A1:E1,0)");
  REQUIRE(e.kind == Expr::Kind::Call);
  CHECK(e.fn == Func::Match);
  REQUIRE(e.args.size() == 3);
  CHECK(e.args[0] == Expr::integer(5));
  CHECK(e.args[1].kind == Expr::Kind::Range);
  CHECK(to_string(e.args[1].range) == "A1:E1");
  CHECK(e.args[2] == Expr::integer(0));
}

TEST_CASE("parse array formula from the counting example") {
  Expr e = parse_formula("{=SUM((A1:E1=A3)*(A2:E2=B3))}");
  REQUIRE(e.kind == Expr::Kind::Array);
  const Expr& inner = e.args[0];
  REQUIRE(inner.kind == Expr::Kind::Binary);
  CHECK(inner.op == BinOp::Mul);
  CHECK(inner.args[0].op == BinOp::Eq);
  CHECK(inner.args[0].args[0].kind == Expr::Kind::Range);
  CHECK(inner.args[0].args[1].kind == Expr::Kind::Cell);
  CHECK(to_string(e) == "{=SUM((A1:E1=A3)*(A2:E2=B3))}");
}

TEST_CASE("operator precedence") {
  CHECK(to_string(parse_formula("=1+2*3")) == "=1+2*3");
  CHECK(parse_formula("=1+2*3").op == BinOp::Add);
  CHECK(parse_formula("=(1+2)*3").op == BinOp::Mul);
  CHECK(parse_formula("=1+2<3*4").op == BinOp::Lt);
  CHECK(parse_formula("=-A1*2").op == BinOp::Mul);
  CHECK(to_string(parse_formula("=1-(2-3)")) == "=1-(2-3)");
  CHECK(to_string(parse_formula("=(1-2)-3")) == "=1-2-3");
}

TEST_CASE("function names are case-insensitive") {
  CHECK(parse_formula("=if(true,1,2)") == parse_formula("=IF(TRUE,1,2)"));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_formula("=FOO(1)"), ParseError);
  CHECK_THROWS_AS(parse_formula("=IF(1,2)"), ParseError);
  CHECK_THROWS_AS(parse_formula("=MATCH(1,A1:B1)"), ParseError);
  CHECK_THROWS_AS(parse_formula("=INDEX(A1:B1)"), ParseError);
  CHECK_THROWS_AS(parse_formula("=ROW(A1,A2)"), ParseError);
  CHECK_THROWS_AS(parse_formula("=A1+"), ParseError);
  CHECK_THROWS_AS(parse_formula("=A0"), ParseError);
  CHECK_THROWS_AS(parse_formula("=A1:B1+1"), ParseError);
  CHECK_THROWS_AS(parse_formula("{=MAX(A1:B1)}"), ParseError);
  std::string many = "=CHOOSE(1";
  for (int i = 0; i < 30; ++i) many += ",1";
  CHECK_THROWS_AS(parse_formula(many + ")"), ParseError);
  CHECK_NOTHROW(parse_formula("=CHOOSE(1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1)"));
  try {
    parse_formula("=1+*2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 3);
  }
}

TEST_CASE("references_of lists references in source order") {
  CHECK(ref_texts("=IF(A1<B1,A1,B1)") == std::vector<std::string>{"A1", "B1", "A1", "B1"});
  CHECK(ref_texts("=ROW()").empty());
  CHECK(ref_texts("{=SUM(A1:E1*2)}") == std::vector<std::string>{"A1:E1"});
  auto refs = references_of(parse_formula("=ROW(C3)+D4"));
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].address_only);
  CHECK_FALSE(refs[1].address_only);
}

TEST_CASE("array eligibility") {
  CHECK(thm3_eligible(parse_formula("{=SUM((A1:E1=A3)*(A2:E2=B3))}")));
  CHECK_FALSE(thm3_eligible(parse_formula("{=SUM((A1:E1<A3)*(A2:E2<B3))}")));
  CHECK(thm3_eligible(parse_formula("{=SUM(A1:E1)}")));
  CHECK(thm3_eligible(parse_formula("{=SUM((A1:E1=A3)*(A2:E2<B3)*A4:E4)}")));
  CHECK(thm3_eligible(parse_formula("{=SUM((A1:E1<A2:E2)*(A3:E3<A4:E4))}")));
  CHECK_FALSE(thm3_eligible(parse_formula("{=SUM(A1:E1/2)}")));
  CHECK_FALSE(thm3_eligible(parse_formula("{=SUM((A1:E1+1=A3)*1)}")));
}

TEST_CASE("whole-row and whole-column references parse and print") {
  CHECK(to_string(parse_formula("=INDEX($1:$1,3)")) == "=INDEX($1:$1,3)");
  CHECK(to_string(parse_formula("=MATCH(2,5:5,1)")) == "=MATCH(2,5:5,1)");
  CHECK(to_string(parse_formula("=INDEX(B:B,2)")) == "=INDEX(B:B,2)");
}

TEST_CASE("print-parse round trip on random formulas") {
  std::mt19937_64 rng(5);
  std::function<std::string(int)> gen = [&](int depth) -> std::string {
    int pick = depth > 3 ? static_cast<int>(rng() % 3) : static_cast<int>(rng() % 10);
    switch (pick) {
      case 0: return std::to_string(static_cast<int>(rng() % 200) - 100);
      case 1: return std::string(1, static_cast<char>('A' + rng() % 5)) + (rng() % 2 ? "$" : "") + std::to_string(1 + rng() % 9);
      case 2: return rng() % 2 ? "TRUE" : "FALSE";
      case 3: return "(" + gen(depth + 1) + ")";
      case 4: return gen(depth + 1) + "+" + gen(depth + 1);
      case 5: return gen(depth + 1) + "*" + gen(depth + 1);
      case 6: return gen(depth + 1) + "<=" + gen(depth + 1);
      case 7: return "-" + gen(depth + 1);
      case 8: return "IF(" + gen(depth + 1) + "," + gen(depth + 1) + "," + gen(depth + 1) + ")";
      default: return "MATCH(" + gen(depth + 1) + ",$A1:E$1," + std::to_string(rng() % 3) + ")";
    }
  };
  for (int i = 0; i < 300; ++i) {
    std::string src = "=" + gen(0);
    Expr a = parse_formula(src);
    std::string printed = to_string(a);
    Expr b = parse_formula(printed);
    CHECK_MESSAGE(a == b, src << " -> " << printed);
    CHECK(to_string(b) == printed);
  }
}

TEST_CASE("shift_formula moves only relative parts") {
  Expr e = parse_formula("=$A1+B$2+MATCH(1,C3:$D$4,0)");
  CHECK(to_string(shift_formula(e, 2, 3)) == "=$A4+D$2+MATCH(1,E6:$D$4,0)");
  CHECK_THROWS_AS(shift_formula(parse_formula("=B2"), -2, 0), OutOfGridError);
}
