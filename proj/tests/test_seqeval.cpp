#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sheetpram/seqeval.hpp"

using namespace sheetpram;
using testing_util::sheet;

namespace {

Value eval_single(const std::string& formula, const std::string& inputs = "") {
  Template t = sheet(inputs + "Z99\t" + formula + "\n");
  EvalResult r = evaluate(fill_template(t, 1, 1));
  return r.value({26, 99});
}

std::vector<RangeCell> cells(std::initializer_list<Int> xs) {
  std::vector<RangeCell> out;
  for (Int x : xs) out.push_back({Value::integer(x), true});
  return out;
}

}  // namespace

TEST_CASE("scalar functions") {
  CHECK(eval_single("=IF(1<2,10,20)") == Value::integer(10));
  CHECK(eval_single("=CHOOSE(31,1,2)") == Value::error(ErrorKind::Value));
  CHECK(eval_single("=CHOOSE(2,7,8,9)") == Value::integer(8));
  CHECK(eval_single("=CHOOSE(4,7,8,9)") == Value::error(ErrorKind::Value));
  CHECK(eval_single("=7/2") == Value::integer(3));
  CHECK(eval_single("=-7/2") == Value::integer(-3));
  CHECK(eval_single("=1/0") == Value::error(ErrorKind::Div0));
  CHECK(eval_single("=IFERROR(1/0,5)") == Value::integer(5));
  CHECK(eval_single("=IF(1,2,3)") == Value::error(ErrorKind::Value));
  CHECK(eval_single("=AND(1<2,3)") == Value::boolean(true));
  CHECK(eval_single("=OR(FALSE,0)") == Value::boolean(false));
  CHECK(eval_single("=ROW()+COLUMN()") == Value::integer(125));
  CHECK(eval_single("=ROW(B7)") == Value::integer(7));
  CHECK(eval_single("=TRUE+1") == Value::integer(2));
  CHECK(eval_single("=1=TRUE") == Value::boolean(false));
  CHECK(eval_single("=A1+1") == Value::integer(1));
}

TEST_CASE("errors propagate and lazy branches are not evaluated") {
  CHECK(eval_single("=1+(1/0)") == Value::error(ErrorKind::Div0));
  CHECK(eval_single("=(1/0)<2") == Value::error(ErrorKind::Div0));
  CHECK(eval_single("=IF(TRUE,1,1/0)") == Value::integer(1));
  CHECK(eval_single("=CHOOSE(1,5,1/0)") == Value::integer(5));
}

TEST_CASE("MATCH semantics") {
  auto r = cells({5, 7, 9});
  CHECK(eval_match(Value::integer(7), r, 0) == Value::integer(2));
  CHECK(eval_match(Value::integer(8), r, 0) == Value::error(ErrorKind::NA));
  auto s = cells({1, 2, 3});
  CHECK(eval_match(Value::integer(99), s, 1) == Value::integer(3));
  CHECK(eval_match(Value::integer(2), s, 1) == Value::integer(2));
  CHECK(eval_match(Value::integer(0), s, 1) == Value::integer(1));
  auto d = cells({9, 5, 1});
  CHECK(eval_match(Value::integer(6), d, -1) == Value::integer(2));
  CHECK(eval_match(Value::integer(-4), d, -1) == Value::integer(3));
  std::vector<RangeCell> empty(3, RangeCell{Value::integer(0), false});
  CHECK(eval_match(Value::integer(0), empty, 0) == Value::error(ErrorKind::NA));
  CHECK(eval_match(Value::integer(1), empty, 1) == Value::error(ErrorKind::NA));
}

TEST_CASE("MATCH types 1 and -1 agree with a linear scan on sorted data") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Int> xs(1 + rng() % 12);
    for (auto& x : xs) x = static_cast<Int>(rng() % 20);
    std::sort(xs.begin(), xs.end());
    std::vector<RangeCell> up, down;
    for (Int x : xs) up.push_back({Value::integer(x), true});
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) down.push_back({Value::integer(*it), true});
    Int v = static_cast<Int>(rng() % 22) - 1;
    Int expect_up = static_cast<Int>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] >= v) { expect_up = static_cast<Int>(i + 1); break; }
    Int expect_down = static_cast<Int>(xs.size());
    for (std::size_t i = 0; i < down.size(); ++i)
      if (down[i].value.as_int() <= v) { expect_down = static_cast<Int>(i + 1); break; }
    CHECK(eval_match(Value::integer(v), up, 1) == Value::integer(expect_up));
    CHECK(eval_match(Value::integer(v), down, -1) == Value::integer(expect_down));
  }
}

TEST_CASE("INDEX semantics") {
  std::string in = "A1\t4\nB1\t5\nC1\t6\nA2\t7\nB2\t8\nC2\t9\n";
  CHECK(eval_single("=INDEX(A1:C1,2)", in) == Value::integer(5));
  CHECK(eval_single("=INDEX(A1:A2,2)", in) == Value::integer(7));
  CHECK(eval_single("=INDEX(A1:C2,2,3)", in) == Value::integer(9));
  CHECK(eval_single("=INDEX(A1:C1,4)", in) == Value::error(ErrorKind::Ref));
  CHECK(eval_single("=INDEX(A1:C1,0)", in) == Value::error(ErrorKind::Ref));
  CHECK(eval_single("=INDEX($1:$1,3)", in) == Value::integer(6));
  CHECK(eval_single("=INDEX($1:$1,50)", in) == Value::integer(0));
  CHECK(eval_single("=MATCH(6,1:1,0)", in) == Value::integer(3));
  CHECK(eval_single("=MATCH(100,1:1,1)", in) == Value::integer(3));
}

TEST_CASE("array formula counting example") {
  // rows: category codes and years; counts entries with code 1 and year 2008
  std::string in = "A1\t2\nB1\t1\nC1\t3\nD1\t2\nE1\t1\n"
                   "A2\t2008\nB2\t2008\nC2\t2008\nD2\t2007\nE2\t2008\n"
                   "A3\t1\nB3\t2008\n";
  CHECK(eval_single("{=SUM((A1:E1=A3)*(A2:E2=B3))}", in) == Value::integer(2));
  // positionwise products [0,1,0,0,1]
  for (int i = 0; i < 5; ++i) {
    std::string col(1, static_cast<char>('A' + i));
    Int expect = (i == 1 || i == 4) ? 1 : 0;
    CHECK(eval_single("=(" + col + "1=A3)*(" + col + "2=B3)", in) == Value::integer(expect));
  }
  CHECK(eval_single("{=SUM(A1:E1)}", "A1\t1\nB1\t2\nC1\t3\nD1\t4\nE1\t5\n") == Value::integer(15));
  CHECK(eval_single("{=SUM(A1:E1*A2:D2)}", in) == Value::error(ErrorKind::Value));
  CHECK(eval_single("{=SUM(A1:E1*A2:A6)}", in) == Value::error(ErrorKind::Value));
}

TEST_CASE("variance pipeline with array formulas") {
  // selected entries: category 1 in row 1, values in row 2
  std::mt19937_64 rng(8);
  std::string in;
  std::vector<Int> chosen;
  for (int i = 0; i < 12; ++i) {
    Int cat = static_cast<Int>(rng() % 3), val = static_cast<Int>(rng() % 50);
    std::string col(1, static_cast<char>('A' + i));
    in += col + "1\t" + std::to_string(cat) + "\n" + col + "2\t" + std::to_string(val) + "\n";
    if (cat == 1) chosen.push_back(val);
  }
  in += "A3\t1\n"
        "A5\t{=SUM((A1:L1=A3)*A2:L2)}\n"
        "B5\t{=SUM((A1:L1=A3)*1)}\n"
        "C5\t=A5/B5\n"
        "D5\t{=SUM((A1:L1=A3)*(A2:L2-C5)*(A2:L2-C5))}\n"
        "E5\t=D5/B5\n";
  Template t = sheet("#computing A5:E5\n" + in);
  EvalResult r = evaluate(fill_template(t, 5, 1));
  REQUIRE(!chosen.empty());
  Int sum = 0;
  for (Int x : chosen) sum += x;
  Int mean = sum / static_cast<Int>(chosen.size());
  Int sq = 0;
  for (Int x : chosen) sq += (x - mean) * (x - mean);
  CHECK(r.value({1, 5}) == Value::integer(sum));
  CHECK(r.value({2, 5}) == Value::integer(static_cast<Int>(chosen.size())));
  CHECK(r.value({5, 5}) == Value::integer(sq / static_cast<Int>(chosen.size())));
}

TEST_CASE("running sum grid and output part") {
  Template t = sheet("#output row\nA1\t1\nB1\t2\nC1\t3\nA2\t=A1+B1\n");
  EvalResult r = evaluate(fill_template(t, 3, 3));
  // row 2: 3 5 3 ; row 3: 8 8 3 ; row 4: 16 11 3
  std::vector<Value> expect{Value::integer(16), Value::integer(11), Value::integer(3)};
  CHECK(r.output == expect);
  CHECK(r.order.size() == 9);
}

TEST_CASE("cycles are reported") {
  Template t = sheet("#computing A1:B1\nA1\t=B1\nB1\t=A1\n");
  CHECK_THROWS_AS(evaluate(fill_template(t, 2, 1)), CircularReferenceError);
  Template self = sheet("A1\t=MATCH(1,A1:C1,0)\n");
  CHECK_THROWS_AS(evaluate(fill_template(self, 1, 1)), CircularReferenceError);
}

TEST_CASE("evaluation order respects dependencies and tie-break does not change values") {
  Template t = sheet("#computing A1:C2\nA1\t=B2+1\nB1\t=C1*2\nC1\t=5\nA2\t=B1-C1\nB2\t=C2+A2\nC2\t=7\n");
  Grid g = fill_template(t, 3, 2);
  EvalResult fwd = evaluate(g), rev = evaluate(g, {.reverse_tiebreak = true});
  std::map<CellAddr, std::size_t> pos;
  for (std::size_t i = 0; i < fwd.order.size(); ++i) pos[fwd.order[i]] = i;
  CHECK(pos[{3, 1}] < pos[{2, 1}]);
  CHECK(pos[{2, 2}] < pos[{1, 1}]);
  for (const auto& a : g.formula_cells()) CHECK(fwd.value(a) == rev.value(a));
  CHECK(fwd.value({1, 1}) == Value::integer(13));
}
