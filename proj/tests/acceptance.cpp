// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sheetpram/bridge.hpp"
#include "sheetpram/classify.hpp"
#include "sheetpram/cvp.hpp"
#include "sheetpram/pareval.hpp"
#include "sheetpram/pram.hpp"
#include "support/generators.hpp"

using namespace sheetpram;
using testing_util::random_input;
using testing_util::random_program;
using testing_util::TemplateGen;
using testing_util::TemplateOptions;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Int draw(std::mt19937_64& rng, Int lo, Int hi) {
  return lo + static_cast<Int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

const char* kWorked =
    "p2 := and(1,0)\n"
    "p3 := or(1,p2)\n"
    "p4 := or(0,p3)\n"
    "p5 := not(p4)\n";

Outcome cvp_oracle() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  Int runs = 0, bad = 0;
  auto check = [&](const CvpInstance& inst, const CvpEncoding& enc) {
    ++runs;
    if (solve_encoded(enc) != cvp_solve(inst)) ++bad;
  };
  for (int i = 0; i < 200; ++i) {
    CvpInstance inst = gen_random(draw(rng, 1, 50), rng());
    check(inst, encode_s4(inst, S4Orientation::Rows));
    check(inst, encode_s4(inst, S4Orientation::Columns));
  }
  for (int i = 0; i < 200; ++i) {
    Int c = draw(rng, 1, 6), r = draw(rng, 1, 6);
    CvpInstance inst = gen_random(c * r, rng());
    check(inst, encode_s5(inst, c, r));
  }
  for (int i = 0; i < 200; ++i) {
    CvpInstance inst = gen_random(draw(rng, 1, 16), rng());
    check(inst, encode_s3_diagonal(inst));
  }
  CvpInstance worked = parse_cvp(kWorked);
  int direct = cvp_solve(worked);
  bool worked_false = direct == 0 && cvp_solve_recursive(worked) == 0 &&
                      solve_encoded(encode_s4(worked, S4Orientation::Rows)) == 0 &&
                      solve_encoded(encode_s4(worked, S4Orientation::Columns)) == 0 &&
                      solve_encoded(encode_s5(worked, 2, 2)) == 0 && solve_encoded(encode_s3_diagonal(worked)) == 0;
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {bad == 0 && worked_false && secs < 60,
          fmt("%lld encodings solved, %lld mismatches, worked instance %s, %.1f s", static_cast<long long>(runs),
              static_cast<long long>(bad), worked_false ? "false" : "NOT false", secs)};
}

Outcome universal_simulator() {
  std::mt19937_64 rng(202);
  Int checkpoints = 0, bad = 0, bad_dims = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Int p = Int{2} << (trial % 3);
    Program prog = random_program(rng, draw(rng, 1, 9));
    std::vector<Int> in = random_input(rng, p);
    Int t = draw(rng, 10, 50);
    auto trace = run(prog, in, p, p, t);
    Grid g = fill_universal(load_universal(prog, in), p, t);
    if (g.filled().row_hi != 10 * t + 10) ++bad_dims;
    EvalResult res = evaluate(g);
    for (Int k = 0; k <= t; k += 10) {
      ++checkpoints;
      const PramState& want = trace[std::min<std::size_t>(static_cast<std::size_t>(k), trace.size() - 1)];
      if (!(universal_snapshot(res, prog, p, k) == want)) ++bad;
    }
  }
  return {bad == 0 && bad_dims == 0, fmt("50 programs, %lld checkpoints, %lld mismatches, %lld bad bottom rows",
                                         static_cast<long long>(checkpoints), static_cast<long long>(bad),
                                         static_cast<long long>(bad_dims))};
}

Outcome flexible_simulator() {
  std::mt19937_64 rng(303);
  Int cases = 0, bad = 0, seq_bad = 0;
  for (Int p : {1, 2, 4}) {
    for (Int q = p; q <= 16; q += p) {
      for (Int t : {draw(rng, 1, 5), draw(rng, 6, 20)}) {
        Program prog = random_program(rng, draw(rng, 1, 9));
        std::vector<Int> in = random_input(rng, p);
        Int steps = flexible_steps(p, q, t);
        auto trace = run(prog, in, p, p, steps);
        EvalResult res = evaluate(fill_flexible(load_flexible(prog, in, p), q, t));
        ++cases;
        if (!(flexible_window(res, prog, p, q, t) == trace.back())) ++bad;
        // one processor: the window holds plain sequential execution
        if (p == 1) {
          Pram m(prog, in, 1, 1);
          m.run(t * (q - 1));
          if (!(m.state() == trace.back())) ++seq_bad;
        }
      }
    }
  }
  return {bad == 0 && seq_bad == 0, fmt("%lld (p,q,t) cases, %lld mismatches, %lld sequential mismatches",
                                        static_cast<long long>(cases), static_cast<long long>(bad),
                                        static_cast<long long>(seq_bad))};
}

Outcome parallel_soundness() {
  std::mt19937_64 rng(404);
  TemplateOptions opt;
  opt.arrays = true;
  opt.max_height = 4;
  TemplateGen gen(rng, opt);
  Int runs = 0, bad = 0, not_class = 0, arrays = 0;
  for (int i = 0; i < 100; ++i) {
    Template t = gen();
    Classification cl = classify_template(t);
    if (!cl.row_organized() || !cl.row_directed()) ++not_class;
    for (const auto& [a, e] : t.formulas)
      if (to_string(*e).starts_with("{")) ++arrays;
    for (auto [c, r] : {std::pair<Int, Int>{8, 8}, {16, 8}, {32, 16}, {64, 16}}) {
      Grid g = fill_template(t, c, r);
      EvalResult want = evaluate(g);
      auto [got, cost] = par_evaluate(t, c, r);
      ++runs;
      bool same = got.output == want.output;
      for (const auto& a : g.formula_cells()) same = same && got.value(a) == want.value(a);
      if (!same) ++bad;
    }
  }
  return {bad == 0 && not_class == 0,
          fmt("100 templates (%lld array formulas), %lld runs, %lld mismatches, %lld outside the class",
              static_cast<long long>(arrays), static_cast<long long>(runs), static_cast<long long>(bad),
              static_cast<long long>(not_class))};
}

Outcome cost_bounds() {
  Template t = match_benchmark();
  std::vector<double> ks, steps;
  for (Int k = 4; k <= 10; ++k) {
    CostReport cost = par_evaluate(t, Int{1} << k, 16).second;
    ks.push_back(static_cast<double>(k));
    steps.push_back(static_cast<double>(
        *std::max_element(cost.per_round_parallel_steps.begin(), cost.per_round_parallel_steps.end())));
  }
  // least-squares line, then raised until it bounds every point
  double n = static_cast<double>(ks.size()), sk = 0, ss = 0, skk = 0, sks = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sk += ks[i];
    ss += steps[i];
    skk += ks[i] * ks[i];
    sks += ks[i] * steps[i];
  }
  double a = (n * sks - sk * ss) / (n * skk - sk * sk);
  double b = (ss - a * sk) / n;
  double lift = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) lift = std::max(lift, steps[i] - (a * ks[i] + b));
  b += lift;
  double worst = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double fit = a * ks[i] + b;
    worst = std::max(worst, (fit - steps[i]) / fit);
  }
  bool fit_ok = a > 0 && worst <= 0.10;

  double spread = 0;
  for (Int c : {16, 64, 256}) {
    double lo = 1e18, hi = -1e18;
    for (Int r : {8, 16, 32, 64}) {
      double per = static_cast<double>(par_evaluate(t, c, r).second.peak_memory_cells) / static_cast<double>(c);
      lo = std::min(lo, per);
      hi = std::max(hi, per);
    }
    spread = std::max(spread, hi - lo);
  }
  std::ostringstream pts;
  for (double s : steps) pts << (pts.tellp() ? "," : "") << s;
  return {fit_ok && spread <= 1.0, fmt("round steps [%s] fit %.2f*k%+.2f, max slack %.1f%%, memory/c spread %.2f",
                                       pts.str().c_str(), a, b, 100 * worst, spread)};
}

Outcome compiler_roundtrip() {
  std::mt19937_64 rng(606);
  TemplateGen gen(rng, {});
  Int eligible = 0, refused = 0, bad = 0, unclean = 0, via_sheet = 0, runs = 0;
  double worst_ratio = 0;
  while (eligible < 30) {
    Template t = gen();
    Int r = t.computing.height() + draw(rng, 0, 2);
    RoundtripReport small, large;
    try {
      small = roundtrip_check(t, 8, r);
      large = roundtrip_check(t, 64, r);
    } catch (const NotCompilableError&) {
      ++refused;
      continue;
    }
    ++eligible;
    for (const auto* rep : {&small, &large}) {
      ++runs;
      if (!rep->match) ++bad;
      if (!rep->erew_clean) ++unclean;
      if (rep->via_sheet) ++via_sheet;
    }
    worst_ratio = std::max(worst_ratio, static_cast<double>(large.rows_used) / static_cast<double>(small.rows_used));
  }
  double bound = std::log2(64.0) / std::log2(8.0) * 1.5;
  return {bad == 0 && unclean == 0 && worst_ratio <= bound,
          fmt("30 templates (%lld refused), %lld runs, %lld mismatches, %lld not EREW-clean, %lld through the "
              "sheet, worst rows_used(64)/rows_used(8) %.2f (bound %.2f)",
              static_cast<long long>(refused), static_cast<long long>(runs), static_cast<long long>(bad),
              static_cast<long long>(unclean), static_cast<long long>(via_sheet), worst_ratio, bound)};
}

Value single(const std::string& formula, const std::vector<std::pair<std::string, Int>>& inputs) {
  Template t;
  t.computing = parse_region("H8:H8");
  t.input_part = {parse_region("1:5")};
  for (const auto& [a, v] : inputs) t.set_input(parse_addr(a), v);
  t.set_formula(parse_addr("H8"), formula);
  return evaluate(fill_template(t, 1, 1)).value(parse_addr("H8"));
}

Outcome pram_semantics() {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.push_back(what);
  };
  auto last = [](const char* src, Int p, Int m) { return run(parse_program(src), make_input({}), p, m, 100).back(); };

  expect(last("i := 3\nM[i] := s\n", 4, 4).shared[2] == 1, "priority write");
  PramState rw = last("if 1 < s goto 4\ni := 3\nM[i] := 7\nk := 3\nj := M[k]\n", 2, 4);
  expect(rw.procs[1].j == 0 && rw.procs[0].j == 7, "read before write");
  expect(last("i := 0\nM[i] := 5\ni := 5\nM[i] := 6\n", 1, 4).shared == std::vector<Int>(4, 0), "silent writes");
  auto halt = run(parse_program("i := 5\n"), make_input({}), 1, 1, 100);
  expect(halt.size() == 2 && halt.back().procs[0].halted && halt.back().procs[0].pc == 2, "halt past last line");

  std::vector<std::pair<std::string, Int>> in = {{"A1", 2},    {"B1", 1},    {"C1", 3},    {"D1", 2},
                                                 {"E1", 1},    {"A2", 2008}, {"B2", 2008}, {"C2", 2008},
                                                 {"D2", 2007}, {"E2", 2008}, {"A3", 1},    {"B3", 2008}};
  std::vector<Int> products;
  for (char col = 'A'; col <= 'E'; ++col) {
    std::string c(1, col);
    Value v = single("=(" + c + "1=A3)*(" + c + "2=B3)", in);
    products.push_back(v.is_int() ? v.as_int() : -1);
  }
  expect(products == std::vector<Int>{0, 1, 0, 0, 1}, "example products");
  expect(single("{=SUM((A1:E1=A3)*(A2:E2=B3))}", in) == Value::integer(2), "example SUM");

  std::string detail = "priority write, read before write, silent writes, halting, array example [0,1,0,0,1] -> 2";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f + ";";
  }
  return {failed.empty(), detail};
}

Template sheet(const std::string& text) {
  std::istringstream in(text);
  return read_sheet(in).tmpl;
}

Outcome classification_invariance() {
  std::vector<std::pair<std::string, Template>> corpus;
  corpus.emplace_back("lookup.sheet", read_sheet_file(SHEETPRAM_TEST_DATA "/lookup.sheet").tmpl);
  corpus.emplace_back("running_sum.sheet", read_sheet_file(SHEETPRAM_TEST_DATA "/running_sum.sheet").tmpl);
  corpus.emplace_back("match benchmark", match_benchmark());
  corpus.emplace_back("universal", gen_universal());
  corpus.emplace_back("flexible", gen_flexible());
  CvpInstance worked = parse_cvp(kWorked);
  corpus.emplace_back("s4 rows", encode_s4(worked, S4Orientation::Rows).tmpl);
  corpus.emplace_back("s4 columns", encode_s4(worked, S4Orientation::Columns).tmpl);
  corpus.emplace_back("s5", encode_s5(worked, 2, 2).tmpl);
  corpus.emplace_back("s3", encode_s3_diagonal(worked).tmpl);
  corpus.emplace_back("column cascade", sheet("#input A:A\nB1\t=A1+1\n"));
  corpus.emplace_back("diagonal", sheet("#input 1:1\n#input A:A\nB2\t=A1+B1+A2\n"));
  corpus.emplace_back("block", sheet("#input 1:1\nA2\t=MATCH(1,A1:B1,0)\nB2\t=A1\nA3\t=INDEX(A1:A2,2)\nB3\t=B2*2\n"));
  corpus.emplace_back("self", sheet("A1\t=B1+1\n"));

  std::mt19937_64 rng(808);
  TemplateOptions opt;
  opt.arrays = true;
  opt.vertical = true;
  TemplateGen gen(rng, opt);
  for (int i = 0; i < 40; ++i) {
    Template t = gen();
    corpus.emplace_back("generated", t);
    corpus.emplace_back("generated transposed", transpose(t));
  }

  // Five fills that realize every reference must classify exactly like the
  // template. Smaller fills may leave some references inside the input part,
  // so there the template's properties need only carry over.
  Int fills = 0, small_fills = 0, widened = 0;
  std::vector<std::string> broken;
  auto label = [](const Classification& c) { return to_string(c.organized) + "/" + to_string(c.directed); };
  for (const auto& [name, t] : corpus) {
    auto [cw, ch] = canonical_fill(t);
    std::vector<std::pair<Int, Int>> samples;
    for (int s = 0; s < 5; ++s) samples.emplace_back(draw(rng, cw, 3 * cw), draw(rng, ch, 3 * ch));
    fills += 5;
    FillInvarianceReport rep = check_fill_invariance(t, samples);
    if (!rep.pass)
      broken.push_back(name + " at " + std::to_string(rep.counterexample->first) + "x" +
                       std::to_string(rep.counterexample->second) + " (" + label(rep.expected) + " vs " +
                       label(rep.found) + ")");
    Int w = t.computing.width(), h = t.computing.height();
    for (int s = 0; s < 5; ++s) {
      Int c = draw(rng, w, cw), r = draw(rng, h, ch);
      Classification want = rep.expected, got = classify_grid(fill_template(t, c, r));
      ++small_fills;
      if (got != want) ++widened;
      bool kept = (!want.row_organized() || got.row_organized()) && (!want.column_organized() || got.column_organized()) &&
                  (!want.row_directed() || got.row_directed()) && (!want.column_directed() || got.column_directed());
      if (!kept)
        broken.push_back(name + " at " + std::to_string(c) + "x" + std::to_string(r) + " lost a property (" +
                         label(want) + " vs " + label(got) + ")");
    }
  }
  std::string detail = fmt("%zu templates, %lld fills equal, %lld smaller fills keep every property (%lld of them "
                           "classify more permissively)",
                           corpus.size(), static_cast<long long>(fills), static_cast<long long>(small_fills),
                           static_cast<long long>(widened));
  if (!broken.empty()) detail += ", differs: " + broken.front() + (broken.size() > 1 ? " and others" : "");
  return {broken.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"cvp-oracle", cvp_oracle},
      {"universal-simulator", universal_simulator},
      {"flexible-simulator", flexible_simulator},
      {"parallel-soundness", parallel_soundness},
      {"cost-bounds", cost_bounds},
      {"compiler-roundtrip", compiler_roundtrip},
      {"pram-semantics", pram_semantics},
      {"classification-invariance", classification_invariance},
  };
  int failures = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
