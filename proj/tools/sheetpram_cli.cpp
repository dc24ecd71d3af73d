#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sheetpram/bridge.hpp"
#include "sheetpram/classify.hpp"
#include "sheetpram/cvp.hpp"
#include "sheetpram/pareval.hpp"
#include "sheetpram/pram.hpp"

using namespace sheetpram;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "sheetpram/1";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string file;
  std::string format = "json";
  std::uint64_t seed = 1;
  Int steps = 10;
  Int p = 1;
  Int q = 0;
  Int m = 0;
  Int n = 8;
  std::string dims;
  std::string program;
  std::string input;
  std::string layout = "s4";
  std::string orientation = "rows";
  std::string policy = "hard";
  bool output_only = false;
  bool trace = false;
  Int k_min = 4, k_max = 10;
  std::vector<Int> rows{8, 16, 32, 64};
};

json envelope() { return json{{"schema", kSchema}}; }

void emit(const json& j) { std::cout << j.dump() << "\n"; }

json to_json(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_bool()) return v.as_bool();
  return v.to_string();
}

json to_json(const std::vector<Value>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(to_json(v));
  return out;
}

std::pair<Int, Int> parse_dims(const std::string& s) {
  auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw UsageError("--dims expects CxR, got '" + s + "'");
  try {
    std::size_t a = 0, b = 0;
    Int c = std::stoll(s.substr(0, x), &a);
    Int r = std::stoll(s.substr(x + 1), &b);
    if (a != x || b != s.size() - x - 1 || c < 1 || r < 1) throw std::invalid_argument(s);
    return {c, r};
  } catch (const std::logic_error&) {
    throw UsageError("--dims expects CxR, got '" + s + "'");
  }
}

std::vector<Int> parse_ints(const std::string& s) {
  std::vector<Int> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw UsageError("not an integer list: '" + s + "'");
    }
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SheetError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Template plus fill dimensions: --dims, then the file's #fill header, then
// the computing part itself.
std::pair<Template, std::pair<Int, Int>> load_sheet(const Options& o) {
  SheetFile f = read_sheet_file(o.file);
  std::pair<Int, Int> d{f.tmpl.computing.width(), f.tmpl.computing.height()};
  if (!o.dims.empty()) d = parse_dims(o.dims);
  else if (f.fill) d = *f.fill;
  return {std::move(f.tmpl), d};
}

json values_json(const Grid& g, const CellSource& values) {
  json out = json::object();
  for (const auto& a : g.formula_cells()) out[to_a1(a)] = to_json(values.value(a));
  return out;
}

void emit_values_csv(const Grid& g, const CellSource& values) {
  std::cout << "cell,value\n";
  for (const auto& a : g.formula_cells()) std::cout << to_a1(a) << "," << values.value(a).to_string() << "\n";
}

void require_json(const Options& o, const std::string& cmd) {
  if (o.format != "json") throw UsageError(cmd + " supports only --format json");
}

// Sheet commands.

void cmd_parse(const Options& o) {
  require_json(o, "parse");
  SheetFile f = read_sheet_file(o.file);
  const Template& t = f.tmpl;
  json j = envelope();
  j["computing"] = to_string(t.computing);
  j["input"] = json::array();
  for (const auto& r : t.input_part) j["input"].push_back(to_string(r));
  j["output"] = t.output == OutputPart::LastRow ? "row" : "column";
  if (f.fill) j["fill"] = {f.fill->first, f.fill->second};
  j["inputs"] = json::object();
  for (const auto& [a, v] : t.inputs) j["inputs"][to_a1(a)] = v;
  j["formulas"] = json::object();
  for (const auto& [a, e] : t.formulas) j["formulas"][to_a1(a)] = to_string(*e);
  emit(j);
}

void cmd_fill(const Options& o) {
  auto [t, d] = load_sheet(o);
  write_grid(std::cout, fill_template(t, d.first, d.second));
}

void cmd_classify(const Options& o) {
  require_json(o, "classify");
  auto [t, d] = load_sheet(o);
  Classification c = o.dims.empty() ? classify_template(t) : classify_grid(fill_template(t, d.first, d.second));
  json j = envelope();
  j["organized"] = to_string(c.organized);
  j["directed"] = to_string(c.directed);
  emit(j);
}

void cmd_eval(const Options& o) {
  auto [t, d] = load_sheet(o);
  Grid g = fill_template(t, d.first, d.second);
  EvalResult res = evaluate(g);
  if (o.format == "csv") return emit_values_csv(g, res);
  if (o.output_only) return emit(to_json(res.output));
  json j = envelope();
  j["values"] = values_json(g, res);
  j["output"] = to_json(res.output);
  j["op_count"] = res.op_count;
  emit(j);
}

void cmd_eval_par(const Options& o) {
  auto [t, d] = load_sheet(o);
  auto [res, cost] = par_evaluate(t, d.first, d.second);
  Grid g = fill_template(t, d.first, d.second);
  if (o.format == "csv") return emit_values_csv(g, res);
  json j = envelope();
  if (o.output_only) j["last_row"] = to_json(res.output);
  else j["values"] = values_json(g, res);
  j["cost"] = {{"processors", cost.processors},
               {"rounds", cost.rounds},
               {"init_steps", cost.init_steps},
               {"per_round_parallel_steps", cost.per_round_parallel_steps},
               {"total_parallel_time", cost.total_parallel_time},
               {"peak_memory_cells", cost.peak_memory_cells}};
  emit(j);
}

// Machine commands.

json state_json(const PramState& st) {
  json procs = json::array();
  for (const auto& ps : st.procs)
    procs.push_back({{"i", ps.i}, {"j", ps.j}, {"k", ps.k}, {"pc", ps.pc}, {"halted", ps.halted}});
  return {{"time", st.time}, {"halted", st.all_halted()}, {"procs", procs}, {"shared", st.shared}};
}

Program load_program(const Options& o) {
  if (o.program.empty()) throw UsageError("--program is required");
  return parse_program(slurp(o.program));
}

FaultPolicy policy_of(const Options& o) {
  if (o.policy == "hard") return FaultPolicy::Hard;
  if (o.policy == "zero") return FaultPolicy::ReadZero;
  throw UsageError("--policy expects hard or zero");
}

void cmd_pram_run(const Options& o) {
  require_json(o, "pram-run");
  Program prog = load_program(o);
  Int m = o.m > 0 ? o.m : o.p;
  auto trace = run(prog, make_input(parse_ints(o.input)), o.p, m, o.steps, policy_of(o));
  json j = envelope();
  if (o.trace) {
    j["trace"] = json::array();
    for (const auto& st : trace) j["trace"].push_back(state_json(st));
  } else {
    j["state"] = state_json(trace.back());
  }
  emit(j);
}

void cmd_compile(const Options& o) {
  auto [t, d] = load_sheet(o);
  CompiledProgram cp = compile_to_pram(t, d.first, d.second);
  std::cout << "# p " << cp.p << " m " << cp.m << " steps " << cp.step_budget << " out_base " << cp.out_base << "\n";
  std::cout << "# input";
  for (Int v : cp.input) std::cout << " " << v;
  std::cout << "\n" << to_string(cp.program);
}

void cmd_gen_universal(const Options& o) {
  if (o.program.empty()) return write_template(std::cout, gen_universal());
  Template t = load_universal(load_program(o), make_input(parse_ints(o.input)));
  write_template(std::cout, t, std::pair<Int, Int>{o.p, 10 * std::max<Int>(o.steps, 1)});
}

void cmd_gen_flexible(const Options& o) {
  if (o.program.empty()) return write_template(std::cout, gen_flexible());
  Int q = o.q > 0 ? o.q : o.p;
  Template t = load_flexible(load_program(o), make_input(parse_ints(o.input)), o.p);
  write_template(std::cout, t, std::pair<Int, Int>{q, 10 * std::max<Int>(o.steps, 1)});
}

void cmd_roundtrip(const Options& o) {
  require_json(o, "roundtrip");
  auto [t, d] = load_sheet(o);
  RoundtripReport rep = roundtrip_check(t, d.first, d.second);
  json j = envelope();
  j["match"] = rep.match;
  j["rows_used"] = rep.rows_used;
  j["overhead_factor"] = rep.overhead_factor;
  j["steps"] = rep.steps;
  j["erew_clean"] = rep.erew_clean;
  j["via_sheet"] = rep.via_sheet;
  if (!rep.note.empty()) j["note"] = rep.note;
  emit(j);
}

// Circuit commands.

void cmd_gen_cvp(const Options& o) { std::cout << to_string(gen_random(o.n, o.seed)); }

CvpEncoding encode(const Options& o, const CvpInstance& inst) {
  if (o.layout == "s3") return encode_s3_diagonal(inst);
  if (o.layout == "s5") {
    if (o.dims.empty()) throw UsageError("--layout s5 needs --dims CxR");
    auto [c, r] = parse_dims(o.dims);
    return encode_s5(inst, c, r);
  }
  if (o.layout != "s4") throw UsageError("--layout expects s3, s4 or s5");
  if (o.orientation == "rows") return encode_s4(inst, S4Orientation::Rows);
  if (o.orientation == "columns") return encode_s4(inst, S4Orientation::Columns);
  throw UsageError("--orientation expects rows or columns");
}

void cmd_encode_cvp(const Options& o) {
  CvpEncoding enc = encode(o, read_cvp_file(o.file));
  write_template(std::cout, enc.tmpl, std::pair<Int, Int>{enc.cols, enc.rows});
}

void cmd_solve_cvp(const Options& o, bool via_layout) {
  require_json(o, "solve-cvp");
  CvpInstance inst = read_cvp_file(o.file);
  json j = envelope();
  j["value"] = via_layout ? solve_encoded(encode(o, inst)) : cvp_solve(inst);
  emit(j);
}

// Cost sweep over c = 2^k and the requested row counts.
void cmd_bench(const Options& o) {
  Template t = o.file.empty() ? match_benchmark() : read_sheet_file(o.file).tmpl;
  if (o.k_min < 0 || o.k_max < o.k_min || o.k_max > 20) throw UsageError("bad --k-min/--k-max");
  json rows = json::array();
  if (o.format == "csv") std::cout << "c,r,total_parallel_time,peak_memory_cells\n";
  for (Int k = o.k_min; k <= o.k_max; ++k) {
    for (Int r : o.rows) {
      Int c = Int{1} << k;
      CostReport cost = par_evaluate(t, c, r).second;
      if (o.format == "csv")
        std::cout << c << "," << r << "," << cost.total_parallel_time << "," << cost.peak_memory_cells << "\n";
      else
        rows.push_back({{"c", c}, {"r", r}, {"total_parallel_time", cost.total_parallel_time},
                        {"peak_memory_cells", cost.peak_memory_cells}});
    }
  }
  if (o.format != "csv") {
    json j = envelope();
    j["samples"] = rows;
    emit(j);
  }
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const PramFault*>(&e)) return "pram_fault";
  if (dynamic_cast<const NotDirectedError*>(&e)) return "not_directed";
  if (dynamic_cast<const ArrayEligibilityError*>(&e)) return "array_eligibility";
  if (dynamic_cast<const NotCompilableError*>(&e)) return "not_compilable";
  if (dynamic_cast<const CircularReferenceError*>(&e)) return "circular_reference";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
  if (dynamic_cast<const SheetError*>(&e)) return "sheet";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spreadsheet templates, parallel evaluation and PRAM translation", "sheetpram"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--steps", o.steps, "Step count t");
  app.add_option("--p", o.p, "Processor count")->check(CLI::PositiveNumber);
  app.add_option("--dims", o.dims, "Fill dimensions CxR");
  app.add_flag("--output-only", o.output_only, "Print only the output part");

  auto sheet_cmd = [&](const std::string& name, const std::string& help) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("file", o.file, "Sheet file")->required();
    return sc;
  };
  sheet_cmd("parse", "Parse a sheet file and print its parts");
  sheet_cmd("fill", "Print the filled grid");
  sheet_cmd("classify", "Organization and direction of a template");
  sheet_cmd("eval", "Sequential evaluation");
  sheet_cmd("eval-par", "Round-based evaluation with parallel cost");
  sheet_cmd("compile", "Compile a template to a PRAM program");
  sheet_cmd("roundtrip", "Compile, simulate and compare with sequential evaluation");

  auto* pram = app.add_subcommand("pram-run", "Run a PRAM program");
  pram->add_option("--program", o.program, "Program file")->required();
  pram->add_option("--input", o.input, "Comma-separated input after the length cell");
  pram->add_option("--m", o.m, "Shared memory cells (default p)");
  pram->add_option("--policy", o.policy, "Out-of-range reads: hard or zero");
  pram->add_flag("--trace", o.trace, "Print every state");

  auto* uni = app.add_subcommand("gen-universal", "Universal simulator template");
  uni->add_option("--program", o.program, "Program to load");
  uni->add_option("--input", o.input, "Comma-separated input after the length cell");
  auto* flex = app.add_subcommand("gen-flexible", "Flexible simulator template");
  flex->add_option("--program", o.program, "Program to load");
  flex->add_option("--input", o.input, "Comma-separated input after the length cell");
  flex->add_option("--q", o.q, "Filled columns (default p)");

  auto* gen = app.add_subcommand("gen-cvp", "Random circuit instance");
  gen->add_option("--n", o.n, "Number of gates")->check(CLI::PositiveNumber);
  auto* enc = app.add_subcommand("encode-cvp", "Encode a circuit as a sheet");
  auto* solve = app.add_subcommand("solve-cvp", "Value of a circuit's last variable");
  for (auto* sc : {enc, solve}) {
    sc->add_option("file", o.file, "Circuit file")->required();
    sc->add_option("--layout", o.layout, "s3, s4 or s5");
    sc->add_option("--orientation", o.orientation, "s4 gate direction: rows or columns");
  }

  auto* bench = app.add_subcommand("bench", "Parallel cost sweep");
  bench->add_option("file", o.file, "Sheet file (default: MATCH benchmark)");
  bench->add_option("--k-min", o.k_min, "Smallest log2 c");
  bench->add_option("--k-max", o.k_max, "Largest log2 c");
  bench->add_option("--rows", o.rows, "Row counts")->delimiter(',');

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  bool csv_default = std::find(args.begin(), args.end(), "bench") != args.end();
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }
  if (csv_default && app.count("--format") == 0) o.format = "csv";

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "parse") cmd_parse(o);
    else if (cmd == "fill") cmd_fill(o);
    else if (cmd == "classify") cmd_classify(o);
    else if (cmd == "eval") cmd_eval(o);
    else if (cmd == "eval-par") cmd_eval_par(o);
    else if (cmd == "compile") cmd_compile(o);
    else if (cmd == "roundtrip") cmd_roundtrip(o);
    else if (cmd == "pram-run") cmd_pram_run(o);
    else if (cmd == "gen-universal") cmd_gen_universal(o);
    else if (cmd == "gen-flexible") cmd_gen_flexible(o);
    else if (cmd == "gen-cvp") cmd_gen_cvp(o);
    else if (cmd == "encode-cvp") cmd_encode_cvp(o);
    else if (cmd == "solve-cvp") cmd_solve_cvp(o, solve->count("--layout") > 0);
    else if (cmd == "bench") cmd_bench(o);
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    json j = envelope();
    j["error"] = {{"type", error_type(e)}, {"message", e.what()}};
    emit(j);
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
