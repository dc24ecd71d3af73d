#include "sheetpram/grid.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sheetpram {

void Template::set_formula(const CellAddr& a, std::string_view text) {
  formulas[a] = std::make_shared<const Expr>(parse_formula(text));
}

void Template::set_formula(const CellAddr& a, Expr e) { formulas[a] = std::make_shared<const Expr>(std::move(e)); }

bool Template::in_input_part(const CellAddr& a) const {
  if (inputs.count(a)) return true;
  return std::any_of(input_part.begin(), input_part.end(), [&](const Region& r) { return r.contains(a); });
}

bool Template::in_input_part(const Region& g) const {
  return std::any_of(input_part.begin(), input_part.end(), [&](const Region& r) {
    return g.col_lo >= r.col_lo && g.col_hi <= r.col_hi && g.row_lo >= r.row_lo && g.row_hi <= r.row_hi;
  });
}

void Template::validate() const {
  for (const auto& [a, f] : formulas) {
    if (!computing.contains(a)) throw DimensionError("formula " + to_a1(a) + " lies outside the computing part");
  }
  for (const auto& r : input_part) {
    if (r.intersects(computing)) throw DimensionError("input region " + to_string(r) + " overlaps the computing part");
  }
  for (const auto& [a, v] : inputs) {
    if (computing.contains(a)) throw DimensionError("input cell " + to_a1(a) + " lies in the computing part");
  }
}

Grid::Grid(Template t, Int cols, Int rows) : t_(std::move(t)), cols_(cols), rows_(rows) {
  filled_ = {t_.computing.col_lo, t_.computing.col_lo + cols - 1, t_.computing.row_lo, t_.computing.row_lo + rows - 1};
}

std::optional<CellAddr> Grid::origin_of(const CellAddr& a) const {
  if (!filled_.contains(a)) return std::nullopt;
  const Region& c = t_.computing;
  CellAddr o{c.col_lo + (a.col - c.col_lo) % c.width(), c.row_lo + (a.row - c.row_lo) % c.height()};
  if (!t_.formulas.count(o)) return std::nullopt;
  return o;
}

const Expr* Grid::formula_ptr(const CellAddr& a, CellAddr* origin) const {
  auto o = origin_of(a);
  if (!o) return nullptr;
  if (origin) *origin = *o;
  return t_.formulas.at(*o).get();
}

std::optional<Expr> Grid::formula_at(const CellAddr& a) const {
  CellAddr o;
  const Expr* f = formula_ptr(a, &o);
  if (!f) return std::nullopt;
  return shift_formula(*f, a.col - o.col, a.row - o.row);
}

std::optional<Int> Grid::input_at(const CellAddr& a) const {
  if (filled_.contains(a)) return std::nullopt;
  auto it = t_.inputs.find(a);
  if (it == t_.inputs.end()) return std::nullopt;
  return it->second;
}

bool Grid::is_empty(const CellAddr& a) const { return !origin_of(a) && !input_at(a); }

CellAddr Grid::extent() const {
  CellAddr e{0, 0};
  if (!t_.formulas.empty()) {
    e.col = filled_.col_hi;
    e.row = filled_.row_hi;
  }
  for (const auto& [a, v] : t_.inputs) {
    e.col = std::max(e.col, a.col);
    e.row = std::max(e.row, a.row);
  }
  return e;
}

std::vector<CellAddr> Grid::formula_cells() const {
  std::vector<CellAddr> out;
  if (t_.formulas.empty()) return out;
  const Region& c = t_.computing;
  for (Int row = filled_.row_lo; row <= filled_.row_hi; ++row) {
    Int tr = c.row_lo + (row - c.row_lo) % c.height();
    for (Int col = filled_.col_lo; col <= filled_.col_hi; ++col) {
      Int tc = c.col_lo + (col - c.col_lo) % c.width();
      if (t_.formulas.count({tc, tr})) out.push_back({col, row});
    }
  }
  return out;
}

std::vector<CellAddr> Grid::output_cells() const {
  std::vector<CellAddr> out;
  if (t_.output == OutputPart::LastRow) {
    for (Int col = filled_.col_lo; col <= filled_.col_hi; ++col) out.push_back({col, filled_.row_hi});
  } else {
    for (Int row = filled_.row_lo; row <= filled_.row_hi; ++row) out.push_back({filled_.col_hi, row});
  }
  return out;
}

Grid fill_template(const Template& t, Int cols, Int rows) {
  t.validate();
  if (cols < 1 || rows < 1) throw DimensionError("fill dimensions must be positive");
  if (cols < t.computing.width() || rows < t.computing.height())
    throw DimensionError("fill " + std::to_string(cols) + "x" + std::to_string(rows) +
                         " is smaller than the computing part " + to_string(t.computing));
  Grid g(t, cols, rows);
  for (const auto& r : t.input_part)
    if (r.intersects(g.filled())) throw DimensionError("fill would overwrite input region " + to_string(r));
  for (const auto& [a, v] : t.inputs)
    if (g.filled().contains(a)) throw DimensionError("fill would overwrite input cell " + to_a1(a));
  return g;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SheetFile read_sheet(std::istream& in) {
  SheetFile f;
  bool have_computing = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string l = trim(line);
    if (l.empty()) continue;
    try {
      if (l[0] == '#') {
        std::istringstream hs(l.substr(1));
        std::string key, arg;
        hs >> key >> arg;
        if (key == "computing") {
          f.tmpl.computing = parse_region(arg);
          have_computing = true;
        } else if (key == "input") {
          f.tmpl.input_part.push_back(parse_region(arg));
        } else if (key == "output") {
          if (arg == "row") f.tmpl.output = OutputPart::LastRow;
          else if (arg == "column") f.tmpl.output = OutputPart::LastColumn;
          else throw ParseError("output must be row or column", 0);
        } else if (key == "fill") {
          auto x = arg.find_first_of("xX");
          if (x == std::string::npos) throw ParseError("fill expects CxR", 0);
          f.fill = std::make_pair(std::stoll(arg.substr(0, x)), std::stoll(arg.substr(x + 1)));
        }
        // other '#' lines are comments
        continue;
      }
      auto tab = l.find_first_of("\t ");
      if (tab == std::string::npos) throw ParseError("expected <address>\\t<content>", 0);
      CellAddr a = parse_addr(l.substr(0, tab));
      std::string content = trim(l.substr(tab + 1));
      if (!content.empty() && (content[0] == '=' || content[0] == '{')) {
        f.tmpl.set_formula(a, content);
      } else {
        std::size_t used = 0;
        Int v = std::stoll(content, &used);
        if (used != content.size()) throw ParseError("bad integer '" + content + "'", used);
        f.tmpl.set_input(a, v);
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what(), e.position);
    } catch (const std::logic_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what(), 0);
    }
  }
  if (!have_computing) {
    if (f.tmpl.formulas.empty()) {
      f.tmpl.computing = {1, 1, 1, 1};
    } else {
      Region r{kUnbounded, 0, kUnbounded, 0};
      for (const auto& [a, e] : f.tmpl.formulas) {
        r.col_lo = std::min(r.col_lo, a.col);
        r.col_hi = std::max(r.col_hi, a.col);
        r.row_lo = std::min(r.row_lo, a.row);
        r.row_hi = std::max(r.row_hi, a.row);
      }
      f.tmpl.computing = r;
    }
  }
  return f;
}

SheetFile read_sheet_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SheetError("cannot open " + path);
  return read_sheet(in);
}

void write_template(std::ostream& out, const Template& t, std::optional<std::pair<Int, Int>> fill) {
  out << "#computing " << to_string(t.computing) << "\n";
  for (const auto& r : t.input_part) out << "#input " << to_string(r) << "\n";
  out << "#output " << (t.output == OutputPart::LastRow ? "row" : "column") << "\n";
  if (fill) out << "#fill " << fill->first << "x" << fill->second << "\n";
  for (const auto& [a, v] : t.inputs) out << to_a1(a) << "\t" << v << "\n";
  for (const auto& [a, e] : t.formulas) out << to_a1(a) << "\t" << to_string(*e) << "\n";
}

void write_grid(std::ostream& out, const Grid& g) {
  const Template& t = g.source();
  out << "#computing " << to_string(g.filled()) << "\n";
  for (const auto& r : t.input_part) out << "#input " << to_string(r) << "\n";
  out << "#output " << (t.output == OutputPart::LastRow ? "row" : "column") << "\n";
  for (const auto& [a, v] : t.inputs) out << to_a1(a) << "\t" << v << "\n";
  for (const auto& a : g.formula_cells()) out << to_a1(a) << "\t" << to_string(*g.formula_at(a)) << "\n";
}

}  // namespace sheetpram
