#pragma once

// Straight-line code blocks for the template compiler. Every block records
// how many steps a processor spends in it; branches on per-processor data
// are padded so that all paths take the same number of steps, which keeps
// the processors in lockstep.

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "sheetpram/pram.hpp"

namespace sheetpram::detail {

struct Block {
  std::vector<std::string> lines;  // "@name" marks a label, "@name" inside a line is a target
  Int steps = 0;

  Block& operator+=(const Block& b) {
    lines.insert(lines.end(), b.lines.begin(), b.lines.end());
    steps += b.steps;
    return *this;
  }
  Block& operator<<(const std::string& instr) {
    lines.push_back(instr);
    ++steps;
    return *this;
  }
};

inline Block operator+(Block a, const Block& b) { return a += b; }

class Labels {
 public:
  std::string fresh() { return "@L" + std::to_string(next_++); }

 private:
  Int next_ = 0;
};

inline Block nops(Int n) {
  Block b;
  for (Int x = 0; x < n; ++x) b << "k := k";
  return b;
}

inline Block mark(const std::string& label) {
  Block b;
  b.lines.push_back(label + ":");
  return b;
}

// if u < v then `yes` else `no`; both paths take 2 + max(len) steps.
inline Block if_lt(Labels& lab, const std::string& u, const std::string& v, Block yes, Block no) {
  Int len = std::max(yes.steps, no.steps);
  yes += nops(len - yes.steps);
  no += nops(len - no.steps);
  std::string t = lab.fresh(), e = lab.fresh();
  Block b;
  b << "if " + u + " < " + v + " goto " + t;
  b += no;
  b << "if 0 < 1 goto " + e;
  b += mark(t);
  b += yes;
  b << "k := k";
  b += mark(e);
  b.steps = len + 2;
  return b;
}

// Runs `code` only where register k equals `want`; elsewhere the same number of steps pass idle.
inline Block when_k_equals(Labels& lab, Int want, Block code) {
  std::string s1 = lab.fresh(), s2 = lab.fresh(), end = lab.fresh();
  Block b;
  b << "if k < " + std::to_string(want) + " goto " + s1;
  b << "if " + std::to_string(want) + " < k goto " + s2;
  Int len = code.steps;
  b += code;
  b << "if 0 < 1 goto " + end;
  b += mark(s1);
  b += nops(1);
  b += mark(s2);
  b += nops(len + 1);
  b += mark(end);
  b.steps = len + 3;
  return b;
}

// Runs `code` only on processors s <= limit.
inline Block when_s_at_most(Labels& lab, Int limit, Block code) {
  std::string skip = lab.fresh(), end = lab.fresh();
  Block b;
  b << "if " + std::to_string(limit) + " < s goto " + skip;
  Int len = code.steps;
  b += code;
  b << "if 0 < 1 goto " + end;
  b += mark(skip);
  b += nops(len + 1);
  b += mark(end);
  b.steps = len + 2;
  return b;
}

// Resolves labels and parses the result.
inline Program assemble(const Block& code) {
  std::unordered_map<std::string, Int> at;
  Int line = 0;
  for (const auto& l : code.lines) {
    if (l.back() == ':') at[l.substr(0, l.size() - 1)] = line + 1;
    else ++line;
  }
  std::string text;
  for (const auto& l : code.lines) {
    if (l.back() == ':') continue;
    auto pos = l.find('@');
    if (pos == std::string::npos) {
      text += l + "\n";
      continue;
    }
    auto it = at.find(l.substr(pos));
    if (it == at.end()) throw SheetError("unresolved label " + l.substr(pos));
    text += l.substr(0, pos) + std::to_string(it->second) + "\n";
  }
  return parse_program(text);
}

}  // namespace sheetpram::detail
