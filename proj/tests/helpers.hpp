#pragma once

#include <sstream>
#include <string>

#include "sheetpram/grid.hpp"

namespace testing_util {

inline sheetpram::Template sheet(const std::string& text) {
  std::istringstream in(text);
  return sheetpram::read_sheet(in).tmpl;
}

}  // namespace testing_util
