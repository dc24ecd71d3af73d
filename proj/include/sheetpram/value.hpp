#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sheetpram {

using Int = std::int64_t;

// Integer arithmetic shared by the spreadsheet evaluator and the PRAM
// interpreter: two's-complement wraparound, division truncates toward zero.
namespace arith {

inline Int add(Int a, Int b) { return static_cast<Int>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b)); }
inline Int sub(Int a, Int b) { return static_cast<Int>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b)); }
inline Int mul(Int a, Int b) { return static_cast<Int>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)); }
inline Int neg(Int a) { return sub(0, a); }

// Caller must reject b == 0.
inline Int div(Int a, Int b) {
  if (b == -1) return neg(a);
  return a / b;
}

}  // namespace arith

enum class ErrorKind { Value, NA, Div0, Ref };

std::string to_string(ErrorKind e);

class Value {
 public:
  enum class Kind { Integer, Boolean, Error };

  Value() = default;
  static Value integer(Int n) { Value v; v.kind_ = Kind::Integer; v.n_ = n; return v; }
  static Value boolean(bool b) { Value v; v.kind_ = Kind::Boolean; v.n_ = b ? 1 : 0; return v; }
  static Value error(ErrorKind e) { Value v; v.kind_ = Kind::Error; v.err_ = e; return v; }

  Kind kind() const { return kind_; }
  bool is_int() const { return kind_ == Kind::Integer; }
  bool is_bool() const { return kind_ == Kind::Boolean; }
  bool is_error() const { return kind_ == Kind::Error; }

  Int as_int() const { return n_; }
  bool as_bool() const { return n_ != 0; }
  ErrorKind as_error() const { return err_; }

  // Booleans coerce to 1/0 under arithmetic.
  Int numeric() const { return n_; }

  bool operator==(const Value& o) const {
    if (kind_ != o.kind_) return false;
    return kind_ == Kind::Error ? err_ == o.err_ : n_ == o.n_;
  }

  std::string to_string() const;

 private:
  Kind kind_ = Kind::Integer;
  Int n_ = 0;
  ErrorKind err_ = ErrorKind::Value;
};

// Exceptions used across the library.
struct SheetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : SheetError { using SheetError::SheetError; };
struct OutOfGridError : SheetError { using SheetError::SheetError; };
struct CircularReferenceError : SheetError { using SheetError::SheetError; };
struct NotDirectedError : SheetError { using SheetError::SheetError; };
struct ArrayEligibilityError : SheetError { using SheetError::SheetError; };
struct UnsupportedError : SheetError { using SheetError::SheetError; };
struct NotCompilableError : SheetError { using SheetError::SheetError; };

struct ParseError : SheetError {
  ParseError(const std::string& msg, std::size_t pos)
      : SheetError(msg + " at position " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

}  // namespace sheetpram
