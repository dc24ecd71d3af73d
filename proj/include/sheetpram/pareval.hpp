#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "sheetpram/grid.hpp"
#include "sheetpram/seqeval.hpp"

namespace sheetpram {

struct CostReport {
  Int processors = 0;
  Int rounds = 0;
  Int init_steps = 0;
  std::vector<Int> per_round_parallel_steps;
  Int total_parallel_time = 0;  // init_steps + sum of the rounds
  Int peak_memory_cells = 0;
};

// (value, position) with position a column inside a row or a row inside a column.
struct SortedEntry {
  Value value;
  Int pos = 0;
};

// Orders by value (compare_values), then position.
bool entry_less(const SortedEntry& a, const SortedEntry& b);

// Balanced search tree (treap) of entries; every node also stores the sum of
// the numeric values in its subtree.
class SumTree {
 public:
  SumTree();
  ~SumTree();
  SumTree(SumTree&&) noexcept;
  SumTree& operator=(SumTree&&) noexcept;

  // Returns the number of nodes visited.
  Int insert(const SortedEntry& e);
  Int size() const;
  Int depth() const;
  std::vector<SortedEntry> inorder() const;
  // First entry not less than `e`, with the nodes visited.
  std::optional<SortedEntry> lower_bound(const SortedEntry& e, Int* visited = nullptr) const;
  // Sum of the numeric values of entries less than `e`.
  Int sum_less(const SortedEntry& e) const;
  // True when every node's sum equals the sum recomputed over its subtree.
  bool sums_consistent() const;

 private:
  struct Node;
  std::unique_ptr<Node> root_;
  std::uint64_t seed_ = 0x9e3779b97f4a7c15ULL;
};

// Records sorted by key with running sums: entry j's sum is the total weight
// of entries 0..j.
struct PrefixArray {
  struct Record {
    std::vector<Value> key;
    Int pos = 0;
    Int weight = 0;
    Int sum = 0;
  };
  std::vector<Record> records;

  // Sorts and fills the running sums.
  void build();
  bool consistent() const;
  // Total weight of records whose first `eq.size()` key parts equal `eq` and,
  // when `op` is a comparison, whose next key part v satisfies `v op y`.
  Int query(const std::vector<Value>& eq, std::optional<BinOp> op, const Value& y, Int* steps = nullptr) const;
};

// Round-based evaluation state for a row-directed grid: one virtual
// processor per column, rows computed in order.
class RoundState {
 public:
  explicit RoundState(const Grid& g);
  ~RoundState();
  RoundState(const RoundState&) = delete;
  RoundState& operator=(const RoundState&) = delete;

  Int first_row() const;
  Int last_row() const;
  bool row_organized() const;

  // Values of `row` (one per filled column) plus the parallel steps taken.
  std::vector<Value> round_compute(Int row, Int* steps = nullptr);
  // Stores the row and refreshes the auxiliary structures; returns the steps taken.
  Int round_update(Int row, const std::vector<Value>& values);

  // Sorted copy of a row (present, non-error cells).
  const std::vector<SortedEntry>& sorted_row(Int row) const;
  // Column tree contents in order; empty for row-organized grids.
  std::vector<SortedEntry> column_tree(Int col) const;
  const SumTree* column_tree_ptr(Int col) const;
  // Prefix arrays built during the last round.
  std::vector<const PrefixArray*> prefix_arrays() const;

  Int init_steps() const;
  Int memory_cells() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// Sequential-equivalent values with simulated parallel cost. Row-directed
// templates run row by row, column-directed ones column by column.
// Throws NotDirectedError or ArrayEligibilityError.
std::pair<EvalResult, CostReport> par_evaluate(const Template& t, Int c, Int r);

// Template with rows and columns exchanged (references, ranges, ROW/COLUMN,
// INDEX arguments and the output part included).
Template transpose(const Template& t);

// One-row template whose formula makes three MATCH lookups into the row
// above; used for cost sweeps.
Template match_benchmark();

}  // namespace sheetpram
