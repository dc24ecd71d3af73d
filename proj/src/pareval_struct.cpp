#include <algorithm>
#include <functional>

#include "sheetpram/pareval.hpp"

namespace sheetpram {

bool entry_less(const SortedEntry& a, const SortedEntry& b) {
  int c = compare_values(a.value, b.value);
  if (c != 0) return c < 0;
  return a.pos < b.pos;
}

struct SumTree::Node {
  SortedEntry e;
  std::uint64_t prio = 0;
  Int sum = 0;
  std::unique_ptr<Node> left, right;

  void pull() {
    sum = e.value.numeric();
    if (left) sum = arith::add(sum, left->sum);
    if (right) sum = arith::add(sum, right->sum);
  }
};

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SumTree::SumTree() = default;
SumTree::~SumTree() = default;
SumTree::SumTree(SumTree&&) noexcept = default;
SumTree& SumTree::operator=(SumTree&&) noexcept = default;

Int SumTree::insert(const SortedEntry& e) {
  auto fresh = std::make_unique<Node>();
  fresh->e = e;
  fresh->prio = splitmix(seed_);
  fresh->pull();
  Int visited = 0;
  std::function<void(std::unique_ptr<Node>&)> go = [&](std::unique_ptr<Node>& n) {
    ++visited;
    if (!n) {
      n = std::move(fresh);
      return;
    }
    if (entry_less(e, n->e)) {
      go(n->left);
      if (n->left->prio > n->prio) {
        auto l = std::move(n->left);
        n->left = std::move(l->right);
        n->pull();
        l->right = std::move(n);
        n = std::move(l);
      }
    } else {
      go(n->right);
      if (n->right->prio > n->prio) {
        auto r = std::move(n->right);
        n->right = std::move(r->left);
        n->pull();
        r->left = std::move(n);
        n = std::move(r);
      }
    }
    n->pull();
  };
  go(root_);
  return visited;
}

Int SumTree::size() const {
  std::function<Int(const Node*)> go = [&](const Node* n) -> Int {
    return n ? 1 + go(n->left.get()) + go(n->right.get()) : 0;
  };
  return go(root_.get());
}

Int SumTree::depth() const {
  std::function<Int(const Node*)> go = [&](const Node* n) -> Int {
    return n ? 1 + std::max(go(n->left.get()), go(n->right.get())) : 0;
  };
  return go(root_.get());
}

std::vector<SortedEntry> SumTree::inorder() const {
  std::vector<SortedEntry> out;
  std::function<void(const Node*)> go = [&](const Node* n) {
    if (!n) return;
    go(n->left.get());
    out.push_back(n->e);
    go(n->right.get());
  };
  go(root_.get());
  return out;
}

std::optional<SortedEntry> SumTree::lower_bound(const SortedEntry& e, Int* visited) const {
  std::optional<SortedEntry> best;
  Int count = 0;
  for (const Node* n = root_.get(); n;) {
    ++count;
    if (entry_less(n->e, e)) {
      n = n->right.get();
    } else {
      best = n->e;
      n = n->left.get();
    }
  }
  if (visited) *visited = count;
  return best;
}

Int SumTree::sum_less(const SortedEntry& e) const {
  Int total = 0;
  for (const Node* n = root_.get(); n;) {
    if (entry_less(n->e, e)) {
      total = arith::add(total, n->e.value.numeric());
      if (n->left) total = arith::add(total, n->left->sum);
      n = n->right.get();
    } else {
      n = n->left.get();
    }
  }
  return total;
}

bool SumTree::sums_consistent() const {
  bool ok = true;
  std::function<Int(const Node*)> go = [&](const Node* n) -> Int {
    if (!n) return 0;
    Int s = arith::add(arith::add(go(n->left.get()), go(n->right.get())), n->e.value.numeric());
    if (s != n->sum) ok = false;
    if (n->left && (n->left->prio > n->prio || entry_less(n->e, n->left->e))) ok = false;
    if (n->right && (n->right->prio > n->prio || entry_less(n->right->e, n->e))) ok = false;
    return s;
  };
  go(root_.get());
  return ok;
}

namespace {

int compare_keys(const std::vector<Value>& a, const std::vector<Value>& b, std::size_t parts) {
  for (std::size_t i = 0; i < parts; ++i) {
    int c = compare_values(a[i], b[i]);
    if (c != 0) return c;
  }
  return 0;
}

}  // namespace

void PrefixArray::build() {
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    int c = compare_keys(a.key, b.key, a.key.size());
    return c != 0 ? c < 0 : a.pos < b.pos;
  });
  Int run = 0;
  for (auto& r : records) {
    run = arith::add(run, r.weight);
    r.sum = run;
  }
}

bool PrefixArray::consistent() const {
  Int run = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    run = arith::add(run, records[i].weight);
    if (records[i].sum != run) return false;
    if (i > 0) {
      int c = compare_keys(records[i - 1].key, records[i].key, records[i].key.size());
      if (c > 0 || (c == 0 && records[i - 1].pos >= records[i].pos)) return false;
    }
  }
  return true;
}

Int PrefixArray::query(const std::vector<Value>& eq, std::optional<BinOp> op, const Value& y, Int* steps) const {
  Int count = 0;
  auto search = [&](std::size_t lo, std::size_t hi, const std::function<bool(const Record&)>& before) {
    while (lo < hi) {
      ++count;
      std::size_t mid = lo + (hi - lo) / 2;
      if (before(records[mid])) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  };
  const std::size_t k = eq.size();
  std::size_t lo = search(0, records.size(), [&](const Record& r) { return compare_keys(r.key, eq, k) < 0; });
  std::size_t hi = search(lo, records.size(), [&](const Record& r) { return compare_keys(r.key, eq, k) <= 0; });
  auto prefix = [&](std::size_t i) { return i == 0 ? Int{0} : records[i - 1].sum; };
  auto range_sum = [&](std::size_t a, std::size_t b) { return a >= b ? Int{0} : arith::sub(prefix(b), prefix(a)); };
  Int out = range_sum(lo, hi);
  if (op) {
    std::size_t a = search(lo, hi, [&](const Record& r) { return compare_values(r.key[k], y) < 0; });
    std::size_t b = search(a, hi, [&](const Record& r) { return compare_values(r.key[k], y) <= 0; });
    switch (*op) {
      case BinOp::Lt: out = range_sum(lo, a); break;
      case BinOp::Le: out = range_sum(lo, b); break;
      case BinOp::Gt: out = range_sum(b, hi); break;
      case BinOp::Ge: out = range_sum(a, hi); break;
      case BinOp::Eq: out = range_sum(a, b); break;
      case BinOp::Ne: out = arith::sub(out, range_sum(a, b)); break;
      default: throw SheetError("not a comparison");
    }
  }
  if (steps) *steps += count;
  return out;
}

}  // namespace sheetpram
