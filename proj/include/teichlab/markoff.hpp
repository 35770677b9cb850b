#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "teichlab/errors.hpp"
#include "teichlab/numeric.hpp"

namespace teichlab::markoff {

struct MarkoffTriple {
  big_int p{1}, q{1}, r{1};

  bool satisfies_equation() const { return p * p + q * q + r * r == 3 * p * q * r; }

  MarkoffTriple sorted() const {
    std::array<big_int, 3> v{p, q, r};
    std::sort(v.begin(), v.end());
    return {v[0], v[1], v[2]};
  }

  const big_int& max() const { return std::max({std::cref(p), std::cref(q), std::cref(r)}, [](auto a, auto b) { return a.get() < b.get(); }).get(); }
  big_int sum() const { return p + q + r; }

  const big_int& operator[](int i) const { return i == 0 ? p : i == 1 ? q : r; }
  big_int& operator[](int i) { return i == 0 ? p : i == 1 ? q : r; }

  bool operator==(const MarkoffTriple& o) const { return p == o.p && q == o.q && r == o.r; }
};

/// replaces coordinate i by 3 * (product of the other two) - itself
inline MarkoffTriple apply_move(const MarkoffTriple& t, int i) {
  if (i < 0 || i > 2) throw PreconditionError("apply_move: index must be 0, 1 or 2");
  MarkoffTriple s = t;
  s[i] = 3 * t[(i + 1) % 3] * t[(i + 2) % 3] - t[i];
  return s;
}

namespace detail {

inline bool descends_to_root(MarkoffTriple t) {
  for (;;) {
    t = t.sorted();
    if (t.p <= 0) return false;
    if (t.p == 1 && t.q == 1 && t.r == 1) return true;
    big_int nr = 3 * t.p * t.q - t.r;
    if (nr >= t.r) return false;
    t.r = nr;
  }
}

}  // namespace detail

/// equation check and descent to (1,1,1); the two must agree
inline bool is_markoff(const big_int& p, const big_int& q, const big_int& r) {
  if (p <= 0 || q <= 0 || r <= 0) throw PreconditionError("is_markoff: entries must be positive");
  MarkoffTriple t{p, q, r};
  bool eq = t.satisfies_equation();
  bool desc = detail::descends_to_root(t);
  if (eq != desc) throw InvariantError("is_markoff: equation and descent disagree for (" + p.str() + "," + q.str() + "," + r.str() + ")");
  return eq;
}

enum class Norm { max, sum };
enum class Ordering { unordered, ordered };

inline big_int norm_of(const MarkoffTriple& t, Norm n) { return n == Norm::max ? t.max() : t.sum(); }

/// 1 for (1,1,1), 3 with a repeated entry, 6 otherwise
inline int permutation_weight(const MarkoffTriple& s) {
  if (s.p == s.q && s.q == s.r) return 1;
  if (s.p == s.q || s.q == s.r || s.p == s.r) return 3;
  return 6;
}

/** @brief A node of the Markoff tree: a sorted triple, the move that produced it and its path from the root. */
struct TreeNode {
  MarkoffTriple triple;
  int parent_move = -1;
  int depth = 0;
  std::string path;  // one digit per move from the root
};

/// children of a sorted node: (b, c, 3bc - a) and (a, c, 3ac - b); duplicates at the root segment are dropped
inline std::vector<TreeNode> children(const TreeNode& n) {
  const auto& t = n.triple;
  std::vector<TreeNode> out;
  auto push = [&](MarkoffTriple c, int move) {
    c = c.sorted();
    if (!(c.max() > t.max())) throw InvariantError("markoff tree: an away-from-root move did not increase the max coordinate");
    out.push_back({c, move, n.depth + 1, n.path + char('0' + move)});
  };
  if (t.p == 1 && t.q == 1 && t.r == 1) {
    push({1, 1, 2}, 0);
    return out;
  }
  if (t.p == 1 && t.q == 1 && t.r == 2) {
    push({1, 2, 5}, 0);
    return out;
  }
  push({t.q, t.r, 3 * t.q * t.r - t.p}, 0);
  push({t.p, t.r, 3 * t.p * t.r - t.q}, 1);
  return out;
}

struct CountResult {
  big_int unordered{0};
  big_int ordered{0};
  std::uint64_t nodes = 0;
};

/**
 * @brief Depth-first enumeration with an explicit stack and checkpointing.
 * Nodes are visited in a fixed order; counts are exact.
 */
class Enumerator {
 public:
  using Visitor = std::function<void(const TreeNode&)>;
  using Filter = std::function<bool(const TreeNode&)>;

  Enumerator(big_int bound, Norm norm) : bound_(std::move(bound)), norm_(norm) {
    if (bound_ < 1) throw PreconditionError("enumerate: bound must be >= 1");
    TreeNode root{{1, 1, 1}, -1, 0, ""};
    stack_.push_back(root);
  }

  /// visits up to max_nodes nodes; returns true when finished
  bool run(std::uint64_t max_nodes = UINT64_MAX, const Visitor& visit = nullptr, const Filter& filter = nullptr) {
    std::uint64_t done = 0;
    while (!stack_.empty() && done < max_nodes) {
      TreeNode n = std::move(stack_.back());
      stack_.pop_back();
      if (norm_of(n.triple, norm_) > bound_) continue;
      ++done;
      ++result_.nodes;
      if (!filter || filter(n)) {
        result_.unordered += 1;
        result_.ordered += permutation_weight(n.triple);
        if (visit) visit(n);
      }
      auto ch = children(n);
      for (auto it = ch.rbegin(); it != ch.rend(); ++it)
        if (norm_of(it->triple, norm_) <= bound_) stack_.push_back(std::move(*it));
    }
    return stack_.empty();
  }

  /// runs to completion, writing a checkpoint every `every` nodes
  void run_checkpointed(const std::string& path, std::uint64_t every = 1000000, const Visitor& visit = nullptr) {
    while (!run(every, visit)) save(path);
    save(path);
  }

  bool finished() const { return stack_.empty(); }
  const CountResult& result() const { return result_; }
  const big_int& bound() const { return bound_; }
  Norm norm() const { return norm_; }

  /// MKV1 checkpoint: header, then length-prefixed decimal integers
  void save(const std::string& path) const {
    std::ostringstream o;
    o << "MKV1\n";
    o << "bound " << lp(bound_) << "\n";
    o << "norm " << (norm_ == Norm::max ? "max" : "sum") << "\n";
    o << "nodes " << result_.nodes << "\n";
    o << "unordered " << lp(result_.unordered) << "\n";
    o << "ordered " << lp(result_.ordered) << "\n";
    o << "stack " << stack_.size() << "\n";
    for (const auto& n : stack_)
      o << lp(n.triple.p) << " " << lp(n.triple.q) << " " << lp(n.triple.r) << " " << n.depth << " " << n.parent_move << " "
        << (n.path.empty() ? "-" : n.path) << "\n";
    std::string tmp = path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("checkpoint: cannot open " + tmp);
      f << o.str();
      if (!f) throw Error("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  static Enumerator load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("checkpoint: cannot open " + path);
    std::string magic, key, normname;
    f >> magic;
    if (magic != "MKV1") throw SchemaError("checkpoint: missing MKV1 header in " + path);
    big_int bound = expect_big(f, "bound");
    f >> key >> normname;
    if (key != "norm" || (normname != "max" && normname != "sum")) throw SchemaError("checkpoint: bad norm field");
    Enumerator e(bound, normname == "max" ? Norm::max : Norm::sum);
    e.stack_.clear();
    f >> key >> e.result_.nodes;
    if (key != "nodes" || !f) throw SchemaError("checkpoint: bad nodes field");
    e.result_.unordered = expect_big(f, "unordered");
    e.result_.ordered = expect_big(f, "ordered");
    std::size_t k;
    f >> key >> k;
    if (key != "stack" || !f) throw SchemaError("checkpoint: bad stack field");
    for (std::size_t i = 0; i < k; ++i) {
      TreeNode n;
      n.triple.p = read_lp(f);
      n.triple.q = read_lp(f);
      n.triple.r = read_lp(f);
      f >> n.depth >> n.parent_move >> n.path;
      if (!f) throw SchemaError("checkpoint: truncated stack entry");
      if (n.path == "-") n.path.clear();
      if (!n.triple.satisfies_equation()) throw SchemaError("checkpoint: stack entry is not a Markoff triple");
      e.stack_.push_back(std::move(n));
    }
    return e;
  }

 private:
  static std::string lp(const big_int& v) {
    std::string s = v.str();
    return std::to_string(s.size()) + ":" + s;
  }

  static big_int read_lp(std::istream& f) {
    std::string tok;
    f >> tok;
    auto c = tok.find(':');
    if (c == std::string::npos) throw SchemaError("checkpoint: expected length-prefixed integer, got '" + tok + "'");
    std::size_t len = std::stoul(tok.substr(0, c));
    std::string digits = tok.substr(c + 1);
    if (digits.size() != len || digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw SchemaError("checkpoint: length prefix does not match digits in '" + tok + "'");
    return big_int(digits);
  }

  static big_int expect_big(std::istream& f, const char* name) {
    std::string key;
    f >> key;
    if (key != name) throw SchemaError(std::string("checkpoint: expected field ") + name);
    return read_lp(f);
  }

  big_int bound_;
  Norm norm_;
  std::vector<TreeNode> stack_;
  CountResult result_;
};

/// exact count of tree nodes (or weighted ordered count) with norm <= bound
inline big_int enumerate_count(const big_int& bound, Norm norm = Norm::max, Ordering ord = Ordering::unordered,
                               const Enumerator::Visitor& visit = nullptr) {
  Enumerator e(bound, norm);
  e.run(UINT64_MAX, visit);
  return ord == Ordering::unordered ? e.result().unordered : e.result().ordered;
}

/// count restricted by a predicate on the node (its move path included)
inline big_int enumerate_count_filtered(const big_int& bound, Norm norm, const Enumerator::Filter& filter) {
  Enumerator e(bound, norm);
  e.run(UINT64_MAX, nullptr, filter);
  return e.result().unordered;
}

/// splits the tree into subtrees and counts them on `workers` threads; the sum does not depend on the schedule
inline CountResult enumerate_parallel(const big_int& bound, Norm norm, unsigned workers) {
  if (bound < 1) throw PreconditionError("enumerate: bound must be >= 1");
  CountResult top;
  std::vector<TreeNode> frontier{{{1, 1, 1}, -1, 0, ""}};
  // expand breadth-first until there is enough independent work
  while (!frontier.empty() && frontier.size() < 8 * std::max(1u, workers)) {
    std::vector<TreeNode> next;
    for (const auto& n : frontier) {
      if (norm_of(n.triple, norm) > bound) continue;
      top.unordered += 1;
      top.ordered += permutation_weight(n.triple);
      ++top.nodes;
      for (auto& c : children(n))
        if (norm_of(c.triple, norm) <= bound) next.push_back(std::move(c));
    }
    frontier = std::move(next);
  }
  std::vector<CountResult> parts(frontier.size());
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (std::size_t i; (i = cursor.fetch_add(1)) < frontier.size();) {
      CountResult& r = parts[i];
      std::vector<TreeNode> st{frontier[i]};
      while (!st.empty()) {
        TreeNode n = std::move(st.back());
        st.pop_back();
        r.unordered += 1;
        r.ordered += permutation_weight(n.triple);
        ++r.nodes;
        for (auto& c : children(n))
          if (norm_of(c.triple, norm) <= bound) st.push_back(std::move(c));
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::max(1u, workers); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& r : parts) {
    top.unordered += r.unordered;
    top.ordered += r.ordered;
    top.nodes += r.nodes;
  }
  return top;
}

struct GrowthFit {
  double C = 0, D = 0;
  double condition = 0;
  std::vector<double> relative_residuals;
  double max_abs_relative_residual = 0;
};

/// least squares count = C (ln x)^2 + D ln x ln ln x
inline GrowthFit fit_growth(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw PreconditionError("fit_growth: need at least 3 samples");
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      if (samples[i].first == samples[j].first) throw ConditionError("fit_growth: repeated bound makes the fit degenerate");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first > samples[i - 1].first)) throw PreconditionError("fit_growth: bounds must be increasing");
  for (const auto& s : samples)
    if (!(s.first > std::exp(1.0))) throw PreconditionError("fit_growth: bounds must exceed e so that ln ln x > 0");
  const Eigen::Index n = Eigen::Index(samples.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double L = std::log(samples[i].first);
    A(i, 0) = L * L;
    A(i, 1) = L * std::log(L);
    b(i) = samples[i].second;
  }
  // column scaling keeps the condition number about the geometry of the samples
  Eigen::Vector2d scale(A.col(0).norm(), A.col(1).norm());
  Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  auto sv = svd.singularValues();
  GrowthFit f;
  f.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(f.condition < 1e8)) throw ConditionError("fit_growth: samples too close together (condition number " + std::to_string(f.condition) + ")");
  Eigen::Vector2d xs = svd.solve(b);
  f.C = xs(0) / scale(0);
  f.D = xs(1) / scale(1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pred = f.C * A(i, 0) + f.D * A(i, 1);
    double r = (b(i) - pred) / b(i);
    f.relative_residuals.push_back(r);
    f.max_abs_relative_residual = std::max(f.max_abs_relative_residual, std::abs(r));
  }
  return f;
}

/// CSV row p,q,r,depth,parent_move
inline std::string csv_row(const TreeNode& n) {
  return n.triple.p.str() + "," + n.triple.q.str() + "," + n.triple.r.str() + "," + std::to_string(n.depth) + "," + std::to_string(n.parent_move);
}

}  // namespace teichlab::markoff
