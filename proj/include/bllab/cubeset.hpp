#pragma once

// Finite unions of level-n base-b grid cubes in [0,1]^d.
//
// A cell (k_0, ..., k_{d-1}) with 0 <= k_j < b^n stands for the closed cube
// prod_j [k_j b^-n, (k_j + 1) b^-n]. Cells are stored as mixed-radix keys
// (k_0 most significant), so sorted keys are lexicographically sorted cells.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bllab/error.hpp"

namespace bllab {

using Coord = std::int64_t;
using CellKey = std::uint64_t;

/// b^e, or 0 if it exceeds `limit`.
inline std::uint64_t checked_pow(std::uint64_t b, std::uint64_t e,
                                 std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 2) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (r > limit / b) return 0;
    r *= b;
  }
  return r;
}

class CubeSet {
 public:
  CubeSet() = default;
  CubeSet(int base, int level, int dim) : base_(base), level_(level), dim_(dim) {
    require(base >= 2, "cube set base must be at least 2");
    require(level >= 0, "cube set level must be non-negative");
    require(dim >= 1, "cube set dimension must be at least 1");
    side_ = checked_pow(static_cast<std::uint64_t>(base), static_cast<std::uint64_t>(level));
    if (side_ == 0 || checked_pow(side_, static_cast<std::uint64_t>(dim)) == 0)
      fail_budget("grid " + std::to_string(base) + "^" + std::to_string(level) + " in dimension " +
                  std::to_string(dim) + " is too fine to index");
  }

  static CubeSet from_keys(int base, int level, int dim, std::vector<CellKey> keys) {
    CubeSet s(base, level, dim);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    s.keys_ = std::move(keys);
    return s;
  }

  static CubeSet from_cells(int base, int level, int dim, const std::vector<std::vector<Coord>>& cells) {
    CubeSet s(base, level, dim);
    std::vector<CellKey> keys;
    keys.reserve(cells.size());
    for (const auto& c : cells) {
      require(c.size() == static_cast<std::size_t>(dim), "cell has the wrong dimension");
      keys.push_back(s.encode(c));
    }
    return from_keys(base, level, dim, std::move(keys));
  }

  int base() const noexcept { return base_; }
  int level() const noexcept { return level_; }
  int dim() const noexcept { return dim_; }
  /// b^n, the number of cells per axis.
  Coord side() const noexcept { return static_cast<Coord>(side_); }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  const std::vector<CellKey>& keys() const noexcept { return keys_; }

  CellKey encode(std::span<const Coord> c) const {
    CellKey k = 0;
    for (int j = 0; j < dim_; ++j) {
      if (c[j] < 0 || static_cast<std::uint64_t>(c[j]) >= side_)
        fail_input("cell coordinate " + std::to_string(c[j]) + " outside [0, " + std::to_string(side_) + ")");
      k = k * side_ + static_cast<std::uint64_t>(c[j]);
    }
    return k;
  }

  void decode(CellKey k, std::span<Coord> out) const {
    for (int j = dim_ - 1; j >= 0; --j) {
      out[j] = static_cast<Coord>(k % side_);
      k /= side_;
    }
  }

  std::vector<Coord> cell(std::size_t i) const {
    std::vector<Coord> c(static_cast<std::size_t>(dim_));
    decode(keys_[i], c);
    return c;
  }

  std::vector<std::vector<Coord>> cells() const {
    std::vector<std::vector<Coord>> out;
    out.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) out.push_back(cell(i));
    return out;
  }

  bool contains(std::span<const Coord> c) const {
    for (int j = 0; j < dim_; ++j)
      if (c[j] < 0 || static_cast<std::uint64_t>(c[j]) >= side_) return false;
    return std::binary_search(keys_.begin(), keys_.end(), encode(c));
  }

  /// The same set seen at a coarser level m <= level (coordinates divided by b^(n-m)).
  CubeSet coarsen(int m) const {
    require(m >= 0 && m <= level_, "coarsen level out of range");
    if (m == level_) return *this;
    CubeSet out(base_, m, dim_);
    const auto div = static_cast<Coord>(checked_pow(static_cast<std::uint64_t>(base_),
                                                    static_cast<std::uint64_t>(level_ - m)));
    std::vector<Coord> c(static_cast<std::size_t>(dim_));
    std::vector<CellKey> keys;
    keys.reserve(keys_.size());
    for (CellKey k : keys_) {
      decode(k, c);
      for (auto& x : c) x /= div;
      keys.push_back(out.encode(c));
    }
    return from_keys(base_, m, dim_, std::move(keys));
  }

  friend bool operator==(const CubeSet& a, const CubeSet& b) {
    return a.base_ == b.base_ && a.level_ == b.level_ && a.dim_ == b.dim_ && a.keys_ == b.keys_;
  }

 private:
  int base_ = 2;
  int level_ = 0;
  int dim_ = 1;
  std::uint64_t side_ = 1;
  std::vector<CellKey> keys_;
};

// File format: header line `b n d`, then one cell per line as d
// space-separated integers, sorted lexicographically.
inline std::string format_cubeset(const CubeSet& s) {
  std::ostringstream out;
  out << s.base() << ' ' << s.level() << ' ' << s.dim() << '\n';
  std::vector<Coord> c(static_cast<std::size_t>(s.dim()));
  for (CellKey k : s.keys()) {
    s.decode(k, c);
    for (int j = 0; j < s.dim(); ++j) out << (j ? " " : "") << c[j];
    out << '\n';
  }
  return out.str();
}

inline CubeSet parse_cubeset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int b = 0, n = -1, d = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream hs(line);
    if (!(hs >> b >> n >> d)) fail_input("cube set line " + std::to_string(lineno) + ": bad header");
    break;
  }
  if (d == 0) fail_input("cube set file has no header");
  CubeSet shape(b, n, d);
  std::vector<CellKey> keys;
  std::vector<Coord> c(static_cast<std::size_t>(d));
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    for (int j = 0; j < d; ++j)
      if (!(ls >> c[j])) fail_input("cube set line " + std::to_string(lineno) + ": expected " + std::to_string(d) + " integers");
    std::string extra;
    if (ls >> extra) fail_input("cube set line " + std::to_string(lineno) + ": trailing data");
    try {
      keys.push_back(shape.encode(c));
    } catch (const Error& e) {
      fail_input("cube set line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return CubeSet::from_keys(b, n, d, std::move(keys));
}

}  // namespace bllab
