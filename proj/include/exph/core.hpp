#ifndef EXPH_CORE_HPP
#define EXPH_CORE_HPP

// Shared plumbing: error taxonomy, periodic grid bookkeeping, deterministic
// RNG and summation, and an optional thread pool for data-parallel node loops.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace exph {

// ConfigError: bad user input (CLI exits 2). NumericError: a runtime guard
// tripped — degenerate frame, overflow, off-manifold point (CLI exits 3).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Index = std::int64_t;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Process-wide worker count for node loops. Results are bit-identical for
// any value: workers only fill disjoint slots of per-node buffers; all
// reductions run single-threaded in fixed order.
inline int& thread_count() {
  static int n = 1;
  return n;
}

inline void parallel_for(Index n, const std::function<void(Index, Index)>& body) {
  const int workers = thread_count();
  if (workers <= 1 || n < 1024) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index lo = std::min<Index>(n, w * chunk);
    const Index hi = std::min<Index>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

// Fixed-shape pairwise reduction: deterministic for a given length, accurate
// to ~n^0 rounding growth. Every integral in the library funnels through it.
inline double pairwise_sum(const double* x, Index n) {
  if (n <= 32) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const Index half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), static_cast<Index>(x.size()));
}

// splitmix64 + Box-Muller: seeded, platform-independent streams.
struct Rng {
  std::uint64_t state;
  bool have_spare = false;
  double spare = 0.0;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(kTwoPi * u2);
    have_spare = true;
    return r * std::cos(kTwoPi * u2);
  }
};

// Periodic structured grid covering [0, 2pi) per axis, row-major storage
// with the last axis fastest. Fields live as flat arrays of `nodes * C`
// doubles, node-major (components of one node contiguous).
struct Grid {
  std::vector<Index> dims;
  std::vector<Index> strides;
  std::vector<double> spacing;
  Index nodes = 0;
  double cell_volume = 1.0;

  static Grid make(const std::vector<Index>& dims) {
    if (dims.empty()) throw ConfigError("grid dims: empty");
    Grid g;
    g.dims = dims;
    g.strides.assign(dims.size(), 1);
    g.spacing.resize(dims.size());
    g.nodes = 1;
    g.cell_volume = 1.0;
    for (size_t a = 0; a < dims.size(); ++a) {
      if (dims[a] < 4)
        throw ConfigError("grid dims: axis " + std::to_string(a) +
                          " has " + std::to_string(dims[a]) +
                          " nodes, need >= 4 (stencil too wide)");
      g.spacing[a] = kTwoPi / static_cast<double>(dims[a]);
      g.cell_volume *= g.spacing[a];
    }
    // Stride of axis a is the product of dims of all faster (later) axes.
    Index acc = 1;
    for (size_t a = dims.size(); a-- > 0;) {
      g.strides[a] = acc;
      acc *= dims[a];
    }
    g.nodes = acc;
    return g;
  }

  int naxes() const { return static_cast<int>(dims.size()); }

  void unflatten(Index node, Index* multi) const {
    for (size_t a = 0; a < dims.size(); ++a) {
      multi[a] = (node / strides[a]) % dims[a];
    }
  }

  Index flatten(const Index* multi) const {
    Index node = 0;
    for (size_t a = 0; a < dims.size(); ++a) node += multi[a] * strides[a];
    return node;
  }

  double coordinate(Index node, int axis) const {
    const Index idx = (node / strides[axis]) % dims[axis];
    return static_cast<double>(idx) * spacing[axis];
  }

  // Periodic neighbor along one axis (offset may exceed the axis length).
  Index shift(Index node, int axis, Index offset) const {
    const Index dim = dims[axis];
    const Index idx = (node / strides[axis]) % dim;
    Index wrapped = (idx + offset) % dim;
    if (wrapped < 0) wrapped += dim;
    return node + (wrapped - idx) * strides[axis];
  }

  std::string node_name(Index node) const {
    std::vector<Index> multi(dims.size());
    unflatten(node, multi.data());
    std::string s = "(";
    for (size_t a = 0; a < multi.size(); ++a) {
      s += std::to_string(multi[a]);
      s += (a + 1 < multi.size()) ? "," : ")";
    }
    return s;
  }
};

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int c = 0; c < n; ++c) s += a[c] * b[c];
  return s;
}

inline double norm2(const double* a, int n) { return dot(a, a, n); }

}  // namespace exph

#endif  // EXPH_CORE_HPP
