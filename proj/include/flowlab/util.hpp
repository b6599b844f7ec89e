#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace flowlab {

// Configuration problems (bad descriptors, node-count overflow, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A callback produced a non-finite value; carries the offending point.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& msg, std::vector<double> point)
      : std::runtime_error(msg), point_(std::move(point)) {}
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

// Global worker count for internal loops. Results never depend on it:
// every parallel region writes disjoint slots and reductions run over a
// fixed-order pairwise tree.
void set_thread_count(int n);
int thread_count();

// Pairwise (tree) summation in index order; independent of chunking.
double pairwise_sum(std::span<const double> terms);

// Static partition of [0, n) over thread_count() workers. fn(i) must only
// touch state owned by index i. Exceptions are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// FNV-1a, used to derive purpose-tagged sub-seeds (see rng.hpp).
std::uint64_t fnv1a64(std::string_view s);

}  // namespace flowlab
