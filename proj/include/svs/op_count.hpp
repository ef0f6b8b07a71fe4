#pragma once

#include <cstdint>

namespace svs {

// Semantic operation counters. Incremented at fixed points inside the
// instrumented algorithms; not a model of hardware cycles.
struct OpCounts {
  std::uint64_t comparisons = 0;
  std::uint64_t arithmetic = 0;
  std::uint64_t memory = 0;

  std::uint64_t total() const { return comparisons + arithmetic + memory; }

  OpCounts& operator+=(const OpCounts& o) {
    comparisons += o.comparisons;
    arithmetic += o.arithmetic;
    memory += o.memory;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

}  // namespace svs
