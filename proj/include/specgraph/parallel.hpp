#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace specgraph {

// Number of worker threads used by the library. Defaults to the
// SPECGRAPH_THREADS environment variable, else hardware concurrency.
std::size_t thread_count();

// Overrides the worker count for the current process (0 restores the default).
void set_thread_count(std::size_t n);

// Runs body(i) for i in [0, n). Work items are claimed dynamically, so the
// body must write its result into a slot owned by i; callers reduce the
// slots in index order, which keeps every result independent of the
// number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Operation keys for RNG stream derivation.
enum class StreamKey : std::uint32_t {
  kEmpirical = 1,
  kExactMc = 2,
  kPropagateTorus = 3,
  kPropagateLevel = 4,
  kReplicate = 5,
  kGraphLengths = 6,
  kCharacteristic = 7,
};

// Independent generator for (seed, operation, block). Streams for different
// blocks never depend on scheduling order.
std::mt19937_64 make_stream(std::uint64_t seed, StreamKey op, std::uint64_t block);

}  // namespace specgraph
