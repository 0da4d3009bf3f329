#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace calppi {

// A reproducible random stream keyed by a tuple of integers, e.g.
// (seed, purpose, replicate). Distinct keys give independent streams, so
// work split across replicates is reproducible regardless of ordering.
class Stream {
 public:
  Stream(std::initializer_list<std::uint64_t> key);

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double open_uniform();
  // Uniform index in [0, n).
  std::size_t index(std::size_t n);
  // Standard normal by inverse-CDF transform of open_uniform().
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Purpose tags that keep substreams of one seed apart.
enum class StreamPurpose : std::uint64_t {
  BootstrapLabeled = 1,
  BootstrapUnlabeled = 2,
  FoldAssignment = 3,
  UnlabeledSubsample = 4,
  SimulationLabeled = 5,
  SimulationUnlabeled = 6,
  SimulationMethods = 7,
};

inline std::uint64_t key(StreamPurpose p) { return static_cast<std::uint64_t>(p); }

}  // namespace calppi
