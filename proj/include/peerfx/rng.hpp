#pragma once

#include <cstdint>
#include <random>

namespace peerfx {

// A random stream keyed by (root seed, replication, group). Keys are mixed
// with splitmix64 so each key gets an independent engine state, which makes
// draws independent of how replications are scheduled across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t root, std::uint64_t replication, std::uint64_t group);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double logistic();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace peerfx
