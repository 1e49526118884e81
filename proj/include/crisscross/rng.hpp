#pragma once

#include <cstdint>
#include <random>

namespace crisscross {

std::uint64_t splitmix64(std::uint64_t& state);

// Seed for the stream identified by (base, a, b). Distinct triples give
// statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// mt19937_64 output is fixed by the standard; the transforms below are ours,
// so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                 // (0, 1)
  double normal();                  // N(0, 1), Marsaglia polar
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double rate);  // mean 1/rate
  long poisson(double lambda);
  std::uint64_t below(std::uint64_t n);  // uniform on {0, ..., n-1}

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crisscross
