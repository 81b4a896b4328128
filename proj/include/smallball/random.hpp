#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace smallball {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

// A random stream is keyed by (seed, stream index); draw k of the stream is a pure
// function of (seed, stream, k). Streams are cheap values: copying one forks the
// position, child(i) derives an independent stream.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }
  std::uint64_t position() const { return counter_ * 4 + (4 - available_); }

  RandomStream child(std::uint64_t index) const;

  // Uniform on (0, 1), 32-bit resolution.
  double uniform();
  double normal();
  void fill_normal(double* out, std::size_t n);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();
  std::uint32_t raw32();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int available_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace smallball
