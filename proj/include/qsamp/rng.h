#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qsamp {

using Rng = std::mt19937_64;

// Named-stream seed derivation: every random consumer gets its own stream,
// computed as splitmix64(master ^ fnv1a64(name)). Streams with an index
// (one per phantom, per epoch, ...) mix the index in with a second splitmix
// round. This keeps adding a new consumer from perturbing existing ones.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index);

inline Rng make_rng(std::uint64_t master, std::string_view stream) {
  return Rng(derive_seed(master, stream));
}

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

// Uniform double in [0, 1) from the top 53 bits. Used instead of
// std::uniform_real_distribution so draws do not depend on the standard library.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller, one value per call.
double standard_normal(Rng& rng);

}  // namespace qsamp
