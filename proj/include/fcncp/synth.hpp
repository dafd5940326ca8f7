#ifndef FCNCP_SYNTH_HPP
#define FCNCP_SYNTH_HPP

#include <cstdint>

#include "fcncp/cp.hpp"
#include "fcncp/tensor.hpp"

namespace fcncp {

/// Generator output labels: the exact atoms each rank-one term was built
/// from, and which component pairs the two tensors share.
struct GroundTruth {
  /// [client][mode][component] -> atom vector; mode order matches the tensor
  /// dims.
  std::vector<std::vector<std::vector<std::vector<double>>>> atoms;
  /// Noise-free versions of the same atoms.
  std::vector<std::vector<std::vector<std::vector<double>>>> atoms_clean;
  /// (component in tensor 1, component in tensor 2), 0-based.
  std::vector<std::pair<std::size_t, std::size_t>> shared_pairs;
  /// Modes in which the shared pairs use identical atoms.
  std::vector<std::size_t> shared_modes;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultHanningHalfWidth = 8.0;
inline constexpr double kDefaultNoiseLevel = 0.05;

/// Nonnegative Hanning bump of the given half-width centered at `center`
/// (1-based, truncated at the boundaries) plus uniform noise in
/// [-noise_level, noise_level], clamped at 0.
std::vector<double> hanning_atom(std::size_t length, double center,
                                 double half_width, double noise_level, Rng& rng);

/// Exactly four adjacent entries set to uniform values in [0.5, 1], rest 0.
std::vector<double> channel_atom(std::size_t n_channels, Rng& rng);

struct SimulationPair {
  DenseTensor tensor1;
  DenseTensor tensor2;
  GroundTruth truth;
};

/// The 61 x 72 x 64 (frequency x time x channel) coupled pair: three
/// rank-one terms each, components 1-2 sharing their frequency and time
/// atoms across the tensors.
SimulationPair build_simulation_pair(std::uint64_t seed,
                                     double half_width = kDefaultHanningHalfWidth,
                                     double noise_level = kDefaultNoiseLevel);

/// Fifth-order coupled pair with `n_shared` components sharing atoms in the
/// given modes; smooth bumps in coupled modes, blocky random loadings
/// elsewhere.
SimulationPair build_fifth_order_smoke(const std::vector<std::size_t>& dims,
                                       std::size_t rank1, std::size_t rank2,
                                       const std::vector<std::size_t>& coupled_modes,
                                       std::size_t n_shared, std::uint64_t seed,
                                       double noise_level = kDefaultNoiseLevel);

}  // namespace fcncp

#endif
