#ifndef FCNCP_CP_HPP
#define FCNCP_CP_HPP

#include <cstdint>
#include <random>

#include "fcncp/tensor.hpp"

namespace fcncp {

/// Factor entries never drop below this floor after an update.
inline constexpr double kNonnegFloor = 1e-16;

/// A column whose norm stays below this in every mode is considered
/// degenerate and gets reseeded.
inline constexpr double kDegenerateNorm = 1e-12;

/// Two components whose per-mode cosine product exceeds this are treated as
/// one duplicated component; one of the pair is reseeded after the sweep.
inline constexpr double kCongruenceLimit = 0.95;

/// Deterministic uniform generator. All randomness in the library flows
/// through this so runs replay exactly for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::min<std::size_t>(static_cast<std::size_t>(uniform() * n), n - 1);
  }

 private:
  std::mt19937_64 gen_;
};

/// One client's view of the coupling layout: which modes are coupled, how
/// many components each coupled mode shares (L[n], 0 for uncoupled modes),
/// and this client's component indices, ordered by selection strength. Mode n
/// couples the first L[n] entries of `locations`.
struct CouplingSpec {
  std::vector<std::size_t> coupled_modes;
  std::vector<std::size_t> L;
  std::vector<std::size_t> locations;

  /// Position of component `r` in the location list if mode `n` couples it,
  /// npos otherwise.
  std::size_t coupled_position(std::size_t mode, std::size_t component) const;

  /// Last mode with L == 0; receives the scales removed by normalization.
  /// Throws when every mode is coupled.
  std::size_t carrier_mode() const;

  std::size_t max_count() const { return locations.size(); }

  /// True when component `r` is coupled in at least one mode.
  bool is_coupled_component(std::size_t r) const;

  void validate(std::size_t order, std::size_t rank) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Per coupled mode, the columns the server holds (I_n x L_n), indexed by
/// position in coupled_modes order.
struct GlobalColumns {
  std::vector<Matrix> per_mode;
};

/// Random factors, entries i.i.d. uniform on [0.1, 1.0).
FactorSet init_factors(const std::vector<std::size_t>& dims, std::size_t rank,
                       Rng& rng);
FactorSet init_factors(const std::vector<std::size_t>& dims, std::size_t rank,
                       std::uint64_t seed);

/// In-place column update solving the one-column least-squares subproblem:
/// u += (mtt[:,r] - U gh[:,r]) / gh[r,r], clamped at kNonnegFloor.
/// `mtt` is the mode's MTTKRP, `gh` the Hadamard of the other modes' Grams.
void update_private_column(FactorSet& f, std::size_t mode, std::size_t r,
                           const Matrix& mtt, const Matrix& gh);

/// Elastic variant mixing in the server column with penalty weight rho;
/// reduces to update_private_column at rho = 0.
void update_public_column(FactorSet& f, std::size_t mode, std::size_t r,
                          const Matrix& mtt, const Matrix& gh,
                          const std::vector<double>& global_col, double rho);

struct SweepOptions {
  /// When set with `global`, components in coupling->locations take the
  /// public update in coupled modes.
  const CouplingSpec* coupling = nullptr;
  const GlobalColumns* global = nullptr;
  double rho = 0.0;
  /// When set, MTTKRPs are computed against this low-rank basis instead of
  /// the tensor.
  const FactorSet* compression_basis = nullptr;
  /// Needed to reseed degenerate components.
  Rng* rng = nullptr;
};

/// One full HALS sweep: modes outer, components inner, private and public
/// columns interleaved in component order. Reseeds degenerate components.
void hals_sweep(const DenseTensor& t, FactorSet& f, const SweepOptions& opt);

/// Rescales every coupled column to unit L2 norm, pushing the removed scale
/// into the same component of the carrier mode. Reconstruction-preserving.
void normalize_coupled(FactorSet& f, const CouplingSpec& coupling, Rng& rng);

struct HalsResult {
  FactorSet factors;
  std::vector<double> trace;  ///< rel_err after each sweep
  bool converged = false;
};

/// Uncoupled nonnegative CP via FastHALS sweeps; stops when consecutive
/// rel_err values differ by less than epsilon.
HalsResult ncp_fasthals(const DenseTensor& t, std::size_t rank, double epsilon,
                        std::size_t max_iters, std::uint64_t seed);

/// Unconstrained CP-ALS, used as the low-rank compression basis. Exact
/// per-mode least-squares solves, so rel_err is non-increasing.
FactorSet cp_als_unconstrained(const DenseTensor& t, std::size_t rank,
                               std::size_t iters, std::uint64_t seed);
FactorSet cp_als_unconstrained(const DenseTensor& t, std::size_t rank,
                               std::size_t iters, FactorSet init);

}  // namespace fcncp

#endif
