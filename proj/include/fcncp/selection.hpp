#ifndef FCNCP_SELECTION_HPP
#define FCNCP_SELECTION_HPP

#include <utility>

#include "fcncp/cp.hpp"
#include "fcncp/tensor.hpp"

namespace fcncp {

/// Per-mode absolute Pearson correlation matrices between the two clients'
/// factor columns, plus their sum.
struct CorrelationReport {
  std::vector<std::size_t> modes;  ///< 0-based coupled modes, report order
  std::vector<Matrix> per_mode;    ///< R1 x R2 each
  Matrix summed;                   ///< element-wise sum of per_mode
};

/// |Pearson(u1[:,r], u2[:,c])| for every column pair. Constant columns
/// correlate as 0.
Matrix pearson_matrix(const Matrix& u1, const Matrix& u2);

/// Repeatedly takes the largest remaining entry of p (ties broken by smallest
/// row, then column), records the pair, and zeroes its row and column.
std::vector<std::pair<std::size_t, std::size_t>> greedy_select(Matrix p,
                                                               std::size_t count);

/// Smallest k whose leading singular values of the column-centered matrix
/// explain at least `threshold` of the total variance.
std::size_t pca_rank(const Matrix& m, double threshold);

CorrelationReport correlation_report(const std::vector<Matrix>& factors1,
                                     const std::vector<Matrix>& factors2,
                                     const std::vector<std::size_t>& modes);

struct SelectionResult {
  CorrelationReport report;
  std::vector<std::size_t> locations1;  ///< client 1 component indices
  std::vector<std::size_t> locations2;  ///< client 2 component indices
};

/// Server side of the coupling selection: correlate the uploaded coupled-mode
/// factor matrices, sum, and greedily pick `count` component pairs.
SelectionResult select_couplings(const std::vector<Matrix>& factors1,
                                 const std::vector<Matrix>& factors2,
                                 const std::vector<std::size_t>& modes,
                                 std::size_t count);

/// Runs `burn_in_iters` uncoupled sweeps on both tensors from the given
/// seeds, then select_couplings on the coupled-mode factors. Returns the
/// selection together with the burned-in factors.
struct BurnInSelection {
  SelectionResult selection;
  FactorSet factors1;
  FactorSet factors2;
};

BurnInSelection burn_in_and_select(const DenseTensor& t1, const DenseTensor& t2,
                                   std::size_t rank1, std::size_t rank2,
                                   std::uint64_t seed1, std::uint64_t seed2,
                                   const std::vector<std::size_t>& coupled_modes,
                                   std::size_t count, std::size_t burn_in_iters);

}  // namespace fcncp

#endif
