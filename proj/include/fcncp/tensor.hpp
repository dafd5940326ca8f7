#ifndef FCNCP_TENSOR_HPP
#define FCNCP_TENSOR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcncp {

/// Error category carried by every exception the library throws. The C API
/// maps these onto its status codes.
enum class ErrorCode {
  invalid_argument,
  data,
  io,
  protocol,
  convergence,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, const std::vector<double>& v);
};

/// Dense order-N tensor, row-major (last index varies fastest). Modes are
/// 0-based throughout the C++ API; the CLI surface is 1-based.
struct DenseTensor {
  std::vector<std::size_t> dims;
  std::vector<double> values;

  DenseTensor() = default;
  DenseTensor(std::vector<std::size_t> d, double fill = 0.0);

  std::size_t order() const { return dims.size(); }
  std::size_t size() const;

  double& at(const std::vector<std::size_t>& idx);
  double at(const std::vector<std::size_t>& idx) const;

  /// Throws unless dims/values are consistent, finite, and order >= 2.
  void validate(bool require_nonnegative = false) const;
};

/// One client's factor matrices: modes[n] is I_n x rank.
struct FactorSet {
  std::vector<Matrix> modes;
  std::size_t rank = 0;

  std::size_t order() const { return modes.size(); }
};

// -- multilinear kernels -----------------------------------------------------

/// Mode-n unfolding, I_n x prod_{m != n} I_m. Column ordering: earlier modes
/// vary fastest (Kolda convention), skipping mode n.
Matrix unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for the same mode/dims.
DenseTensor fold(const Matrix& m, std::size_t mode,
                 const std::vector<std::size_t>& dims);

/// Column-wise Kronecker product; column r is a[:,r] (x) b[:,r] with b's
/// rows varying fastest.
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// Khatri-Rao chain over all modes except `skip`, ordered so the row index
/// matches the unfold column ordering (first modes vary fastest).
Matrix khatri_rao_chain_excluding(const FactorSet& f, std::size_t skip);

/// Element-wise product of equally shaped matrices.
Matrix hadamard_chain(const std::vector<Matrix>& mats);

/// m^T m.
Matrix gram(const Matrix& m);

/// Hadamard product of the Gram matrices of all modes except `skip`.
Matrix gram_hadamard_excluding(const FactorSet& f, std::size_t skip);

/// Matricized tensor times Khatri-Rao product: unfold(t, mode) * chain,
/// computed without materializing the unfolding.
Matrix mttkrp(const DenseTensor& t, const FactorSet& factors, std::size_t mode);

/// MTTKRP against the tensor implicitly reconstructed from `basis`:
/// basis.modes[mode] * hadamard_{m != mode}(basis_m^T factors_m).
Matrix mttkrp_compressed(const FactorSet& basis, const FactorSet& factors,
                         std::size_t mode);

/// Sum of rank-one outer products.
DenseTensor reconstruct(const FactorSet& factors);

double frobenius_norm(const DenseTensor& t);

/// ||t - reconstruct(factors)||_F / ||t||_F. Throws on zero-norm t.
double rel_err(const DenseTensor& t, const FactorSet& factors);

inline double fit(const DenseTensor& t, const FactorSet& factors) {
  return 1.0 - rel_err(t, factors);
}

}  // namespace fcncp

#endif
