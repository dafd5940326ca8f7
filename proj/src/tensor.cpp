#include "fcncp/tensor.hpp"

#include <cmath>
#include <numeric>

namespace fcncp {

namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

}  // namespace

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = at(i, j);
  return out;
}

void Matrix::set_column(std::size_t j, const std::vector<double>& v) {
  for (std::size_t i = 0; i < rows; ++i) at(i, j) = v[i];
}

DenseTensor::DenseTensor(std::vector<std::size_t> d, double fill) : dims(std::move(d)) {
  values.assign(size(), fill);
}

std::size_t DenseTensor::size() const {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

double& DenseTensor::at(const std::vector<std::size_t>& idx) {
  std::size_t off = 0;
  for (std::size_t m = 0; m < dims.size(); ++m) off = off * dims[m] + idx[m];
  return values[off];
}

double DenseTensor::at(const std::vector<std::size_t>& idx) const {
  return const_cast<DenseTensor*>(this)->at(idx);
}

void DenseTensor::validate(bool require_nonnegative) const {
  require(dims.size() >= 2, ErrorCode::invalid_argument, "tensor order must be >= 2");
  for (std::size_t d : dims)
    require(d >= 1, ErrorCode::invalid_argument, "tensor extents must be positive");
  require(values.size() == size(), ErrorCode::invalid_argument,
          "value count does not match dims");
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::data, "tensor contains non-finite values");
    if (require_nonnegative)
      require(v >= 0.0, ErrorCode::data, "tensor contains negative values");
  }
}

namespace {

// Strides of each mode's index into the unfold column (mode n excluded):
// earlier modes vary fastest.
std::vector<std::size_t> unfold_col_strides(const std::vector<std::size_t>& dims,
                                            std::size_t mode) {
  std::vector<std::size_t> stride(dims.size(), 0);
  std::size_t s = 1;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (m == mode) continue;
    stride[m] = s;
    s *= dims[m];
  }
  return stride;
}

void check_mode(const DenseTensor& t, std::size_t mode) {
  if (mode >= t.order())
    throw Error(ErrorCode::invalid_argument, "mode index out of range");
}

// Row-major odometer walk over all multi-indices, calling fn(row, col) where
// row = idx[mode] and col = sum idx[m] * stride[m].
template <typename Fn>
void walk_unfolding(const std::vector<std::size_t>& dims, std::size_t mode, Fn&& fn) {
  const std::size_t N = dims.size();
  const std::vector<std::size_t> stride = unfold_col_strides(dims, mode);
  std::vector<std::size_t> idx(N, 0);
  std::size_t row = 0, col = 0;
  for (;;) {
    fn(row, col);
    // advance last-index-fastest
    std::size_t m = N;
    while (m > 0) {
      --m;
      if (++idx[m] < dims[m]) {
        if (m == mode)
          ++row;
        else
          col += stride[m];
        break;
      }
      idx[m] = 0;
      if (m == mode)
        row = 0;
      else
        col -= stride[m] * (dims[m] - 1);
      if (m == 0) return;
    }
  }
}

}  // namespace

Matrix unfold(const DenseTensor& t, std::size_t mode) {
  check_mode(t, mode);
  Matrix out(t.dims[mode], t.size() / t.dims[mode]);
  std::size_t p = 0;
  walk_unfolding(t.dims, mode,
                 [&](std::size_t r, std::size_t c) { out.at(r, c) = t.values[p++]; });
  return out;
}

DenseTensor fold(const Matrix& m, std::size_t mode,
                 const std::vector<std::size_t>& dims) {
  if (mode >= dims.size())
    throw Error(ErrorCode::invalid_argument, "mode index out of range");
  DenseTensor t(dims);
  if (m.rows != dims[mode] || m.cols != t.size() / dims[mode])
    throw Error(ErrorCode::invalid_argument, "fold: matrix shape does not match dims");
  std::size_t p = 0;
  walk_unfolding(dims, mode,
                 [&](std::size_t r, std::size_t c) { t.values[p++] = m.at(r, c); });
  return t;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols)
    throw Error(ErrorCode::invalid_argument, "khatri_rao: column counts differ");
  Matrix out(a.rows * b.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double* dst = &out.values[(i * b.rows + j) * out.cols];
      const double* pa = &a.values[i * a.cols];
      const double* pb = &b.values[j * b.cols];
      for (std::size_t r = 0; r < a.cols; ++r) dst[r] = pa[r] * pb[r];
    }
  return out;
}

Matrix khatri_rao_chain_excluding(const FactorSet& f, std::size_t skip) {
  // Descending mode order makes the first modes' indices vary fastest in the
  // result rows, matching the unfold column ordering.
  Matrix acc;
  bool first = true;
  for (std::size_t m = f.order(); m-- > 0;) {
    if (m == skip) continue;
    if (first) {
      acc = f.modes[m];
      first = false;
    } else {
      acc = khatri_rao(acc, f.modes[m]);
    }
  }
  if (first)
    throw Error(ErrorCode::invalid_argument, "khatri_rao_chain: no modes left");
  return acc;
}

Matrix hadamard_chain(const std::vector<Matrix>& mats) {
  if (mats.empty())
    throw Error(ErrorCode::invalid_argument, "hadamard_chain: empty input");
  Matrix out = mats[0];
  for (std::size_t k = 1; k < mats.size(); ++k) {
    if (mats[k].rows != out.rows || mats[k].cols != out.cols)
      throw Error(ErrorCode::invalid_argument, "hadamard_chain: shape mismatch");
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] *= mats[k].values[i];
  }
  return out;
}

Matrix gram(const Matrix& m) {
  Matrix g(m.cols, m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = &m.values[i * m.cols];
    for (std::size_t a = 0; a < m.cols; ++a)
      for (std::size_t b = 0; b < m.cols; ++b) g.at(a, b) += row[a] * row[b];
  }
  return g;
}

Matrix gram_hadamard_excluding(const FactorSet& f, std::size_t skip) {
  Matrix out(f.rank, f.rank, 1.0);
  for (std::size_t m = 0; m < f.order(); ++m) {
    if (m == skip) continue;
    Matrix g = gram(f.modes[m]);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= g.values[i];
  }
  return out;
}

namespace {

void check_factors(const DenseTensor& t, const FactorSet& f) {
  if (f.order() != t.order())
    throw Error(ErrorCode::invalid_argument, "factor count does not match tensor order");
  for (std::size_t m = 0; m < f.order(); ++m)
    if (f.modes[m].rows != t.dims[m] || f.modes[m].cols != f.rank)
      throw Error(ErrorCode::invalid_argument, "factor matrix shape mismatch");
}

}  // namespace

Matrix mttkrp(const DenseTensor& t, const FactorSet& factors, std::size_t mode) {
  check_mode(t, mode);
  check_factors(t, factors);
  const std::size_t R = factors.rank;
  Matrix kr = khatri_rao_chain_excluding(factors, mode);
  Matrix out(t.dims[mode], R, 0.0);
  std::size_t p = 0;
  walk_unfolding(t.dims, mode, [&](std::size_t r, std::size_t c) {
    const double v = t.values[p++];
    const double* krow = &kr.values[c * R];
    double* orow = &out.values[r * R];
    for (std::size_t j = 0; j < R; ++j) orow[j] += v * krow[j];
  });
  return out;
}

Matrix mttkrp_compressed(const FactorSet& basis, const FactorSet& factors,
                         std::size_t mode) {
  if (basis.order() != factors.order())
    throw Error(ErrorCode::invalid_argument, "basis/factor order mismatch");
  if (mode >= basis.order())
    throw Error(ErrorCode::invalid_argument, "mode index out of range");
  const std::size_t Rb = basis.rank, R = factors.rank;
  // H = hadamard_{m != mode} basis_m^T factors_m, Rb x R
  Matrix h(Rb, R, 1.0);
  for (std::size_t m = 0; m < basis.order(); ++m) {
    if (m == mode) continue;
    if (basis.modes[m].rows != factors.modes[m].rows)
      throw Error(ErrorCode::invalid_argument, "basis/factor row count mismatch");
    Matrix cross(Rb, R, 0.0);
    const Matrix& bm = basis.modes[m];
    const Matrix& fm = factors.modes[m];
    for (std::size_t i = 0; i < bm.rows; ++i)
      for (std::size_t a = 0; a < Rb; ++a) {
        const double bv = bm.at(i, a);
        for (std::size_t b = 0; b < R; ++b) cross.at(a, b) += bv * fm.at(i, b);
      }
    for (std::size_t i = 0; i < h.values.size(); ++i) h.values[i] *= cross.values[i];
  }
  const Matrix& bn = basis.modes[mode];
  Matrix out(bn.rows, R, 0.0);
  for (std::size_t i = 0; i < bn.rows; ++i)
    for (std::size_t a = 0; a < Rb; ++a) {
      const double bv = bn.at(i, a);
      for (std::size_t b = 0; b < R; ++b) out.at(i, b) += bv * h.at(a, b);
    }
  return out;
}

DenseTensor reconstruct(const FactorSet& factors) {
  const std::size_t N = factors.order();
  if (N < 2) throw Error(ErrorCode::invalid_argument, "factor set needs >= 2 modes");
  std::vector<std::size_t> dims(N);
  for (std::size_t m = 0; m < N; ++m) {
    dims[m] = factors.modes[m].rows;
    if (factors.modes[m].cols != factors.rank)
      throw Error(ErrorCode::invalid_argument, "factor matrix rank mismatch");
  }
  DenseTensor t(dims);
  const std::size_t R = factors.rank;
  std::vector<std::size_t> idx(N, 0);
  std::size_t p = 0;
  for (;;) {
    double acc = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      double w = 1.0;
      for (std::size_t m = 0; m < N; ++m) w *= factors.modes[m].at(idx[m], r);
      acc += w;
    }
    t.values[p++] = acc;
    std::size_t m = N;
    while (m > 0) {
      --m;
      if (++idx[m] < dims[m]) break;
      idx[m] = 0;
      if (m == 0) return t;
    }
  }
}

double frobenius_norm(const DenseTensor& t) {
  double s = 0.0;
  for (double v : t.values) s += v * v;
  return std::sqrt(s);
}

double rel_err(const DenseTensor& t, const FactorSet& factors) {
  const double tn = frobenius_norm(t);
  if (tn == 0.0) throw Error(ErrorCode::invalid_argument, "rel_err: zero-norm tensor");
  DenseTensor approx = reconstruct(factors);
  if (approx.dims != t.dims)
    throw Error(ErrorCode::invalid_argument, "rel_err: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double d = t.values[i] - approx.values[i];
    s += d * d;
  }
  return std::sqrt(s) / tn;
}

}  // namespace fcncp
