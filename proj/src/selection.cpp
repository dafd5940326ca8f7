#include "fcncp/selection.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace fcncp {

Matrix pearson_matrix(const Matrix& u1, const Matrix& u2) {
  if (u1.rows != u2.rows)
    throw Error(ErrorCode::invalid_argument, "pearson_matrix: row counts differ");
  if (u1.rows < 2)
    throw Error(ErrorCode::invalid_argument, "pearson_matrix: need >= 2 rows");
  const std::size_t n = u1.rows;
  auto centered = [n](const Matrix& m) {
    Matrix c = m;
    std::vector<double> norms(m.cols, 0.0);
    for (std::size_t j = 0; j < m.cols; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += m.at(i, j);
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        c.at(i, j) = m.at(i, j) - mean;
        ss += c.at(i, j) * c.at(i, j);
      }
      norms[j] = std::sqrt(ss);
    }
    return std::make_pair(c, norms);
  };
  auto [c1, n1] = centered(u1);
  auto [c2, n2] = centered(u2);
  Matrix p(u1.cols, u2.cols, 0.0);
  for (std::size_t r = 0; r < u1.cols; ++r)
    for (std::size_t c = 0; c < u2.cols; ++c) {
      if (n1[r] == 0.0 || n2[c] == 0.0) continue;  // constant column -> 0
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += c1.at(i, r) * c2.at(i, c);
      p.at(r, c) = std::min(std::abs(dot / (n1[r] * n2[c])), 1.0);
    }
  return p;
}

std::vector<std::pair<std::size_t, std::size_t>> greedy_select(Matrix p,
                                                               std::size_t count) {
  if (count > std::min(p.rows, p.cols))
    throw Error(ErrorCode::invalid_argument, "greedy_select: count too large");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t br = 0, bc = 0;
    for (std::size_t r = 0; r < p.rows; ++r)
      for (std::size_t c = 0; c < p.cols; ++c)
        if (p.at(r, c) > best) {
          best = p.at(r, c);
          br = r;
          bc = c;
        }
    out.emplace_back(br, bc);
    for (std::size_t c = 0; c < p.cols; ++c) p.at(br, c) = 0.0;
    for (std::size_t r = 0; r < p.rows; ++r) p.at(r, bc) = 0.0;
  }
  return out;
}

std::size_t pca_rank(const Matrix& m, double threshold) {
  if (!(threshold > 0.0) || threshold > 1.0)
    throw Error(ErrorCode::invalid_argument, "pca_rank: threshold must be in (0, 1]");
  if (m.cols < 2)
    throw Error(ErrorCode::invalid_argument, "pca_rank: need >= 2 columns");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Mat> a(m.values.data(), m.rows, m.cols);
  Mat centered = a.rowwise() - a.colwise().mean();
  if (centered.norm() == 0.0)
    throw Error(ErrorCode::data, "pca_rank: matrix is all-zero after centering");
  Eigen::BDCSVD<Mat> svd(centered);
  const auto& sv = svd.singularValues();
  double total = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) total += sv[i] * sv[i];
  // numerical rank cutoff, used when the threshold demands everything
  const double tol = sv.size() > 0
                         ? sv[0] * std::max(m.rows, m.cols) *
                               std::numeric_limits<double>::epsilon()
                         : 0.0;
  double cum = 0.0;
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] <= tol) break;
    cum += sv[i] * sv[i];
    ++k;
    if (cum / total >= threshold) break;
  }
  return k;
}

CorrelationReport correlation_report(const std::vector<Matrix>& factors1,
                                     const std::vector<Matrix>& factors2,
                                     const std::vector<std::size_t>& modes) {
  if (factors1.size() != modes.size() || factors2.size() != modes.size())
    throw Error(ErrorCode::invalid_argument,
                "correlation_report: one factor matrix per coupled mode expected");
  CorrelationReport rep;
  rep.modes = modes;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    Matrix p = pearson_matrix(factors1[k], factors2[k]);
    if (k == 0) {
      rep.summed = p;
    } else {
      if (p.rows != rep.summed.rows || p.cols != rep.summed.cols)
        throw Error(ErrorCode::invalid_argument,
                    "correlation_report: inconsistent factor shapes");
      for (std::size_t i = 0; i < p.values.size(); ++i)
        rep.summed.values[i] += p.values[i];
    }
    rep.per_mode.push_back(std::move(p));
  }
  return rep;
}

SelectionResult select_couplings(const std::vector<Matrix>& factors1,
                                 const std::vector<Matrix>& factors2,
                                 const std::vector<std::size_t>& modes,
                                 std::size_t count) {
  SelectionResult res;
  res.report = correlation_report(factors1, factors2, modes);
  auto pairs = greedy_select(res.report.summed, count);
  for (const auto& [r, c] : pairs) {
    res.locations1.push_back(r);
    res.locations2.push_back(c);
  }
  return res;
}

BurnInSelection burn_in_and_select(const DenseTensor& t1, const DenseTensor& t2,
                                   std::size_t rank1, std::size_t rank2,
                                   std::uint64_t seed1, std::uint64_t seed2,
                                   const std::vector<std::size_t>& coupled_modes,
                                   std::size_t count, std::size_t burn_in_iters) {
  BurnInSelection out;
  auto burn = [&](const DenseTensor& t, std::size_t rank, std::uint64_t seed) {
    Rng rng(seed);
    FactorSet f = init_factors(t.dims, rank, rng);
    SweepOptions opt;
    opt.rng = &rng;
    for (std::size_t i = 0; i < burn_in_iters; ++i) hals_sweep(t, f, opt);
    return f;
  };
  out.factors1 = burn(t1, rank1, seed1);
  out.factors2 = burn(t2, rank2, seed2);
  std::vector<Matrix> up1, up2;
  for (std::size_t n : coupled_modes) {
    if (n >= t1.order() || n >= t2.order())
      throw Error(ErrorCode::invalid_argument, "coupled mode index out of range");
    up1.push_back(out.factors1.modes[n]);
    up2.push_back(out.factors2.modes[n]);
  }
  out.selection = select_couplings(up1, up2, coupled_modes, count);
  return out;
}

}  // namespace fcncp
