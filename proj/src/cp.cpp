#include "fcncp/cp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace fcncp {

std::size_t CouplingSpec::coupled_position(std::size_t mode,
                                           std::size_t component) const {
  if (mode >= L.size()) return npos;
  const std::size_t count = L[mode];
  for (std::size_t l = 0; l < count && l < locations.size(); ++l)
    if (locations[l] == component) return l;
  return npos;
}

bool CouplingSpec::is_coupled_component(std::size_t r) const {
  std::size_t max_l = 0;
  for (std::size_t n : coupled_modes) max_l = std::max(max_l, L[n]);
  for (std::size_t l = 0; l < max_l && l < locations.size(); ++l)
    if (locations[l] == r) return true;
  return false;
}

std::size_t CouplingSpec::carrier_mode() const {
  for (std::size_t n = L.size(); n-- > 0;)
    if (L[n] == 0) return n;
  throw Error(ErrorCode::invalid_argument,
              "coupling spec leaves no uncoupled mode to carry scales");
}

void CouplingSpec::validate(std::size_t order, std::size_t rank) const {
  if (L.size() != order)
    throw Error(ErrorCode::invalid_argument, "coupling spec L must cover every mode");
  std::size_t max_l = 0;
  for (std::size_t n = 0; n < order; ++n) max_l = std::max(max_l, L[n]);
  for (std::size_t n : coupled_modes) {
    if (n >= order)
      throw Error(ErrorCode::invalid_argument, "coupled mode index out of range");
  }
  if (locations.size() < max_l)
    throw Error(ErrorCode::invalid_argument, "location list shorter than max L_n");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i] >= rank)
      throw Error(ErrorCode::invalid_argument, "location index exceeds rank");
    for (std::size_t j = i + 1; j < locations.size(); ++j)
      if (locations[i] == locations[j])
        throw Error(ErrorCode::invalid_argument, "location indices must be distinct");
  }
}

FactorSet init_factors(const std::vector<std::size_t>& dims, std::size_t rank,
                       Rng& rng) {
  if (rank < 1) throw Error(ErrorCode::invalid_argument, "rank must be >= 1");
  FactorSet f;
  f.rank = rank;
  f.modes.reserve(dims.size());
  for (std::size_t d : dims) {
    Matrix m(d, rank);
    for (double& v : m.values) v = rng.uniform(0.1, 1.0);
    f.modes.push_back(std::move(m));
  }
  return f;
}

FactorSet init_factors(const std::vector<std::size_t>& dims, std::size_t rank,
                       std::uint64_t seed) {
  Rng rng(seed);
  return init_factors(dims, rank, rng);
}

namespace {

double column_norm(const Matrix& m, std::size_t j) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) s += m.at(i, j) * m.at(i, j);
  return std::sqrt(s);
}

void reseed_component(FactorSet& f, std::size_t r, Rng& rng) {
  for (Matrix& m : f.modes)
    for (std::size_t i = 0; i < m.rows; ++i) m.at(i, r) = rng.uniform(0.1, 1.0);
}

}  // namespace

void update_private_column(FactorSet& f, std::size_t mode, std::size_t r,
                           const Matrix& mtt, const Matrix& gh) {
  Matrix& u = f.modes[mode];
  const double gamma = gh.at(r, r);
  if (!(gamma > 0.0))
    throw Error(ErrorCode::data, "degenerate column: nonpositive HALS denominator");
  for (std::size_t i = 0; i < u.rows; ++i) {
    double dot = 0.0;
    const double* row = &u.values[i * u.cols];
    for (std::size_t j = 0; j < u.cols; ++j) dot += row[j] * gh.at(j, r);
    const double v = u.at(i, r) + (mtt.at(i, r) - dot) / gamma;
    u.at(i, r) = std::max(v, kNonnegFloor);
  }
}

void update_public_column(FactorSet& f, std::size_t mode, std::size_t r,
                          const Matrix& mtt, const Matrix& gh,
                          const std::vector<double>& global_col, double rho) {
  Matrix& u = f.modes[mode];
  if (global_col.size() != u.rows)
    throw Error(ErrorCode::invalid_argument, "global column length mismatch");
  const double gamma = gh.at(r, r);
  const double denom = gamma + 0.5 * rho;
  if (!(denom > 0.0))
    throw Error(ErrorCode::data, "degenerate column: nonpositive HALS denominator");
  const double keep = gamma / denom;
  for (std::size_t i = 0; i < u.rows; ++i) {
    if (!std::isfinite(global_col[i]))
      throw Error(ErrorCode::data, "non-finite global model column");
    double dot = 0.0;
    const double* row = &u.values[i * u.cols];
    for (std::size_t j = 0; j < u.cols; ++j) dot += row[j] * gh.at(j, r);
    const double num = mtt.at(i, r) - dot + 0.5 * rho * global_col[i];
    const double v = u.at(i, r) * keep + num / denom;
    u.at(i, r) = std::max(v, kNonnegFloor);
  }
}

void hals_sweep(const DenseTensor& t, FactorSet& f, const SweepOptions& opt) {
  const std::size_t N = f.order();
  // Scales accumulate in the carrier mode; every other mode is rebalanced to
  // unit columns after its update so no factor drifts toward the clamp floor
  // while another compensates with huge entries.
  const std::size_t carrier = opt.coupling ? opt.coupling->carrier_mode() : N - 1;
  for (std::size_t n = 0; n < N; ++n) {
    const Matrix mtt = opt.compression_basis
                           ? mttkrp_compressed(*opt.compression_basis, f, n)
                           : mttkrp(t, f, n);
    const Matrix gh = gram_hadamard_excluding(f, n);
    for (std::size_t r = 0; r < f.rank; ++r) {
      std::size_t pos = CouplingSpec::npos;
      if (opt.coupling && opt.global)
        pos = opt.coupling->coupled_position(n, r);
      if (pos != CouplingSpec::npos) {
        std::size_t mode_slot = 0;
        for (std::size_t k = 0; k < opt.coupling->coupled_modes.size(); ++k)
          if (opt.coupling->coupled_modes[k] == n) mode_slot = k;
        update_public_column(f, n, r, mtt, gh,
                             opt.global->per_mode[mode_slot].column(pos), opt.rho);
      } else {
        update_private_column(f, n, r, mtt, gh);
      }
    }
    {
      Matrix& m = f.modes[n];
      Matrix& cm = f.modes[carrier];
      for (std::size_t r = 0; r < f.rank; ++r) {
        double s = column_norm(m, r);
        if (s <= kDegenerateNorm) {
          // A clamped-out column would poison every later gamma with a
          // near-zero Gram entry; give it a fresh start instead.
          if (!opt.rng) continue;
          for (std::size_t i = 0; i < m.rows; ++i) m.at(i, r) = opt.rng->uniform(0.1, 1.0);
          s = column_norm(m, r);
        }
        if (n == carrier) continue;
        for (std::size_t i = 0; i < m.rows; ++i)
          m.at(i, r) = std::max(m.at(i, r) / s, kNonnegFloor);
        for (std::size_t i = 0; i < cm.rows; ++i)
          cm.at(i, r) = std::max(cm.at(i, r) * s, kNonnegFloor);
      }
    }
  }
  if (opt.rng) {
    for (std::size_t r = 0; r < f.rank; ++r) {
      bool degenerate = true;
      for (const Matrix& m : f.modes)
        if (column_norm(m, r) > kDegenerateNorm) {
          degenerate = false;
          break;
        }
      if (degenerate) reseed_component(f, r, *opt.rng);
    }
    // A component that collapsed onto another one contributes no rank either;
    // clamping can lock such pairs into an exact symmetric fixed point that
    // HALS alone escapes too slowly for the stopping rule. Reseed the
    // higher-indexed twin (never a coupled component mid-run).
    for (std::size_t a = 0; a < f.rank; ++a) {
      for (std::size_t b = a + 1; b < f.rank; ++b) {
        // Two components identical in all modes but one merge into a single
        // rank-one term, so the pair is degenerate whenever the cosine
        // product over any N-1 modes is near 1.
        std::vector<double> cosines(N);
        for (std::size_t n = 0; n < N; ++n) {
          const Matrix& m = f.modes[n];
          double d = 0.0, na = 0.0, nb = 0.0;
          for (std::size_t i = 0; i < m.rows; ++i) {
            d += m.at(i, a) * m.at(i, b);
            na += m.at(i, a) * m.at(i, a);
            nb += m.at(i, b) * m.at(i, b);
          }
          cosines[n] = (na > 0.0 && nb > 0.0) ? d / std::sqrt(na * nb) : 0.0;
        }
        double congruence = 0.0;
        for (std::size_t skip = 0; skip < N; ++skip) {
          double p = 1.0;
          for (std::size_t n = 0; n < N; ++n)
            if (n != skip) p *= cosines[n];
          congruence = std::max(congruence, p);
        }
        if (congruence <= kCongruenceLimit) continue;
        std::size_t victim = b;
        if (opt.coupling && opt.coupling->is_coupled_component(b)) {
          if (opt.coupling->is_coupled_component(a)) continue;
          victim = a;
        }
        reseed_component(f, victim, *opt.rng);
      }
    }
  }
}

void normalize_coupled(FactorSet& f, const CouplingSpec& coupling, Rng& rng) {
  const std::size_t carrier = coupling.carrier_mode();
  for (std::size_t l = 0; l < coupling.locations.size(); ++l) {
    const std::size_t r = coupling.locations[l];
    double scale = 1.0;
    for (std::size_t n = 0; n < f.order(); ++n) {
      if (coupling.L[n] <= l) continue;
      Matrix& m = f.modes[n];
      double s = column_norm(m, r);
      if (s <= kDegenerateNorm) {
        for (std::size_t i = 0; i < m.rows; ++i) m.at(i, r) = rng.uniform(0.1, 1.0);
        s = column_norm(m, r);
      }
      for (std::size_t i = 0; i < m.rows; ++i) m.at(i, r) /= s;
      scale *= s;
    }
    Matrix& cm = f.modes[carrier];
    for (std::size_t i = 0; i < cm.rows; ++i) cm.at(i, r) *= scale;
  }
}

HalsResult ncp_fasthals(const DenseTensor& t, std::size_t rank, double epsilon,
                        std::size_t max_iters, std::uint64_t seed) {
  t.validate(true);
  Rng rng(seed);
  HalsResult res;
  res.factors = init_factors(t.dims, rank, rng);
  SweepOptions opt;
  opt.rng = &rng;
  for (std::size_t i = 0; i < max_iters; ++i) {
    hals_sweep(t, res.factors, opt);
    const double e = rel_err(t, res.factors);
    if (!std::isfinite(e))
      throw Error(ErrorCode::convergence, "rel_err diverged to a non-finite value");
    res.trace.push_back(e);
    const std::size_t k = res.trace.size();
    if (k >= 2 && std::abs(res.trace[k - 1] - res.trace[k - 2]) < epsilon) {
      res.converged = true;
      break;
    }
  }
  return res;
}

FactorSet cp_als_unconstrained(const DenseTensor& t, std::size_t rank,
                               std::size_t iters, std::uint64_t seed) {
  return cp_als_unconstrained(t, rank, iters, init_factors(t.dims, rank, seed));
}

FactorSet cp_als_unconstrained(const DenseTensor& t, std::size_t rank,
                               std::size_t iters, FactorSet init) {
  t.validate();
  const std::size_t N = t.order();
  for (std::size_t n = 0; n < N; ++n)
    if (rank > t.size() / t.dims[n])
      throw Error(ErrorCode::invalid_argument,
                  "compression rank exceeds unfolding column count");
  FactorSet f = std::move(init);
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  double prev = rel_err(t, f);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t n = 0; n < N; ++n) {
      const Matrix mtt = mttkrp(t, f, n);
      const Matrix gh = gram_hadamard_excluding(f, n);
      Eigen::Map<const Mat> m(mtt.values.data(), mtt.rows, mtt.cols);
      Eigen::Map<const Mat> g(gh.values.data(), gh.rows, gh.cols);
      // Least-squares mode solve U = M G^+; COD keeps rank-deficient Grams
      // from blowing up.
      Mat u = g.completeOrthogonalDecomposition().solve(m.transpose()).transpose();
      if (!u.allFinite())
        throw Error(ErrorCode::convergence,
                    "unconstrained ALS produced non-finite factors");
      std::copy(u.data(), u.data() + u.size(), f.modes[n].values.begin());
    }
    const double e = rel_err(t, f);
    if (std::abs(prev - e) < 1e-14) break;
    prev = e;
  }
  return f;
}

}  // namespace fcncp
