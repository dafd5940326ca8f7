#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fcncp/selection.hpp"
#include "fcncp/synth.hpp"

using namespace fcncp;

namespace {

// Independent Pearson computation over two raw vectors.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                     double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values) v = d(gen);
  return m;
}

// Step-by-step replay of the greedy zeroing procedure, written independently
// of the library implementation: at each step scan for the largest entry
// (smallest row then column on ties), record it, zero its row and column.
std::vector<std::pair<std::size_t, std::size_t>> greedy_oracle(Matrix p,
                                                               std::size_t count) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t br = 0, bc = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < p.rows; ++i)
      for (std::size_t j = 0; j < p.cols; ++j)
        if (p.at(i, j) > best) {
          best = p.at(i, j);
          br = i;
          bc = j;
        }
    out.emplace_back(br, bc);
    for (std::size_t j = 0; j < p.cols; ++j) p.at(br, j) = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) p.at(i, bc) = 0.0;
  }
  return out;
}

// Builds a matrix with the requested singular values via two explicit
// orthogonal (Householder-free, hand-rolled Givens product) factors, so the
// spectrum is known without calling any library SVD.
Matrix matrix_with_spectrum(const std::vector<double>& sigma, std::size_t rows,
                            std::uint64_t seed) {
  const std::size_t cols = sigma.size();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(0.1, 1.0);
  // Start from diag(sigma) padded to rows x cols, then apply random Givens
  // rotations on both sides; rotations preserve singular values exactly.
  Matrix m(rows, cols);
  for (std::size_t j = 0; j < cols && j < rows; ++j) m.at(j, j) = sigma[j];
  auto rotate_rows = [&](std::size_t a, std::size_t b, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = m.at(a, j), y = m.at(b, j);
      m.at(a, j) = c * x - s * y;
      m.at(b, j) = s * x + c * y;
    }
  };
  auto rotate_cols = [&](std::size_t a, std::size_t b, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t i = 0; i < rows; ++i) {
      const double x = m.at(i, a), y = m.at(i, b);
      m.at(i, a) = c * x - s * y;
      m.at(i, b) = s * x + c * y;
    }
  };
  for (int sweep = 0; sweep < 8; ++sweep) {
    for (std::size_t a = 0; a + 1 < rows; ++a) rotate_rows(a, a + 1, d(gen));
    for (std::size_t a = 0; a + 1 < cols; ++a) rotate_cols(a, a + 1, d(gen));
  }
  return m;
}

}  // namespace

TEST_CASE("pearson_matrix matches a scalar Pearson oracle") {
  const Matrix u1 = random_matrix(9, 4, 101);
  const Matrix u2 = random_matrix(9, 3, 102);
  const Matrix p = pearson_matrix(u1, u2);
  REQUIRE(p.rows == 4);
  REQUIRE(p.cols == 3);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      const double want = std::abs(pearson_oracle(u1.column(r), u2.column(c)));
      CHECK(p.at(r, c) == doctest::Approx(want).epsilon(1e-12));
      CHECK(p.at(r, c) >= 0.0);
      CHECK(p.at(r, c) <= 1.0 + 1e-12);
    }
}

TEST_CASE("pearson_matrix self-correlation diagonal is 1") {
  const Matrix u = random_matrix(12, 5, 103);
  const Matrix p = pearson_matrix(u, u);
  for (std::size_t r = 0; r < 5; ++r)
    CHECK(p.at(r, r) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pearson_matrix takes the absolute value of anti-correlation") {
  Matrix a(4, 1), b(4, 1);
  a.values = {1, 0, 1, 0};
  b.values = {0, 1, 0, 1};
  const Matrix p = pearson_matrix(a, b);
  CHECK(p.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pearson_matrix is invariant to positive scaling and shifts") {
  const Matrix u1 = random_matrix(10, 3, 104);
  const Matrix u2 = random_matrix(10, 3, 105);
  Matrix scaled = u1;
  for (std::size_t i = 0; i < scaled.rows; ++i)
    for (std::size_t j = 0; j < scaled.cols; ++j)
      scaled.at(i, j) = scaled.at(i, j) * (2.5 + static_cast<double>(j)) + 7.0;
  const Matrix p1 = pearson_matrix(u1, u2);
  const Matrix p2 = pearson_matrix(scaled, u2);
  for (std::size_t i = 0; i < p1.rows * p1.cols; ++i)
    CHECK(p1.values[i] == doctest::Approx(p2.values[i]).epsilon(1e-12));
}

TEST_CASE("pearson_matrix maps a constant column to 0") {
  Matrix a(5, 2), b(5, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    a.at(i, 0) = 3.0;                        // constant
    a.at(i, 1) = static_cast<double>(i);     // varying
    b.at(i, 0) = static_cast<double>(i * i);
  }
  const Matrix p = pearson_matrix(a, b);
  CHECK(p.at(0, 0) == 0.0);
  CHECK(p.at(1, 0) > 0.9);
}

TEST_CASE("pearson_matrix rejects mismatched row counts") {
  CHECK_THROWS_AS(pearson_matrix(Matrix(4, 2, 1.0), Matrix(5, 2, 1.0)),
                  Error);
}

TEST_CASE("greedy_select reproduces the forced diagonal fixture") {
  Matrix p(2, 2);
  p.values = {0.9, 0.2, 0.3, 0.8};
  const auto pairs = greedy_select(p, 2);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::make_pair<std::size_t, std::size_t>(0, 0));
  CHECK(pairs[1] == std::make_pair<std::size_t, std::size_t>(1, 1));
}

TEST_CASE("greedy_select reproduces the forced anti-diagonal fixture") {
  Matrix p(2, 2);
  p.values = {0.5, 0.9, 0.8, 0.1};
  const auto pairs = greedy_select(p, 2);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::make_pair<std::size_t, std::size_t>(0, 1));
  CHECK(pairs[1] == std::make_pair<std::size_t, std::size_t>(1, 0));
}

TEST_CASE("greedy_select breaks ties by smallest row then column") {
  SUBCASE("all-equal matrix selects the diagonal in order") {
    const auto pairs = greedy_select(Matrix(3, 3, 0.5), 3);
    REQUIRE(pairs.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(pairs[k].first == k);
      CHECK(pairs[k].second == k);
    }
  }
  SUBCASE("tie inside one row picks the smaller column") {
    Matrix p(2, 3);
    p.values = {0.7, 0.7, 0.1, 0.2, 0.3, 0.7};
    const auto pairs = greedy_select(p, 2);
    CHECK(pairs[0] == std::make_pair<std::size_t, std::size_t>(0, 0));
    CHECK(pairs[1] == std::make_pair<std::size_t, std::size_t>(1, 2));
  }
  SUBCASE("tie across rows picks the smaller row") {
    Matrix p(3, 2);
    p.values = {0.1, 0.6, 0.6, 0.2, 0.6, 0.3};
    const auto pairs = greedy_select(p, 2);
    CHECK(pairs[0] == std::make_pair<std::size_t, std::size_t>(0, 1));
    CHECK(pairs[1] == std::make_pair<std::size_t, std::size_t>(1, 0));
  }
}

TEST_CASE("greedy_select replays the zeroing oracle on 1000 random matrices") {
  std::mt19937_64 gen(200);
  std::uniform_int_distribution<std::size_t> dim(1, 10);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = dim(gen), cols = dim(gen);
    const Matrix p = random_matrix(rows, cols, gen(), 0.0, 3.0);
    const std::size_t count = std::min(rows, cols);
    const auto got = greedy_select(p, count);
    const auto want = greedy_oracle(p, count);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < count; ++k) {
      REQUIRE(got[k].first == want[k].first);
      REQUIRE(got[k].second == want[k].second);
    }
    // Rows and columns must be injective across the selected pairs.
    std::vector<std::size_t> rs, cs;
    for (const auto& pr : got) {
      rs.push_back(pr.first);
      cs.push_back(pr.second);
    }
    std::sort(rs.begin(), rs.end());
    std::sort(cs.begin(), cs.end());
    REQUIRE(std::adjacent_find(rs.begin(), rs.end()) == rs.end());
    REQUIRE(std::adjacent_find(cs.begin(), cs.end()) == cs.end());
  }
}

TEST_CASE("greedy_select each selected value is the max of its remaining submatrix") {
  const Matrix p = random_matrix(6, 6, 201, 0.0, 1.0);
  const auto pairs = greedy_select(p, 4);
  std::vector<bool> row_used(6, false), col_used(6, false);
  for (const auto& pr : pairs) {
    double best = -1.0;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        if (!row_used[i] && !col_used[j]) best = std::max(best, p.at(i, j));
    CHECK(p.at(pr.first, pr.second) == doctest::Approx(best).epsilon(1e-15));
    row_used[pr.first] = true;
    col_used[pr.second] = true;
  }
}

TEST_CASE("greedy_select rejects an oversized count") {
  CHECK_THROWS_AS(greedy_select(Matrix(2, 3, 1.0), 3), Error);
}

TEST_CASE("pca_rank finds rank 1 for a constructed {10, 1, 0} spectrum") {
  // Singular values {10, 1, 0} give a leading share of 100/101 ~ 0.990;
  // pca_rank centers its input first, so append a constant row: centering
  // then removes it and the remaining rows carry the planted spectrum.
  Matrix core = matrix_with_spectrum({10.0, 1.0, 0.0}, 6, 301);
  Matrix m(core.rows * 2, core.cols);
  for (std::size_t i = 0; i < core.rows; ++i)
    for (std::size_t j = 0; j < core.cols; ++j) {
      m.at(i, j) = core.at(i, j);
      m.at(core.rows + i, j) = -core.at(i, j);
    }
  // Columns of m are exactly mean-zero, singular values scale by sqrt(2).
  CHECK(pca_rank(m, 0.95) == 1);
  CHECK(pca_rank(m, 0.995) == 2);
}

TEST_CASE("pca_rank at threshold 1.0 returns the full numerical rank") {
  Matrix core = matrix_with_spectrum({5.0, 2.0, 1.0}, 5, 302);
  Matrix m(core.rows * 2, core.cols);
  for (std::size_t i = 0; i < core.rows; ++i)
    for (std::size_t j = 0; j < core.cols; ++j) {
      m.at(i, j) = core.at(i, j);
      m.at(core.rows + i, j) = -core.at(i, j);
    }
  CHECK(pca_rank(m, 1.0) == 3);
}

TEST_CASE("pca_rank is invariant to row permutation") {
  const Matrix m = random_matrix(12, 5, 303);
  Matrix shuffled = m;
  std::vector<std::size_t> perm(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) perm[i] = i;
  std::mt19937_64 gen(304);
  std::shuffle(perm.begin(), perm.end(), gen);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      shuffled.at(i, j) = m.at(perm[i], j);
  for (double th : {0.5, 0.8, 0.95, 0.99, 1.0})
    CHECK(pca_rank(m, th) == pca_rank(shuffled, th));
}

TEST_CASE("pca_rank is monotone non-decreasing in the threshold") {
  const Matrix m = random_matrix(15, 6, 305);
  std::size_t prev = 0;
  for (double th : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99, 1.0}) {
    const std::size_t k = pca_rank(m, th);
    CHECK(k >= prev);
    prev = k;
  }
}

TEST_CASE("pca_rank rejects invalid inputs") {
  CHECK_THROWS_AS(pca_rank(random_matrix(4, 3, 306), 0.0), Error);
  CHECK_THROWS_AS(pca_rank(random_matrix(4, 3, 306), 1.5), Error);
  CHECK_THROWS_AS(pca_rank(Matrix(4, 1, 1.0), 0.95), Error);
  CHECK_THROWS_AS(pca_rank(Matrix(5, 3, 2.0), 0.95), Error);
}

TEST_CASE("correlation_report sums per-mode matrices and stays within bounds") {
  std::vector<Matrix> f1 = {random_matrix(8, 3, 401), random_matrix(9, 3, 402)};
  std::vector<Matrix> f2 = {random_matrix(8, 4, 403), random_matrix(9, 4, 404)};
  const CorrelationReport rep = correlation_report(f1, f2, {0, 1});
  REQUIRE(rep.per_mode.size() == 2);
  REQUIRE(rep.modes == std::vector<std::size_t>({0, 1}));
  REQUIRE(rep.summed.rows == 3);
  REQUIRE(rep.summed.cols == 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double want = rep.per_mode[0].at(i, j) + rep.per_mode[1].at(i, j);
      CHECK(rep.summed.at(i, j) == doctest::Approx(want).epsilon(1e-14));
      CHECK(rep.summed.at(i, j) >= 0.0);
      CHECK(rep.summed.at(i, j) <= 2.0 + 1e-12);
    }
}

TEST_CASE("select_couplings pairs identical factor sets component for component") {
  std::vector<Matrix> f = {random_matrix(10, 3, 405, 0.1, 1.0),
                           random_matrix(11, 3, 406, 0.1, 1.0)};
  const SelectionResult sel = select_couplings(f, f, {0, 1}, 2);
  REQUIRE(sel.locations1.size() == 2);
  REQUIRE(sel.locations2.size() == 2);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(sel.locations1[k] == sel.locations2[k]);
}

TEST_CASE("burn_in_and_select on identical tensors and seeds pairs i with i") {
  const SimulationPair sim = build_simulation_pair(42);
  const BurnInSelection bis =
      burn_in_and_select(sim.tensor1, sim.tensor1, 3, 3, 7, 7, {0, 1}, 2, 50);
  REQUIRE(bis.selection.locations1.size() == 2);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(bis.selection.locations1[k] == bis.selection.locations2[k]);
}

TEST_CASE("burn_in_and_select recovers the generator's shared pairs") {
  int hits = 0;
  const int trials = 25;
  for (int s = 0; s < trials; ++s) {
    const SimulationPair sim = build_simulation_pair(1000 + s);
    const BurnInSelection bis =
        burn_in_and_select(sim.tensor1, sim.tensor2, 3, 3, 2000 + s, 3000 + s,
                           {0, 1}, 2, 50);
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (std::size_t k = 0; k < bis.selection.locations1.size(); ++k)
      got.emplace_back(bis.selection.locations1[k], bis.selection.locations2[k]);
    std::sort(got.begin(), got.end());
    // Selected component indices refer to the burned-in factors, which are a
    // permutation of the generator's components; match via atom correlation.
    const auto& truth = sim.truth;
    std::vector<std::pair<std::size_t, std::size_t>> want;
    for (const auto& sp : truth.shared_pairs) {
      std::size_t m1 = 0, m2 = 0;
      double b1 = -1.0, b2 = -1.0;
      for (std::size_t r = 0; r < 3; ++r) {
        double c1 = 1.0, c2 = 1.0;
        for (std::size_t mode : {0, 1}) {
          Matrix atom(truth.atoms[0][mode][sp.first].size(), 1);
          atom.values = truth.atoms[0][mode][sp.first];
          Matrix col1(bis.factors1.modes[mode].rows, 1);
          col1.values = bis.factors1.modes[mode].column(r);
          c1 *= pearson_matrix(atom, col1).at(0, 0);
          Matrix atom2(truth.atoms[1][mode][sp.second].size(), 1);
          atom2.values = truth.atoms[1][mode][sp.second];
          Matrix col2(bis.factors2.modes[mode].rows, 1);
          col2.values = bis.factors2.modes[mode].column(r);
          c2 *= pearson_matrix(atom2, col2).at(0, 0);
        }
        if (c1 > b1) { b1 = c1; m1 = r; }
        if (c2 > b2) { b2 = c2; m2 = r; }
      }
      want.emplace_back(m1, m2);
    }
    std::sort(want.begin(), want.end());
    if (got == want) ++hits;
  }
  CHECK(hits >= trials * 9 / 10);
}
