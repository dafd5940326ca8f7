#include "fcncp/synth.hpp"

#include <cmath>

namespace fcncp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> hanning_clean(std::size_t length, double center,
                                  double half_width) {
  if (center < 1.0 || center > static_cast<double>(length))
    throw Error(ErrorCode::invalid_argument, "hanning_atom: center outside [1, length]");
  if (!(half_width > 0.0))
    throw Error(ErrorCode::invalid_argument, "hanning_atom: half_width must be > 0");
  std::vector<double> v(length, 0.0);
  for (std::size_t j = 0; j < length; ++j) {
    const double d = std::abs(static_cast<double>(j + 1) - center);
    if (d < half_width) v[j] = 0.5 * (1.0 + std::cos(kPi * d / half_width));
  }
  return v;
}

// Rank-one accumulation over an arbitrary list of per-mode atoms.
void add_rank_one(DenseTensor& t, const std::vector<std::vector<double>>& atoms) {
  const std::size_t N = t.dims.size();
  std::vector<std::size_t> idx(N, 0);
  std::size_t p = 0;
  for (;;) {
    double w = 1.0;
    for (std::size_t m = 0; m < N; ++m) w *= atoms[m][idx[m]];
    t.values[p++] += w;
    std::size_t m = N;
    while (m > 0) {
      --m;
      if (++idx[m] < t.dims[m]) break;
      idx[m] = 0;
      if (m == 0) return;
    }
  }
}

}  // namespace

std::vector<double> hanning_atom(std::size_t length, double center,
                                 double half_width, double noise_level, Rng& rng) {
  std::vector<double> v = hanning_clean(length, center, half_width);
  if (noise_level > 0.0)
    for (double& x : v)
      x = std::max(x + rng.uniform(-noise_level, noise_level), 0.0);
  return v;
}

std::vector<double> channel_atom(std::size_t n_channels, Rng& rng) {
  if (n_channels < 4)
    throw Error(ErrorCode::invalid_argument, "channel_atom: need at least 4 channels");
  std::vector<double> v(n_channels, 0.0);
  const std::size_t start = rng.index(n_channels - 3);
  for (std::size_t i = 0; i < 4; ++i) v[start + i] = rng.uniform(0.5, 1.0);
  return v;
}

SimulationPair build_simulation_pair(std::uint64_t seed, double half_width,
                                     double noise_level) {
  Rng rng(seed);
  const std::size_t n_freq = 61, n_time = 72, n_chan = 64;
  const double freq_centers[4] = {15, 20, 40, 50};
  const double time_centers[4] = {10, 20, 30, 40};

  std::vector<std::vector<double>> f(4), fclean(4), t(4), tclean(4), c(6);
  for (std::size_t i = 0; i < 4; ++i) {
    fclean[i] = hanning_clean(n_freq, freq_centers[i], half_width);
    f[i] = hanning_atom(n_freq, freq_centers[i], half_width, noise_level, rng);
    tclean[i] = hanning_clean(n_time, time_centers[i], half_width);
    t[i] = hanning_atom(n_time, time_centers[i], half_width, noise_level, rng);
  }
  for (std::size_t i = 0; i < 6; ++i) c[i] = channel_atom(n_chan, rng);

  SimulationPair out;
  out.tensor1 = DenseTensor({n_freq, n_time, n_chan});
  out.tensor2 = DenseTensor({n_freq, n_time, n_chan});
  // components: tensor 1 uses (f1,t1,c1),(f2,t2,c2),(f3,t3,c3);
  //             tensor 2 uses (f1,t1,c4),(f2,t2,c5),(f4,t4,c6)
  const std::size_t comp1[3] = {0, 1, 2}, comp2[3] = {0, 1, 3};
  const std::size_t chan1[3] = {0, 1, 2}, chan2[3] = {3, 4, 5};

  GroundTruth& gt = out.truth;
  gt.seed = seed;
  gt.shared_modes = {0, 1};
  gt.shared_pairs = {{0, 0}, {1, 1}};
  gt.atoms.resize(2);
  gt.atoms_clean.resize(2);
  for (int k = 0; k < 2; ++k) {
    gt.atoms[k].resize(3);
    gt.atoms_clean[k].resize(3);
    for (auto& mode : gt.atoms[k]) mode.resize(3);
    for (auto& mode : gt.atoms_clean[k]) mode.resize(3);
  }
  for (std::size_t r = 0; r < 3; ++r) {
    add_rank_one(out.tensor1, {f[comp1[r]], t[comp1[r]], c[chan1[r]]});
    add_rank_one(out.tensor2, {f[comp2[r]], t[comp2[r]], c[chan2[r]]});
    gt.atoms[0][0][r] = f[comp1[r]];
    gt.atoms[0][1][r] = t[comp1[r]];
    gt.atoms[0][2][r] = c[chan1[r]];
    gt.atoms[1][0][r] = f[comp2[r]];
    gt.atoms[1][1][r] = t[comp2[r]];
    gt.atoms[1][2][r] = c[chan2[r]];
    gt.atoms_clean[0][0][r] = fclean[comp1[r]];
    gt.atoms_clean[0][1][r] = tclean[comp1[r]];
    gt.atoms_clean[0][2][r] = c[chan1[r]];
    gt.atoms_clean[1][0][r] = fclean[comp2[r]];
    gt.atoms_clean[1][1][r] = tclean[comp2[r]];
    gt.atoms_clean[1][2][r] = c[chan2[r]];
  }
  return out;
}

SimulationPair build_fifth_order_smoke(const std::vector<std::size_t>& dims,
                                       std::size_t rank1, std::size_t rank2,
                                       const std::vector<std::size_t>& coupled_modes,
                                       std::size_t n_shared, std::uint64_t seed,
                                       double noise_level) {
  if (dims.size() != 5)
    throw Error(ErrorCode::invalid_argument, "build_fifth_order_smoke: need 5 modes");
  if (n_shared > std::min(rank1, rank2))
    throw Error(ErrorCode::invalid_argument, "more shared components than rank");
  Rng rng(seed);
  auto is_coupled = [&](std::size_t m) {
    for (std::size_t n : coupled_modes)
      if (n == m) return true;
    return false;
  };
  auto make_atom = [&](std::size_t m, std::vector<double>* clean) {
    const std::size_t len = dims[m];
    if (is_coupled(m) && len >= 4) {
      const double hw = std::max(2.0, static_cast<double>(len) / 4.0);
      const double center = 1.0 + rng.uniform() * static_cast<double>(len - 1);
      std::vector<double> v = hanning_clean(len, center, hw);
      if (clean) *clean = v;
      if (noise_level > 0.0)
        for (double& x : v) x = std::max(x + rng.uniform(-noise_level, noise_level), 0.0);
      return v;
    }
    std::vector<double> v(len);
    for (double& x : v) x = rng.uniform(0.5, 1.0);
    if (clean) *clean = v;
    return v;
  };

  SimulationPair out;
  out.tensor1 = DenseTensor(dims);
  out.tensor2 = DenseTensor(dims);
  GroundTruth& gt = out.truth;
  gt.seed = seed;
  gt.shared_modes = coupled_modes;
  gt.atoms.assign(2, {});
  gt.atoms_clean.assign(2, {});
  gt.atoms[0].assign(5, std::vector<std::vector<double>>(rank1));
  gt.atoms[1].assign(5, std::vector<std::vector<double>>(rank2));
  gt.atoms_clean[0].assign(5, std::vector<std::vector<double>>(rank1));
  gt.atoms_clean[1].assign(5, std::vector<std::vector<double>>(rank2));

  const std::size_t ranks[2] = {rank1, rank2};
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t r = 0; r < ranks[k]; ++r) {
      std::vector<std::vector<double>> atoms(5);
      for (std::size_t m = 0; m < 5; ++m) {
        if (k == 1 && r < n_shared && is_coupled(m)) {
          // bit-identical shared atom
          atoms[m] = gt.atoms[0][m][r];
          gt.atoms_clean[1][m][r] = gt.atoms_clean[0][m][r];
        } else {
          atoms[m] = make_atom(m, &gt.atoms_clean[k][m][r]);
        }
        gt.atoms[k][m][r] = atoms[m];
      }
      add_rank_one(k == 0 ? out.tensor1 : out.tensor2, atoms);
    }
  }
  for (std::size_t r = 0; r < n_shared; ++r) gt.shared_pairs.emplace_back(r, r);
  return out;
}

}  // namespace fcncp
