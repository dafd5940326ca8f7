#include "fcncp/federation.hpp"

#include <chrono>
#include <cmath>
#include <future>

namespace fcncp {

std::size_t RunConfig::max_coupled() const {
  std::size_t m = 0;
  for (std::size_t l : L) m = std::max(m, l);
  return m;
}

void RunConfig::validate(std::size_t order) const {
  if (clients.size() != 2)
    throw Error(ErrorCode::invalid_argument, "exactly two clients are supported");
  if (rho < 0.0) throw Error(ErrorCode::invalid_argument, "rho must be >= 0");
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_argument, "alpha must be > 0");
  if (alpha * rho > 1.0)
    throw Error(ErrorCode::invalid_argument,
                "alpha*rho must lie in (0, 1]; the elastic step would diverge");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be > 0");
  if (L.size() != order)
    throw Error(ErrorCode::invalid_argument, "L must list one count per mode");
  const std::size_t min_rank = std::min(clients[0].rank, clients[1].rank);
  for (std::size_t n = 0; n < order; ++n)
    if (L[n] > min_rank)
      throw Error(ErrorCode::invalid_argument,
                  "L_n exceeds the smaller client rank");
  for (std::size_t n : coupled_modes) {
    if (n >= order)
      throw Error(ErrorCode::invalid_argument, "coupled mode index out of range");
    if (L[n] == 0)
      throw Error(ErrorCode::invalid_argument, "coupled mode has L_n == 0");
  }
  for (std::size_t n = 0; n < order; ++n) {
    if (L[n] == 0) continue;
    bool listed = false;
    for (std::size_t m : coupled_modes) listed = listed || m == n;
    if (!listed)
      throw Error(ErrorCode::invalid_argument, "mode with L_n > 0 not in coupled_modes");
  }
  bool has_uncoupled = false;
  for (std::size_t n = 0; n < order; ++n) has_uncoupled = has_uncoupled || L[n] == 0;
  if (!coupled_modes.empty() && !has_uncoupled)
    throw Error(ErrorCode::invalid_argument,
                "at least one uncoupled mode is required to carry scales");
  for (const ClientRunConfig& c : clients)
    if (c.rank < 1) throw Error(ErrorCode::invalid_argument, "client rank must be >= 1");
}

Matrix elastic_average(const Matrix& global, const std::vector<const Matrix*>& uploads,
                       double rho, double alpha) {
  if (uploads.empty())
    throw Error(ErrorCode::invalid_argument, "missing client uploads");
  for (const Matrix* u : uploads) {
    if (u == nullptr) throw Error(ErrorCode::invalid_argument, "missing client upload");
    if (u->rows != global.rows || u->cols != global.cols)
      throw Error(ErrorCode::invalid_argument, "upload shape mismatch");
    for (double v : u->values)
      if (!std::isfinite(v)) throw Error(ErrorCode::data, "non-finite upload");
  }
  const double step = alpha * rho;
  const double inv_k = 1.0 / static_cast<double>(uploads.size());
  Matrix out(global.rows, global.cols);
  for (std::size_t i = 0; i < global.values.size(); ++i) {
    double mean = 0.0;
    for (const Matrix* u : uploads) mean += u->values[i];
    mean *= inv_k;
    out.values[i] = (1.0 - step) * global.values[i] + step * mean;
  }
  return out;
}

void normalize_columns(Matrix& m) {
  for (std::size_t j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m.at(i, j) * m.at(i, j);
    s = std::sqrt(s);
    if (s == 0.0) continue;
    for (std::size_t i = 0; i < m.rows; ++i) m.at(i, j) /= s;
  }
}

GlobalColumns server_update_global(const GlobalColumns& global,
                                   const std::vector<GlobalColumns>& uploads,
                                   double rho, double alpha) {
  GlobalColumns out;
  out.per_mode.reserve(global.per_mode.size());
  for (std::size_t k = 0; k < global.per_mode.size(); ++k) {
    std::vector<const Matrix*> mats;
    for (const GlobalColumns& u : uploads) {
      if (u.per_mode.size() != global.per_mode.size())
        throw Error(ErrorCode::invalid_argument, "upload mode count mismatch");
      mats.push_back(&u.per_mode[k]);
    }
    Matrix m = elastic_average(global.per_mode[k], mats, rho, alpha);
    normalize_columns(m);
    out.per_mode.push_back(std::move(m));
  }
  return out;
}

GlobalColumns init_global(const std::vector<GlobalColumns>& uploads) {
  if (uploads.empty())
    throw Error(ErrorCode::invalid_argument, "missing client uploads");
  GlobalColumns out;
  for (std::size_t k = 0; k < uploads[0].per_mode.size(); ++k) {
    Matrix zero(uploads[0].per_mode[k].rows, uploads[0].per_mode[k].cols, 0.0);
    std::vector<const Matrix*> mats;
    for (const GlobalColumns& u : uploads) mats.push_back(&u.per_mode[k]);
    // alpha*rho = 1 turns the elastic step into a pure average of uploads
    Matrix m = elastic_average(zero, mats, 1.0, 1.0);
    normalize_columns(m);
    out.per_mode.push_back(std::move(m));
  }
  return out;
}

ClientSession::ClientSession(DenseTensor tensor, std::size_t rank,
                             std::uint64_t seed, bool compressed)
    : tensor_(std::move(tensor)), rng_(seed), compressed_(compressed) {
  tensor_.validate(true);
  factors_ = init_factors(tensor_.dims, rank, rng_);
  if (compressed_) {
    // basis seed is derived, not consumed from rng_, so the factor stream is
    // identical with and without compression
    basis_ = cp_als_unconstrained(tensor_, rank, 100, seed ^ 0x9e3779b97f4a7c15ull);
  }
  last_rel_err_ = rel_err(tensor_, factors_);
}

std::vector<Matrix> ClientSession::burn_in(std::size_t sweeps,
                                           const std::vector<std::size_t>& coupled_modes) {
  SweepOptions opt;
  opt.rng = &rng_;
  if (basis_) opt.compression_basis = &*basis_;
  for (std::size_t i = 0; i < sweeps; ++i) hals_sweep(tensor_, factors_, opt);
  last_rel_err_ = rel_err(tensor_, factors_);
  std::vector<Matrix> out;
  for (std::size_t n : coupled_modes) out.push_back(factors_.modes[n]);
  return out;
}

void ClientSession::set_coupling(CouplingSpec spec) {
  spec.validate(tensor_.order(), factors_.rank);
  coupling_ = std::move(spec);
  normalize_coupled(factors_, coupling_, rng_);
}

GlobalColumns ClientSession::coupled_columns() const {
  GlobalColumns out;
  for (std::size_t k = 0; k < coupling_.coupled_modes.size(); ++k) {
    const std::size_t n = coupling_.coupled_modes[k];
    const std::size_t count = coupling_.L[n];
    const Matrix& f = factors_.modes[n];
    Matrix m(f.rows, count);
    for (std::size_t l = 0; l < count; ++l) {
      const std::size_t r = coupling_.locations[l];
      for (std::size_t i = 0; i < f.rows; ++i) m.at(i, l) = f.at(i, r);
    }
    out.per_mode.push_back(std::move(m));
  }
  return out;
}

GlobalColumns ClientSession::round(const GlobalColumns& global, double rho) {
  if (global.per_mode.size() != coupling_.coupled_modes.size())
    throw Error(ErrorCode::invalid_argument, "global model mode count mismatch");
  for (std::size_t k = 0; k < global.per_mode.size(); ++k) {
    const std::size_t n = coupling_.coupled_modes[k];
    if (global.per_mode[k].rows != tensor_.dims[n] ||
        global.per_mode[k].cols != coupling_.L[n])
      throw Error(ErrorCode::invalid_argument, "global model shape mismatch");
  }
  SweepOptions opt;
  opt.coupling = &coupling_;
  opt.global = &global;
  opt.rho = rho;
  opt.rng = &rng_;
  if (basis_) opt.compression_basis = &*basis_;
  hals_sweep(tensor_, factors_, opt);
  normalize_coupled(factors_, coupling_, rng_);
  last_rel_err_ = rel_err(tensor_, factors_);
  return coupled_columns();
}

ConvergenceTracker::ConvergenceTracker(std::size_t n_clients, double epsilon)
    : epsilon_(epsilon),
      prev_(n_clients, 0.0),
      has_prev_(n_clients, false),
      converged_(n_clients, false) {}

bool ConvergenceTracker::record(const std::vector<double>& rel_errs) {
  bool all = true;
  for (std::size_t k = 0; k < rel_errs.size(); ++k) {
    converged_[k] = has_prev_[k] && std::abs(rel_errs[k] - prev_[k]) < epsilon_;
    prev_[k] = rel_errs[k];
    has_prev_[k] = true;
    all = all && converged_[k];
  }
  return all;
}

RunResult run_federation(const RunConfig& config,
                         const std::vector<DenseTensor>& tensors) {
  if (tensors.size() != 2)
    throw Error(ErrorCode::invalid_argument, "exactly two tensors expected");
  const std::size_t order = tensors[0].order();
  if (tensors[1].order() != order)
    throw Error(ErrorCode::invalid_argument, "tensor orders differ");
  config.validate(order);

  RunResult res;
  res.rel_err.resize(2);
  res.converged.assign(2, false);
  res.locations.resize(2);

  std::vector<ClientSession> clients;
  clients.reserve(2);
  for (std::size_t k = 0; k < 2; ++k)
    clients.emplace_back(tensors[k], config.clients[k].rank, config.clients[k].seed,
                         config.compressed);

  if (config.max_rounds == 0) {
    for (auto& c : clients) res.factors.push_back(c.factors());
    return res;
  }

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  // burn-in runs concurrently; sessions share nothing
  auto b0 = std::async(std::launch::async, [&] {
    return clients[0].burn_in(config.burn_in, config.coupled_modes);
  });
  auto b1 = std::async(std::launch::async, [&] {
    return clients[1].burn_in(config.burn_in, config.coupled_modes);
  });
  std::vector<Matrix> up0 = b0.get(), up1 = b1.get();

  SelectionResult sel =
      select_couplings(up0, up1, config.coupled_modes, config.max_coupled());
  res.locations[0] = sel.locations1;
  res.locations[1] = sel.locations2;
  for (std::size_t k = 0; k < 2; ++k) {
    CouplingSpec spec;
    spec.coupled_modes = config.coupled_modes;
    spec.L = config.L;
    spec.locations = k == 0 ? sel.locations1 : sel.locations2;
    clients[k].set_coupling(std::move(spec));
  }

  std::vector<GlobalColumns> uploads = {clients[0].coupled_columns(),
                                        clients[1].coupled_columns()};
  GlobalColumns global = init_global(uploads);
  const auto t1 = clock::now();
  res.burn_in_seconds = std::chrono::duration<double>(t1 - t0).count();

  ConvergenceTracker tracker(2, config.epsilon);
  std::vector<double> prev_err = {clients[0].current_rel_err(),
                                  clients[1].current_rel_err()};
  res.burn_in_rel_err = prev_err;
  tracker.record(prev_err);  // seeds the per-client previous values

  for (std::size_t t = 1; t <= config.max_rounds; ++t) {
    auto r0 = std::async(std::launch::async,
                         [&] { return clients[0].round(global, config.rho); });
    auto r1 = std::async(std::launch::async,
                         [&] { return clients[1].round(global, config.rho); });
    uploads[0] = r0.get();
    uploads[1] = r1.get();
    global = server_update_global(global, uploads, config.rho, config.alpha);
    const std::vector<double> errs = {clients[0].current_rel_err(),
                                      clients[1].current_rel_err()};
    res.rel_err[0].push_back(errs[0]);
    res.rel_err[1].push_back(errs[1]);
    res.rounds = t;
    if (tracker.record(errs)) break;
  }
  res.converged.assign(tracker.client_converged().begin(),
                       tracker.client_converged().end());
  res.round_seconds =
      std::chrono::duration<double>(clock::now() - t1).count();
  for (auto& c : clients) res.factors.push_back(c.factors());
  return res;
}

}  // namespace fcncp
