#ifndef FCNCP_FEDERATION_HPP
#define FCNCP_FEDERATION_HPP

#include <optional>
#include <string>

#include "fcncp/cp.hpp"
#include "fcncp/selection.hpp"
#include "fcncp/tensor.hpp"

namespace fcncp {

struct ClientRunConfig {
  std::string tensor_path;
  std::size_t rank = 0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  double rho = 1.0;
  double alpha = 0.5;
  double epsilon = 1e-8;
  std::size_t max_rounds = 500;
  std::size_t burn_in = 50;
  std::vector<std::size_t> coupled_modes;  ///< 0-based, ascending
  std::vector<std::size_t> L;              ///< per mode, 0 for uncoupled
  bool compressed = false;
  std::string transport = "inprocess";  ///< "inprocess" or "tcp"
  std::string endpoint = "127.0.0.1:7878";
  std::vector<ClientRunConfig> clients;  ///< exactly 2

  std::size_t max_coupled() const;
  /// Checks field ranges against a tensor order; throws Error on violation.
  void validate(std::size_t order) const;
};

struct RunResult {
  std::vector<FactorSet> factors;               ///< per client
  std::vector<double> burn_in_rel_err;          ///< per client, post-selection
  std::vector<std::vector<double>> rel_err;     ///< per client, per round
  std::vector<bool> converged;                  ///< per client
  std::size_t rounds = 0;
  std::vector<std::vector<std::size_t>> locations;  ///< per client
  double burn_in_seconds = 0.0;
  double round_seconds = 0.0;
};

/// One elastic-averaging SGD step, pre-normalization:
/// out = (1 - alpha*rho) * global + alpha*rho * mean(uploads).
Matrix elastic_average(const Matrix& global, const std::vector<const Matrix*>& uploads,
                       double rho, double alpha);

/// Rescale every column to unit L2 norm (zero columns left untouched).
void normalize_columns(Matrix& m);

/// Full server step over all coupled modes: elastic average then column
/// normalization. Requires one upload per client with matching shapes.
GlobalColumns server_update_global(const GlobalColumns& global,
                                   const std::vector<GlobalColumns>& uploads,
                                   double rho, double alpha);

/// Normalized per-column mean of the first uploads; the global model's
/// starting point.
GlobalColumns init_global(const std::vector<GlobalColumns>& uploads);

/// One client's state across the protocol. Single-writer; distinct sessions
/// are independent.
class ClientSession {
 public:
  ClientSession(DenseTensor tensor, std::size_t rank, std::uint64_t seed,
                bool compressed = false);

  /// Uncoupled FastHALS sweeps; returns the coupled-mode factor matrices for
  /// the selection upload.
  std::vector<Matrix> burn_in(std::size_t sweeps,
                              const std::vector<std::size_t>& coupled_modes);

  /// Labels components per the server's locations, normalizes coupled
  /// columns, and caches the initial upload.
  void set_coupling(CouplingSpec spec);

  /// Coupled columns (per coupled mode, I_n x L_n) indexed by location order.
  GlobalColumns coupled_columns() const;

  /// One federated round: full sweep against the broadcast global model,
  /// normalization, fresh rel_err. Returns the upload.
  GlobalColumns round(const GlobalColumns& global, double rho);

  double current_rel_err() const { return last_rel_err_; }
  const FactorSet& factors() const { return factors_; }
  const CouplingSpec& coupling() const { return coupling_; }
  const DenseTensor& tensor() const { return tensor_; }

 private:
  DenseTensor tensor_;
  FactorSet factors_;
  CouplingSpec coupling_;
  Rng rng_;
  bool compressed_ = false;
  std::optional<FactorSet> basis_;
  double last_rel_err_ = 1.0;
};

/// Tracks per-client rel_err deltas against the stopping rule.
class ConvergenceTracker {
 public:
  ConvergenceTracker(std::size_t n_clients, double epsilon);
  /// Records one round of rel_errs; returns true once every client's last
  /// two values differ by less than epsilon.
  bool record(const std::vector<double>& rel_errs);
  const std::vector<bool>& client_converged() const { return converged_; }

 private:
  double epsilon_;
  std::vector<double> prev_;
  std::vector<bool> has_prev_;
  std::vector<bool> converged_;
};

/// Runs the whole protocol in-process: burn-in + selection, then synchronous
/// rounds of client sweeps, barrier, elastic server update, broadcast.
RunResult run_federation(const RunConfig& config,
                         const std::vector<DenseTensor>& tensors);

}  // namespace fcncp

#endif
