#include "fcncp.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "fcncp/cp.hpp"
#include "fcncp/federation.hpp"
#include "fcncp/io.hpp"
#include "fcncp/selection.hpp"
#include "fcncp/synth.hpp"
#include "fcncp/tcp.hpp"

namespace {

thread_local std::string g_last_error;

fcncp_status status_of(const fcncp::Error& e) {
  using fcncp::ErrorCode;
  switch (e.code()) {
    case ErrorCode::invalid_argument:
      return FCNCP_ERR_USAGE;
    case ErrorCode::data:
    case ErrorCode::io:
    case ErrorCode::protocol:
      return FCNCP_ERR_DATA;
    case ErrorCode::convergence:
      return FCNCP_ERR_CONVERGENCE;
  }
  return FCNCP_ERR_INTERNAL;
}

template <typename Fn>
fcncp_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const fcncp::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FCNCP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FCNCP_ERR_INTERNAL;
  }
}

// True when every required pointer argument is present; otherwise records a
// usage error for the caller to return.
bool args_present(std::initializer_list<const void*> ptrs) {
  for (const void* p : ptrs)
    if (p == nullptr) {
      g_last_error = "null argument";
      return false;
    }
  return true;
}

}  // namespace

struct fcncp_tensor_s {
  fcncp::DenseTensor t;
};

struct fcncp_result_s {
  // one entry per client; a plain decompose has a single client
  std::vector<fcncp::FactorSet> factors;
  std::vector<std::vector<double>> rel_err;
  std::vector<bool> converged;
  std::size_t rounds = 0;
  std::string report;
};

extern "C" {

const char* fcncp_last_error(void) { return g_last_error.c_str(); }

fcncp_status fcncp_tensor_create(uint32_t order, const uint64_t* dims,
                                 const double* values, fcncp_tensor** out) {
  return guarded([&]() -> fcncp_status {
    if (!dims || !values || !out) {
      g_last_error = "null argument";
      return FCNCP_ERR_USAGE;
    }
    fcncp::DenseTensor t;
    t.dims.assign(dims, dims + order);
    t.values.assign(values, values + t.size());
    t.validate();
    *out = new fcncp_tensor_s{std::move(t)};
    return FCNCP_OK;
  });
}

fcncp_status fcncp_tensor_read(const char* path, fcncp_tensor** out) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({path, out})) return FCNCP_ERR_USAGE;
    *out = new fcncp_tensor_s{fcncp::read_tensor(path)};
    return FCNCP_OK;
  });
}

fcncp_status fcncp_tensor_write(const fcncp_tensor* t, const char* path) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({t, path})) return FCNCP_ERR_USAGE;
    fcncp::write_tensor(t->t, path);
    return FCNCP_OK;
  });
}

uint32_t fcncp_tensor_order(const fcncp_tensor* t) {
  return t ? static_cast<uint32_t>(t->t.order()) : 0;
}

uint64_t fcncp_tensor_dim(const fcncp_tensor* t, uint32_t mode) {
  return t && mode < t->t.order() ? t->t.dims[mode] : 0;
}

const double* fcncp_tensor_values(const fcncp_tensor* t) {
  return t ? t->t.values.data() : nullptr;
}

void fcncp_tensor_free(fcncp_tensor* t) { delete t; }

fcncp_status fcncp_synth_pair(uint64_t seed, const char* tensor1_path,
                              const char* tensor2_path, const char* truth_json_path) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({tensor1_path, tensor2_path})) return FCNCP_ERR_USAGE;
    fcncp::SimulationPair pair = fcncp::build_simulation_pair(seed);
    fcncp::write_tensor(pair.tensor1, tensor1_path);
    fcncp::write_tensor(pair.tensor2, tensor2_path);
    if (truth_json_path) fcncp::write_truth_manifest(pair, truth_json_path);
    return FCNCP_OK;
  });
}

fcncp_status fcncp_pca_rank(const fcncp_tensor* t, uint32_t mode, double threshold,
                            uint32_t* out_rank) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({t, out_rank})) return FCNCP_ERR_USAGE;
    if (mode < 1 || mode > t->t.order()) {
      g_last_error = "mode index out of range";
      return FCNCP_ERR_USAGE;
    }
    const fcncp::Matrix u = fcncp::unfold(t->t, mode - 1);
    *out_rank = static_cast<uint32_t>(fcncp::pca_rank(u, threshold));
    return FCNCP_OK;
  });
}

fcncp_status fcncp_decompose(const fcncp_tensor* t, uint32_t rank, double epsilon,
                             uint32_t max_iters, uint64_t seed, fcncp_result** out) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({t, out})) return FCNCP_ERR_USAGE;
    fcncp::HalsResult r = fcncp::ncp_fasthals(t->t, rank, epsilon, max_iters, seed);
    auto* res = new fcncp_result_s;
    res->factors.push_back(r.factors);
    res->rel_err.push_back(r.trace);
    res->converged.push_back(r.converged);
    res->rounds = r.trace.size();
    res->report = fcncp::decompose_report_json(r, rank, epsilon, seed);
    *out = res;
    return r.converged ? FCNCP_OK : FCNCP_ERR_CONVERGENCE;
  });
}

fcncp_status fcncp_corr_report(const fcncp_tensor* t1, const fcncp_tensor* t2,
                               uint32_t rank1, uint32_t rank2, uint32_t burn_in,
                               uint64_t seed1, uint64_t seed2, const uint32_t* modes,
                               uint32_t n_modes, const char* out_dir) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({t1, t2, modes, out_dir})) return FCNCP_ERR_USAGE;
    std::vector<std::size_t> coupled;
    for (uint32_t i = 0; i < n_modes; ++i) {
      if (modes[i] < 1) {
        g_last_error = "modes are 1-based";
        return FCNCP_ERR_USAGE;
      }
      coupled.push_back(modes[i] - 1);
    }
    fcncp::BurnInSelection sel = fcncp::burn_in_and_select(
        t1->t, t2->t, rank1, rank2, seed1, seed2, coupled,
        std::min<std::size_t>(rank1, rank2), burn_in);
    fcncp::export_correlation_report(sel.selection.report, out_dir);
    return FCNCP_OK;
  });
}

namespace {

fcncp_result_s* result_from_run(const fcncp::RunConfig& cfg,
                                const fcncp::RunResult& run) {
  auto* res = new fcncp_result_s;
  res->factors = run.factors;
  res->rel_err = run.rel_err;
  res->converged.assign(run.converged.begin(), run.converged.end());
  res->rounds = run.rounds;
  res->report = fcncp::run_report_json(cfg, run);
  return res;
}

void write_run_outputs(const fcncp_result_s* res, const char* out_dir) {
  if (!out_dir) return;
  std::filesystem::create_directories(out_dir);
  std::ofstream os(std::string(out_dir) + "/report.json");
  os << res->report << "\n";
  for (std::size_t k = 0; k < res->factors.size(); ++k)
    fcncp::export_factors(res->factors[k], std::string(out_dir) + "/client" +
                                               std::to_string(k + 1) + "_factors");
}

bool all_converged(const std::vector<bool>& v) {
  for (bool b : v)
    if (!b) return false;
  return !v.empty();
}

}  // namespace

fcncp_status fcncp_fed_run(const char* config_path, const char* out_dir,
                           fcncp_result** out) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({config_path})) return FCNCP_ERR_USAGE;
    fcncp::RunConfig cfg = fcncp::parse_config_file(config_path);
    std::vector<fcncp::DenseTensor> tensors;
    for (const auto& c : cfg.clients) tensors.push_back(fcncp::read_tensor(c.tensor_path));
    fcncp::RunResult run = fcncp::run_federation(cfg, tensors);
    fcncp_result_s* res = result_from_run(cfg, run);
    write_run_outputs(res, out_dir);
    const bool ok = all_converged(res->converged);
    if (out)
      *out = res;
    else
      delete res;
    if (!ok) g_last_error = "run hit the round limit before converging";
    return ok ? FCNCP_OK : FCNCP_ERR_CONVERGENCE;
  });
}

fcncp_status fcncp_fed_server(const char* config_path, const char* listen_addr,
                              const char* out_dir) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({config_path})) return FCNCP_ERR_USAGE;
    fcncp::RunConfig cfg = fcncp::parse_config_file(config_path);
    const auto [host, port] =
        fcncp::parse_endpoint(listen_addr ? listen_addr : cfg.endpoint);
    fcncp::TcpServer server(host, port);
    fcncp::ServerReport rep = server.run(cfg);
    if (out_dir) {
      std::filesystem::create_directories(out_dir);
      std::ofstream os(std::string(out_dir) + "/report.json");
      os << fcncp::server_report_json(cfg, rep) << "\n";
    }
    if (rep.aborted) {
      g_last_error = rep.error;
      return FCNCP_ERR_DATA;
    }
    if (!all_converged(rep.converged)) {
      g_last_error = "run hit the round limit before converging";
      return FCNCP_ERR_CONVERGENCE;
    }
    return FCNCP_OK;
  });
}

fcncp_status fcncp_fed_client(const char* config_path, uint32_t client_index,
                              const char* connect_addr, const char* out_dir) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({config_path})) return FCNCP_ERR_USAGE;
    if (client_index < 1 || client_index > 2) {
      g_last_error = "client index must be 1 or 2";
      return FCNCP_ERR_USAGE;
    }
    fcncp::RunConfig cfg = fcncp::parse_config_file(config_path);
    const auto [host, port] =
        fcncp::parse_endpoint(connect_addr ? connect_addr : cfg.endpoint);
    fcncp::DenseTensor t =
        fcncp::read_tensor(cfg.clients[client_index - 1].tensor_path);
    fcncp::ClientReport rep =
        fcncp::run_tcp_client(cfg, client_index - 1, std::move(t), host, port);
    if (out_dir) {
      std::filesystem::create_directories(out_dir);
      fcncp::export_factors(rep.factors, std::string(out_dir) + "/client" +
                                             std::to_string(client_index) +
                                             "_factors");
      nlohmann::json j;
      j["client"] = client_index;
      j["rel_err"] = rep.rel_err;
      j["fit"] = rep.rel_err.empty() ? nlohmann::json() : nlohmann::json(1.0 - rep.rel_err.back());
      j["converged"] = rep.converged;
      nlohmann::json locs = nlohmann::json::array();
      for (std::size_t v : rep.locations) locs.push_back(v + 1);
      j["locations"] = locs;
      std::ofstream os(std::string(out_dir) + "/client" +
                       std::to_string(client_index) + "_report.json");
      os << j.dump(2) << "\n";
    }
    if (!rep.converged) {
      g_last_error = "client did not converge";
      return FCNCP_ERR_CONVERGENCE;
    }
    return FCNCP_OK;
  });
}

uint32_t fcncp_result_clients(const fcncp_result* r) {
  return r ? static_cast<uint32_t>(r->factors.size()) : 0;
}

uint32_t fcncp_result_rounds(const fcncp_result* r) {
  return r ? static_cast<uint32_t>(r->rounds) : 0;
}

int fcncp_result_converged(const fcncp_result* r, uint32_t client) {
  return r && client < r->converged.size() && r->converged[client] ? 1 : 0;
}

double fcncp_result_fit(const fcncp_result* r, uint32_t client) {
  if (!r || client >= r->rel_err.size() || r->rel_err[client].empty()) return 0.0;
  return 1.0 - r->rel_err[client].back();
}

fcncp_status fcncp_result_export_factors(const fcncp_result* r, uint32_t client,
                                         const char* dir) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({r, dir})) return FCNCP_ERR_USAGE;
    if (client >= r->factors.size()) {
      g_last_error = "client index out of range";
      return FCNCP_ERR_USAGE;
    }
    fcncp::export_factors(r->factors[client], dir);
    return FCNCP_OK;
  });
}

fcncp_status fcncp_result_report_json(const fcncp_result* r, char** out) {
  return guarded([&]() -> fcncp_status {
    if (!args_present({r, out})) return FCNCP_ERR_USAGE;
    *out = static_cast<char*>(std::malloc(r->report.size() + 1));
    if (!*out) {
      g_last_error = "out of memory";
      return FCNCP_ERR_INTERNAL;
    }
    std::memcpy(*out, r->report.c_str(), r->report.size() + 1);
    return FCNCP_OK;
  });
}

void fcncp_string_free(char* s) { std::free(s); }

void fcncp_result_free(fcncp_result* r) { delete r; }

}  // extern "C"
