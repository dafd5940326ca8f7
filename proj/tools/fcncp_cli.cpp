// fcncp command-line front end. Talks to the library exclusively through the
// C API in fcncp.h.
#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "fcncp.h"

namespace {

// exit codes: 0 ok, 1 usage, 2 data error, 3 convergence failure
int exit_code(fcncp_status s) {
  switch (s) {
    case FCNCP_OK:
      return 0;
    case FCNCP_ERR_USAGE:
      return 1;
    case FCNCP_ERR_DATA:
      return 2;
    case FCNCP_ERR_CONVERGENCE:
      return 3;
    default:
      return 2;
  }
}

int fail(fcncp_status s) {
  std::fprintf(stderr, "error: %s\n", fcncp_last_error());
  return exit_code(s);
}

struct TensorHandle {
  fcncp_tensor* t = nullptr;
  ~TensorHandle() { fcncp_tensor_free(t); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FCNCP: federated coupled nonnegative CP decomposition"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write the simulation tensor pair");
  std::uint64_t synth_seed = 42;
  std::string synth_dir = ".";
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_dir, "Output directory");

  // decompose
  auto* dec = app.add_subcommand("decompose", "Uncoupled nonnegative CP of one tensor");
  std::string dec_tensor, dec_out;
  std::uint32_t dec_rank = 3, dec_iters = 500;
  double dec_eps = 1e-8;
  std::uint64_t dec_seed = 0;
  dec->add_option("--tensor", dec_tensor, "Input .fcnt tensor")->required();
  dec->add_option("--rank", dec_rank, "Number of components")->required();
  dec->add_option("--epsilon", dec_eps, "Stopping tolerance")->capture_default_str();
  dec->add_option("--max-iters", dec_iters, "Sweep cap")->capture_default_str();
  dec->add_option("--seed", dec_seed, "Initialization seed");
  dec->add_option("--out", dec_out, "Directory for factor CSVs and report");

  // rank
  auto* rank = app.add_subcommand("rank", "PCA explained-variance rank rule");
  std::string rank_tensor;
  std::uint32_t rank_mode = 1;
  double rank_threshold = 0.95;
  rank->add_option("--tensor", rank_tensor, "Input .fcnt tensor")->required();
  rank->add_option("--mode", rank_mode, "Unfolding mode (1-based)")->capture_default_str();
  rank->add_option("--threshold", rank_threshold, "Cumulative variance share")->capture_default_str();

  // corr
  auto* corr = app.add_subcommand("corr", "Cross-client correlation report");
  std::string corr_t1, corr_t2, corr_out = "corr";
  std::uint32_t corr_r1 = 3, corr_r2 = 3, corr_burn = 50;
  std::uint64_t corr_s1 = 1, corr_s2 = 2;
  std::vector<std::uint32_t> corr_modes;
  corr->add_option("--tensor1", corr_t1, "Client 1 tensor")->required();
  corr->add_option("--tensor2", corr_t2, "Client 2 tensor")->required();
  corr->add_option("--rank1", corr_r1, "Client 1 rank")->required();
  corr->add_option("--rank2", corr_r2, "Client 2 rank")->required();
  corr->add_option("--modes", corr_modes, "Modes to correlate (1-based)")->required();
  corr->add_option("--burn-in", corr_burn, "Uncoupled sweeps before correlating")->capture_default_str();
  corr->add_option("--seed1", corr_s1, "Client 1 seed");
  corr->add_option("--seed2", corr_s2, "Client 2 seed");
  corr->add_option("--out", corr_out, "Output directory")->capture_default_str();

  // fed
  auto* fed = app.add_subcommand("fed", "Federated runs");
  fed->require_subcommand(1);
  auto* fed_run = fed->add_subcommand("run", "In-process two-client run");
  std::string run_config, run_out = "fed_out";
  fed_run->add_option("--config", run_config, "Run config file")->required();
  fed_run->add_option("--out", run_out, "Output directory")->capture_default_str();
  auto* fed_server = fed->add_subcommand("server", "Central server over TCP");
  std::string srv_config, srv_listen, srv_out;
  fed_server->add_option("--config", srv_config, "Run config file")->required();
  fed_server->add_option("--listen", srv_listen, "host:port to bind");
  fed_server->add_option("--out", srv_out, "Output directory for the report");
  auto* fed_client = fed->add_subcommand("client", "Client role over TCP");
  std::string cli_config, cli_connect, cli_out;
  std::uint32_t cli_index = 1;
  fed_client->add_option("--config", cli_config, "Run config file")->required();
  fed_client->add_option("--index", cli_index, "Client index (1 or 2)")->required();
  fed_client->add_option("--connect", cli_connect, "host:port of the server");
  fed_client->add_option("--out", cli_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    const std::string t1 = synth_dir + "/sim1.fcnt";
    const std::string t2 = synth_dir + "/sim2.fcnt";
    const std::string truth = synth_dir + "/truth.json";
    const fcncp_status s =
        fcncp_synth_pair(synth_seed, t1.c_str(), t2.c_str(), truth.c_str());
    if (s != FCNCP_OK) return fail(s);
    std::printf("wrote %s, %s, %s\n", t1.c_str(), t2.c_str(), truth.c_str());
    return 0;
  }

  if (dec->parsed()) {
    TensorHandle t;
    fcncp_status s = fcncp_tensor_read(dec_tensor.c_str(), &t.t);
    if (s != FCNCP_OK) return fail(s);
    fcncp_result* res = nullptr;
    s = fcncp_decompose(t.t, dec_rank, dec_eps, dec_iters, dec_seed, &res);
    if (!res) return fail(s);
    std::printf("fit %.6f after %u sweeps (%s)\n", fcncp_result_fit(res, 0),
                fcncp_result_rounds(res),
                fcncp_result_converged(res, 0) ? "converged" : "not converged");
    if (!dec_out.empty()) {
      const fcncp_status es =
          fcncp_result_export_factors(res, 0, (dec_out + "/factors").c_str());
      char* report = nullptr;
      if (es == FCNCP_OK && fcncp_result_report_json(res, &report) == FCNCP_OK) {
        FILE* f = std::fopen((dec_out + "/report.json").c_str(), "w");
        if (f) {
          std::fputs(report, f);
          std::fputc('\n', f);
          std::fclose(f);
        }
        fcncp_string_free(report);
      }
      if (es != FCNCP_OK) {
        fcncp_result_free(res);
        return fail(es);
      }
    }
    fcncp_result_free(res);
    return exit_code(s);
  }

  if (rank->parsed()) {
    TensorHandle t;
    fcncp_status s = fcncp_tensor_read(rank_tensor.c_str(), &t.t);
    if (s != FCNCP_OK) return fail(s);
    std::uint32_t k = 0;
    s = fcncp_pca_rank(t.t, rank_mode, rank_threshold, &k);
    if (s != FCNCP_OK) return fail(s);
    std::printf("%u\n", k);
    return 0;
  }

  if (corr->parsed()) {
    TensorHandle t1, t2;
    fcncp_status s = fcncp_tensor_read(corr_t1.c_str(), &t1.t);
    if (s != FCNCP_OK) return fail(s);
    s = fcncp_tensor_read(corr_t2.c_str(), &t2.t);
    if (s != FCNCP_OK) return fail(s);
    s = fcncp_corr_report(t1.t, t2.t, corr_r1, corr_r2, corr_burn, corr_s1, corr_s2,
                          corr_modes.data(), static_cast<std::uint32_t>(corr_modes.size()),
                          corr_out.c_str());
    if (s != FCNCP_OK) return fail(s);
    std::printf("wrote correlation report to %s\n", corr_out.c_str());
    return 0;
  }

  if (fed_run->parsed()) {
    fcncp_result* res = nullptr;
    const fcncp_status s = fcncp_fed_run(run_config.c_str(), run_out.c_str(), &res);
    if (res) {
      for (std::uint32_t k = 0; k < fcncp_result_clients(res); ++k)
        std::printf("client %u: fit %.6f (%s)\n", k + 1, fcncp_result_fit(res, k),
                    fcncp_result_converged(res, k) ? "converged" : "not converged");
      std::printf("rounds: %u, report: %s/report.json\n", fcncp_result_rounds(res),
                  run_out.c_str());
      fcncp_result_free(res);
    }
    if (s != FCNCP_OK && !res) return fail(s);
    return exit_code(s);
  }

  if (fed_server->parsed()) {
    const fcncp_status s =
        fcncp_fed_server(srv_config.c_str(), srv_listen.empty() ? nullptr : srv_listen.c_str(),
                         srv_out.empty() ? nullptr : srv_out.c_str());
    if (s != FCNCP_OK) return fail(s);
    std::printf("server run complete\n");
    return 0;
  }

  if (fed_client->parsed()) {
    const fcncp_status s = fcncp_fed_client(
        cli_config.c_str(), cli_index, cli_connect.empty() ? nullptr : cli_connect.c_str(),
        cli_out.empty() ? nullptr : cli_out.c_str());
    if (s != FCNCP_OK) return fail(s);
    std::printf("client %u complete\n", cli_index);
    return 0;
  }

  return 1;
}
