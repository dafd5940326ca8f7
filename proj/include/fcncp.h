/* C API for the FCNCP toolkit: coupled nonnegative CP decomposition with an
 * elastic-averaging federated protocol. All objects are opaque handles; every
 * function returns a status code and leaves a thread-local message readable
 * via fcncp_last_error(). */
#ifndef FCNCP_H
#define FCNCP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fcncp_status {
  FCNCP_OK = 0,
  FCNCP_ERR_USAGE = 1,       /* bad arguments / configuration */
  FCNCP_ERR_DATA = 2,        /* malformed files or numeric data */
  FCNCP_ERR_CONVERGENCE = 3, /* run finished without converging */
  FCNCP_ERR_INTERNAL = 4,
} fcncp_status;

/* Message for the most recent failure on this thread. */
const char* fcncp_last_error(void);

/* -- tensors ------------------------------------------------------------- */

typedef struct fcncp_tensor_s fcncp_tensor;

fcncp_status fcncp_tensor_create(uint32_t order, const uint64_t* dims,
                                 const double* values, fcncp_tensor** out);
fcncp_status fcncp_tensor_read(const char* path, fcncp_tensor** out);
fcncp_status fcncp_tensor_write(const fcncp_tensor* t, const char* path);
uint32_t fcncp_tensor_order(const fcncp_tensor* t);
uint64_t fcncp_tensor_dim(const fcncp_tensor* t, uint32_t mode); /* 0-based */
const double* fcncp_tensor_values(const fcncp_tensor* t);
void fcncp_tensor_free(fcncp_tensor* t);

/* -- synthetic data ------------------------------------------------------ */

/* Writes the coupled 61x72x64 simulation pair and its ground-truth manifest. */
fcncp_status fcncp_synth_pair(uint64_t seed, const char* tensor1_path,
                              const char* tensor2_path, const char* truth_json_path);

/* -- single-tensor operations -------------------------------------------- */

/* PCA rank rule on the mode-`mode` unfolding (mode is 1-based). */
fcncp_status fcncp_pca_rank(const fcncp_tensor* t, uint32_t mode, double threshold,
                            uint32_t* out_rank);

typedef struct fcncp_result_s fcncp_result;

/* Uncoupled nonnegative CP (FastHALS). Returns FCNCP_ERR_CONVERGENCE when the
 * iteration cap is hit; the result handle is still produced. */
fcncp_status fcncp_decompose(const fcncp_tensor* t, uint32_t rank, double epsilon,
                             uint32_t max_iters, uint64_t seed, fcncp_result** out);

/* Cross-client correlation report; `modes` are 1-based. Writes per-mode,
 * summed, and long-format CSVs into out_dir. */
fcncp_status fcncp_corr_report(const fcncp_tensor* t1, const fcncp_tensor* t2,
                               uint32_t rank1, uint32_t rank2, uint32_t burn_in,
                               uint64_t seed1, uint64_t seed2, const uint32_t* modes,
                               uint32_t n_modes, const char* out_dir);

/* -- federation ---------------------------------------------------------- */

/* In-process federated run from a config file. Writes report.json and
 * client<k>_factors/ CSVs into out_dir. */
fcncp_status fcncp_fed_run(const char* config_path, const char* out_dir,
                           fcncp_result** out /* may be NULL */);

/* Central server over TCP; blocks until the run completes. listen_addr is
 * "host:port" and overrides the config endpoint when non-NULL. Writes
 * report.json into out_dir when non-NULL. */
fcncp_status fcncp_fed_server(const char* config_path, const char* listen_addr,
                              const char* out_dir);

/* Client role over TCP; client_index is 1 or 2. Writes its factor CSVs and
 * report into out_dir when non-NULL. */
fcncp_status fcncp_fed_client(const char* config_path, uint32_t client_index,
                              const char* connect_addr, const char* out_dir);

/* -- results ------------------------------------------------------------- */

uint32_t fcncp_result_clients(const fcncp_result* r);
uint32_t fcncp_result_rounds(const fcncp_result* r);
int fcncp_result_converged(const fcncp_result* r, uint32_t client);
double fcncp_result_fit(const fcncp_result* r, uint32_t client);
fcncp_status fcncp_result_export_factors(const fcncp_result* r, uint32_t client,
                                         const char* dir);
/* JSON report; free with fcncp_string_free. */
fcncp_status fcncp_result_report_json(const fcncp_result* r, char** out);
void fcncp_string_free(char* s);
void fcncp_result_free(fcncp_result* r);

#ifdef __cplusplus
}
#endif

#endif /* FCNCP_H */
