#ifndef FCNCP_IO_HPP
#define FCNCP_IO_HPP

#include <string>

#include "fcncp/federation.hpp"
#include "fcncp/selection.hpp"
#include "fcncp/synth.hpp"
#include "fcncp/tcp.hpp"
#include "fcncp/tensor.hpp"

namespace fcncp {

/// Binary tensor container: magic "FCNT", version 0x01, order byte, 8-byte LE
/// dims, row-major 8-byte LE doubles.
void write_tensor(const DenseTensor& t, const std::string& path);
DenseTensor read_tensor(const std::string& path);

/// One CSV per mode (factor_mode_<n+1>.csv), header component_1..R, values
/// with 17 significant digits so doubles round-trip exactly.
void export_factors(const FactorSet& f, const std::string& dir);
FactorSet import_factors(const std::string& dir, std::size_t order);

/// Lossless double formatting used by every CSV writer.
std::string format_double(double v);

/// corr_mode_<n+1>.csv per mode, corr_sum.csv, and heatmap-ready
/// corr_long.csv (row,col,value; 1-based indices).
void export_correlation_report(const CorrelationReport& rep, const std::string& dir);

/// JSON manifest describing a generated pair (dims, shared pairs, clean
/// atoms).
void write_truth_manifest(const SimulationPair& pair, const std::string& path);

/// Flat key-value config with [client k] sections; 1-based modes on disk.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& base_dir);

/// Run report with alphabetically sorted keys; timing lives under "timing"
/// so reproducibility comparisons can drop it.
std::string run_report_json(const RunConfig& config, const RunResult& result);
std::string decompose_report_json(const HalsResult& result, std::size_t rank,
                                  double epsilon, std::uint64_t seed);
std::string server_report_json(const RunConfig& config, const ServerReport& rep);

}  // namespace fcncp

#endif
