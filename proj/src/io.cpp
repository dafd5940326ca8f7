#include "fcncp/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fcncp {

namespace {

using json = nlohmann::json;

[[noreturn]] void io_fail(const std::string& what) {
  throw Error(ErrorCode::io, what);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw Error(ErrorCode::data, "tensor file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double bits_to_double(std::uint64_t v) {
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

std::uint64_t double_to_bits(double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  return v;
}

}  // namespace

void write_tensor(const DenseTensor& t, const std::string& path) {
  t.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) io_fail("cannot open for writing: " + path);
  os.write("FCNT", 4);
  os.put('\x01');
  os.put(static_cast<char>(t.order()));
  for (std::size_t d : t.dims) put_u64(os, d);
  for (double v : t.values) put_u64(os, double_to_bits(v));
  if (!os) io_fail("write failed: " + path);
}

DenseTensor read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) io_fail("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FCNT", 4) != 0)
    throw Error(ErrorCode::data, "bad magic: not an FCNT tensor file");
  const int version = is.get();
  if (version != 0x01)
    throw Error(ErrorCode::data, "unsupported tensor file version");
  const int order = is.get();
  if (order < 2 || order > 32)
    throw Error(ErrorCode::data, "tensor file order out of range");
  DenseTensor t;
  t.dims.resize(order);
  std::size_t n = 1;
  for (int i = 0; i < order; ++i) {
    const std::uint64_t d = get_u64(is);
    if (d == 0 || d > (1ull << 32)) throw Error(ErrorCode::data, "bad tensor extent");
    t.dims[i] = static_cast<std::size_t>(d);
    n *= t.dims[i];
  }
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.values[i] = bits_to_double(get_u64(is));
  // declared length must match the payload exactly
  is.peek();
  if (!is.eof()) throw Error(ErrorCode::data, "trailing bytes in tensor file");
  t.validate();
  return t;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void export_factors(const FactorSet& f, const std::string& dir) {
  if (f.rank == 0)
    throw Error(ErrorCode::invalid_argument, "cannot export an empty factor set");
  std::filesystem::create_directories(dir);
  for (std::size_t n = 0; n < f.order(); ++n) {
    const std::string path = dir + "/factor_mode_" + std::to_string(n + 1) + ".csv";
    std::ofstream os(path);
    if (!os) io_fail("cannot open for writing: " + path);
    for (std::size_t r = 0; r < f.rank; ++r)
      os << (r ? "," : "") << "component_" << (r + 1);
    os << "\n";
    const Matrix& m = f.modes[n];
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t r = 0; r < f.rank; ++r)
        os << (r ? "," : "") << format_double(m.at(i, r));
      os << "\n";
    }
    if (!os) io_fail("write failed: " + path);
  }
}

FactorSet import_factors(const std::string& dir, std::size_t order) {
  FactorSet f;
  for (std::size_t n = 0; n < order; ++n) {
    const std::string path = dir + "/factor_mode_" + std::to_string(n + 1) + ".csv";
    std::ifstream is(path);
    if (!is) io_fail("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::data, "empty factor CSV");
    std::size_t cols = 1;
    for (char c : line) cols += c == ',';
    std::vector<double> vals;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t got = 0;
      while (std::getline(ss, cell, ',')) {
        vals.push_back(std::strtod(cell.c_str(), nullptr));
        ++got;
      }
      if (got != cols) throw Error(ErrorCode::data, "ragged factor CSV row");
      ++rows;
    }
    Matrix m(rows, cols);
    m.values = std::move(vals);
    f.modes.push_back(std::move(m));
    f.rank = cols;
  }
  return f;
}

void export_correlation_report(const CorrelationReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write_matrix = [](const Matrix& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) io_fail("cannot open for writing: " + path);
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t j = 0; j < m.cols; ++j)
        os << (j ? "," : "") << format_double(m.at(i, j));
      os << "\n";
    }
  };
  for (std::size_t k = 0; k < rep.per_mode.size(); ++k)
    write_matrix(rep.per_mode[k],
                 dir + "/corr_mode_" + std::to_string(rep.modes[k] + 1) + ".csv");
  write_matrix(rep.summed, dir + "/corr_sum.csv");
  std::ofstream os(dir + "/corr_long.csv");
  if (!os) io_fail("cannot open for writing: " + dir + "/corr_long.csv");
  os << "row,col,value\n";
  for (std::size_t i = 0; i < rep.summed.rows; ++i)
    for (std::size_t j = 0; j < rep.summed.cols; ++j)
      os << (i + 1) << "," << (j + 1) << "," << format_double(rep.summed.at(i, j))
         << "\n";
}

void write_truth_manifest(const SimulationPair& pair, const std::string& path) {
  json j;
  j["seed"] = pair.truth.seed;
  j["dims"] = {json(pair.tensor1.dims), json(pair.tensor2.dims)};
  json pairs = json::array();
  for (const auto& [a, b] : pair.truth.shared_pairs)
    pairs.push_back({{"component_1", a + 1}, {"component_2", b + 1}});
  j["shared_pairs"] = pairs;
  json modes = json::array();
  for (std::size_t m : pair.truth.shared_modes) modes.push_back(m + 1);
  j["shared_modes"] = modes;
  j["atoms_clean"] = pair.truth.atoms_clean;
  j["atoms"] = pair.truth.atoms;
  std::ofstream os(path);
  if (!os) io_fail("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::size_t> parse_index_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::string spaced = s;
  for (char& c : spaced)
    if (c == ',') c = ' ';
  std::stringstream ss(spaced);
  std::string cell;
  while (ss >> cell) {
    char* end = nullptr;
    const long v = std::strtol(cell.c_str(), &end, 10);
    if (end == cell.c_str() || v < 0)
      throw Error(ErrorCode::invalid_argument, "bad integer list in config: " + s);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

double parse_num(const std::string& key, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw Error(ErrorCode::invalid_argument, "bad numeric value for " + key);
  return v;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  cfg.clients.resize(2);
  bool have_L = false;
  bool have_modes = false;
  int section = -1;  // -1 global, 0/1 client
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[client 1]")
        section = 0;
      else if (line == "[client 2]")
        section = 1;
      else
        throw Error(ErrorCode::invalid_argument, "unknown config section: " + line);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::invalid_argument, "config line is not key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section < 0) {
      if (key == "rho")
        cfg.rho = parse_num(key, val);
      else if (key == "alpha")
        cfg.alpha = parse_num(key, val);
      else if (key == "epsilon")
        cfg.epsilon = parse_num(key, val);
      else if (key == "max_rounds")
        cfg.max_rounds = static_cast<std::size_t>(parse_num(key, val));
      else if (key == "burn_in")
        cfg.burn_in = static_cast<std::size_t>(parse_num(key, val));
      else if (key == "compressed")
        cfg.compressed = val == "1" || val == "true";
      else if (key == "transport")
        cfg.transport = val;
      else if (key == "endpoint")
        cfg.endpoint = val;
      else if (key == "coupled_modes") {
        have_modes = true;
        cfg.coupled_modes.clear();
        for (std::size_t m : parse_index_list(val)) {
          if (m < 1)
            throw Error(ErrorCode::invalid_argument, "coupled modes are 1-based");
          cfg.coupled_modes.push_back(m - 1);
        }
      } else if (key == "L") {
        have_L = true;
        cfg.L = parse_index_list(val);
      } else {
        throw Error(ErrorCode::invalid_argument, "unknown config key: " + key);
      }
    } else {
      ClientRunConfig& c = cfg.clients[section];
      if (key == "tensor") {
        std::filesystem::path p(val);
        c.tensor_path =
            p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
      } else if (key == "rank")
        c.rank = static_cast<std::size_t>(parse_num(key, val));
      else if (key == "seed")
        c.seed = static_cast<std::uint64_t>(parse_num(key, val));
      else
        throw Error(ErrorCode::invalid_argument, "unknown client config key: " + key);
    }
  }
  if (!have_L)
    throw Error(ErrorCode::invalid_argument, "config is missing L (per-mode coupled counts)");
  if (!have_modes) {
    for (std::size_t n = 0; n < cfg.L.size(); ++n)
      if (cfg.L[n] > 0) cfg.coupled_modes.push_back(n);
  }
  for (const ClientRunConfig& c : cfg.clients)
    if (c.tensor_path.empty())
      throw Error(ErrorCode::invalid_argument,
                  "both [client 1] and [client 2] need a tensor path");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) io_fail("cannot open config: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(),
                           std::filesystem::path(path).parent_path().string());
}

namespace {

json config_json(const RunConfig& config) {
  json j;
  j["rho"] = config.rho;
  j["alpha"] = config.alpha;
  j["epsilon"] = config.epsilon;
  j["max_rounds"] = config.max_rounds;
  j["burn_in"] = config.burn_in;
  j["compressed"] = config.compressed;
  j["transport"] = config.transport;
  json modes = json::array();
  for (std::size_t m : config.coupled_modes) modes.push_back(m + 1);
  j["coupled_modes"] = modes;
  j["L"] = config.L;
  json clients = json::array();
  for (const ClientRunConfig& c : config.clients)
    clients.push_back({{"tensor", c.tensor_path}, {"rank", c.rank}, {"seed", c.seed}});
  j["clients"] = clients;
  return j;
}

json locations_json(const std::vector<std::size_t>& locations) {
  json out = json::array();
  for (std::size_t v : locations) out.push_back(v + 1);
  return out;
}

}  // namespace

std::string run_report_json(const RunConfig& config, const RunResult& result) {
  json j;
  j["config"] = config_json(config);
  j["rounds"] = result.rounds;
  json clients = json::array();
  for (std::size_t k = 0; k < result.rel_err.size(); ++k) {
    json c;
    c["rel_err"] = result.rel_err[k];
    c["fit"] =
        result.rel_err[k].empty() ? json() : json(1.0 - result.rel_err[k].back());
    c["converged"] = static_cast<bool>(result.converged[k]);
    c["locations"] = locations_json(result.locations[k]);
    clients.push_back(c);
  }
  j["clients"] = clients;
  j["timing"] = {{"burn_in_seconds", result.burn_in_seconds},
                 {"round_seconds", result.round_seconds}};
  return j.dump(2);
}

std::string decompose_report_json(const HalsResult& result, std::size_t rank,
                                  double epsilon, std::uint64_t seed) {
  json j;
  j["rank"] = rank;
  j["epsilon"] = epsilon;
  j["seed"] = seed;
  j["rel_err"] = result.trace;
  j["fit"] = result.trace.empty() ? json() : json(1.0 - result.trace.back());
  j["converged"] = result.converged;
  j["iterations"] = result.trace.size();
  return j.dump(2);
}

std::string server_report_json(const RunConfig& config, const ServerReport& rep) {
  json j;
  j["config"] = config_json(config);
  j["rounds"] = rep.rounds;
  j["aborted"] = rep.aborted;
  if (rep.aborted) j["error"] = rep.error;
  json clients = json::array();
  for (std::size_t k = 0; k < rep.rel_err.size(); ++k) {
    json c;
    c["rel_err"] = rep.rel_err[k];
    c["fit"] = rep.rel_err[k].empty() ? json() : json(1.0 - rep.rel_err[k].back());
    c["converged"] = static_cast<bool>(rep.converged[k]);
    c["locations"] = locations_json(rep.locations[k]);
    clients.push_back(c);
  }
  j["clients"] = clients;
  return j.dump(2);
}

}  // namespace fcncp
