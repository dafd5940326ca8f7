#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcncp/io.hpp"

using namespace fcncp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fcncp_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(is), {});
}

void spit(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
}

DenseTensor random_tensor(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  DenseTensor t(dims);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (double& v : t.values) v = d(gen);
  return t;
}

FactorSet random_factors(const std::vector<std::size_t>& dims, std::size_t rank,
                         std::uint64_t seed) {
  FactorSet f;
  f.rank = rank;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (std::size_t dim : dims) {
    Matrix m(dim, rank);
    for (double& v : m.values) v = d(gen);
    f.modes.push_back(std::move(m));
  }
  return f;
}

const char* kConfigText =
    "rho = 1.0\n"
    "alpha = 0.5\n"
    "epsilon = 1e-8\n"
    "max_rounds = 500\n"
    "burn_in = 50\n"
    "coupled_modes = 1, 2\n"
    "L = 2 2 0\n"
    "\n"
    "[client 1]\n"
    "tensor = sim1.fcnt\n"
    "rank = 3\n"
    "seed = 11\n"
    "\n"
    "[client 2]\n"
    "tensor = sim2.fcnt\n"
    "rank = 3\n"
    "seed = 12\n";

}  // namespace

TEST_CASE("tensor files round-trip bit-exactly") {
  TempDir dir;
  const DenseTensor t = random_tensor({4, 5, 3, 2}, 1);
  const std::string p1 = dir.file("a.fcnt"), p2 = dir.file("b.fcnt");
  write_tensor(t, p1);
  const DenseTensor back = read_tensor(p1);
  REQUIRE(back.dims == t.dims);
  REQUIRE(back.values == t.values);
  write_tensor(back, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("tensor file header layout is magic, version, order, dims") {
  TempDir dir;
  DenseTensor t({2, 3});
  for (std::size_t i = 0; i < t.values.size(); ++i)
    t.values[i] = static_cast<double>(i);
  const std::string p = dir.file("h.fcnt");
  write_tensor(t, p);
  const auto bytes = slurp(p);
  REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 8 + 6 * 8);
  CHECK(bytes[0] == 'F');
  CHECK(bytes[1] == 'C');
  CHECK(bytes[2] == 'N');
  CHECK(bytes[3] == 'T');
  CHECK(bytes[4] == 0x01);
  CHECK(bytes[5] == 2);
  CHECK(bytes[6] == 2);  // dim 0, LE low byte
  CHECK(bytes[14] == 3);
  for (int k = 7; k < 14; ++k) CHECK(bytes[k] == 0);
}

TEST_CASE("read_tensor rejects bad magic and version") {
  TempDir dir;
  const DenseTensor t = random_tensor({3, 3}, 2);
  const std::string p = dir.file("bad.fcnt");
  write_tensor(t, p);
  auto bytes = slurp(p);
  SUBCASE("magic") {
    bytes[0] = 'X';
    spit(p, bytes);
    CHECK_THROWS_AS(read_tensor(p), Error);
  }
  SUBCASE("version") {
    bytes[4] = 0x02;
    spit(p, bytes);
    CHECK_THROWS_AS(read_tensor(p), Error);
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(0);
    spit(p, bytes);
    CHECK_THROWS_AS(read_tensor(p), Error);
  }
}

TEST_CASE("read_tensor rejects truncation at every offset class") {
  TempDir dir;
  const DenseTensor t = random_tensor({3, 4, 2}, 3);
  const std::string p = dir.file("trunc.fcnt");
  write_tensor(t, p);
  const auto bytes = slurp(p);
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::size_t> cut(0, bytes.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = cut(gen);
    spit(p, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + n));
    CHECK_THROWS_AS(read_tensor(p), Error);
  }
}

TEST_CASE("read_tensor reports a missing file") {
  CHECK_THROWS_AS(read_tensor("/nonexistent/path/x.fcnt"), Error);
}

TEST_CASE("format_double survives a parse round-trip at 17 significant digits") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int trial = 0; trial < 1000; ++trial) {
    const double v = trial == 0 ? 0.1 : d(gen);
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("factor CSV export and import round-trip bit-exactly") {
  TempDir dir;
  const FactorSet f = random_factors({4, 6, 5}, 3, 6);
  export_factors(f, dir.path.string());
  const FactorSet back = import_factors(dir.path.string(), 3);
  REQUIRE(back.rank == f.rank);
  REQUIRE(back.modes.size() == 3);
  for (std::size_t n = 0; n < 3; ++n) {
    REQUIRE(back.modes[n].rows == f.modes[n].rows);
    REQUIRE(back.modes[n].values == f.modes[n].values);
  }
}

TEST_CASE("factor CSV files carry the component header and one row per index") {
  TempDir dir;
  const FactorSet f = random_factors({2, 3}, 2, 7);
  export_factors(f, dir.path.string());
  std::ifstream is(dir.file("factor_mode_1.csv"));
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "component_1,component_2");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("export_factors rejects an empty factor set") {
  TempDir dir;
  CHECK_THROWS_AS(export_factors(FactorSet{}, dir.path.string()), Error);
}

TEST_CASE("correlation report export writes per-mode, summed, and long CSVs") {
  TempDir dir;
  CorrelationReport rep;
  rep.modes = {0, 1};
  Matrix p(2, 2);
  p.values = {0.9, 0.1, 0.2, 0.8};
  rep.per_mode = {p, p};
  rep.summed = Matrix(2, 2);
  for (std::size_t i = 0; i < 4; ++i) rep.summed.values[i] = 2.0 * p.values[i];
  export_correlation_report(rep, dir.path.string());
  CHECK(fs::exists(dir.file("corr_mode_1.csv")));
  CHECK(fs::exists(dir.file("corr_mode_2.csv")));
  CHECK(fs::exists(dir.file("corr_sum.csv")));
  std::ifstream is(dir.file("corr_long.csv"));
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "row,col,value");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);  // summed matrix, one line per entry
  std::getline(std::ifstream(dir.file("corr_long.csv")), line);
  std::ifstream sum(dir.file("corr_sum.csv"));
  REQUIRE(std::getline(sum, line));
  CHECK(line == format_double(1.8) + "," + format_double(0.2));
}

TEST_CASE("config parsing reads global keys and client sections") {
  const RunConfig cfg = parse_config_text(kConfigText, "/data");
  CHECK(cfg.rho == 1.0);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.epsilon == 1e-8);
  CHECK(cfg.max_rounds == 500);
  CHECK(cfg.burn_in == 50);
  CHECK(cfg.coupled_modes == std::vector<std::size_t>({0, 1}));  // 1-based on disk
  CHECK(cfg.L == std::vector<std::size_t>({2, 2, 0}));
  REQUIRE(cfg.clients.size() == 2);
  CHECK(cfg.clients[0].tensor_path == "/data/sim1.fcnt");
  CHECK(cfg.clients[0].rank == 3);
  CHECK(cfg.clients[0].seed == 11);
  CHECK(cfg.clients[1].tensor_path == "/data/sim2.fcnt");
  CHECK(cfg.clients[1].seed == 12);
  CHECK_NOTHROW(cfg.validate(3));
}

TEST_CASE("config file parsing matches text parsing") {
  TempDir dir;
  const std::string p = dir.file("run.cfg");
  {
    std::ofstream os(p);
    os << kConfigText;
  }
  const RunConfig cfg = parse_config_file(p);
  CHECK(cfg.clients[0].tensor_path == (dir.path / "sim1.fcnt").string());
  CHECK(cfg.max_rounds == 500);
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_config_text("nonsense line\n", "."), Error);
  CHECK_THROWS_AS(parse_config_text("bogus_key = 1\nL = 0 0\n", "."), Error);
  CHECK_THROWS_AS(parse_config_text("rho = abc\nL = 0 0\n", "."), Error);
  CHECK_THROWS_AS(parse_config_text("coupled_modes = 0\nL = 1 0\n", "."), Error);
  CHECK_THROWS_AS(parse_config_text("[client 3]\n", "."), Error);
  CHECK_THROWS_AS(parse_config_text("L = 1 0\n[client 1]\nbad = 1\n", "."), Error);
  // Missing L entirely.
  CHECK_THROWS_AS(parse_config_text("rho = 1.0\n", "."), Error);
}

TEST_CASE("config validation rejects alpha*rho above 1 and oversized L") {
  std::string text = kConfigText;
  SUBCASE("alpha*rho") {
    RunConfig cfg = parse_config_text(text, ".");
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(3), Error);
  }
  SUBCASE("L above the smaller rank") {
    RunConfig cfg = parse_config_text(text, ".");
    cfg.clients[1].rank = 1;
    CHECK_THROWS_AS(cfg.validate(3), Error);
  }
}

TEST_CASE("run report JSON parses, sorts keys, and isolates timing") {
  RunConfig cfg = parse_config_text(kConfigText, ".");
  RunResult res;
  res.factors.resize(2);
  res.rel_err = {{0.5, 0.1}, {0.6, 0.2}};
  res.converged = {true, true};
  res.rounds = 2;
  res.locations = {{0, 1}, {1, 0}};
  res.burn_in_seconds = 1.5;
  res.round_seconds = 2.5;
  const std::string s = run_report_json(cfg, res);
  const auto j = nlohmann::json::parse(s);
  REQUIRE(j.contains("clients"));
  REQUIRE(j.contains("timing"));
  CHECK(j["rounds"] == 2);
  CHECK(j["clients"][0]["rel_err"][1] == 0.1);
  CHECK(j["clients"][0]["fit"] == doctest::Approx(0.9));
  CHECK(j["clients"][1]["converged"] == true);
  // Identical results with different timings must differ only under "timing".
  RunResult res2 = res;
  res2.burn_in_seconds = 9.0;
  auto j2 = nlohmann::json::parse(run_report_json(cfg, res2));
  j2["timing"] = j["timing"];
  CHECK(j2 == j);
}

TEST_CASE("decompose report JSON carries the trace and settings") {
  HalsResult res;
  res.trace = {0.5, 0.25, 0.125};
  res.converged = true;
  res.factors.rank = 2;
  const std::string s = decompose_report_json(res, 2, 1e-8, 42);
  const auto j = nlohmann::json::parse(s);
  CHECK(j["rank"] == 2);
  CHECK(j["epsilon"] == 1e-8);
  CHECK(j["seed"] == 42);
  CHECK(j["converged"] == true);
  CHECK(j["rel_err"].size() == 3);
  CHECK(j["fit"] == doctest::Approx(0.875));
}

TEST_CASE("truth manifest records dims, shared pairs, and atoms") {
  TempDir dir;
  const SimulationPair sim = build_simulation_pair(9);
  const std::string p = dir.file("truth.json");
  write_truth_manifest(sim, p);
  std::ifstream is(p);
  const auto j = nlohmann::json::parse(is);
  CHECK(j["dims"][0] == nlohmann::json({61, 72, 64}));
  CHECK(j["dims"][1] == nlohmann::json({61, 72, 64}));
  REQUIRE(j["shared_pairs"].size() == 2);
  CHECK(j["shared_pairs"][0]["component_1"] == 1);  // 1-based on disk
  CHECK(j["shared_pairs"][0]["component_2"] == 1);
  CHECK(j["shared_pairs"][1]["component_1"] == 2);
  CHECK(j["shared_modes"] == nlohmann::json({1, 2}));
  CHECK(j["seed"] == 9);
}
