#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hmimo_cli/config.hpp"
#include "hmimo_cli/runner.hpp"

using namespace hmimo;
using namespace hmimo::cli;
namespace fs = std::filesystem;

namespace {

const char* kNearField = R"(scenario: nearfield-gain
nearfield:
  L: 5
  N_x: 11
  R: [2, 5, 20]
)";

const char* kQuasiStatic = R"(scenario: capacity-quasi-static
seed: 3
topology:
  kinds: [planar, volumetric]
  L_x: 2
  L_y: 2
  N_x: [3, 5, 9]
capacity:
  n_realizations: 20
  users: 4
  policies: [traditional, em-physical]
)";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hmimo_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_diag(const ParseResult& r, Diagnostic::Kind kind, const std::string& path) {
  for (const auto& d : r.diagnostics)
    if (d.kind == kind && d.path == path) return true;
  return false;
}

// First non-comment line of a CSV.
std::string csv_header(const std::string& body) {
  std::istringstream is(body);
  std::string line;
  while (std::getline(is, line))
    if (line.empty() || line[0] != '#') return line;
  return "";
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(HMIMO_BIN) + " " + args + " >/dev/null 2>&1";
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

}  // namespace

TEST(ConfigParse, ValidConfigHasNoDiagnostics) {
  for (const char* text : {kNearField, kQuasiStatic}) {
    const auto r = parse_config_text(text);
    EXPECT_TRUE(r.config.has_value());
    EXPECT_TRUE(r.diagnostics.empty()) << (r.diagnostics.empty() ? "" : r.diagnostics[0].str());
  }
}

TEST(ConfigParse, ShippedConfigsValidate) {
  for (const auto& e : fs::directory_iterator(HMIMO_CONFIG_DIR)) {
    const auto r = parse_config_file(e.path().string());
    EXPECT_TRUE(r.config.has_value()) << e.path();
    EXPECT_TRUE(r.diagnostics.empty()) << e.path() << ": "
                                       << (r.diagnostics.empty() ? "" : r.diagnostics[0].str());
  }
}

TEST(ConfigParse, MissingTopologyNamesKey) {
  const auto r = parse_config_text("scenario: gain-sweep\ngain:\n  theta_deg: [0]\n");
  EXPECT_FALSE(r.config.has_value());
  EXPECT_TRUE(has_diag(r, Diagnostic::Kind::Semantic, "topology"));
  EXPECT_FALSE(r.has_parse_error());
  const auto n = parse_config_text("scenario: gain-sweep\ntopology:\n  kinds: [planar]\ngain: {}\n");
  EXPECT_TRUE(has_diag(n, Diagnostic::Kind::Semantic, "topology.N_x"));
}

TEST(ConfigParse, DegenerateSpreadInAveraging) {
  const auto r = parse_config_text(
      "scenario: gain-sweep\ntopology: {kinds: [planar], N_x: [5]}\n"
      "gain: {average: true, spread: {theta0_deg: 0, phi0_deg: 180}}\n");
  EXPECT_FALSE(r.config.has_value());
  EXPECT_TRUE(has_diag(r, Diagnostic::Kind::Semantic, "gain.spread.theta0_deg"));
  // Without averaging the spread is unused, so zero is accepted.
  const auto ok = parse_config_text(
      "scenario: gain-sweep\ntopology: {kinds: [planar], N_x: [5]}\n"
      "gain: {average: false, spread: {theta0_deg: 0, phi0_deg: 180}}\n");
  EXPECT_TRUE(ok.config.has_value());
}

TEST(ConfigParse, UnknownAndMisplacedKeys) {
  const auto r = parse_config_text(std::string(kNearField) + "  wobble: 3\n");
  EXPECT_TRUE(has_diag(r, Diagnostic::Kind::Semantic, "nearfield.wobble"));
  const auto m = parse_config_text(std::string(kNearField) + "topology: {kinds: [planar], N_x: [3]}\n");
  EXPECT_TRUE(has_diag(m, Diagnostic::Kind::Semantic, "topology"));
  const auto s = parse_config_text("scenario: fig-11\n");
  EXPECT_TRUE(has_diag(s, Diagnostic::Kind::Semantic, "scenario"));
}

TEST(ConfigParse, SyntaxErrorIsParseKind) {
  const auto r = parse_config_text("scenario: [gain-sweep\n");
  EXPECT_FALSE(r.config.has_value());
  EXPECT_TRUE(r.has_parse_error());
  const auto t = parse_config_text("scenario: capacity-quasi-static\ntopology: {kinds: [planar], N_x: [x]}\n");
  EXPECT_FALSE(t.config.has_value());
  EXPECT_TRUE(has_diag(t, Diagnostic::Kind::Semantic, "topology.N_x") ||
              has_diag(t, Diagnostic::Kind::Parse, "topology.N_x"));
}

TEST(ConfigParse, SweepForms) {
  const auto r = parse_config_text(
      "scenario: capacity-quasi-static\ntopology: {kinds: [planar], N_x: {from: 3, to: 11, step: 4}}\n");
  ASSERT_TRUE(r.config.has_value());
  EXPECT_EQ(r.config->topology.N_x, (std::vector<int>{3, 7, 11}));
  const auto n = parse_config_text("scenario: nearfield-gain\nnearfield: {R: {from: 2, to: 50, count: 3, spacing: log}}\n");
  ASSERT_TRUE(n.config.has_value());
  ASSERT_EQ(n.config->nearfield.R.size(), 3u);
  EXPECT_NEAR(n.config->nearfield.R[1], 10.0, 1e-12);
  EXPECT_NEAR(n.config->nearfield.R[2], 50.0, 1e-12);
}

TEST(ConfigParse, DefaultsAreResolved) {
  const auto r = parse_config_text("scenario: capacity-ergodic\ntopology: {kinds: [planar], N_x: [5]}\n");
  ASSERT_TRUE(r.config.has_value());
  EXPECT_EQ(r.config->capacity.n_realizations, 2000);
  const json j = resolved_json(*r.config);
  EXPECT_FALSE(j.contains("threads"));
  const std::string dumped = j.dump();
  EXPECT_NE(dumped.find("n_realizations"), std::string::npos);
  EXPECT_NE(dumped.find("snr_dB"), std::string::npos);
}

TEST(Run, NearFieldOutputs) {
  TempDir d;
  const auto c = parse_config_text(kNearField).config.value();
  const auto files = run(c, kNearField, "inline.yaml", d.path);
  const std::string body = slurp(d.path / "nearfield_gain.csv");
  EXPECT_EQ(body.rfind("# hmimo 1.0.0 resolved config:", 0), 0u);
  EXPECT_EQ(csv_header(body),
            "R_lambda,mode,source_pol,field_pol,gain_lin,gain_dB,loss_polarization,loss_illumination,"
            "loss_beamforming");
  const json meta = json::parse(slurp(d.path / "metadata.json"));
  EXPECT_EQ(meta["command"], "nearfield");
  EXPECT_EQ(meta["inputs"]["config_git_blob_sha1"], git_blob_sha1(kNearField));
  for (const auto& o : meta["outputs"]) {
    const std::string f = o["file"];
    EXPECT_EQ(o["git_blob_sha1"], git_blob_sha1(slurp(d.path / f))) << f;
  }
  for (const auto& f : files) EXPECT_TRUE(fs::exists(d.path / f)) << f;
  for (const auto& e : fs::directory_iterator(d.path))
    EXPECT_EQ(e.path().filename().string().rfind(".staging", 0), std::string::npos);
}

TEST(Run, CapacityIsThreadIndependent) {
  TempDir a, b;
  auto c = parse_config_text(kQuasiStatic).config.value();
  c.charts = false;
  run(c, kQuasiStatic, "q.yaml", a.path);
  c.threads = 3;
  run(c, kQuasiStatic, "q.yaml", b.path);
  const std::string x = slurp(a.path / "capacity_quasi_static.csv");
  EXPECT_EQ(x, slurp(b.path / "capacity_quasi_static.csv"));
  EXPECT_EQ(csv_header(x),
            "scenario,topology,policy,N_x,spacing_lambda,R_lambda,snr_dB,capacity_mean,capacity_stderr,seed");
  std::size_t rows = 0;
  std::istringstream is(x);
  for (std::string line; std::getline(is, line);)
    if (!line.empty() && line[0] != '#') ++rows;
  EXPECT_EQ(rows, 1u + 2 * 3 * 2);
}

TEST(Run, GitBlobHashMatchesGit) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(fmt(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(fmt(std::nan("")), "");
}

TEST(Run, StagingRemovedOnFailure) {
  TempDir d;
  {
    StagedOutput s(d.path);
    s.write("partial.csv", "x\n");
  }
  EXPECT_FALSE(fs::exists(d.path));
  fs::create_directories(d.path);
  {
    StagedOutput s(d.path);
    s.write("partial.csv", "x\n");
  }
  EXPECT_TRUE(fs::exists(d.path));
  EXPECT_TRUE(fs::is_empty(d.path));
}

TEST(Binary, ExitCodes) {
  TempDir d;
  fs::create_directories(d.path);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(d.path / name) << body;
    return (d.path / name).string();
  };
  const std::string good = write("nf.yaml", kNearField);
  const std::string bad_yaml = write("bad.yaml", "scenario: [oops\n");
  const std::string semantic = write("sem.yaml", "scenario: gain-sweep\ngain: {}\n");
  const std::string out = (d.path / "out").string();
  EXPECT_EQ(run_binary("nearfield --config " + good + " --validate"), 0);
  EXPECT_EQ(run_binary("nearfield --config " + good + " --out " + out), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "metadata.json"));
  EXPECT_EQ(run_binary("nearfield --config " + bad_yaml), 2);
  EXPECT_EQ(run_binary("nearfield --config " + (d.path / "missing.yaml").string()), 2);
  EXPECT_EQ(run_binary("nearfield --bogus-flag"), 2);
  EXPECT_EQ(run_binary("gain --config " + semantic), 3);
  EXPECT_EQ(run_binary("capacity --config " + good), 3);
}
