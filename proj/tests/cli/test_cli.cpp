#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cli/cli.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using specprop::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("specprop_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

json read_json(const fs::path& p) {
  std::ifstream is(p);
  return json::parse(is);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"estimate", "--no-such-flag"}).code == 2);
  TempDir d;
  CHECK(call({"estimate", "--trials", "0", "--out", d / "e"}).code == 2);
  CHECK(call({"estimate", "--kappa", "0.5", "--out", d / "e"}).code == 2);
  CHECK(call({"analyze", "spectrum", "--checkpoint", d / "missing.ckpt", "--out", d / "a"}).code == 2);
  CHECK(call({"train", "--energy", "u7", "--dry-run", "--out", d / "t"}).code == 2);
  CHECK(call({"train", "--objective", "forward-kl", "--energy", "u1", "--dry-run", "--out", d / "t"}).code == 2);
  CHECK(call({"analyze", "spectrum", "--checkpoint", "x", "--linear", "1,2", "--out", d / "a"}).code == 2);
}

TEST_CASE("help and version exit with 0") {
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"estimate", "--help"}).code == 0);
  const Result v = call({"--version"});
  CHECK(v.code == 0);
}

TEST_CASE("numerical failures exit with 3") {
  TempDir d;
  const Result r = call({"analyze", "veff", "--linear", "0,0", "--out", d / "v"});
  CHECK(r.code == 3);
  const json m = read_json(d.path / "v" / "manifest.json");
  CHECK(m["status"] == "failed");
  CHECK(m["exit_code"] == 3);
}

TEST_CASE("estimate writes its artifacts and a manifest") {
  TempDir d;
  const Result r = call({"estimate", "--dim", "16", "--kappa", "100", "--trials", "5", "--seed", "3", "--out", d / "e"});
  REQUIRE(r.code == 0);
  const fs::path dir = d.path / "e";
  for (const char* f : {"estimate.csv", "timing.csv", "summary.json", "manifest.json"}) CHECK(fs::exists(dir / f));

  const json m = read_json(dir / "manifest.json");
  CHECK(m["format"] == "specprop-manifest");
  CHECK(m["subcommand"] == "estimate");
  CHECK(m["seed"] == 3);
  CHECK(m["status"] == "ok");
  CHECK(m["exit_code"] == 0);
  CHECK(m["config"]["dim"] == 16);
  bool timing_nondeterministic = false;
  for (const auto& a : m["artifacts"])
    if (a["path"] == "timing.csv") timing_nondeterministic = !a["deterministic"].get<bool>();
  CHECK(timing_nondeterministic);

  std::ifstream is(dir / "estimate.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("trial,dim,exact_logdet,chebyshev_estimate,taylor_estimate", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 5);

  const json s = read_json(dir / "summary.json");
  CHECK(s["trials"] == 5);
  CHECK(s["mean_abs_rel_error_chebyshev"].get<double>() < 0.3);
}

TEST_CASE("identity-like ensemble estimates are near zero") {
  TempDir d;
  REQUIRE(call({"estimate", "--dim", "4", "--kappa", "1", "--trials", "5", "--out", d / "e"}).code == 0);
  std::ifstream is(d.path / "e/estimate.csv");
  std::string line;
  std::getline(is, line);
  int rows = 0;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    CHECK(std::abs(std::stod(cells[2])) < 1e-12);  // exact
    CHECK(std::abs(std::stod(cells[3])) < 1e-2);   // chebyshev
    CHECK(std::abs(std::stod(cells[4])) < 1e-2);   // taylor
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("replay reproduces data artifacts and flags changes") {
  TempDir d;
  REQUIRE(call({"estimate", "--dim", "8", "--trials", "3", "--out", d / "e"}).code == 0);
  const Result r = call({"replay", d / "e/manifest.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("replay reproduced every data artifact") != std::string::npos);
  CHECK(slurp(d.path / "e/estimate.csv") == slurp(d.path / "e/replay/estimate.csv"));

  // tamper with a recorded artifact
  {
    std::ofstream os(d.path / "e/estimate.csv", std::ios::app);
    os << "junk\n";
  }
  const Result bad = call({"replay", d / "e/manifest.json", "--out", d / "again"});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("DIFFERS") != std::string::npos);

  // a missing manifest is a bad argument, like a missing checkpoint
  CHECK(call({"replay", d / "nothing/manifest.json"}).code == 2);
}

TEST_CASE("train dry run and config dump") {
  TempDir d;
  const Result dump = call({"train", "--energy", "u3", "--dump-config"});
  CHECK(dump.code == 0);
  CHECK(dump.out.find("rho = 0.08") != std::string::npos);

  {
    std::ofstream os(d.path / "cfg.ini");
    os << dump.out;
  }
  const Result again = call({"train", "--config", d / "cfg.ini", "--dump-config"});
  CHECK(again.out == dump.out);

  const Result flags = call({"train", "--config", d / "cfg.ini", "--epochs", "2", "--set", "training.batch_size=16",
                             "--dump-config"});
  CHECK(flags.out.find("epochs = 2") != std::string::npos);
  CHECK(flags.out.find("batch_size = 16") != std::string::npos);

  const Result dry = call({"train", "--energy", "u1", "--dry-run", "--out", d / "dry"});
  CHECK(dry.code == 0);
  CHECK(fs::exists(d.path / "dry/manifest.json"));
  CHECK_FALSE(fs::exists(d.path / "dry/metrics.csv"));
}

TEST_CASE("small training run replays byte-identically") {
  TempDir d;
  const Result r = call({"train", "--energy", "u2", "--epochs", "1", "--iterations", "4", "--batch-size", "4",
                         "--set", "model.hidden=8", "--set", "model.blocks=2", "--set", "output.grid_resolution=8",
                         "--set", "output.sample_count=32", "--quiet", "--out", d / "t"});
  REQUIRE(r.code == 0);
  for (const char* f : {"metrics.csv", "epochs.csv", "checkpoint_epoch001.ckpt", "summary.json", "manifest.json"})
    CHECK(fs::exists(d.path / "t" / f));
  const Result rep = call({"replay", d / "t/manifest.json"});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("DIFFERS") == std::string::npos);

  // analysis from the checkpoint, then replay that too
  const std::string ck = d / "t/checkpoint_epoch001.ckpt";
  REQUIRE(call({"analyze", "trajectory", "--checkpoint", ck, "--trials", "2", "--steps", "5", "--out", d / "tr"}).code == 0);
  CHECK(fs::exists(d.path / "tr/trajectory_0.csv"));
  CHECK(call({"replay", d / "tr/manifest.json"}).code == 0);
  REQUIRE(call({"analyze", "sweep", "--checkpoint", ck, "--trials", "3", "--out", d / "sw"}).code == 0);
  CHECK(call({"replay", d / "sw/manifest.json"}).code == 0);
  REQUIRE(call({"analyze", "spectrum", "--checkpoint", ck, "--trials", "3", "--out", d / "sp"}).code == 0);
  CHECK(call({"estimate", "--checkpoint", ck, "--trials", "3", "--eps", "1e-3", "--out", d / "es"}).code == 0);
}

TEST_CASE("veff on the synthetic generator") {
  TempDir d;
  const Result r = call({"analyze", "veff", "--linear", "10,10,0.01x14", "--alpha", "1e-3", "--tau", "0.5,1,2",
                         "--out", d / "v"});
  REQUIRE(r.code == 0);
  const json v = read_json(d.path / "v/veff.json");
  CHECK(v.dump().find("v_eff") != std::string::npos);
  CHECK(fs::exists(d.path / "v/delta.csv"));
}

TEST_CASE("default output directory follows SPECPROP_OUT_DIR") {
  TempDir d;
  ::setenv("SPECPROP_OUT_DIR", d.path.c_str(), 1);
  const Result r = call({"estimate", "--dim", "4", "--trials", "1"});
  ::unsetenv("SPECPROP_OUT_DIR");
  CHECK(r.code == 0);
  CHECK(fs::exists(d.path / "estimate" / "manifest.json"));
}
