#include "context.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "specprop/density/checkpoint.h"
#include "specprop/latent/analysis.h"

#ifndef SPECPROP_GIT_REVISION
#define SPECPROP_GIT_REVISION "unknown"
#endif
#ifndef SPECPROP_VERSION
#define SPECPROP_VERSION "0.0.0"
#endif

namespace specprop::cli {

namespace fs = std::filesystem;

fs::path RunContext::artifact(const std::string& name, bool deterministic) {
  fs::create_directories(out_dir);
  artifacts.push_back({name, deterministic});
  return out_dir / name;
}

void RunContext::record(const fs::path& absolute, bool deterministic) {
  artifacts.push_back({fs::relative(absolute, out_dir).generic_string(), deterministic});
}

void write_manifest(const RunContext& ctx, const std::string& status, int exit_code, const std::string& error,
                    const std::string& started_at, double wall_seconds) {
  json m;
  m["format"] = "specprop-manifest";
  m["version"] = 1;
  m["tool_version"] = SPECPROP_VERSION;
  m["git_revision"] = SPECPROP_GIT_REVISION;
  m["subcommand"] = ctx.subcommand;
  m["args"] = ctx.args;
  m["out_dir"] = fs::absolute(ctx.out_dir).lexically_normal().string();
  m["seed"] = ctx.seed;
  m["config"] = ctx.config;
  json arts = json::array();
  for (const Artifact& a : ctx.artifacts) arts.push_back({{"path", a.path}, {"deterministic", a.deterministic}});
  m["artifacts"] = arts;
  m["status"] = status;
  m["exit_code"] = exit_code;
  m["error"] = error;
  m["started_at"] = started_at;
  m["wall_clock_seconds"] = wall_seconds;
  fs::create_directories(ctx.out_dir);
  write_json(ctx.out_dir / kManifestName, m);
}

json read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest '" + path.string() + "'");
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw UsageError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (m.value("format", "") != "specprop-manifest") throw UsageError("'" + path.string() + "' is not a manifest");
  return m;
}

fs::path default_out_dir(const std::string& command) {
  const char* env = std::getenv("SPECPROP_OUT_DIR");
  fs::path base = env && *env ? fs::path(env) : fs::path("specprop-out");
  std::string leaf = command;
  for (char& c : leaf)
    if (c == ' ') c = '-';
  return base / leaf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t repeat = 1;
    if (auto x = item.find('x'); x != std::string::npos) {
      const std::string count = item.substr(x + 1);
      auto res = std::from_chars(count.data(), count.data() + count.size(), repeat);
      if (res.ec != std::errc() || res.ptr != count.data() + count.size() || repeat == 0) {
        throw UsageError("bad repeat count in list item '" + item + "'");
      }
      item = item.substr(0, x);
    }
    double v = 0.0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw UsageError("'" + item + "' is not a number");
    }
    out.insert(out.end(), repeat, v);
  }
  if (out.empty()) throw UsageError("empty list '" + text + "'");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void ModelSource::add_options(CLI::App& app) {
  auto* ck = app.add_option("--checkpoint", checkpoint, "Model checkpoint written by 'train'");
  auto* lin = app.add_option("--linear", linear,
                             "Synthetic linear generator: singular values, e.g. 10,10,0.01x14");
  ck->excludes(lin);
  app.add_option("--output-dim", output_dim, "Output dimension of the linear generator (default: latent dim)");
  app.add_option("--linear-seed", linear_seed, "Seed for the linear generator's orthogonal factors")
      ->capture_default_str();
}

std::unique_ptr<density::Model> ModelSource::load() const {
  if (!checkpoint.empty()) {
    if (!fs::exists(checkpoint)) throw UsageError("checkpoint not found: " + checkpoint);
    return density::load_checkpoint(checkpoint).model;
  }
  if (!linear.empty()) {
    const std::vector<double> sv = parse_list(linear);
    linalg::Rng rng(linear_seed, 0);
    return latent::synthetic_linear_generator(sv, output_dim, rng);
  }
  throw UsageError("a model is required: pass --checkpoint or --linear");
}

json ModelSource::snapshot() const {
  json j;
  if (!checkpoint.empty()) j["checkpoint"] = fs::absolute(checkpoint).lexically_normal().string();
  if (!linear.empty()) {
    j["linear"] = linear;
    j["output_dim"] = output_dim;
    j["linear_seed"] = linear_seed;
  }
  return j;
}

void write_plot_script(RunContext& ctx, const std::string& name, const std::string& body) {
  const std::string header =
      "# Companion plot for a specprop run; needs pandas and matplotlib.\n"
      "import pathlib\n"
      "import pandas as pd\n"
      "import matplotlib.pyplot as plt\n\n"
      "here = pathlib.Path(__file__).parent\n";
  write_text(ctx.artifact(name), header + body);
}

}  // namespace specprop::cli
