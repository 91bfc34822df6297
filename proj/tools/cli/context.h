#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.h"
#include "specprop/density/model.h"
#include "specprop/density/prior.h"

namespace specprop::cli {

using json = nlohmann::json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a run finished but produced a numerical failure (aborted
// training and the like).
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Artifact {
  std::string path;  // relative to the output directory
  bool deterministic = true;
};

struct RunContext {
  std::string subcommand;          // e.g. "analyze veff"
  std::vector<std::string> args;   // full command line minus --out
  std::filesystem::path out_dir;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<Artifact> artifacts;
  bool write_manifest = true;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  // out_dir / name, creating out_dir and recording the artifact.
  std::filesystem::path artifact(const std::string& name, bool deterministic = true);
  void record(const std::filesystem::path& absolute, bool deterministic = true);
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::function<int(RunContext&)> run;
};

inline constexpr const char* kManifestName = "manifest.json";

void write_manifest(const RunContext& ctx, const std::string& status, int exit_code, const std::string& error,
                    const std::string& started_at, double wall_seconds);
json read_manifest(const std::filesystem::path& path);

// Output directory used when --out is absent: $SPECPROP_OUT_DIR (or
// ./specprop-out) joined with the command name.
std::filesystem::path default_out_dir(const std::string& command);

// "1,2.5,3" -> {1, 2.5, 3}; "0.01x3" expands to three copies.
std::vector<double> parse_list(const std::string& text);
void write_text(const std::filesystem::path& path, const std::string& text);
// Writes json with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
// Non-finite values become null.
json number(double v);

// Model sources shared by the analyze and estimate subcommands.
struct ModelSource {
  std::string checkpoint;
  std::string linear;  // singular values, see parse_list
  std::size_t output_dim = 0;
  std::uint64_t linear_seed = 0;

  void add_options(CLI::App& app);
  std::unique_ptr<density::Model> load() const;
  json snapshot() const;
};

void register_estimate(CLI::App& root, std::vector<Command>& commands);
void register_train(CLI::App& root, std::vector<Command>& commands);
void register_analyze(CLI::App& root, std::vector<Command>& commands);

// Optional matplotlib companion script.
void write_plot_script(RunContext& ctx, const std::string& name, const std::string& body);

}  // namespace specprop::cli
