#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "cli.h"
#include "context.h"
#include "specprop/density/checkpoint.h"
#include "specprop/density/likelihood.h"
#include "specprop/latent/analysis.h"
#include "specprop/linalg/oracles.h"
#include "specprop/spectral/estimators.h"
#include "specprop/training/adam.h"

namespace specprop::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Command line as recorded in the manifest: --out dropped, input paths made
// absolute so a replay from another directory finds them.
std::vector<std::string> recorded_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--out") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0) continue;
    bool path_flag = false;
    for (const char* f : {"--config", "--checkpoint"}) {
      const std::string flag = f;
      if (a == flag && i + 1 < args.size()) {
        out.push_back(a);
        out.push_back(fs::absolute(args[++i]).lexically_normal().string());
        path_flag = true;
      } else if (a.rfind(flag + "=", 0) == 0) {
        out.push_back(flag + "=" + fs::absolute(a.substr(flag.size() + 1)).lexically_normal().string());
        path_flag = true;
      }
      if (path_flag) break;
    }
    if (!path_flag) out.push_back(a);
  }
  return out;
}

// Maps an exception to an exit code and message.
int classify(std::exception_ptr ep, std::string& message) {
  try {
    std::rethrow_exception(ep);
  } catch (const NumericalAbort& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const training::NumericalFailure& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const spectral::DegenerateOperator& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const density::SingularJacobian& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const linalg::NotPositiveDefinite& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const latent::DegenerateGenerator& e) {
    message = e.what();
    return kExitNumerical;
  } catch (const density::CheckpointError& e) {
    message = e.what();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    message = e.what();
    return kExitUsage;
  } catch (const std::exception& e) {
    message = e.what();
    return kExitFailure;
  }
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

int replay(const std::string& manifest_path, const std::string& out_override, std::ostream& out,
           std::ostream& err) {
  const json m = read_manifest(manifest_path);
  const fs::path original = fs::path(manifest_path).parent_path();
  const fs::path target = out_override.empty() ? original / "replay" : fs::path(out_override);
  std::vector<std::string> args = m.at("args").get<std::vector<std::string>>();
  args.push_back("--out");
  args.push_back(target.string());

  out << "replaying '" << m.value("subcommand", "") << "' into " << target.string() << '\n';
  const int code = run(args, out, err);
  const int recorded = m.value("exit_code", 0);
  if (code != recorded) {
    err << "replay exited with " << code << ", the recorded run with " << recorded << '\n';
    return code != kExitOk ? code : kExitFailure;
  }
  bool identical = true;
  for (const json& a : m.at("artifacts")) {
    if (!a.value("deterministic", true)) continue;
    const std::string rel = a.at("path").get<std::string>();
    const bool same = same_bytes(original / rel, target / rel);
    identical = identical && same;
    out << (same ? "identical  " : "DIFFERS    ") << rel << '\n';
  }
  out << (identical ? "replay reproduced every data artifact\n" : "replay mismatch\n");
  return identical ? code : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic log-determinant estimation, implicit densities and latent analysis", "specprop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPECPROP_VERSION);

  std::vector<Command> commands;
  register_estimate(app, commands);
  register_train(app, commands);
  register_analyze(app, commands);

  std::vector<std::string> outs(commands.size());
  for (std::size_t i = 0; i < commands.size(); ++i) {
    commands[i].app->add_option("--out", outs[i], "Output directory (default $SPECPROP_OUT_DIR/<command>)");
  }

  std::string manifest_path, replay_out;
  CLI::App* rp = app.add_subcommand("replay", "Re-run a recorded command and compare its data artifacts");
  rp->add_option("manifest", manifest_path, "manifest.json of the run to replay")->required();
  rp->add_option("--out", replay_out, "Directory for the replayed run (default <run>/replay)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (rp->parsed()) {
    try {
      return replay(manifest_path, replay_out, out, err);
    } catch (...) {
      std::string msg;
      const int code = classify(std::current_exception(), msg);
      err << "error: " << msg << '\n';
      return code;
    }
  }

  std::size_t index = commands.size();
  for (std::size_t i = 0; i < commands.size(); ++i)
    if (commands[i].app->parsed()) index = i;
  if (index == commands.size()) {
    err << app.help();
    return kExitUsage;
  }
  const Command& cmd = commands[index];

  RunContext ctx;
  ctx.subcommand = cmd.name;
  ctx.args = recorded_args(args);
  ctx.out_dir = outs[index].empty() ? default_out_dir(cmd.name) : fs::path(outs[index]);
  ctx.out = &out;
  ctx.err = &err;

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  std::string message;
  try {
    code = cmd.run(ctx);
  } catch (...) {
    code = classify(std::current_exception(), message);
    err << "error: " << message << '\n';
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (ctx.write_manifest) {
    try {
      write_manifest(ctx, code == kExitOk ? "ok" : "failed", code, message, started, wall);
    } catch (const std::exception& e) {
      err << "error: cannot write manifest: " << e.what() << '\n';
      if (code == kExitOk) code = kExitFailure;
    }
  }
  return code;
}

}  // namespace specprop::cli
