#include <filesystem>
#include <iomanip>

#include "context.h"
#include "specprop/training/trainer.h"

namespace specprop::cli {

namespace {

struct TrainOptions {
  std::string config_file;
  std::string objective, energy;
  std::size_t epochs = 0, iterations = 0, batch_size = 0;
  std::uint64_t seed = 0;
  double rho = 0.0, learning_rate = 0.0;
  std::vector<std::string> sets;
  bool dry_run = false, dump = false, quiet = false, plot = false;
  std::size_t log_every = 1000;
  // Which numeric flags were given.
  CLI::Option *o_epochs = nullptr, *o_iterations = nullptr, *o_batch = nullptr, *o_seed = nullptr,
              *o_rho = nullptr, *o_lr = nullptr;
};

training::TrainingConfig resolve(const TrainOptions& o) {
  training::ConfigOverrides flags;
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects section.key=value, got '" + s + "'");
    flags[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!o.objective.empty()) flags["run.objective"] = o.objective;
  if (!o.energy.empty()) flags["run.energy"] = o.energy;
  if (o.o_seed->count()) flags["run.seed"] = std::to_string(o.seed);
  if (o.o_epochs->count()) flags["training.epochs"] = std::to_string(o.epochs);
  if (o.o_iterations->count()) flags["training.iterations_per_epoch"] = std::to_string(o.iterations);
  if (o.o_batch->count()) flags["training.batch_size"] = std::to_string(o.batch_size);
  if (o.o_rho->count()) flags["training.rho"] = o.o_rho->as<std::string>();
  if (o.o_lr->count()) flags["optimizer.learning_rate"] = o.o_lr->as<std::string>();

  training::TrainingConfig cfg;
  try {
    cfg = o.config_file.empty() ? training::resolve_config(flags) : training::load_config(o.config_file, flags);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

json epoch_json(const training::EpochSummary& e) {
  return {{"epoch", e.epoch},
          {"mean_loss", number(e.mean_loss)},
          {"mean_relative_error", number(e.mean_relative_error)},
          {"mean_abs_relative_error", number(e.mean_abs_relative_error)},
          {"within_envelope", number(e.within_envelope)},
          {"heldout_nll", number(e.heldout_nll)},
          {"sample_mean_norm", number(e.sample_mean_norm)},
          {"mean_penalty", number(e.mean_penalty)},
          {"mean_lambda_max", number(e.mean_lambda_max)}};
}

int run_train(const TrainOptions& o, RunContext& ctx) {
  if (!o.config_file.empty() && !std::filesystem::exists(o.config_file)) {
    throw UsageError("config file not found: " + o.config_file);
  }
  const training::TrainingConfig cfg = resolve(o);
  if (o.dump) {
    *ctx.out << training::dump_config(cfg);
    ctx.write_manifest = false;
    return kExitOk;
  }
  ctx.seed = cfg.seed;
  for (const auto& [k, v] : training::config_values(cfg)) ctx.config[k] = v;
  ctx.config["dry_run"] = o.dry_run;
  if (o.dry_run) {
    *ctx.out << "config is valid; dry run, nothing trained\n";
    return kExitOk;
  }

  std::ostream& err = *ctx.err;
  training::ProgressFn progress;
  if (!o.quiet && o.log_every > 0) {
    progress = [&err, &o](const training::IterationMetrics& m) {
      if (m.iteration % o.log_every == 0) {
        err << "iter " << m.iteration << "  epoch " << m.epoch << "  loss " << std::setprecision(6) << m.loss
            << "  rel " << m.relative_error << "  lambda_max " << m.lambda_max << '\n';
      }
    };
  }
  std::filesystem::create_directories(ctx.out_dir);
  const training::TrainingResult result = training::train(cfg, ctx.out_dir, progress);
  for (const auto& p : result.artifacts) ctx.record(p);

  json summary = {{"objective", training::objective_name(cfg.objective)},
                  {"energy", cfg.energy},
                  {"aborted", result.aborted},
                  {"abort_reason", result.abort_reason},
                  {"initial_heldout_nll", number(result.initial_heldout_nll)},
                  {"iterations_completed", result.iterations.size()}};
  json epochs = json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back(epoch_json(e));
    *ctx.out << "epoch " << e.epoch << "  mean loss " << e.mean_loss << "  mean rel err " << e.mean_relative_error
             << "  within envelope " << e.within_envelope;
    if (cfg.objective == training::Objective::kForwardKl) *ctx.out << "  heldout nll " << e.heldout_nll;
    *ctx.out << '\n';
  }
  summary["epochs"] = epochs;
  write_json(ctx.artifact("summary.json"), summary);

  if (o.plot) {
    write_plot_script(ctx, "plot_train.py",
                      "m = pd.read_csv(here / 'metrics.csv')\n"
                      "fig, ax = plt.subplots(1, 3, figsize=(14, 4))\n"
                      "ax[0].plot(m.iteration, m.loss, lw=0.3); ax[0].set_title('loss')\n"
                      "ax[1].plot(m.iteration, m.relative_error, lw=0.3); ax[1].set_title('relative error')\n"
                      "last = sorted(here.glob('samples_epoch*.csv'))[-1]\n"
                      "s = pd.read_csv(last)\n"
                      "ax[2].scatter(s.x, s.y, s=1); ax[2].set_title(last.stem); ax[2].set_aspect('equal')\n"
                      "fig.savefig(here / 'train.png', dpi=150)\n");
  }
  if (result.aborted) throw NumericalAbort("training aborted: " + result.abort_reason);
  return kExitOk;
}

}  // namespace

void register_train(CLI::App& root, std::vector<Command>& commands) {
  auto o = std::make_shared<TrainOptions>();
  CLI::App* app = root.add_subcommand("train", "Train a residual flow with the spectral likelihood estimator");
  app->add_option("--config", o->config_file, "Config file ([section] key = value)");
  app->add_option("--objective", o->objective, "reverse-kl or forward-kl");
  app->add_option("--energy", o->energy, "u1, u2, u3, u4, crescent or ring-mixture");
  o->o_epochs = app->add_option("--epochs", o->epochs, "Number of epochs");
  o->o_iterations = app->add_option("--iterations", o->iterations, "Iterations per epoch");
  o->o_batch = app->add_option("--batch-size", o->batch_size, "Batch size");
  o->o_seed = app->add_option("--seed", o->seed, "Run seed");
  o->o_rho = app->add_option("--rho", o->rho, "Spectral-norm penalty weight");
  o->o_lr = app->add_option("--lr", o->learning_rate, "Adam step size");
  app->add_option("--set", o->sets, "Override any config key: section.key=value (repeatable)");
  app->add_flag("--dry-run", o->dry_run, "Validate the config and write the manifest only");
  app->add_flag("--dump-config", o->dump, "Print the resolved config in canonical form and exit");
  app->add_flag("--quiet", o->quiet, "No progress lines on stderr");
  app->add_option("--log-every", o->log_every, "Progress line every N iterations")->capture_default_str();
  app->add_flag("--plot-script", o->plot, "Also write a matplotlib script");
  commands.push_back({"train", app, [o](RunContext& ctx) { return run_train(*o, ctx); }});
}

}  // namespace specprop::cli
