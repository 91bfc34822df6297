#include "context.h"
#include "specprop/io/csv.h"
#include "specprop/latent/analysis.h"

namespace specprop::cli {

namespace {

struct AnalyzeOptions {
  ModelSource source;
  std::uint64_t seed = 1;
  std::size_t trials = 12;
  bool plot = false;

  // veff / sweep
  double alpha = 0.4;
  std::string taus = "0.25,0.5,1,2";
  std::size_t mc = 256;
  std::string direction = "unit-sphere";
  std::size_t top_k = 0;

  // trajectory
  std::size_t steps = 1000;
  double step_size = 1e-2;
  int m = 5, p = 20, t = 20;
  double g = 1.1, eps = 1e-4;
  std::string metric = "assembled";
  std::string z0;
};

json base_config(const AnalyzeOptions& o) {
  return {{"model", o.source.snapshot()}, {"seed", o.seed}, {"trials", o.trials}};
}

latent::PerturbationConfig perturbation(const AnalyzeOptions& o) {
  latent::PerturbationConfig p;
  p.alpha = o.alpha;
  p.trials = o.trials;
  p.taus = parse_list(o.taus);
  p.mc_samples = o.mc;
  try {
    p.direction = latent::parse_random_direction(o.direction);
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  p.top_k = o.top_k;
  return p;
}

json vec(const linalg::Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

int run_spectrum(const AnalyzeOptions& o, RunContext& ctx) {
  const auto model = o.source.load();
  const auto prior = density::Prior::spherical_normal(model->input_dim());
  ctx.seed = o.seed;
  ctx.config = base_config(o);
  const linalg::Rng rng(o.seed, 0);
  const linalg::Matrix z = latent::trial_points(prior, o.trials, rng);

  const std::size_t n = model->input_dim();
  std::vector<std::string> header = {"trial", "index", "eigenvalue"};
  for (std::size_t d = 0; d < n; ++d) header.push_back("v" + std::to_string(d));
  io::CsvWriter csv(ctx.artifact("spectrum.csv"), header);
  json trials = json::array();
  for (std::size_t j = 0; j < z.cols(); ++j) {
    const latent::Spectrum s = latent::metric_spectrum(*model, z.col(j));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> row = {io::format_number(j), io::format_number(i),
                                      io::format_number(s.eigenvalues[i])};
      for (std::size_t d = 0; d < n; ++d) row.push_back(io::format_number(s.eigenvectors(d, i)));
      csv.row(row);
    }
    trials.push_back({{"trial", j}, {"z", vec(z.col(j))}, {"eigenvalues", vec(s.eigenvalues)}});
  }
  write_json(ctx.artifact("spectrum.json"), {{"trials", trials}});
  *ctx.out << "wrote spectra for " << z.cols() << " trial points\n";
  return kExitOk;
}

int run_trajectory(const AnalyzeOptions& o, RunContext& ctx) {
  const auto model = o.source.load();
  const auto prior = density::Prior::spherical_normal(model->input_dim());
  latent::TrajectoryConfig tc;
  tc.steps = o.steps;
  tc.step_size = o.step_size;
  tc.estimator.order = o.m;
  tc.estimator.probes = o.p;
  tc.estimator.power_iterations = o.t;
  tc.estimator.bound_multiplier = o.g;
  tc.estimator.lower_bound = o.eps;
  if (o.metric == "assembled") tc.likelihood.metric = density::MetricMode::kAssembled;
  else if (o.metric == "matrix-free") tc.likelihood.metric = density::MetricMode::kMatrixFree;
  else throw UsageError("--metric expects assembled or matrix-free");
  try {
    tc.estimator.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  ctx.seed = o.seed;
  ctx.config = base_config(o);
  ctx.config.update({{"steps", o.steps}, {"step_size", o.step_size}, {"order", o.m}, {"probes", o.p},
                     {"power_iterations", o.t}, {"bound_multiplier", o.g}, {"lower_bound", o.eps},
                     {"metric", o.metric}, {"z0", o.z0}});

  const linalg::Rng rng(o.seed, 0);
  linalg::Matrix starts;
  if (!o.z0.empty()) {
    const std::vector<double> z = parse_list(o.z0);
    if (z.size() != model->input_dim()) throw UsageError("--z0 has the wrong dimension");
    starts = linalg::Matrix::column(linalg::Vector(z));
  } else {
    starts = latent::trial_points(prior, o.trials, rng);
  }

  json runs = json::array();
  for (std::size_t j = 0; j < starts.cols(); ++j) {
    const latent::Trajectory tr = latent::ml_trajectory(*model, prior, starts.col(j), tc, rng.split(3).split(j));
    const std::string name = "trajectory_" + std::to_string(j) + ".csv";
    latent::write_trajectory_csv(tr, ctx.artifact(name));
    runs.push_back({{"trial", j},
                    {"file", name},
                    {"steps_completed", tr.points.size() - 1},
                    {"truncated", tr.truncated},
                    {"reason", tr.reason},
                    {"log_ratio_estimate", number(tr.log_ratio_estimate())},
                    {"log_ratio_exact", number(tr.log_ratio_exact())},
                    {"initial_lambda_min", number(tr.points.front().lambda_min)},
                    {"initial_lambda_max", number(tr.points.front().lambda_max)},
                    {"final_lambda_min", number(tr.points.back().lambda_min)},
                    {"final_lambda_max", number(tr.points.back().lambda_max)},
                    {"initial_condition", number(tr.initial_condition())},
                    {"final_condition", number(tr.final_condition())}});
    *ctx.out << "trajectory " << j << "  log(p_final/p_init) " << tr.log_ratio_estimate() << "  condition "
             << tr.initial_condition() << " -> " << tr.final_condition() << (tr.truncated ? "  (truncated)" : "")
             << '\n';
  }
  write_json(ctx.artifact("trajectory.json"), {{"trajectories", runs}});
  if (o.plot) {
    write_plot_script(ctx, "plot_trajectory.py",
                      "for f in sorted(here.glob('trajectory_*.csv')):\n"
                      "    t = pd.read_csv(f)\n"
                      "    plt.plot(t.step, t.log_q_estimate, lw=0.8, label=f.stem)\n"
                      "plt.xlabel('step'); plt.ylabel('ln Q estimate'); plt.legend()\n"
                      "plt.savefig(here / 'trajectory.png', dpi=150)\n");
  }
  return kExitOk;
}

int run_veff(const AnalyzeOptions& o, RunContext& ctx) {
  const auto model = o.source.load();
  const auto prior = density::Prior::spherical_normal(model->input_dim());
  const latent::PerturbationConfig pc = perturbation(o);
  ctx.seed = o.seed;
  ctx.config = base_config(o);
  ctx.config.update({{"alpha", o.alpha}, {"tau", pc.taus}, {"mc_samples", o.mc}, {"direction", o.direction}});

  const linalg::Rng rng(o.seed, 0);
  const latent::SpectrumReport report =
      latent::analyze_spectrum(*model, latent::trial_points(prior, o.trials, rng), pc, rng);
  latent::write_spectrum_csv(report, ctx.artifact("delta.csv"));

  json delta0 = json::array();
  for (const auto& t : report.trials) delta0.push_back({{"trial", t.trial}, {"delta0", t.delta.delta0},
                                                       {"stderr", t.delta.delta0_stderr}});
  write_json(ctx.artifact("veff.json"), {{"alpha", pc.alpha},
                                         {"trials", pc.trials},
                                         {"direction", latent::random_direction_name(pc.direction)},
                                         {"tau", pc.taus},
                                         {"v_eff", report.v_eff},
                                         {"delta0", delta0}});
  for (std::size_t i = 0; i < pc.taus.size(); ++i) {
    *ctx.out << "v_eff(" << pc.taus[i] << ") = " << report.v_eff[i] << '\n';
  }
  if (o.plot) {
    write_plot_script(ctx, "plot_veff.py",
                      "import json\n"
                      "v = json.loads((here / 'veff.json').read_text())\n"
                      "plt.plot(v['tau'], v['v_eff'], 'o-')\n"
                      "plt.xlabel('tau'); plt.ylabel('v_eff'); plt.xscale('log')\n"
                      "plt.savefig(here / 'veff.png', dpi=150)\n");
  }
  return kExitOk;
}

int run_sweep(const AnalyzeOptions& o, RunContext& ctx) {
  const auto model = o.source.load();
  if (model->direction() != density::Direction::kLatentToData) {
    throw UsageError("sweep needs a z-to-x model (reverse-kl checkpoint or --linear)");
  }
  const auto prior = density::Prior::spherical_normal(model->input_dim());
  const latent::PerturbationConfig pc = perturbation(o);
  ctx.seed = o.seed;
  ctx.config = base_config(o);
  ctx.config.update({{"alpha", o.alpha}, {"top_k", o.top_k}});

  const linalg::Rng rng(o.seed, 0);
  const latent::Sweep sweep =
      latent::perturbation_sweep(*model, latent::trial_points(prior, o.trials, rng), pc, rng.split(2));
  latent::write_sweep_csv(sweep, ctx.artifact("sweep.csv"));
  write_json(ctx.artifact("sweep.json"), {{"mean_random_displacement", sweep.mean_random_displacement},
                                          {"mean_top_eigen_displacement", sweep.mean_top_eigen_displacement}});
  *ctx.out << "mean displacement: random " << sweep.mean_random_displacement << "  top eigenvector "
           << sweep.mean_top_eigen_displacement << '\n';
  if (o.plot) {
    write_plot_script(ctx, "plot_sweep.py",
                      "s = pd.read_csv(here / 'sweep.csv')\n"
                      "for kind, g in s.groupby('kind'):\n"
                      "    plt.scatter(g.y0, g.y1, s=6, label=kind)\n"
                      "plt.legend(); plt.gca().set_aspect('equal')\n"
                      "plt.savefig(here / 'sweep.png', dpi=150)\n");
  }
  return kExitOk;
}

}  // namespace

void register_analyze(CLI::App& root, std::vector<Command>& commands) {
  CLI::App* analyze = root.add_subcommand("analyze", "Latent-space analysis of a trained or synthetic model");
  analyze->require_subcommand(1);

  auto add_common = [](CLI::App* app, AnalyzeOptions& o) {
    o.source.add_options(*app);
    app->add_option("--seed", o.seed, "Run seed")->capture_default_str();
    app->add_option("--trials", o.trials, "Number of trial latent points")->capture_default_str();
    app->add_flag("--plot-script", o.plot, "Also write a matplotlib script");
  };
  auto add_perturbation = [](CLI::App* app, AnalyzeOptions& o) {
    app->add_option("--alpha", o.alpha, "Perturbation step size")->capture_default_str();
    app->add_option("--mc", o.mc, "Monte Carlo draws for delta(j, 0)")->capture_default_str();
    app->add_option("--direction", o.direction, "Random direction: unit-sphere or gaussian")
        ->capture_default_str();
  };

  {
    auto o = std::make_shared<AnalyzeOptions>();
    CLI::App* app = analyze->add_subcommand("spectrum", "Eigen-decomposition of the metric at trial points");
    add_common(app, *o);
    commands.push_back({"analyze spectrum", app, [o](RunContext& ctx) { return run_spectrum(*o, ctx); }});
  }
  {
    auto o = std::make_shared<AnalyzeOptions>();
    o->trials = 4;
    CLI::App* app = analyze->add_subcommand("trajectory", "Maximum-likelihood latent trajectories");
    add_common(app, *o);
    app->add_option("--steps", o->steps, "Ascent steps")->capture_default_str();
    app->add_option("--step-size", o->step_size, "Fixed ascent step")->capture_default_str();
    app->add_option("--m", o->m, "Chebyshev order")->capture_default_str();
    app->add_option("--p", o->p, "Probe vectors")->capture_default_str();
    app->add_option("--t", o->t, "Power iterations")->capture_default_str();
    app->add_option("--g", o->g, "Upper-bound multiplier")->capture_default_str();
    app->add_option("--eps", o->eps, "Lower bound")->capture_default_str();
    app->add_option("--metric", o->metric, "assembled or matrix-free")->capture_default_str();
    app->add_option("--z0", o->z0, "Single start point, comma separated (default: --trials prior draws)");
    commands.push_back({"analyze trajectory", app, [o](RunContext& ctx) { return run_trajectory(*o, ctx); }});
  }
  {
    auto o = std::make_shared<AnalyzeOptions>();
    CLI::App* app = analyze->add_subcommand("veff", "Eigenvector perturbation ratios and v_eff(tau)");
    add_common(app, *o);
    add_perturbation(app, *o);
    app->add_option("--tau", o->taus, "Comma-separated thresholds")->capture_default_str();
    commands.push_back({"analyze veff", app, [o](RunContext& ctx) { return run_veff(*o, ctx); }});
  }
  {
    auto o = std::make_shared<AnalyzeOptions>();
    CLI::App* app = analyze->add_subcommand("sweep", "Outputs under random and eigenvector perturbations");
    add_common(app, *o);
    app->add_option("--alpha", o->alpha, "Perturbation step size")->capture_default_str();
    app->add_option("--top-k", o->top_k, "Eigenvectors to perturb (0 = all)")->capture_default_str();
    commands.push_back({"analyze sweep", app, [o](RunContext& ctx) { return run_sweep(*o, ctx); }});
  }
}

}  // namespace specprop::cli
