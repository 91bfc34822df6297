#include <chrono>
#include <cmath>

#include "context.h"
#include "specprop/density/metric.h"
#include "specprop/io/csv.h"
#include "specprop/linalg/oracles.h"
#include "specprop/spectral/estimators.h"
#include "specprop/spectral/linear_operator.h"

namespace specprop::cli {

namespace {

struct EstimateOptions {
  std::size_t dim = 64;
  double kappa = 1000.0;
  double lambda_min = 1.0;
  std::size_t trials = 100;
  std::uint64_t seed = 7;
  int m = 10, p = 20, t = 20;
  double g = 1.2;
  double eps_scale = 0.1;
  double eps = 0.0;
  bool detach_bounds = false;
  bool plot = false;
  ModelSource source;
};

double relative(double estimate, double exact) { return std::abs(estimate - exact) / std::abs(exact); }

int run_estimate(const EstimateOptions& o, RunContext& ctx) {
  if (o.trials == 0) throw UsageError("--trials must be positive");
  const bool from_model = !o.source.checkpoint.empty() || !o.source.linear.empty();
  if (!from_model && (o.dim == 0 || !(o.kappa >= 1.0) || !(o.lambda_min > 0.0))) {
    throw UsageError("need --dim > 0, --kappa >= 1 and --lambda-min > 0");
  }
  std::unique_ptr<density::Model> model;
  density::Prior prior = density::Prior::spherical_normal(1);
  if (from_model) {
    model = o.source.load();
    prior = density::Prior::spherical_normal(model->input_dim());
  }

  ctx.seed = o.seed;
  ctx.config = {{"dim", from_model ? model->input_dim() : o.dim},
                {"kappa", from_model ? json(nullptr) : json(o.kappa)},
                {"lambda_min", from_model ? json(nullptr) : json(o.lambda_min)},
                {"trials", o.trials},
                {"seed", o.seed},
                {"order", o.m},
                {"probes", o.p},
                {"power_iterations", o.t},
                {"bound_multiplier", o.g},
                {"eps_scale", o.eps_scale},
                {"eps", o.eps},
                {"detach_bounds", o.detach_bounds},
                {"model", o.source.snapshot()}};

  io::CsvWriter csv(ctx.artifact("estimate.csv"),
                    {"trial", "dim", "exact_logdet", "chebyshev_estimate", "taylor_estimate",
                     "chebyshev_rel_error", "taylor_rel_error", "chebyshev_abs_error", "taylor_abs_error",
                     "lambda_max_estimate", "lambda_max_exact", "lower_bound", "bound_violations"});
  io::CsvWriter timing(ctx.artifact("timing.csv", false), {"trial", "chebyshev_seconds", "taylor_seconds"});

  const linalg::Rng root(o.seed, 0);
  double sum_cheb = 0.0, sum_taylor = 0.0;
  std::size_t below = 0;
  for (std::size_t trial = 0; trial < o.trials; ++trial) {
    const linalg::Rng r = root.split(trial);
    linalg::Rng source_rng = r.split(0);
    linalg::Matrix a;
    if (from_model) {
      a = density::explicit_metric(*model, prior.sample(source_rng, 1).col(0));
    } else {
      a = linalg::random_spd(source_rng, o.dim, o.kappa, o.lambda_min).matrix;
    }
    const linalg::SymmetricEigen eig = linalg::sym_eig(a);
    const double lmin = eig.eigenvalues[eig.eigenvalues.size() - 1];
    const double exact = linalg::cholesky_logdet(a);

    spectral::EstimatorConfig cfg;
    cfg.order = o.m;
    cfg.probes = o.p;
    cfg.power_iterations = o.t;
    cfg.bound_multiplier = o.g;
    cfg.lower_bound = o.eps > 0.0 ? o.eps : o.eps_scale * lmin;
    cfg.detach_bounds = o.detach_bounds;

    ad::Tape tape;
    spectral::DenseOperator op(tape, a);
    const auto t0 = std::chrono::steady_clock::now();
    const spectral::LogDetEstimate cheb = spectral::stochastic_logdet_chebyshev(op, cfg, r.split(1));
    const auto t1 = std::chrono::steady_clock::now();
    const spectral::LogDetEstimate tay = spectral::stochastic_logdet_taylor(op, cfg, r.split(2));
    const auto t2 = std::chrono::steady_clock::now();

    const double ec = cheb.logdet.scalar(), et = tay.logdet.scalar();
    if (!std::isfinite(ec) || !std::isfinite(et)) {
      throw NumericalAbort("non-finite estimate in trial " + std::to_string(trial));
    }
    const double rc = relative(ec, exact), rt = relative(et, exact);
    sum_cheb += rc;
    sum_taylor += rt;
    if (rc < 0.30) ++below;
    using io::format_number;
    csv.row({format_number(trial), format_number(a.rows()), format_number(exact), format_number(ec),
             format_number(et), format_number(rc), format_number(rt), format_number(std::abs(ec - exact)),
             format_number(std::abs(et - exact)), format_number(cheb.lambda_max.scalar()),
             format_number(eig.eigenvalues[0]), format_number(cfg.lower_bound),
             format_number(cheb.bound_violations)});
    timing.row({format_number(trial), format_number(std::chrono::duration<double>(t1 - t0).count()),
                format_number(std::chrono::duration<double>(t2 - t1).count())});
  }

  const double n = static_cast<double>(o.trials);
  const json summary = {{"trials", o.trials},
                        {"mean_abs_rel_error_chebyshev", sum_cheb / n},
                        {"mean_abs_rel_error_taylor", sum_taylor / n},
                        {"fraction_chebyshev_below_0.30", static_cast<double>(below) / n}};
  write_json(ctx.artifact("summary.json"), summary);
  *ctx.out << "trials " << o.trials << "  mean |rel err| chebyshev " << sum_cheb / n << "  taylor "
           << sum_taylor / n << "  (" << below << "/" << o.trials << " chebyshev runs below 0.30)\n";

  if (o.plot) {
    write_plot_script(ctx, "plot_estimate.py",
                      "df = pd.read_csv(here / 'estimate.csv')\n"
                      "plt.plot(df.trial, df.chebyshev_rel_error, '.', label='chebyshev')\n"
                      "plt.plot(df.trial, df.taylor_rel_error, '.', label='taylor')\n"
                      "plt.axhline(0.3, color='k', lw=0.5)\n"
                      "plt.yscale('log'); plt.xlabel('trial'); plt.ylabel('|relative error|'); plt.legend()\n"
                      "plt.savefig(here / 'estimate.png', dpi=150)\n");
  }
  return kExitOk;
}

}  // namespace

void register_estimate(CLI::App& root, std::vector<Command>& commands) {
  auto o = std::make_shared<EstimateOptions>();
  CLI::App* app = root.add_subcommand("estimate", "Compare stochastic log-det estimates against exact values");
  app->add_option("--dim", o->dim, "Matrix size for the synthetic ensemble")->capture_default_str();
  app->add_option("--kappa", o->kappa, "Condition number of the synthetic ensemble")->capture_default_str();
  app->add_option("--lambda-min", o->lambda_min, "Smallest eigenvalue of the synthetic ensemble")
      ->capture_default_str();
  app->add_option("--trials", o->trials, "Number of matrices")->capture_default_str();
  app->add_option("--seed", o->seed, "Run seed")->capture_default_str();
  app->add_option("--m", o->m, "Chebyshev order / Taylor terms")->capture_default_str();
  app->add_option("--p", o->p, "Probe vectors")->capture_default_str();
  app->add_option("--t", o->t, "Power iterations")->capture_default_str();
  app->add_option("--g", o->g, "Upper-bound multiplier")->capture_default_str();
  app->add_option("--eps-scale", o->eps_scale, "Lower bound as a multiple of the exact lambda_min")
      ->capture_default_str();
  app->add_option("--eps", o->eps, "Absolute lower bound (overrides --eps-scale when > 0)");
  app->add_flag("--detach-bounds", o->detach_bounds, "Treat the spectral bounds as constants");
  app->add_flag("--plot-script", o->plot, "Also write a matplotlib script");
  o->source.add_options(*app);
  commands.push_back({"estimate", app, [o](RunContext& ctx) { return run_estimate(*o, ctx); }});
}

}  // namespace specprop::cli
