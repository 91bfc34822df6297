#include "specprop/training/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

#include "specprop/density/checkpoint.h"
#include "specprop/density/likelihood.h"
#include "specprop/io/csv.h"
#include "specprop/training/adam.h"
#include "specprop/training/objectives.h"

namespace specprop::training {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double row_mean(const Matrix& row) {
  double s = 0.0;
  for (double v : row.span()) s += v;
  return s / static_cast<double>(row.size());
}

std::string epoch_file(const char* stem, std::size_t epoch, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_epoch%03zu.%s", stem, epoch, ext);
  return buf;
}

const std::vector<std::string> kMetricsHeader = {
    "iteration", "epoch",          "loss",    "logdet_estimate",  "logdet_exact", "relative_error",
    "abs_relative_error", "lambda_max", "penalty", "bound_violations", "grad_norm"};

const std::vector<std::string> kEpochsHeader = {
    "epoch",          "mean_loss",   "mean_relative_error", "mean_abs_relative_error", "within_envelope",
    "heldout_nll",    "sample_mean_norm", "mean_penalty",   "mean_lambda_max"};

std::vector<std::string> metrics_row(const IterationMetrics& m) {
  using io::format_number;
  return {format_number(m.iteration),     format_number(m.epoch),          format_number(m.loss),
          format_number(m.logdet_estimate), format_number(m.logdet_exact), format_number(m.relative_error),
          format_number(m.abs_relative_error), format_number(m.lambda_max), format_number(m.penalty),
          format_number(m.bound_violations), format_number(m.grad_norm)};
}

std::vector<std::string> epoch_row(const EpochSummary& e) {
  using io::format_number;
  return {format_number(e.epoch),         format_number(e.mean_loss),
          format_number(e.mean_relative_error), format_number(e.mean_abs_relative_error),
          format_number(e.within_envelope),     format_number(e.heldout_nll),
          format_number(e.sample_mean_norm),    format_number(e.mean_penalty),
          format_number(e.mean_lambda_max)};
}

}  // namespace

std::unique_ptr<density::Model> make_flow(const TrainingConfig& cfg) {
  const density::Direction d = cfg.objective == Objective::kReverseKl ? density::Direction::kLatentToData
                                                                      : density::Direction::kDataToLatent;
  auto flow = std::make_unique<density::ResidualFlow>(
      density::ResidualFlow::Shape{2, cfg.hidden, cfg.blocks, cfg.slope}, d);
  linalg::Rng rng = linalg::Rng(cfg.seed, 0).split(0);
  flow->initialize(rng, cfg.init_gain);
  return flow;
}

density::Prior make_prior(const TrainingConfig&) { return density::Prior::spherical_normal(2); }

Matrix grid_points(std::size_t resolution, double half_width) {
  Matrix g(2, resolution * resolution);
  const double step = 2.0 * half_width / static_cast<double>(resolution);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const std::size_t c = iy * resolution + ix;
      g(0, c) = -half_width + (static_cast<double>(ix) + 0.5) * step;
      g(1, c) = -half_width + (static_cast<double>(iy) + 0.5) * step;
    }
  }
  return g;
}

std::vector<double> grid_values(const density::Model& model, const density::Prior& prior, const Energy& energy,
                                const Matrix& grid) {
  if (model.direction() == density::Direction::kDataToLatent) {
    return density::exact_log_likelihoods(model, grid, prior, false);
  }
  std::vector<double> out(grid.cols());
  for (std::size_t c = 0; c < grid.cols(); ++c) out[c] = energy.log_density(grid(0, c), grid(1, c));
  return out;
}

Matrix sample_model(const density::Model& model, const density::Prior& prior, linalg::Rng& rng,
                    std::size_t count, std::size_t resolution, double half_width) {
  if (model.direction() == density::Direction::kLatentToData) {
    return model.evaluate(prior.sample(rng, count));
  }
  const Matrix grid = grid_points(resolution, half_width);
  const std::vector<double> lq = density::exact_log_likelihoods(model, grid, prior, false);
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : lq)
    if (std::isfinite(v)) peak = std::max(peak, v);
  std::vector<double> cdf(lq.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < lq.size(); ++i) {
    acc += std::isfinite(lq[i]) ? std::exp(lq[i] - peak) : 0.0;
    cdf[i] = acc;
  }
  const double step = 2.0 * half_width / static_cast<double>(resolution);
  Matrix out(2, count);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = rng.uniform() * acc;
    std::size_t cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    cell = std::min(cell, cdf.size() - 1);
    out(0, k) = grid(0, cell) + (rng.uniform() - 0.5) * step;
    out(1, k) = grid(1, cell) + (rng.uniform() - 0.5) * step;
  }
  return out;
}

double heldout_nll(const density::Model& model, const density::Prior& prior, const Matrix& x) {
  const std::vector<double> lq = density::exact_log_likelihoods(model, x, prior, false);
  double s = 0.0;
  for (double v : lq) s += v;
  return -s / static_cast<double>(lq.size());
}

TrainingResult train(const TrainingConfig& cfg, const std::filesystem::path& out_dir, const ProgressFn& progress) {
  cfg.validate();
  const Energy energy = Energy::from_name(cfg.energy);
  const density::Prior prior = make_prior(cfg);
  const linalg::Rng root(cfg.seed, 0);
  const bool forward = cfg.objective == Objective::kForwardKl;
  const double envelope = forward ? kForwardKlEnvelope : kReverseKlEnvelope;

  TrainingResult result;
  result.model = make_flow(cfg);
  density::Model& model = *result.model;

  const bool write = !out_dir.empty();
  std::optional<io::CsvWriter> metrics_csv, epochs_csv;
  if (write) {
    std::filesystem::create_directories(out_dir);
    {
      std::ofstream os(out_dir / "config.ini");
      os << dump_config(cfg);
    }
    result.artifacts.push_back(out_dir / "config.ini");
    metrics_csv.emplace(out_dir / "metrics.csv", kMetricsHeader);
    epochs_csv.emplace(out_dir / "epochs.csv", kEpochsHeader);
    result.artifacts.push_back(out_dir / "metrics.csv");
    result.artifacts.push_back(out_dir / "epochs.csv");
  }

  Matrix heldout;
  if (forward) {
    linalg::Rng hr = root.split(2);
    heldout = energy.sample(hr, cfg.heldout_count);
    result.initial_heldout_nll = heldout_nll(model, prior, heldout);
  } else {
    result.initial_heldout_nll = kNaN;
  }

  linalg::Vector theta = model.parameters().flatten();
  AdamState adam(theta.size());
  result.iterations.reserve(cfg.epochs * cfg.iterations_per_epoch);

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !result.aborted; ++epoch) {
    EpochSummary summary;
    summary.epoch = epoch;
    std::size_t monitored = 0, inside = 0;
    for (std::size_t it = 1; it <= cfg.iterations_per_epoch; ++it) {
      const std::size_t global = (epoch - 1) * cfg.iterations_per_epoch + it;
      const linalg::Rng r = root.split(1).split(global);
      linalg::Rng batch_rng = r.split(0);
      const Matrix batch = forward ? energy.sample(batch_rng, cfg.batch_size) : prior.sample(batch_rng, cfg.batch_size);

      IterationMetrics m;
      m.iteration = global;
      m.epoch = epoch;
      linalg::Vector grad;
      try {
        ad::Tape tape;
        const std::vector<Var> params = model.bind(tape);
        LossGraph lg = forward ? forward_kl_loss(model, params, batch, prior, cfg.estimator, cfg.rho, r.split(1),
                                                 cfg.likelihood)
                               : reverse_kl_loss(model, params, energy, batch, prior, cfg.estimator, cfg.rho,
                                                 r.split(1), cfg.likelihood);
        m.loss = lg.loss.scalar();
        m.logdet_estimate = row_mean(lg.likelihood.logdet.logdet.value());
        m.lambda_max = row_mean(lg.likelihood.logdet.lambda_max.value());
        m.penalty = lg.penalty.scalar();
        m.bound_violations = lg.likelihood.logdet.bound_violations;
        if (!std::isfinite(m.loss)) throw NumericalFailure("non-finite loss");
        grad = model.gradient(lg.loss, params);
        m.grad_norm = linalg::norm2(grad.span());

        m.logdet_exact = m.relative_error = m.abs_relative_error = kNaN;
        if ((global - 1) % cfg.monitor_every == 0) {
          const std::vector<double> exact = density::exact_log_likelihoods(model, batch, prior, false);
          const Matrix& est = lg.likelihood.log_q.value();
          const Matrix& lp = lg.likelihood.log_prior.value();
          double rel = 0.0, abs_rel = 0.0, ld = 0.0;
          for (std::size_t b = 0; b < exact.size(); ++b) {
            const double e = density::relative_error(est(0, b), exact[b]);
            rel += e;
            abs_rel += std::abs(e);
            ld += forward ? 2.0 * (exact[b] - lp(0, b)) : 2.0 * (lp(0, b) - exact[b]);
          }
          const double nb = static_cast<double>(exact.size());
          m.relative_error = rel / nb;
          m.abs_relative_error = abs_rel / nb;
          m.logdet_exact = ld / nb;
          ++monitored;
          if (std::abs(m.relative_error) < envelope) ++inside;
        }
        adam_step(adam, theta, grad, cfg.optimizer);
      } catch (const NumericalFailure& e) {
        result.aborted = true;
        result.abort_reason = "iteration " + std::to_string(global) + ": " + e.what();
      } catch (const spectral::DegenerateOperator& e) {
        result.aborted = true;
        result.abort_reason = "iteration " + std::to_string(global) + ": " + e.what();
      }
      if (result.aborted) break;
      model.parameters().unflatten(theta);

      summary.mean_loss += m.loss;
      if (std::isfinite(m.relative_error)) {
        summary.mean_relative_error += m.relative_error;
        summary.mean_abs_relative_error += m.abs_relative_error;
      }
      summary.mean_penalty += m.penalty;
      summary.mean_lambda_max += m.lambda_max;
      result.iterations.push_back(m);
      if (metrics_csv) metrics_csv->row(metrics_row(m));
      if (progress) progress(m);
    }
    if (result.aborted) break;

    const double n = static_cast<double>(cfg.iterations_per_epoch);
    summary.mean_loss /= n;
    summary.mean_penalty /= n;
    summary.mean_lambda_max /= n;
    const double nm = std::max<double>(1.0, static_cast<double>(monitored));
    summary.mean_relative_error /= nm;
    summary.mean_abs_relative_error /= nm;
    summary.within_envelope = monitored ? static_cast<double>(inside) / static_cast<double>(monitored) : kNaN;
    summary.heldout_nll = forward ? heldout_nll(model, prior, heldout) : kNaN;

    linalg::Rng sr = root.split(3).split(epoch);
    const Matrix samples = sample_model(model, prior, sr, cfg.sample_count, cfg.grid_resolution, cfg.grid_half_width);
    double norm_sum = 0.0;
    for (std::size_t c = 0; c < samples.cols(); ++c) norm_sum += std::hypot(samples(0, c), samples(1, c));
    summary.sample_mean_norm = norm_sum / static_cast<double>(samples.cols());
    result.epochs.push_back(summary);

    if (write) {
      epochs_csv->row(epoch_row(summary));
      epochs_csv->flush();
      metrics_csv->flush();

      const std::filesystem::path ckpt = out_dir / epoch_file("checkpoint", epoch, "ckpt");
      density::save_checkpoint(ckpt, model,
                               {{"energy", cfg.energy},
                                {"objective", objective_name(cfg.objective)},
                                {"epoch", std::to_string(epoch)},
                                {"iterations", std::to_string(epoch * cfg.iterations_per_epoch)},
                                {"seed", std::to_string(cfg.seed)}});
      result.artifacts.push_back(ckpt);

      const Matrix grid = grid_points(cfg.grid_resolution, cfg.grid_half_width);
      const std::vector<double> values = grid_values(model, prior, energy, grid);
      const std::filesystem::path grid_path = out_dir / epoch_file("grid", epoch, "csv");
      {
        io::CsvWriter g(grid_path, {"x", "y", forward ? "log_q" : "log_target"});
        for (std::size_t c = 0; c < grid.cols(); ++c) {
          g.row({io::format_number(grid(0, c)), io::format_number(grid(1, c)), io::format_number(values[c])});
        }
      }
      result.artifacts.push_back(grid_path);

      const std::filesystem::path sample_path = out_dir / epoch_file("samples", epoch, "csv");
      {
        io::CsvWriter s(sample_path, {"x", "y"});
        for (std::size_t c = 0; c < samples.cols(); ++c) {
          s.row({io::format_number(samples(0, c)), io::format_number(samples(1, c))});
        }
      }
      result.artifacts.push_back(sample_path);
    }
  }
  return result;
}

}  // namespace specprop::training
