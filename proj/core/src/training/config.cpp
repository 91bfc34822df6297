#include "specprop/training/config.h"

#include <charconv>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace specprop::training {

std::string objective_name(Objective o) { return o == Objective::kReverseKl ? "reverse-kl" : "forward-kl"; }

Objective parse_objective(const std::string& s) {
  if (s == "reverse-kl") return Objective::kReverseKl;
  if (s == "forward-kl") return Objective::kForwardKl;
  throw std::invalid_argument("unknown objective '" + s + "' (expected reverse-kl or forward-kl)");
}

TrainingConfig TrainingConfig::defaults_for(Objective objective, const std::string& energy) {
  TrainingConfig cfg;
  cfg.objective = objective;
  cfg.energy = energy;
  cfg.estimator.order = 10;
  cfg.estimator.probes = 20;
  cfg.estimator.power_iterations = 20;
  cfg.estimator.bound_multiplier = 1.2;
  cfg.estimator.lower_bound = objective == Objective::kReverseKl ? 0.1 : 1e-2;
  cfg.rho = (objective == Objective::kReverseKl && (energy == "u3" || energy == "u4")) ? 8e-2 : 0.0;
  return cfg;
}

void TrainingConfig::validate() const {
  std::ostringstream os;
  try {
    estimator.validate();
  } catch (const std::invalid_argument& e) {
    os << e.what() << "; ";
  }
  if (hidden == 0) os << "model.hidden must be positive; ";
  if (blocks == 0) os << "model.blocks must be positive; ";
  if (!(init_gain >= 0.0)) os << "model.init_gain must be >= 0; ";
  if (batch_size == 0) os << "training.batch_size must be positive; ";
  if (iterations_per_epoch == 0) os << "training.iterations_per_epoch must be positive; ";
  if (epochs == 0) os << "training.epochs must be positive; ";
  if (!(rho >= 0.0)) os << "training.rho must be >= 0; ";
  if (monitor_every == 0) os << "training.monitor_every must be positive; ";
  if (!(optimizer.learning_rate > 0.0)) os << "optimizer.learning_rate must be positive; ";
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) os << "optimizer.beta1 must lie in [0, 1); ";
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) os << "optimizer.beta2 must lie in [0, 1); ";
  if (!(optimizer.epsilon > 0.0)) os << "optimizer.epsilon must be positive; ";
  if (grid_resolution < 2) os << "output.grid_resolution must be >= 2; ";
  if (!(grid_half_width > 0.0)) os << "output.grid_half_width must be positive; ";
  if (sample_count == 0) os << "output.sample_count must be positive; ";
  if (heldout_count == 0) os << "output.heldout_count must be positive; ";
  const bool known = energy == "u1" || energy == "u2" || energy == "u3" || energy == "u4" ||
                     energy == "crescent" || energy == "ring-mixture";
  if (!known) os << "run.energy '" << energy << "' is unknown; ";
  if (objective == Objective::kForwardKl && known && energy != "crescent" && energy != "ring-mixture") {
    os << "forward-kl needs a sampleable energy (crescent or ring-mixture); ";
  }
  std::string msg = os.str();
  if (!msg.empty()) throw std::invalid_argument("invalid training config: " + msg.substr(0, msg.size() - 2));
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + s + "' is not a number");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + s + "' is not a non-negative integer");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config key '" + key + "': '" + s + "' is not a boolean");
}

struct Field {
  const char* key;
  std::function<void(TrainingConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainingConfig&)> get;
};

#define SIZE_FIELD(KEY, MEMBER)                                                                              \
  Field {                                                                                                    \
    KEY, [](TrainingConfig& c, const std::string& k, const std::string& v) { c.MEMBER = to_u64(k, v); },  \
        [](const TrainingConfig& c) { return fmt(static_cast<std::uint64_t>(c.MEMBER)); }                  \
  }
#define DOUBLE_FIELD(KEY, MEMBER)                                                                              \
  Field {                                                                                                      \
    KEY, [](TrainingConfig& c, const std::string& k, const std::string& v) { c.MEMBER = to_double(k, v); }, \
        [](const TrainingConfig& c) { return fmt(c.MEMBER); }                                                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"run.objective",
            [](TrainingConfig& c, const std::string&, const std::string& v) { c.objective = parse_objective(v); },
            [](const TrainingConfig& c) { return objective_name(c.objective); }},
      Field{"run.energy", [](TrainingConfig& c, const std::string&, const std::string& v) { c.energy = v; },
            [](const TrainingConfig& c) { return c.energy; }},
      SIZE_FIELD("run.seed", seed),
      SIZE_FIELD("model.hidden", hidden),
      SIZE_FIELD("model.blocks", blocks),
      DOUBLE_FIELD("model.slope", slope),
      DOUBLE_FIELD("model.init_gain", init_gain),
      Field{"estimator.order",
            [](TrainingConfig& c, const std::string& k, const std::string& v) {
              c.estimator.order = static_cast<int>(to_u64(k, v));
            },
            [](const TrainingConfig& c) { return std::to_string(c.estimator.order); }},
      Field{"estimator.probes",
            [](TrainingConfig& c, const std::string& k, const std::string& v) {
              c.estimator.probes = static_cast<int>(to_u64(k, v));
            },
            [](const TrainingConfig& c) { return std::to_string(c.estimator.probes); }},
      Field{"estimator.power_iterations",
            [](TrainingConfig& c, const std::string& k, const std::string& v) {
              c.estimator.power_iterations = static_cast<int>(to_u64(k, v));
            },
            [](const TrainingConfig& c) { return std::to_string(c.estimator.power_iterations); }},
      DOUBLE_FIELD("estimator.bound_multiplier", estimator.bound_multiplier),
      DOUBLE_FIELD("estimator.lower_bound", estimator.lower_bound),
      Field{"estimator.detach_bounds",
            [](TrainingConfig& c, const std::string& k, const std::string& v) {
              c.estimator.detach_bounds = to_bool(k, v);
            },
            [](const TrainingConfig& c) { return std::string(c.estimator.detach_bounds ? "true" : "false"); }},
      Field{"estimator.method",
            [](TrainingConfig& c, const std::string& k, const std::string& v) {
              if (v == "chebyshev") c.likelihood.method = density::LogDetMethod::kChebyshev;
              else if (v == "taylor") c.likelihood.method = density::LogDetMethod::kTaylor;
              else throw std::invalid_argument("config key '" + k + "': expected chebyshev or taylor");
            },
            [](const TrainingConfig& c) {
              return std::string(c.likelihood.method == density::LogDetMethod::kTaylor ? "taylor" : "chebyshev");
            }},
      Field{"estimator.metric",
            [](TrainingConfig& c, const std::string& k, const std::string& v) {
              if (v == "assembled") c.likelihood.metric = density::MetricMode::kAssembled;
              else if (v == "matrix-free") c.likelihood.metric = density::MetricMode::kMatrixFree;
              else throw std::invalid_argument("config key '" + k + "': expected assembled or matrix-free");
            },
            [](const TrainingConfig& c) {
              return std::string(c.likelihood.metric == density::MetricMode::kAssembled ? "assembled"
                                                                                         : "matrix-free");
            }},
      DOUBLE_FIELD("optimizer.learning_rate", optimizer.learning_rate),
      DOUBLE_FIELD("optimizer.beta1", optimizer.beta1),
      DOUBLE_FIELD("optimizer.beta2", optimizer.beta2),
      DOUBLE_FIELD("optimizer.epsilon", optimizer.epsilon),
      SIZE_FIELD("training.batch_size", batch_size),
      SIZE_FIELD("training.iterations_per_epoch", iterations_per_epoch),
      SIZE_FIELD("training.epochs", epochs),
      DOUBLE_FIELD("training.rho", rho),
      SIZE_FIELD("training.monitor_every", monitor_every),
      SIZE_FIELD("output.grid_resolution", grid_resolution),
      DOUBLE_FIELD("output.grid_half_width", grid_half_width),
      SIZE_FIELD("output.sample_count", sample_count),
      SIZE_FIELD("output.heldout_count", heldout_count),
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD

}  // namespace

TrainingConfig resolve_config(const ConfigOverrides& values) {
  for (const auto& [key, value] : values) {
    bool found = false;
    for (const Field& f : fields()) found = found || key == f.key;
    if (!found) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  Objective objective = Objective::kReverseKl;
  if (auto it = values.find("run.objective"); it != values.end()) objective = parse_objective(it->second);
  std::string energy = objective == Objective::kReverseKl ? "u1" : "ring-mixture";
  if (auto it = values.find("run.energy"); it != values.end()) energy = it->second;
  TrainingConfig cfg = TrainingConfig::defaults_for(objective, energy);
  for (const Field& f : fields()) {
    auto it = values.find(f.key);
    if (it != values.end()) f.set(cfg, f.key, it->second);
  }
  return cfg;
}

TrainingConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument("cannot read config '" + path.string() + "': " + e.what());
  }
  ConfigOverrides values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::invalid_argument("config key '" + section + "' is outside a [section]");
    for (const auto& [key, leaf] : body) values[section + "." + key] = leaf.get_value<std::string>();
  }
  for (const auto& [k, v] : overrides) values[k] = v;
  return resolve_config(values);
}

ConfigOverrides config_values(const TrainingConfig& cfg) {
  ConfigOverrides out;
  for (const Field& f : fields()) out[f.key] = f.get(cfg);
  return out;
}

std::string dump_config(const TrainingConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const Field& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace specprop::training
