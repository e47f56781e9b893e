#include "lds/runconfig.hpp"

#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace lds {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

RealMatrix parse_matrix(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() ||
      rows[0].empty()) {
    throw ConfigError(where + " must be a nonempty array of rows");
  }
  RealMatrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != rows[0].size()) {
      throw ConfigError(where + " has ragged rows");
    }
    for (size_t j = 0; j < rows[i].size(); ++j) {
      if (!rows[i][j].is_number()) throw ConfigError(where + " has a non-number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

double get_number(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ConfigError(key + " must be a number");
  return obj.at(key).get<double>();
}

std::uint64_t get_seed(const json& obj, const std::string& key,
                       std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer()) {
    throw ConfigError(key + " must be an integer");
  }
  return obj.at(key).get<std::uint64_t>();
}

LossSpec parse_loss(const json& obj) {
  require_keys(obj, {"kind", "epsilon"}, "train.loss");
  LossSpec spec;
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "squared_error") {
    spec.kind = LossKind::SquaredError;
  } else if (kind == "time_weighted_log") {
    spec.kind = LossKind::TimeWeightedLog;
  } else {
    throw ConfigError("unknown loss kind: " + kind);
  }
  spec.epsilon = get_number(obj, "epsilon", 1.0);
  spec.validate();
  return spec;
}

BatchSpec parse_batch(const json& obj) {
  BatchSpec batch;
  if (obj.is_string()) {
    const std::string kind = obj.get<std::string>();
    if (kind == "full") {
      batch.kind = BatchKind::FullBatch;
    } else if (kind == "per_trajectory") {
      batch.kind = BatchKind::PerTrajectory;
    } else {
      throw ConfigError("unknown batch kind: " + kind);
    }
    return batch;
  }
  require_keys(obj, {"kind", "shuffle_seed"}, "train.batch");
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "full") {
    batch.kind = BatchKind::FullBatch;
  } else if (kind == "per_trajectory") {
    batch.kind = BatchKind::PerTrajectory;
  } else {
    throw ConfigError("unknown batch kind: " + kind);
  }
  batch.shuffle_seed = get_seed(obj, "shuffle_seed", 0);
  return batch;
}

InitModeSpec parse_init_mode(const json& obj) {
  require_keys(obj, {"kind", "states", "p", "reg_weight"}, "train.init_mode");
  InitModeSpec spec;
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "fixed_true") {
    spec.kind = InitModeSpec::Kind::FixedTrue;
  } else if (kind == "fixed") {
    spec.kind = InitModeSpec::Kind::FixedExplicit;
    if (!obj.contains("states")) {
      throw ConfigError("init_mode \"fixed\" requires \"states\"");
    }
    const RealMatrix rows = parse_matrix(obj.at("states"), "init_mode.states");
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      spec.states.push_back(rows.row(i).transpose());
    }
  } else if (kind == "learned") {
    spec.kind = InitModeSpec::Kind::Learned;
  } else if (kind == "estimated") {
    spec.kind = InitModeSpec::Kind::Estimated;
    spec.p = static_cast<int>(get_number(obj, "p", 1));
    spec.reg_weight = get_number(obj, "reg_weight", 0.0);
  } else {
    throw ConfigError("unknown init_mode kind: " + kind);
  }
  return spec;
}

}  // namespace

SystemParams initial_parameters(const ParamInit& init, int n, int m) {
  if (init.explicit_params) {
    SystemParams params = *init.explicit_params;
    params.validate();
    return params;
  }
  std::mt19937_64 rng(init.seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  SystemParams params;
  const bool shifted = init.family == "identity_plus_uniform";
  params.A = RealMatrix::Zero(n, n);
  if (shifted) params.A = RealMatrix::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) params.A(i, j) += uniform(rng);
  params.C.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) params.C(i, j) = normal(rng);
  return params;
}

InitialStateMode build_init_mode(const InitModeSpec& spec,
                                 const Dataset& dataset) {
  switch (spec.kind) {
    case InitModeSpec::Kind::FixedTrue: {
      FixedStates fixed;
      fixed.states.resize(dataset.trajectories.size());
      for (const auto& traj : dataset.trajectories) {
        if (!traj.true_initial_state) {
          throw DataError("init_mode fixed_true requires true initial states "
                          "in the dataset");
        }
        fixed.states[static_cast<size_t>(traj.id)] = *traj.true_initial_state;
      }
      return fixed;
    }
    case InitModeSpec::Kind::FixedExplicit: {
      if (spec.states.size() != dataset.trajectories.size()) {
        throw ConfigError("init_mode fixed: need one state per trajectory");
      }
      return FixedStates{spec.states};
    }
    case InitModeSpec::Kind::Learned:
      return LearnedStates{};  // seeded by the trainer
    case InitModeSpec::Kind::Estimated: {
      EstimatedStates est;
      est.phi = zero_estimator(dataset.state_dim, dataset.output_dim, spec.p);
      est.reg_weight = spec.reg_weight;
      return est;
    }
  }
  throw ConfigError("unreachable init mode");
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  require_keys(doc,
               {"system", "dataset", "train", "bounds", "output_dir"},
               "config");
  RunConfig config;

  if (doc.contains("system")) {
    const json& sys = doc.at("system");
    require_keys(sys, {"n", "m", "seed", "A", "C"}, "system");
    if (sys.contains("A") || sys.contains("C")) {
      SystemParams params;
      params.A = parse_matrix(sys.at("A"), "system.A");
      params.C = parse_matrix(sys.at("C"), "system.C");
      params.validate();
      config.system.explicit_params = std::move(params);
      config.system.n = config.system.explicit_params->state_dim();
      config.system.m = config.system.explicit_params->output_dim();
    } else {
      config.system.n = static_cast<int>(get_number(sys, "n", 1));
      config.system.m = static_cast<int>(get_number(sys, "m", 1));
    }
    config.system.seed = get_seed(sys, "seed", 0);
  }

  if (doc.contains("dataset")) {
    const json& ds = doc.at("dataset");
    require_keys(ds,
                 {"trajectories", "length", "time_kind", "init_scale", "seed",
                  "csv", "metadata"},
                 "dataset");
    if (ds.contains("csv") != ds.contains("metadata")) {
      throw ConfigError("dataset files need both \"csv\" and \"metadata\"");
    }
    if (ds.contains("csv")) {
      config.dataset.csv_path = ds.at("csv").get<std::string>();
      config.dataset.metadata_path = ds.at("metadata").get<std::string>();
    } else {
      config.dataset.trajectories =
          static_cast<int>(get_number(ds, "trajectories", 1));
      config.dataset.length = static_cast<int>(get_number(ds, "length", 1));
      if (ds.contains("time_kind")) {
        config.dataset.time_kind =
            time_kind_from_string(ds.at("time_kind").get<std::string>());
      }
      config.dataset.init_scale = get_number(ds, "init_scale", 1.0);
      config.dataset.seed = get_seed(ds, "seed", 0);
    }
  }

  if (doc.contains("train")) {
    const json& tr = doc.at("train");
    require_keys(tr,
                 {"learning_rate", "momentum", "clip_threshold", "max_iters",
                  "batch", "loss", "init_mode", "divergence_factor", "seed",
                  "update_c", "init"},
                 "train");
    config.train.learning_rate = get_number(tr, "learning_rate", 1e-3);
    config.train.momentum = get_number(tr, "momentum", 0.0);
    config.train.clip_threshold = get_number(tr, "clip_threshold", 1.0);
    config.train.max_iters =
        static_cast<int>(get_number(tr, "max_iters", 1000));
    if (tr.contains("batch")) config.train.batch = parse_batch(tr.at("batch"));
    if (tr.contains("loss")) config.train.loss = parse_loss(tr.at("loss"));
    if (tr.contains("init_mode")) {
      config.init_mode_spec = parse_init_mode(tr.at("init_mode"));
    }
    config.train.divergence_factor = get_number(tr, "divergence_factor", 1e6);
    config.train.seed = get_seed(tr, "seed", 0);
    if (tr.contains("update_c")) {
      if (!tr.at("update_c").is_boolean()) {
        throw ConfigError("update_c must be a boolean");
      }
      config.train.update_c = tr.at("update_c").get<bool>();
    }
    if (tr.contains("init")) {
      const json& init = tr.at("init");
      require_keys(init, {"seed", "family", "A", "C"}, "train.init");
      if (init.contains("A") || init.contains("C")) {
        SystemParams params;
        params.A = parse_matrix(init.at("A"), "train.init.A");
        params.C = parse_matrix(init.at("C"), "train.init.C");
        params.validate();
        config.param_init.explicit_params = std::move(params);
      } else {
        config.param_init.seed = get_seed(init, "seed", 0);
        if (init.contains("family")) {
          config.param_init.family = init.at("family").get<std::string>();
          if (config.param_init.family != "uniform" &&
              config.param_init.family != "identity_plus_uniform") {
            throw ConfigError("unknown init family: " +
                              config.param_init.family);
          }
        }
      }
    }
  }

  if (doc.contains("bounds")) {
    const json& b = doc.at("bounds");
    require_keys(b, {"delta", "epsilon", "model"}, "bounds");
    config.bounds_delta = get_number(b, "delta", 0.0);
    config.bounds_epsilon = get_number(b, "epsilon", 1.0);
    if (b.contains("model")) {
      config.model_path = b.at("model").get<std::string>();
    }
  }

  if (doc.contains("output_dir")) {
    config.output_dir = doc.at("output_dir").get<std::string>();
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

SystemParams build_system(const SystemSpec& spec) {
  if (spec.explicit_params) return *spec.explicit_params;
  return generate_system(spec.n, spec.m, spec.seed);
}

Dataset build_dataset(const RunConfig& config, const SystemParams& truth,
                      std::optional<SystemParams>* loaded_truth) {
  if (config.dataset.from_files()) {
    LoadedDataset loaded =
        read_dataset(*config.dataset.csv_path, *config.dataset.metadata_path);
    if (loaded_truth) *loaded_truth = loaded.truth;
    return loaded.dataset;
  }
  if (loaded_truth) *loaded_truth = truth;
  return make_dataset(truth, config.dataset.trajectories,
                      config.dataset.length, config.dataset.time_kind,
                      config.dataset.init_scale, config.dataset.seed);
}

}  // namespace lds
