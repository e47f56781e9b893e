#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lds/train.hpp"

namespace lds {

/// How the model parameters are initialized for a training run: an explicit
/// (A0, C0) pair, or a seeded random draw. "uniform" draws every A entry
/// uniformly on [-0.5, 0.5] (stable with high probability); the
/// "identity_plus_uniform" family adds the identity shift used by the data
/// generator. C0 entries are standard normal either way.
struct ParamInit {
  std::optional<SystemParams> explicit_params;
  std::uint64_t seed = 0;
  std::string family = "uniform";
};

SystemParams initial_parameters(const ParamInit& init, int n, int m);

/// Where the trajectories come from: a generated system plus sampled
/// initial states, or files written by an earlier generate run.
struct DatasetSpec {
  // generated
  int trajectories = 1;
  int length = 1;
  TimeKind time_kind = TimeKind::Discrete;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  // loaded
  std::optional<std::string> csv_path;
  std::optional<std::string> metadata_path;
  bool from_files() const { return csv_path.has_value(); }
};

struct SystemSpec {
  std::optional<SystemParams> explicit_params;
  int n = 1;
  int m = 1;
  std::uint64_t seed = 0;
};

/// Initial-state mode selector as it appears in configs. fixed_true pulls
/// the dataset's true initial states.
struct InitModeSpec {
  enum class Kind { FixedTrue, FixedExplicit, Learned, Estimated };
  Kind kind = Kind::FixedTrue;
  std::vector<RealVector> states;  // FixedExplicit
  int p = 1;                       // Estimated
  double reg_weight = 0.0;
};

InitialStateMode build_init_mode(const InitModeSpec& spec,
                                 const Dataset& dataset);

struct RunConfig {
  SystemSpec system;
  DatasetSpec dataset;

  TrainConfig train;
  ParamInit param_init;
  InitModeSpec init_mode_spec;

  double bounds_delta = 0.0;     // 0 means "use train.learning_rate"
  double bounds_epsilon = 1.0;   // epsilon for the theorem-2 calculator
  std::optional<std::string> model_path;  // bounds at a trained model

  std::string output_dir = "out";
};

/// Parses and schema-validates a config document. Unknown keys anywhere in
/// the document are rejected.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

SystemParams build_system(const SystemSpec& spec);
Dataset build_dataset(const RunConfig& config, const SystemParams& truth,
                      std::optional<SystemParams>* loaded_truth = nullptr);

}  // namespace lds
