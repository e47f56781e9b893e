#include "lds/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lds {

using nlohmann::json;

void SystemParams::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) {
    throw DimensionError("SystemParams: A must be square and nonempty");
  }
  if (C.cols() != A.rows() || C.rows() == 0) {
    throw DimensionError("SystemParams: C must be m x n with n matching A");
  }
  if (!A.allFinite() || !C.allFinite()) {
    throw NumericError("SystemParams: non-finite entries");
  }
}

std::string to_string(TimeKind kind) {
  return kind == TimeKind::Continuous ? "continuous" : "discrete";
}

TimeKind time_kind_from_string(const std::string& s) {
  if (s == "continuous") return TimeKind::Continuous;
  if (s == "discrete") return TimeKind::Discrete;
  throw ConfigError("unknown time_kind: " + s);
}

void Trajectory::validate(TimeKind kind) const {
  if (times.empty()) throw DataError("trajectory has no samples");
  if (samples.rows() != static_cast<Eigen::Index>(times.size())) {
    throw DataError("trajectory sample rows do not match time count");
  }
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) {
      throw DataError("sample times must be strictly increasing and > 0");
    }
    if (kind == TimeKind::Discrete && t != std::floor(t)) {
      throw DataError("discrete trajectory has a non-integer sample time");
    }
    prev = t;
  }
  if (!samples.allFinite()) throw DataError("trajectory has non-finite samples");
}

int Dataset::total_samples() const {
  int total = 0;
  for (const auto& traj : trajectories) total += traj.sample_count();
  return total;
}

void Dataset::validate() const {
  if (trajectories.empty()) throw DataError("dataset has no trajectories");
  for (const auto& traj : trajectories) {
    traj.validate(time_kind);
    if (traj.samples.cols() != output_dim) {
      throw DataError("trajectory output dimension mismatch");
    }
    if (traj.true_initial_state &&
        traj.true_initial_state->size() != state_dim) {
      throw DataError("trajectory initial-state dimension mismatch");
    }
  }
}

SystemParams generate_system(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) {
    throw DimensionError("generate_system: dimensions must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  SystemParams params;
  params.A = RealMatrix::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) params.A(i, j) += uniform(rng);
  params.C.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) params.C(i, j) = normal(rng);
  return params;
}

Trajectory simulate(const SystemParams& params, const RealVector& initial,
                    const std::vector<double>& times, TimeKind kind) {
  params.validate();
  if (initial.size() != params.A.rows()) {
    throw DimensionError("simulate: initial state dimension mismatch");
  }
  Trajectory traj;
  traj.times = times;
  traj.samples.resize(static_cast<Eigen::Index>(times.size()),
                      params.C.rows());
  traj.true_initial_state = initial;

  if (kind == TimeKind::Continuous) {
    // Interval chaining, the same propagation the loss engine uses, so a
    // model evaluated at the generating parameters reproduces its own data
    // bit for bit.
    RealVector state = initial;
    double current = 0.0;
    for (size_t i = 0; i < times.size(); ++i) {
      state = mat_exp(params.A, times[i] - current) * state;
      current = times[i];
      traj.samples.row(static_cast<Eigen::Index>(i)) =
          (params.C * state).transpose();
    }
  } else {
    RealVector state = initial;
    double current = 0.0;
    for (size_t i = 0; i < times.size(); ++i) {
      const auto steps = static_cast<long long>(times[i] - current);
      for (long long s = 0; s < steps; ++s) state = params.A * state;
      current = times[i];
      traj.samples.row(static_cast<Eigen::Index>(i)) =
          (params.C * state).transpose();
    }
  }
  traj.validate(kind);
  return traj;
}

Dataset make_dataset(const SystemParams& params, int trajectory_count,
                     int samples_per_trajectory, TimeKind kind,
                     double init_scale, std::uint64_t seed) {
  params.validate();
  if (trajectory_count < 1 || samples_per_trajectory < 1) {
    throw DimensionError("make_dataset: counts must be >= 1");
  }
  const int n = params.state_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Dataset dataset;
  dataset.time_kind = kind;
  dataset.state_dim = n;
  dataset.output_dim = params.output_dim();
  dataset.trajectories.reserve(static_cast<size_t>(trajectory_count));

  for (int k = 0; k < trajectory_count; ++k) {
    RealVector initial(n);
    for (int i = 0; i < n; ++i) initial(i) = init_scale * normal(rng);

    std::vector<double> times(static_cast<size_t>(samples_per_trajectory));
    if (kind == TimeKind::Discrete) {
      for (int i = 0; i < samples_per_trajectory; ++i) {
        times[static_cast<size_t>(i)] = i + 1;
      }
    } else {
      // Redraw on exact ties so times stay strictly increasing.
      bool ok = false;
      while (!ok) {
        for (auto& t : times) {
          t = samples_per_trajectory * (1.0 - uniform(rng));
        }
        std::sort(times.begin(), times.end());
        ok = times.front() > 0.0 &&
             std::adjacent_find(times.begin(), times.end()) == times.end();
      }
    }
    Trajectory traj = simulate(params, initial, times, kind);
    traj.id = k;
    dataset.trajectories.push_back(std::move(traj));
  }
  return dataset;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "trajectory_id,time";
  for (int j = 1; j <= dataset.output_dim; ++j) out << ",y_" << j;
  out << "\n";
  for (const auto& traj : dataset.trajectories) {
    for (int i = 0; i < traj.sample_count(); ++i) {
      out << traj.id << "," << format_double(traj.times[static_cast<size_t>(i)]);
      for (int j = 0; j < dataset.output_dim; ++j) {
        out << "," << format_double(traj.samples(i, j));
      }
      out << "\n";
    }
  }
}

namespace {

json matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

RealMatrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw DataError("metadata matrix must be an array of rows");
  }
  RealMatrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw DataError("metadata matrix has ragged rows");
    }
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

}  // namespace

void write_dataset_metadata(const Dataset& dataset,
                            const SystemParams* truth, std::uint64_t seed,
                            const std::string& path) {
  json meta;
  meta["n"] = dataset.state_dim;
  meta["m"] = dataset.output_dim;
  meta["time_kind"] = to_string(dataset.time_kind);
  meta["seed"] = seed;
  if (truth) {
    meta["true_A"] = matrix_to_json(truth->A);
    meta["true_C"] = matrix_to_json(truth->C);
  }
  json states = json::array();
  for (const auto& traj : dataset.trajectories) {
    if (traj.true_initial_state) {
      json v = json::array();
      for (Eigen::Index i = 0; i < traj.true_initial_state->size(); ++i) {
        v.push_back((*traj.true_initial_state)(i));
      }
      states.push_back(std::move(v));
    } else {
      states.push_back(nullptr);
    }
  }
  meta["true_initial_states"] = std::move(states);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << meta.dump(2) << "\n";
}

LoadedDataset read_dataset(const std::string& csv_path,
                           const std::string& metadata_path) {
  std::ifstream meta_in(metadata_path);
  if (!meta_in) throw DataError("cannot open metadata: " + metadata_path);
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw DataError("metadata parse error: " + std::string(e.what()));
  }

  LoadedDataset loaded;
  loaded.dataset.state_dim = meta.at("n").get<int>();
  loaded.dataset.output_dim = meta.at("m").get<int>();
  loaded.dataset.time_kind =
      time_kind_from_string(meta.at("time_kind").get<std::string>());
  loaded.seed = meta.at("seed").get<std::uint64_t>();
  if (meta.contains("true_A")) {
    SystemParams truth;
    truth.A = matrix_from_json(meta.at("true_A"));
    truth.C = matrix_from_json(meta.at("true_C"));
    truth.validate();
    loaded.truth = std::move(truth);
  }

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open dataset: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset CSV is empty");

  struct Row {
    int id;
    double time;
    std::vector<double> y;
  };
  std::vector<Row> rows;
  const int m = loaded.dataset.output_dim;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    Row row;
    if (!std::getline(ss, field, ',')) throw DataError("bad CSV row");
    row.id = std::stoi(field);
    if (!std::getline(ss, field, ',')) throw DataError("bad CSV row");
    row.time = std::strtod(field.c_str(), nullptr);
    while (std::getline(ss, field, ',')) {
      row.y.push_back(std::strtod(field.c_str(), nullptr));
    }
    if (static_cast<int>(row.y.size()) != m) {
      throw DataError("CSV row has wrong output dimension");
    }
    rows.push_back(std::move(row));
  }

  const json& states = meta.at("true_initial_states");
  std::vector<int> ids;
  for (const auto& row : rows) {
    if (ids.empty() || ids.back() != row.id) ids.push_back(row.id);
  }
  for (size_t idx = 0; idx < ids.size(); ++idx) {
    Trajectory traj;
    traj.id = ids[idx];
    for (const auto& row : rows) {
      if (row.id != traj.id) continue;
      traj.times.push_back(row.time);
    }
    traj.samples.resize(static_cast<Eigen::Index>(traj.times.size()), m);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
      if (row.id != traj.id) continue;
      for (int j = 0; j < m; ++j) traj.samples(r, j) = row.y[static_cast<size_t>(j)];
      ++r;
    }
    if (idx < states.size() && !states[idx].is_null()) {
      RealVector s(states[idx].size());
      for (size_t j = 0; j < states[idx].size(); ++j) {
        s(static_cast<Eigen::Index>(j)) = states[idx][j].get<double>();
      }
      traj.true_initial_state = std::move(s);
    }
    loaded.dataset.trajectories.push_back(std::move(traj));
  }
  loaded.dataset.validate();
  return loaded;
}

}  // namespace lds
