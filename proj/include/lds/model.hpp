#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lds/numeric.hpp"

namespace lds {

/// State-transition matrix A (n x n) and observation matrix C (m x n).
struct SystemParams {
  RealMatrix A;
  RealMatrix C;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
  void validate() const;
};

/// Continuous propagates state by e^{At} for real t > 0; Discrete by A^t
/// for integer t >= 1.
enum class TimeKind { Continuous, Discrete };

std::string to_string(TimeKind kind);
TimeKind time_kind_from_string(const std::string& s);

/// Output samples of one trajectory at strictly increasing positive times.
/// samples.row(i) is the output observed at times[i]. The true initial
/// state, when known, is carried for evaluation only.
struct Trajectory {
  int id = 0;
  std::vector<double> times;
  RealMatrix samples;  // one row per time, output_dim columns
  std::optional<RealVector> true_initial_state;

  int sample_count() const { return static_cast<int>(times.size()); }
  void validate(TimeKind kind) const;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  TimeKind time_kind = TimeKind::Discrete;
  int state_dim = 0;
  int output_dim = 0;

  int trajectory_count() const {
    return static_cast<int>(trajectories.size());
  }
  int total_samples() const;
  void validate() const;
};

/// Random system in the experiment family: A = I + dA with dA entries
/// i.i.d. uniform on [-0.5, 0.5], C entries i.i.d. standard normal.
/// Deterministic for a given seed.
SystemParams generate_system(int n, int m, std::uint64_t seed);

/// Samples x(t) = C e^{At} s (Continuous) or C A^t s (Discrete) at the
/// given strictly increasing positive times.
Trajectory simulate(const SystemParams& params, const RealVector& initial,
                    const std::vector<double>& times, TimeKind kind);

/// K trajectories from initial states drawn i.i.d. standard normal scaled
/// by init_scale. Discrete sample times are {1..len}; Continuous times are
/// sorted uniform draws on (0, len].
Dataset make_dataset(const SystemParams& params, int trajectory_count,
                     int samples_per_trajectory, TimeKind kind,
                     double init_scale, std::uint64_t seed);

/// Formats a double with 17 significant digits (lossless text round trip).
std::string format_double(double value);

/// CSV with header trajectory_id,time,y_1..y_m; one row per sample.
void write_dataset_csv(const Dataset& dataset, const std::string& path);

/// Sidecar metadata: dimensions, time kind, generator seed, true system and
/// true initial states. `truth` may be null when the system is not known.
void write_dataset_metadata(const Dataset& dataset,
                            const SystemParams* truth, std::uint64_t seed,
                            const std::string& path);

struct LoadedDataset {
  Dataset dataset;
  std::optional<SystemParams> truth;
  std::uint64_t seed = 0;
};

LoadedDataset read_dataset(const std::string& csv_path,
                           const std::string& metadata_path);

}  // namespace lds
