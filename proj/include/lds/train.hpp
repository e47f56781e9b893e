#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lds/loss.hpp"

namespace lds {

enum class BatchKind { FullBatch, PerTrajectory };

struct BatchSpec {
  BatchKind kind = BatchKind::FullBatch;
  std::uint64_t shuffle_seed = 0;  // per-epoch trajectory order
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.0;         // heavy-ball coefficient in [0, 1)
  double clip_threshold = 1.0;   // l2 cap over all gradient blocks
  int max_iters = 1000;
  BatchSpec batch;
  LossSpec loss;
  InitialStateMode init_mode = FixedStates{};
  double divergence_factor = 1e6;
  std::uint64_t seed = 0;
  // When false, C stays at its initial value (known-observation setting,
  // e.g. the C = I regime of the spectrum bound).
  bool update_c = true;

  void validate() const;
};

enum class TrainStatusKind { Converged, IterCapReached, Diverged };

struct TrainStatus {
  TrainStatusKind kind = TrainStatusKind::IterCapReached;
  int iteration = 0;  // iteration at which the status was decided
};

std::string to_string(TrainStatusKind kind);

struct TrainResult {
  SystemParams final_params;
  InitialStateMode final_init;
  std::vector<double> loss_curve;          // loss at iterate 0, 1, ...
  std::vector<ComplexVector> eigen_trace;  // spectrum of A per iterate
  TrainStatus status;
};

/// If the concatenated l2 norm of all blocks exceeds the threshold, scales
/// every block by threshold/norm; otherwise returns the bundle unchanged.
GradientBundle clip_gradient(GradientBundle g, double threshold);

using ProgressCallback = std::function<void(int iteration, double loss)>;

/// Heavy-ball gradient descent: v <- momentum*v + clip(grad);
/// theta <- theta - learning_rate*v over the active parameter set.
/// Per-trajectory batching takes one clipped momentum step per trajectory
/// in a seed-shuffled order; the loss curve then records full-batch loss at
/// epoch boundaries. Stops on loss <= 1e-12 (Converged), loss exceeding
/// divergence_factor times the initial loss or numerical overflow
/// (Diverged), or the iteration cap. Deterministic given the config.
TrainResult train(const Dataset& dataset, const SystemParams& init_params,
                  const TrainConfig& config,
                  const ProgressCallback& progress = {});

}  // namespace lds
