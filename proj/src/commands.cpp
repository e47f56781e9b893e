#include "lds/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "lds/svg.hpp"

namespace lds {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInitSeedOffset = 0x5eed0f5e;

std::string out_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
}

json matrix_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const RealVector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

RealMatrix matrix_from(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) throw DataError(where + ": bad matrix");
  RealMatrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

json delta_max_json(const std::optional<double>& value) {
  if (!value) return nullptr;
  if (std::isinf(*value)) return "+inf";
  return *value;
}

std::string resolve_dir(const RunConfig& config,
                        const CommandOptions& options) {
  return options.output_dir.empty() ? config.output_dir : options.output_dir;
}

std::vector<std::vector<double>> all_sample_times(const Dataset& dataset) {
  std::vector<std::vector<double>> times;
  times.reserve(dataset.trajectories.size());
  for (const auto& traj : dataset.trajectories) times.push_back(traj.times);
  return times;
}

void write_train_artifacts(const TrainResult& result, const Dataset& dataset,
                           const std::optional<SystemParams>& truth,
                           const std::string& dir, bool plots) {
  ensure_dir(dir);

  {
    std::ofstream out(out_path(dir, "loss_curve.csv"), std::ios::binary);
    out << "iter,loss\n";
    for (size_t i = 0; i < result.loss_curve.size(); ++i) {
      out << i << "," << format_double(result.loss_curve[i]) << "\n";
    }
  }
  {
    std::ofstream out(out_path(dir, "eigen_trace.csv"), std::ios::binary);
    out << "iter,eig_index,re,im\n";
    for (size_t i = 0; i < result.eigen_trace.size(); ++i) {
      const auto& eigs = result.eigen_trace[i];
      for (Eigen::Index j = 0; j < eigs.size(); ++j) {
        out << i << "," << j << "," << format_double(eigs(j).real()) << ","
            << format_double(eigs(j).imag()) << "\n";
      }
    }
  }

  json model;
  model["A"] = matrix_json(result.final_params.A);
  model["C"] = matrix_json(result.final_params.C);
  json mode;
  const InitStateKind kind = mode_kind(result.final_init);
  if (kind == InitStateKind::Fixed) {
    mode["kind"] = "fixed";
    json states = json::array();
    for (const auto& s : std::get<FixedStates>(result.final_init).states) {
      states.push_back(vector_json(s));
    }
    mode["states"] = std::move(states);
  } else if (kind == InitStateKind::Learned) {
    mode["kind"] = "learned";
    json states = json::array();
    for (const auto& s : std::get<LearnedStates>(result.final_init).states) {
      states.push_back(vector_json(s));
    }
    mode["states"] = std::move(states);
  } else {
    const auto& est = std::get<EstimatedStates>(result.final_init);
    mode["kind"] = "estimated";
    mode["W"] = matrix_json(est.phi.W);
    mode["b"] = vector_json(est.phi.b);
    mode["p"] = est.phi.p;
    mode["reg_weight"] = est.reg_weight;
  }
  model["init_mode"] = std::move(mode);
  json resolved = json::array();
  for (const auto& s : resolve_initial_states(result.final_init, dataset)) {
    resolved.push_back(vector_json(s));
  }
  model["resolved_states"] = std::move(resolved);
  write_json_file(model, out_path(dir, "final_model.json"));

  json status;
  status["status"] = to_string(result.status.kind);
  status["iteration"] = result.status.iteration;
  status["iterations_recorded"] =
      static_cast<int>(result.loss_curve.size());
  status["final_loss"] =
      result.loss_curve.empty() ? nullptr : json(result.loss_curve.back());
  status["min_loss"] =
      result.loss_curve.empty()
          ? nullptr
          : json(*std::min_element(result.loss_curve.begin(),
                                   result.loss_curve.end()));
  write_json_file(status, out_path(dir, "status.json"));

  if (plots) {
    write_text_file(out_path(dir, "loss_curve.svg"),
                    loss_curve_svg(result.loss_curve, "training loss"));
    // Down-sample long traces so the scatter stays a reasonable size.
    std::vector<std::vector<std::complex<double>>> trace;
    const size_t stride = std::max<size_t>(1, result.eigen_trace.size() / 2000);
    for (size_t i = 0; i < result.eigen_trace.size(); ++i) {
      if (i % stride != 0 && i + 1 != result.eigen_trace.size()) continue;
      std::vector<std::complex<double>> eigs;
      for (Eigen::Index j = 0; j < result.eigen_trace[i].size(); ++j) {
        eigs.push_back(result.eigen_trace[i](j));
      }
      trace.push_back(std::move(eigs));
    }
    std::vector<std::complex<double>> truth_eigs;
    if (truth) {
      const ComplexVector lambdas = eigenvalues_only(truth->A);
      for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
        truth_eigs.push_back(lambdas(j));
      }
    }
    write_text_file(out_path(dir, "eigen_plane.svg"),
                    eigen_plane_svg(trace, truth_eigs, "eigenvalue estimates"));
  }
}

}  // namespace

void cmd_generate(const RunConfig& config, const CommandOptions& options) {
  const std::string dir = resolve_dir(config, options);
  ensure_dir(dir);
  const SystemParams truth = build_system(config.system);
  const Dataset dataset = build_dataset(config, truth);

  write_dataset_csv(dataset, out_path(dir, "dataset.csv"));
  write_dataset_metadata(dataset, &truth, config.dataset.seed,
                         out_path(dir, "metadata.json"));

  const ComplexVector lambdas = eigenvalues_only(truth.A);
  const bool discrete = dataset.time_kind == TimeKind::Discrete;
  std::cout << "true system spectrum (" << to_string(dataset.time_kind)
            << " time):\n";
  bool unstable = false;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const double magnitude = std::abs(lambdas(i));
    std::cout << "  lambda_" << i << " = " << format_double(lambdas(i).real())
              << (lambdas(i).imag() >= 0 ? " + " : " - ")
              << format_double(std::abs(lambdas(i).imag())) << "i";
    if (discrete) {
      std::cout << "  |lambda| = " << format_double(magnitude);
      unstable = unstable || magnitude > 1.0;
    } else {
      unstable = unstable || lambdas(i).real() > 0.0;
    }
    std::cout << "\n";
  }
  std::cout << "verdict: "
            << (unstable
                    ? (discrete ? "unstable (eigenvalue outside the unit circle)"
                                : "unstable (eigenvalue with positive real part)")
                    : "stable")
            << "\n";
}

TrainResult cmd_train(const RunConfig& config, const CommandOptions& options) {
  const std::string dir = resolve_dir(config, options);
  ensure_dir(dir);
  const SystemParams generated = build_system(config.system);
  std::optional<SystemParams> truth;
  const Dataset dataset = build_dataset(config, generated, &truth);

  TrainConfig train_config = config.train;
  train_config.init_mode = build_init_mode(config.init_mode_spec, dataset);
  const SystemParams init_params = initial_parameters(
      config.param_init, dataset.state_dim, dataset.output_dim);

  TrainResult result = train(dataset, init_params, train_config);
  write_train_artifacts(result, dataset, truth, dir, options.plots);
  return result;
}

void cmd_bounds(const RunConfig& config, const CommandOptions& options) {
  const std::string dir = resolve_dir(config, options);
  ensure_dir(dir);
  const SystemParams generated = build_system(config.system);
  std::optional<SystemParams> truth;
  const Dataset dataset = build_dataset(config, generated, &truth);

  SystemParams params_hat;
  std::vector<RealVector> states;
  if (config.model_path) {
    std::ifstream in(*config.model_path);
    if (!in) throw DataError("cannot open model: " + *config.model_path);
    json model;
    try {
      in >> model;
    } catch (const json::exception& e) {
      throw DataError("model parse error: " + std::string(e.what()));
    }
    params_hat.A = matrix_from(model.at("A"), "model.A");
    params_hat.C = matrix_from(model.at("C"), "model.C");
    params_hat.validate();
    for (const auto& row : model.at("resolved_states")) {
      RealVector s(row.size());
      for (size_t i = 0; i < row.size(); ++i) {
        s(static_cast<Eigen::Index>(i)) = row[i].get<double>();
      }
      states.push_back(std::move(s));
    }
  } else {
    if (!truth) {
      throw DataError("bounds without a model need a dataset with a known "
                      "generating system");
    }
    params_hat = *truth;
    for (const auto& traj : dataset.trajectories) {
      if (!traj.true_initial_state) {
        throw DataError("bounds at the true system need true initial states");
      }
      states.push_back(*traj.true_initial_state);
    }
  }

  // Loss at the evaluation point gates the theorem preconditions.
  FixedStates fixed;
  fixed.states.resize(dataset.trajectories.size());
  for (const auto& traj : dataset.trajectories) {
    fixed.states[static_cast<size_t>(traj.id)] =
        states[static_cast<size_t>(traj.id)];
  }
  double eval_loss_sq = loss_value(dataset, params_hat, fixed,
                                   {LossKind::SquaredError, 1.0});

  const auto times = all_sample_times(dataset);
  const double delta = config.bounds_delta > 0.0 ? config.bounds_delta
                                                 : config.train.learning_rate;
  const BoundReport t1 =
      theorem1_bound(params_hat, states, times, dataset.time_kind);
  const BoundReport t2 = theorem2_bound(params_hat, states, times,
                                        dataset.time_kind,
                                        config.bounds_epsilon);
  const SpectrumBound cor =
      corollary1_bound(params_hat.A, delta, states, times, dataset.time_kind);

  const bool c_is_identity =
      params_hat.C.rows() == params_hat.C.cols() &&
      params_hat.C.isApprox(
          RealMatrix::Identity(params_hat.C.rows(), params_hat.C.cols()));

  json doc;
  doc["delta"] = delta;
  doc["loss_at_evaluation"] = eval_loss_sq;
  doc["advisory"] = !(eval_loss_sq <= 1e-12);
  doc["lambda_top"] = {{"re", t1.lambda_top.real()},
                       {"im", t1.lambda_top.imag()}};
  doc["lambda_top_alpha"] = t1.lambda_top_alpha;
  doc["rho_sq"] = t1.rho_sq;
  doc["spectrum_warning"] = t1.spectrum_warning;
  doc["theorem1"] = {{"delta_max", delta_max_json(t1.theorem1_delta_max)},
                     {"gram_min_eig", t1.gram_min_eig}};
  doc["theorem2"] = {{"delta_max", delta_max_json(t2.theorem2_delta_max)},
                     {"gram_min_eig", t2.gram_min_eig},
                     {"epsilon", config.bounds_epsilon}};
  doc["delta_ok"] = {
      {"theorem1", delta <= *t1.theorem1_delta_max},
      {"theorem2", delta <= *t2.theorem2_delta_max}};
  json corj;
  corj["applicable"] = cor.applicable;
  corj["c_is_identity"] = c_is_identity;
  corj["branch"] = cor.unstable_branch ? "unstable" : "stable";
  if (cor.applicable) {
    corj["re_lambda_upper"] = cor.re_lambda_upper;
    if (cor.unstable_branch) {
      corj["tau_star"] = cor.tau_star;
    } else {
      corj["tau1_star"] = cor.tau1_star;
      corj["tau2_star"] = cor.tau2_star;
    }
  }
  doc["corollary1"] = std::move(corj);
  write_json_file(doc, out_path(dir, "bounds.json"));
}

std::vector<ReproSeedResult> run_reproduction(const ReproduceOptions& options,
                                              const ReproRunSink& sink) {
  std::vector<ReproSeedResult> results;
  results.reserve(options.seeds.size());

  for (const std::uint64_t seed : options.seeds) {
    ReproSeedResult seed_result;
    seed_result.seed = seed;

    const SystemParams truth =
        generate_system(options.state_dim, options.output_dim, seed);
    const ComplexVector lambdas = eigenvalues_only(truth.A);
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
      seed_result.true_eigenvalues.push_back(lambdas(i));
    }
    seed_result.spectral_radius = lambdas.cwiseAbs().maxCoeff();
    seed_result.unstable = seed_result.spectral_radius > 1.0;

    const Dataset dataset =
        make_dataset(truth, options.trajectories, options.length,
                     TimeKind::Discrete, 1.0, seed);

    auto run_arm = [&](LossKind kind, double delta,
                       const std::string& family) {
      // The same seeded initialization is shared by the paired losses.
      ParamInit init;
      init.seed = seed + kInitSeedOffset;
      init.family = family;
      const SystemParams init_params =
          initial_parameters(init, options.state_dim, options.output_dim);
      TrainConfig config;
      config.learning_rate = delta;
      config.momentum = options.momentum;
      config.clip_threshold = options.clip_threshold;
      config.max_iters = options.max_iters;
      config.batch = {BatchKind::PerTrajectory, seed};
      config.loss.kind = kind;
      config.loss.epsilon = options.epsilon;
      if (options.learned_states) {
        config.init_mode = LearnedStates{};
      } else {
        FixedStates fixed;
        fixed.states.resize(dataset.trajectories.size());
        for (const auto& traj : dataset.trajectories) {
          fixed.states[static_cast<size_t>(traj.id)] =
              *traj.true_initial_state;
        }
        config.init_mode = fixed;
      }
      config.seed = seed;
      const TrainResult result = train(dataset, init_params, config);

      ReproArm arm;
      arm.delta = delta;
      arm.init_family = family;
      arm.status = to_string(result.status.kind);
      arm.loss0 = result.loss_curve.front();
      arm.loss_min =
          *std::min_element(result.loss_curve.begin(), result.loss_curve.end());
      arm.loss_final = result.loss_curve.back();
      arm.reduction = arm.loss0 / std::max(arm.loss_min, 1e-300);
      const size_t best_iter = static_cast<size_t>(
          std::min_element(result.loss_curve.begin(), result.loss_curve.end()) -
          result.loss_curve.begin());
      for (const auto& lam : seed_result.true_eigenvalues) {
        double err_final = std::numeric_limits<double>::infinity();
        double err_best = std::numeric_limits<double>::infinity();
        const auto& finals = result.eigen_trace.back();
        const auto& bests = result.eigen_trace[best_iter];
        for (Eigen::Index j = 0; j < finals.size(); ++j) {
          err_final = std::min(err_final, std::abs(finals(j) - lam));
          err_best = std::min(err_best, std::abs(bests(j) - lam));
        }
        arm.eig_errors.push_back(err_final);
        arm.eig_errors_best.push_back(err_best);
      }
      if (sink) sink(seed_result, kind, arm, result);
      return arm;
    };

    for (const std::string& family : options.init_families) {
      for (const double delta : options.deltas) {
        seed_result.log_arms.push_back(
            run_arm(LossKind::TimeWeightedLog, delta, family));
        seed_result.mse_arms.push_back(
            run_arm(LossKind::SquaredError, delta, family));
      }
    }
    auto best_of = [](const std::vector<ReproArm>& arms) {
      int best = -1;
      for (size_t i = 0; i < arms.size(); ++i) {
        if (best < 0 || arms[i].reduction > arms[static_cast<size_t>(best)].reduction) {
          best = static_cast<int>(i);
        }
      }
      return best;
    };
    seed_result.best_log = best_of(seed_result.log_arms);
    seed_result.best_mse = best_of(seed_result.mse_arms);
    results.push_back(std::move(seed_result));
  }
  return results;
}

void cmd_reproduce(const std::string& figure,
                   const std::vector<std::uint64_t>& seeds,
                   const CommandOptions& options, int max_iters,
                   double momentum, const std::vector<double>& deltas,
                   bool learned_states,
                   const std::vector<std::string>& init_families) {
  ReproduceOptions repro;
  if (figure == "fig1" || figure == "fig2") {
    repro.state_dim = 3;
  } else if (figure == "appendixF") {
    repro.state_dim = 4;
  } else {
    throw ConfigError("unknown figure: " + figure +
                      " (expected fig1, fig2 or appendixF)");
  }
  repro.seeds = seeds;
  repro.max_iters = max_iters;
  repro.momentum = momentum;
  if (!deltas.empty()) repro.deltas = deltas;
  repro.learned_states = learned_states;
  if (!init_families.empty()) repro.init_families = init_families;

  const std::string dir =
      options.output_dir.empty() ? std::string("repro") : options.output_dir;
  ensure_dir(dir);

  ReproRunSink sink;
  if (options.plots) {
    sink = [&](const ReproSeedResult& seed_result, LossKind kind,
               const ReproArm& arm, const TrainResult& result) {
      const std::string label =
          (kind == LossKind::TimeWeightedLog ? "log" : "mse");
      char delta_buf[32];
      std::snprintf(delta_buf, sizeof(delta_buf), "%g", arm.delta);
      const std::string arm_dir =
          out_path(dir, "seed_" + std::to_string(seed_result.seed) + "/" +
                            label + "_delta_" + delta_buf + "_" +
                            arm.init_family);
      ensure_dir(arm_dir);
      write_text_file(
          out_path(arm_dir, "loss_curve.svg"),
          loss_curve_svg(result.loss_curve,
                         label + " loss, delta = " + delta_buf));
      std::vector<std::vector<std::complex<double>>> trace;
      const size_t stride =
          std::max<size_t>(1, result.eigen_trace.size() / 2000);
      for (size_t i = 0; i < result.eigen_trace.size(); ++i) {
        if (i % stride != 0 && i + 1 != result.eigen_trace.size()) continue;
        std::vector<std::complex<double>> eigs;
        for (Eigen::Index j = 0; j < result.eigen_trace[i].size(); ++j) {
          eigs.push_back(result.eigen_trace[i](j));
        }
        trace.push_back(std::move(eigs));
      }
      write_text_file(
          out_path(arm_dir, "eigen_plane.svg"),
          eigen_plane_svg(trace, seed_result.true_eigenvalues,
                          label + " eigenvalue estimates"));
      std::ofstream curve(out_path(arm_dir, "loss_curve.csv"),
                          std::ios::binary);
      curve << "iter,loss\n";
      for (size_t i = 0; i < result.loss_curve.size(); ++i) {
        curve << i << "," << format_double(result.loss_curve[i]) << "\n";
      }
    };
  }

  const std::vector<ReproSeedResult> results = run_reproduction(repro, sink);

  {
    std::ofstream arms(out_path(dir, "arms.csv"), std::ios::binary);
    arms << "seed,loss,delta,init_family,status,loss0,loss_min,loss_final,"
            "reduction,max_eig_err_final,max_eig_err_at_min\n";
    auto emit = [&](const ReproSeedResult& r, const char* label,
                    const ReproArm& arm) {
      double worst_final = 0.0, worst_best = 0.0;
      for (double e : arm.eig_errors) worst_final = std::max(worst_final, e);
      for (double e : arm.eig_errors_best) worst_best = std::max(worst_best, e);
      arms << r.seed << "," << label << "," << format_double(arm.delta) << ","
           << arm.init_family << "," << arm.status << ","
           << format_double(arm.loss0) << "," << format_double(arm.loss_min)
           << "," << format_double(arm.loss_final) << ","
           << format_double(arm.reduction) << "," << format_double(worst_final)
           << "," << format_double(worst_best) << "\n";
    };
    for (const auto& r : results) {
      for (const auto& arm : r.log_arms) emit(r, "log", arm);
      for (const auto& arm : r.mse_arms) emit(r, "mse", arm);
    }
  }

  std::ofstream summary(out_path(dir, "summary.csv"), std::ios::binary);
  summary << "seed,spectral_radius,unstable,"
             "log_best_delta,log_status,log_loss0,log_loss_min,log_reduction,"
             "log_max_eig_err,log_mean_stable_err,"
             "mse_best_delta,mse_status,mse_loss0,mse_loss_min,mse_reduction,"
             "mse_best_unstable_err,mse_worst_stable_err,mse_mean_stable_err\n";
  for (const auto& r : results) {
    const ReproArm& lg = r.log_arms[static_cast<size_t>(r.best_log)];
    const ReproArm& ms = r.mse_arms[static_cast<size_t>(r.best_mse)];

    double log_max_err = 0.0;
    for (double e : lg.eig_errors) log_max_err = std::max(log_max_err, e);

    double mse_unstable_err = std::numeric_limits<double>::infinity();
    double mse_worst_stable = 0.0;
    double mse_stable_sum = 0.0, log_stable_sum = 0.0;
    int stable_count = 0;
    for (size_t i = 0; i < r.true_eigenvalues.size(); ++i) {
      if (std::abs(r.true_eigenvalues[i]) > 1.0) {
        mse_unstable_err = std::min(mse_unstable_err, ms.eig_errors[i]);
      } else {
        mse_worst_stable = std::max(mse_worst_stable, ms.eig_errors[i]);
        mse_stable_sum += ms.eig_errors[i];
        log_stable_sum += lg.eig_errors[i];
        ++stable_count;
      }
    }
    const double mse_mean_stable =
        stable_count ? mse_stable_sum / stable_count : 0.0;
    const double log_mean_stable =
        stable_count ? log_stable_sum / stable_count : 0.0;

    summary << r.seed << "," << format_double(r.spectral_radius) << ","
            << (r.unstable ? 1 : 0) << "," << format_double(lg.delta) << ","
            << lg.status << "," << format_double(lg.loss0) << ","
            << format_double(lg.loss_min) << "," << format_double(lg.reduction)
            << "," << format_double(log_max_err) << ","
            << format_double(log_mean_stable) << "," << format_double(ms.delta)
            << "," << ms.status << "," << format_double(ms.loss0) << ","
            << format_double(ms.loss_min) << "," << format_double(ms.reduction)
            << ","
            << format_double(std::isinf(mse_unstable_err) ? -1.0
                                                          : mse_unstable_err)
            << "," << format_double(mse_worst_stable) << ","
            << format_double(mse_mean_stable) << "\n";
  }
}

}  // namespace lds
