#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lds/model.hpp"
#include "oracles.hpp"

using namespace lds;

TEST_CASE("generate_system is deterministic and stays in the family") {
  const SystemParams a = generate_system(3, 2, 42);
  const SystemParams b = generate_system(3, 2, 42);
  CHECK(a.A == b.A);
  CHECK(a.C == b.C);

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double shift = i == j ? 1.0 : 0.0;
      CHECK(std::abs(a.A(i, j) - shift) <= 0.5);
    }
  }
  CHECK(generate_system(3, 2, 43).A != a.A);
  CHECK_THROWS_AS(generate_system(0, 1, 1), DimensionError);
}

TEST_CASE("most generated 3x3 systems are unstable") {
  int unstable = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const SystemParams params = generate_system(3, 1, seed);
    if (eigenvalues_only(params.A).cwiseAbs().maxCoeff() > 1.0) ++unstable;
  }
  const double fraction = unstable / 1000.0;
  INFO("unstable fraction: ", fraction);
  CHECK(fraction > 0.5);
}

TEST_CASE("simulate with frozen dynamics keeps the initial output") {
  SystemParams params;
  params.A = RealMatrix::Zero(2, 2);
  params.C = RealMatrix::Identity(2, 2);
  RealVector s(2);
  s << 1.0, 2.0;
  const Trajectory traj =
      simulate(params, s, {1.0, 2.0}, TimeKind::Continuous);
  CHECK(traj.samples.row(0)(0) == doctest::Approx(1.0));
  CHECK(traj.samples.row(0)(1) == doctest::Approx(2.0));
  CHECK(traj.samples.row(1)(0) == doctest::Approx(1.0));
  CHECK(traj.samples.row(1)(1) == doctest::Approx(2.0));
}

TEST_CASE("scalar discrete simulation gives powers of two") {
  SystemParams params;
  params.A = RealMatrix::Constant(1, 1, 2.0);
  params.C = RealMatrix::Constant(1, 1, 1.0);
  const Trajectory traj = simulate(params, RealVector::Ones(1),
                                   {1.0, 2.0, 3.0}, TimeKind::Discrete);
  CHECK(traj.samples(0, 0) == 2.0);
  CHECK(traj.samples(1, 0) == 4.0);
  CHECK(traj.samples(2, 0) == 8.0);
}

TEST_CASE("continuous simulation matches the kernel oracle") {
  const SystemParams params = generate_system(3, 2, 5);
  RealVector s(3);
  s << 0.4, -1.0, 0.7;
  const Trajectory traj = simulate(params, s, {1.5}, TimeKind::Continuous);
  const RealVector expected =
      params.C * oracles::taylor_mat_exp(params.A, 1.5, 60) * s;
  CHECK((traj.samples.row(0).transpose() - expected).norm() < 1e-10);
}

TEST_CASE("continuous simulation is one-step consistent") {
  const SystemParams params = generate_system(3, 1, 11);
  RealVector s(3);
  s << 1.0, -0.3, 0.2;
  const double t1 = 0.6, t2 = 0.9;
  const Trajectory direct =
      simulate(params, s, {t1 + t2}, TimeKind::Continuous);
  const RealVector midway = mat_exp(params.A, t1) * s;
  const Trajectory relayed =
      simulate(params, midway, {t2}, TimeKind::Continuous);
  CHECK((direct.samples.row(0) - relayed.samples.row(0)).norm() < 1e-8);
}

TEST_CASE("discrete simulation is observation-consistent step by step") {
  const SystemParams params = generate_system(3, 3, 17);
  RealVector s(3);
  s << 0.1, 0.2, -0.4;
  const Trajectory traj =
      simulate(params, s, {1.0, 2.0, 3.0}, TimeKind::Discrete);
  RealVector z = s;
  for (int t = 0; t < 3; ++t) {
    z = params.A * z;
    CHECK((traj.samples.row(t).transpose() - params.C * z).norm() == 0.0);
  }
}

TEST_CASE("make_dataset produces the requested shape deterministically") {
  const SystemParams params = generate_system(3, 1, 0);
  const Dataset d1 = make_dataset(params, 50, 50, TimeKind::Discrete, 1.0, 9);
  CHECK(d1.trajectory_count() == 50);
  CHECK(d1.total_samples() == 2500);
  for (const auto& traj : d1.trajectories) {
    CHECK(traj.sample_count() == 50);
    CHECK(traj.times.front() == 1.0);
    CHECK(traj.times.back() == 50.0);
  }
  const Dataset d2 = make_dataset(params, 50, 50, TimeKind::Discrete, 1.0, 9);
  for (int k = 0; k < 50; ++k) {
    CHECK(d1.trajectories[k].samples == d2.trajectories[k].samples);
  }

  const Dataset single = make_dataset(params, 1, 1, TimeKind::Discrete, 1.0, 3);
  CHECK(single.total_samples() == 1);
  CHECK(single.trajectories[0].times[0] == 1.0);

  const Dataset zero = make_dataset(params, 3, 4, TimeKind::Discrete, 0.0, 3);
  for (const auto& traj : zero.trajectories) {
    CHECK(traj.samples.norm() == 0.0);
  }
}

TEST_CASE("continuous datasets have strictly increasing irregular times") {
  const SystemParams params = generate_system(2, 1, 1);
  const Dataset d = make_dataset(params, 5, 20, TimeKind::Continuous, 1.0, 4);
  for (const auto& traj : d.trajectories) {
    double prev = 0.0;
    for (double t : traj.times) {
      CHECK(t > prev);
      CHECK(t <= 20.0);
      prev = t;
    }
  }
}

TEST_CASE("direct state access degenerate case: C = I reproduces the state") {
  SystemParams params = generate_system(3, 3, 23);
  params.C = RealMatrix::Identity(3, 3);
  const Dataset d = make_dataset(params, 2, 4, TimeKind::Discrete, 1.0, 8);
  for (const auto& traj : d.trajectories) {
    RealVector z = *traj.true_initial_state;
    for (int i = 0; i < traj.sample_count(); ++i) {
      z = params.A * z;
      CHECK((traj.samples.row(i).transpose() - z).norm() == 0.0);
    }
  }
}

TEST_CASE("dataset CSV and metadata round trip losslessly") {
  namespace fs = std::filesystem;
  const SystemParams params = generate_system(3, 2, 77);
  const Dataset original =
      make_dataset(params, 4, 6, TimeKind::Continuous, 1.3, 5);
  const auto dir = fs::temp_directory_path() / "lds_model_test";
  fs::create_directories(dir);
  const std::string csv = (dir / "d.csv").string();
  const std::string meta = (dir / "d.json").string();
  write_dataset_csv(original, csv);
  write_dataset_metadata(original, &params, 5, meta);

  const LoadedDataset loaded = read_dataset(csv, meta);
  CHECK(loaded.seed == 5);
  REQUIRE(loaded.truth.has_value());
  CHECK(loaded.truth->A == params.A);
  CHECK(loaded.truth->C == params.C);
  REQUIRE(loaded.dataset.trajectory_count() == 4);
  for (int k = 0; k < 4; ++k) {
    const auto& a = original.trajectories[k];
    const auto& b = loaded.dataset.trajectories[k];
    CHECK(a.times == b.times);
    CHECK(a.samples == b.samples);
    REQUIRE(b.true_initial_state.has_value());
    CHECK(*a.true_initial_state == *b.true_initial_state);
  }
  fs::remove_all(dir);
}

TEST_CASE("format_double survives a text round trip bit-exactly") {
  for (double v : {1.0, -0.1, 3.141592653589793, 1e-17, 123456789.123456789,
                   2.2250738585072014e-308}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}
