#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "phalcor/error.hpp"
#include "phalcor/focusing.hpp"
#include "support.hpp"

using namespace phalcor;
namespace fs = std::filesystem;

TEST_CASE("self focusing has zero residual") {
  const auto grid = make_direction_grid(900);
  const auto h = steering_matrix(em32_like(), 1500.0, grid);
  const auto t = focusing_matrix(h, h);
  CHECK(t.residual < 1e-9);
  CHECK(t.unfocused_residual == 0.0);
  CHECK((t.t * h.entries - h.entries).norm() <= 1e-9 * h.entries.norm());
}

TEST_CASE("frequency-flat array gives a projector") {
  std::mt19937_64 rng(1);
  SteeringMatrix h;
  h.frequency = 1000.0;
  h.entries = test::random_matrix(rng, 6, 40);
  const auto t = focusing_matrix(h, h);
  CHECK((t.t * h.entries - h.entries).norm() < 1e-10 * h.entries.norm());
  CHECK((t.t * t.t - t.t).norm() < 1e-10 * t.t.norm());
}

TEST_CASE("focusing is the least-squares map") {
  std::mt19937_64 rng(2);
  SteeringMatrix hf, h0;
  hf.entries = test::random_matrix(rng, 5, 30);
  h0.entries = test::random_matrix(rng, 5, 30);
  const auto t = focusing_matrix(hf, h0);
  // normal equations: (T Hf - H0) Hf^H = 0
  CHECK(((t.t * hf.entries - h0.entries) * hf.entries.adjoint()).norm() < 1e-9 * h0.entries.squaredNorm());
  const Eigen::MatrixXcd explicit_t =
      h0.entries * hf.entries.adjoint() * (hf.entries * hf.entries.adjoint()).inverse();
  CHECK((t.t - explicit_t).norm() < 1e-9 * explicit_t.norm());
}

TEST_CASE("focusing beats the unfocused residual on the rigid array") {
  const auto grid = make_direction_grid(900);
  const auto a = em32_like();
  const auto h0 = steering_matrix(a, 1500.0, grid);
  const auto hf = steering_matrix(a, 1750.0, grid);
  const auto t = focusing_matrix(hf, h0);
  const double focused = (t.t * hf.entries - h0.entries).norm() / h0.entries.norm();
  const double unfocused = (hf.entries - h0.entries).norm() / h0.entries.norm();
  CHECK(focused == doctest::Approx(t.residual).epsilon(1e-9));
  CHECK(unfocused == doctest::Approx(t.unfocused_residual).epsilon(1e-9));
  CHECK(focused < unfocused);
}

TEST_CASE("rank-deficient steering is truncated") {
  auto a = semicircular6();
  a.mic_positions[1] = a.mic_positions[0];
  const auto grid = make_direction_grid(200);
  const auto t = focusing_matrix(steering_matrix(a, 1200.0, grid), steering_matrix(a, 1000.0, grid));
  CHECK(t.truncated);
  CHECK(t.t.allFinite());
  const auto ok = focusing_matrix(steering_matrix(semicircular6(), 1200.0, grid), steering_matrix(semicircular6(), 1000.0, grid));
  CHECK_FALSE(ok.truncated);
}

TEST_CASE("applying focusing") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(4, 4);
  const auto frames = test::random_matrix(rng, 4, 10);
  CHECK((apply_focusing({id}, {frames})[0] - frames).norm() == 0.0);

  const auto p = test::random_vector(rng, 4);
  const auto t = test::random_matrix(rng, 4, 4);
  const Eigen::MatrixXcd r = p * p.adjoint();
  const Eigen::VectorXcd tp = t * p;
  CHECK((focus_scm(t, r) - tp * tp.adjoint()).norm() < 1e-12 * r.norm() * t.squaredNorm());
}

TEST_CASE("frame focusing then SCM equals SCM then conjugation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = test::random_matrix(rng, 6, 6);
    const auto z = test::random_matrix(rng, 6, 8);
    const auto focused = apply_focusing({t}, {z});
    const auto a = band_scms(focused, {0, 8, false})[0];
    const auto b = focus_scm(t, band_scms({z}, {0, 8, false})[0]);
    CHECK((a - b).norm() <= 1e-12 * b.norm());
    CHECK((a - a.adjoint()).norm() <= 1e-10 * a.norm());
    CHECK(test::min_eigenvalue(a) >= -1e-8 * a.norm());
  }
}

TEST_CASE("focusing residual grows away from the band center") {
  const auto a = em32_like();
  BandPlanParams p;
  p.bins_per_band = 16;
  const auto plan = band_plan(p, 16000.0 / 2400);
  const auto grid = make_direction_grid(300);
  const auto op = build_focusing_operator(a, plan, grid);
  REQUIRE(op.band_count() == plan.bands.size());
  int pairs = 0, violations = 0;
  for (std::size_t b = 0; b < plan.bands.size(); ++b) {
    const auto& band = plan.bands[b];
    // each side of the center separately
    for (int side : {-1, 1}) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t j = 0; j < band.size(); ++j) {
        const double d = band.frequency(j) - band.center;
        if (d * side >= 0) pts.emplace_back(std::abs(d), op.residual[b][j]);
      }
      std::sort(pts.begin(), pts.end());
      for (std::size_t i = 1; i < pts.size(); ++i) {
        ++pairs;
        if (pts[i].second < pts[i - 1].second - 1e-12) ++violations;
      }
    }
    for (std::size_t j = 0; j < band.size(); ++j) CHECK(op.residual[b][j] <= op.unfocused_residual[b][j] + 1e-12);
  }
  CHECK(violations <= 0.05 * pairs);
}

TEST_CASE("focusing operator cache round trip") {
  const auto a = semicircular6();
  BandPlanParams p;
  p.n_bands = 3;
  p.bins_per_band = 4;
  const auto plan = band_plan(p, 16000.0 / 2400);
  const auto grid = make_direction_grid(100);
  const auto dir = fs::temp_directory_path() / "phalcor_focus_cache_test";
  fs::remove_all(dir);
  const auto built = cached_focusing_operator(dir.string(), a, plan, grid);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 1);
  const auto loaded = cached_focusing_operator(dir.string(), a, plan, grid);
  REQUIRE(loaded.t.size() == built.t.size());
  for (std::size_t b = 0; b < built.t.size(); ++b)
    for (std::size_t j = 0; j < built.t[b].size(); ++j) CHECK((loaded.t[b][j] - built.t[b][j]).norm() == 0.0);
  CHECK(loaded.array_hash == built.array_hash);
  CHECK(loaded.plan_hash == built.plan_hash);
  CHECK(loaded.grid_hash == built.grid_hash);

  const auto file = (dir / "op.bin").string();
  save_focusing_operator(file, built);
  const auto again = load_focusing_operator(file);
  CHECK(again.q == 6);
  CHECK(again.residual == built.residual);
  CHECK_THROWS_AS(load_focusing_operator((dir / "missing.bin").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("content hashes separate configurations") {
  CHECK(array_hash(em32_like(), 343.0) != array_hash(semicircular6(), 343.0));
  CHECK(array_hash(em32_like(), 343.0) != array_hash(em32_like(), 340.0));
  CHECK(grid_hash(make_direction_grid(100)) != grid_hash(make_direction_grid(101)));
  const auto plan = band_plan({}, 16000.0 / 2400);
  CHECK(band_plan_hash(plan, 1e-6) != band_plan_hash(plan, 1e-5));
}
