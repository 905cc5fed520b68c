#include "rankcause/gain.hpp"
#include "rankcause/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace rankcause;

namespace {

// X: two autonomous AR(1) coordinates. Y: driven by X with lag 1.
// Z: independent noise. T samples per realization.
TrajectoryEnsemble coupled_ensemble(Index n, Index t, double coupling, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Eigen::MatrixXd> data;
  for (Index r = 0; r < n; ++r) {
    Eigen::MatrixXd m(t, 5);
    for (Index d = 0; d < 5; ++d) m(0, d) = g(rng);
    for (Index i = 1; i < t; ++i) {
      m(i, 0) = 0.6 * m(i - 1, 0) + g(rng);
      m(i, 1) = 0.3 * m(i - 1, 1) + g(rng);
      m(i, 2) = 0.4 * m(i - 1, 2) + coupling * m(i - 1, 0) + 0.3 * g(rng);
      m(i, 3) = 0.4 * m(i - 1, 3) + 0.5 * m(i - 1, 2) + 0.3 * g(rng);
      m(i, 4) = g(rng);
    }
    data.push_back(m);
  }
  return TrajectoryEnsemble(std::move(data), {{"X", {0, 1}}, {"Y", {2, 3}}, {"Z", {4}}}, 1.0, seed,
                            {"x1", "x2", "y1", "y2", "z1"});
}

ScanConfig small_config(Index k = 2, Index tau = 1) {
  ScanConfig c;
  c.k = k;
  c.tau = tau;
  c.alpha_grid = linear_alpha_grid(2.0, 11);
  return c;
}

ImbalanceProfile hand_profile(std::vector<double> alpha, std::vector<double> delta) {
  ImbalanceProfile p;
  p.alpha_grid = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Index>(alpha.size()));
  p.delta = Eigen::Map<Eigen::VectorXd>(delta.data(), static_cast<Index>(delta.size()));
  return p;
}

}  // namespace

TEST_CASE("imbalance_gain on hand profiles") {
  const auto g = imbalance_gain(hand_profile({0, 1, 2}, {0.5, 0.4, 0.45}));
  CHECK(g.gain == doctest::Approx(0.2));
  CHECK(g.alpha_opt == 1.0);
  CHECK(g.alpha_index == 1);

  const auto flat = imbalance_gain(hand_profile({0, 1, 2}, {0.5, 0.5, 0.5}));
  CHECK(flat.gain == 0.0);
  CHECK(flat.alpha_opt == 0.0);

  const auto tie = imbalance_gain(hand_profile({0, 1, 2, 3}, {0.5, 0.3, 0.4, 0.3}));
  CHECK(tie.alpha_opt == 1.0);

  CHECK_THROWS_AS(imbalance_gain(hand_profile({0, 1}, {0.0, 0.0})), InternalError);
}

TEST_CASE("grid helpers") {
  const auto g = linear_alpha_grid(1.5, 4);
  CHECK(g(0) == 0.0);
  CHECK(g(3) == 1.5);
  CHECK(default_alpha_grid().size() == 50);
  CHECK(default_neighbor_count(100) == 5);
  CHECK(default_neighbor_count(10) == 1);
  CHECK(default_neighbor_count(5000) == 20);
}

TEST_CASE("scan_alpha matches the brute-force imbalance at every alpha") {
  const auto e = coupled_ensemble(150, 4, 0.8, 1);
  const auto cfg = small_config(3, 1);
  const auto prof = scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg);
  const std::vector<Index> xv{0, 1}, yv{2, 3};
  const Index t0 = prof.t0;
  const Eigen::MatrixXd x = snapshot(e, xv, t0).points, y0 = snapshot(e, yv, t0).points,
                        y1 = snapshot(e, yv, t0 + 1).points;
  const Eigen::MatrixXd db = oracle::distance_matrix(y1);
  for (Index a = 0; a < cfg.alpha_grid.size(); ++a) {
    const double expect =
        oracle::information_imbalance(oracle::distance_matrix({{&x, cfg.alpha_grid(a)}, {&y0, 1.0}}), db, 3);
    REQUIRE(prof.delta(a) == expect);
  }
  const auto g = imbalance_gain(prof);
  CHECK(g.gain > 0.1);
  CHECK(g.alpha_opt > 0.0);
}

TEST_CASE("a zero driver leaves the profile flat") {
  auto e = coupled_ensemble(80, 4, 0.8, 2);
  std::vector<Eigen::MatrixXd> data;
  for (Index r = 0; r < e.realizations(); ++r) {
    Eigen::MatrixXd m = e.realization(r);
    m.col(0).setZero();
    m.col(1).setZero();
    data.push_back(m);
  }
  const TrajectoryEnsemble z(data, e.groups(), 1.0);
  const auto prof = scan_alpha(z, {"X", std::nullopt}, {"Y", std::nullopt}, small_config());
  for (Index a = 0; a < prof.delta.size(); ++a) CHECK(prof.delta(a) == prof.delta(0));
  CHECK(imbalance_gain(prof).gain == 0.0);
}

TEST_CASE("gain is nonnegative and below one") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto e = coupled_ensemble(60, 4, 0.3 * static_cast<double>(s), s);
    for (const auto& [a, b] : {std::pair{"X", "Y"}, std::pair{"Y", "X"}}) {
      const auto g = imbalance_gain(scan_alpha(e, {a, std::nullopt}, {b, std::nullopt}, small_config()));
      CHECK(g.gain >= 0.0);
      CHECK(g.gain < 1.0);
    }
  }
}

TEST_CASE("units covariance: scaling the driver and dividing the grid reproduces the profile") {
  const auto e = coupled_ensemble(100, 4, 0.8, 3);
  std::vector<Eigen::MatrixXd> data;
  for (Index r = 0; r < e.realizations(); ++r) {
    Eigen::MatrixXd m = e.realization(r);
    m.leftCols(2) *= 4.0;
    data.push_back(m);
  }
  const TrajectoryEnsemble scaled(data, e.groups(), 1.0);
  auto cfg = small_config();
  const auto base = scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg);
  cfg.alpha_grid /= 4.0;
  const auto moved = scan_alpha(scaled, {"X", std::nullopt}, {"Y", std::nullopt}, cfg);
  CHECK(base.delta == moved.delta);
  CHECK(imbalance_gain(moved).alpha_opt == imbalance_gain(base).alpha_opt / 4.0);
}

TEST_CASE("identity permutation reproduces the plain scan") {
  const auto e = coupled_ensemble(90, 4, 0.8, 4);
  const auto cfg = small_config();
  const auto plain = scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg);
  Permutation id(90);
  std::iota(id.begin(), id.end(), Index{0});
  const std::vector<Permutation> perms{{}, id};
  const auto many = scan_alpha_permuted(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg, perms);
  REQUIRE(many.size() == 2);
  CHECK(many[0].delta == plain.delta);
  CHECK(many[1].delta == plain.delta);
}

TEST_CASE("permuted scan matches an oracle on the relabeled driver") {
  const auto e = coupled_ensemble(70, 4, 0.8, 5);
  const auto cfg = small_config(2, 1);
  Permutation sigma(70);
  std::iota(sigma.begin(), sigma.end(), Index{0});
  std::mt19937_64 rng(5);
  std::shuffle(sigma.begin(), sigma.end(), rng);
  const std::vector<Permutation> perms{sigma};
  const auto prof = scan_alpha_permuted(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg, perms).front();
  const std::vector<Index> xv{0, 1}, yv{2, 3};
  const Eigen::MatrixXd x = snapshot(e, xv, prof.t0).points;
  Eigen::MatrixXd xp(x.rows(), x.cols());
  for (Index i = 0; i < 70; ++i) xp.row(i) = x.row(sigma[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd y0 = snapshot(e, yv, prof.t0).points, y1 = snapshot(e, yv, prof.t0 + 1).points;
  const auto db = oracle::distance_matrix(y1);
  for (Index a = 0; a < cfg.alpha_grid.size(); ++a)
    REQUIRE(prof.delta(a) ==
            oracle::information_imbalance(oracle::distance_matrix({{&xp, cfg.alpha_grid(a)}, {&y0, 1.0}}), db, 2));
}

TEST_CASE("conditional scan reduces to the plain gain") {
  const auto e = coupled_ensemble(100, 4, 0.8, 6);
  const auto cfg = small_config();
  const auto plain = imbalance_gain(scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg));
  const Eigen::VectorXd zero_grid = Eigen::VectorXd::Zero(1);
  const auto c = conditional_scan(e, {"X", std::nullopt}, {"Z", std::nullopt}, {"Y", std::nullopt}, cfg, zero_grid);
  CHECK(c.gain == plain.gain);
  CHECK(c.alpha_x_opt == plain.alpha_opt);
  CHECK(c.denominator == plain.profile.delta(0));
}

TEST_CASE("conditional scan against a brute-force surface") {
  const auto e = coupled_ensemble(60, 4, 0.8, 7);
  auto cfg = small_config(2, 1);
  cfg.alpha_grid = linear_alpha_grid(2.0, 4);
  const Eigen::VectorXd zg = linear_alpha_grid(1.0, 3);
  const auto c = conditional_scan(e, {"X", std::nullopt}, {"Z", std::nullopt}, {"Y", std::nullopt}, cfg, zg);
  const std::vector<Index> xv{0, 1}, yv{2, 3}, zv{4};
  const Eigen::MatrixXd x = snapshot(e, xv, c.t0).points, z = snapshot(e, zv, c.t0).points,
                        y0 = snapshot(e, yv, c.t0).points, y1 = snapshot(e, yv, c.t0 + 1).points;
  const auto db = oracle::distance_matrix(y1);
  double num = 1e300, den = 1e300;
  for (Index a = 0; a < 4; ++a)
    for (Index b = 0; b < 3; ++b) {
      // Canonical grouping: (driver + conditioner) + present.
      const Index n = x.rows();
      Eigen::MatrixXd d(n, n);
      const auto dx = oracle::distance_matrix(x), dz = oracle::distance_matrix(z), dy = oracle::distance_matrix(y0);
      const double ax = cfg.alpha_grid(a), az = zg(b);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) d(i, j) = ((ax * ax) * dx(i, j) + (az * az) * dz(i, j)) + dy(i, j);
      const double v = oracle::information_imbalance(d, db, 2);
      REQUIRE(c.surface(a, b) == v);
      num = std::min(num, v);
      if (a == 0) den = std::min(den, v);
    }
  CHECK(c.numerator == num);
  CHECK(c.denominator == den);
  CHECK(c.gain == doctest::Approx((den - num) / den));
}

TEST_CASE("average_gain") {
  SUBCASE("single profile equals imbalance_gain") {
    const auto p = hand_profile({0, 1, 2}, {0.5, 0.4, 0.45});
    const std::vector<ImbalanceProfile> ps{p};
    const auto avg = average_gain(ps);
    CHECK(avg.gain == imbalance_gain(p).gain);
    CHECK(avg.alpha_shared == 1.0);
    CHECK(avg.standard_error == 0.0);
  }
  SUBCASE("agreeing minima") {
    const std::vector<ImbalanceProfile> ps{hand_profile({0, 1, 2}, {0.5, 0.3, 0.45}),
                                           hand_profile({0, 1, 2}, {0.6, 0.5, 0.55})};
    const auto avg = average_gain(ps);
    CHECK(avg.alpha_shared == 1.0);
    const double g1 = 0.2 / 0.5, g2 = 0.1 / 0.6;
    CHECK(avg.gain == doctest::Approx((g1 + g2) / 2));
    CHECK(avg.standard_error == doctest::Approx(std::abs(g1 - g2) / 2));  // sd/sqrt(2), ddof 1
  }
  SUBCASE("noisy minima around 0.5 against an exhaustive grid oracle") {
    const Eigen::VectorXd grid = linear_alpha_grid(1.5, 31);  // step 0.05
    std::mt19937_64 rng(8);
    std::normal_distribution<double> jitter(0.0, 0.08);
    std::vector<ImbalanceProfile> ps;
    for (int e = 0; e < 20; ++e) {
      const double center = 0.5 + jitter(rng);
      std::vector<double> a(grid.data(), grid.data() + grid.size()), d;
      for (double v : a) d.push_back(0.8 - 0.3 * std::exp(-(v - center) * (v - center) / 0.1) + 0.3 * std::exp(-center * center / 0.1));
      ps.push_back(hand_profile(a, d));
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid.size());
    for (const auto& p : ps) mean += ((p.delta(0) - p.delta.array()) / p.delta(0)).matrix();
    Index best = 0;
    mean.maxCoeff(&best);
    const auto avg = average_gain(ps);
    CHECK(avg.alpha_index == best);
    CHECK(std::abs(avg.alpha_shared - 0.5) <= 0.05 + 1e-12);
  }
  SUBCASE("heterogeneous grids are rejected") {
    const std::vector<ImbalanceProfile> ps{hand_profile({0, 1}, {0.5, 0.4}), hand_profile({0, 2}, {0.5, 0.4})};
    CHECK_THROWS_AS(average_gain(ps), ConfigError);
  }
}

TEST_CASE("tau_scan with one lag equals scan_alpha") {
  const auto e = coupled_ensemble(60, 6, 0.8, 9);
  auto cfg = small_config();
  cfg.tau = 2;
  const std::vector<Index> taus{2};
  const auto scan = tau_scan(e, {"X", std::nullopt}, {"Y", std::nullopt}, small_config(), taus);
  REQUIRE(scan.size() == 1);
  CHECK(scan[0].profile.delta == scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg).delta);
}

TEST_CASE("embedded views use the delay vectors") {
  const auto e = coupled_ensemble(60, 8, 0.8, 10);
  ScanConfig cfg = small_config(2, 1);
  const SystemView x{"X", EmbeddingSpec{0, 3, 1}}, y{"Y", EmbeddingSpec{2, 2, 2}};
  const auto prof = scan_alpha(e, x, y, cfg);
  CHECK(prof.t0 == 2);
  const Eigen::MatrixXd xe = delay_embed(e, {0, 3, 1}, 2).points, y0 = delay_embed(e, {2, 2, 2}, 2).points,
                        y1 = delay_embed(e, {2, 2, 2}, 3).points;
  const auto db = oracle::distance_matrix(y1);
  for (Index a = 0; a < cfg.alpha_grid.size(); ++a)
    REQUIRE(prof.delta(a) ==
            oracle::information_imbalance(oracle::distance_matrix({{&xe, cfg.alpha_grid(a)}, {&y0, 1.0}}), db, 2));
  CHECK_THROWS_AS(scan_alpha(e, {"X", EmbeddingSpec{2, 2, 1}}, y, cfg), ConfigError);
}

TEST_CASE("configuration errors") {
  const auto e = coupled_ensemble(30, 4, 0.5, 11);
  auto cfg = small_config();
  CHECK_THROWS_AS(scan_alpha(e, {"X", std::nullopt}, {"X", std::nullopt}, cfg), ConfigError);
  cfg.alpha_grid = Eigen::Vector2d(0.5, 1.0);
  CHECK_THROWS_AS(scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg), ConfigError);
  cfg = small_config();
  cfg.tau = 4;
  CHECK_THROWS_AS(scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg), ConfigError);
  cfg = small_config();
  cfg.k = 30;
  CHECK_THROWS_AS(scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, cfg), ConfigError);
}
