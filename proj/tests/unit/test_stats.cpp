#include "rankcause/stats.hpp"
#include "rankcause/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace rankcause;

namespace {

TrajectoryEnsemble pair_ensemble(Index n, double coupling, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Eigen::MatrixXd> data;
  for (Index r = 0; r < n; ++r) {
    Eigen::MatrixXd m(3, 2);
    m(0, 0) = g(rng);
    m(0, 1) = g(rng);
    for (Index t = 1; t < 3; ++t) {
      m(t, 0) = 0.5 * m(t - 1, 0) + g(rng);
      m(t, 1) = 0.5 * m(t - 1, 1) + coupling * m(t - 1, 0) + 0.5 * g(rng);
    }
    data.push_back(m);
  }
  return TrajectoryEnsemble(std::move(data), {{"X", {0}}, {"Y", {1}}}, 1.0);
}

ScanConfig config() {
  ScanConfig c;
  c.k = 2;
  c.tau = 1;
  c.alpha_grid = linear_alpha_grid(2.0, 11);
  return c;
}

}  // namespace

TEST_CASE("add-one p-value") {
  const std::vector<double> null{0.1, 0.2, 0.3, 0.0};
  CHECK(add_one_p_value(0.25, null) == doctest::Approx(2.0 / 5.0));
  CHECK(add_one_p_value(1.0, null) == doctest::Approx(1.0 / 5.0));
  CHECK(add_one_p_value(0.0, null) == 1.0);
  CHECK(add_one_p_value(0.2, null) == doctest::Approx(3.0 / 5.0));  // ties count against the observation
}

TEST_CASE("driver permutations are seeded permutations") {
  const auto a = driver_permutations(50, 5, 3), b = driver_permutations(50, 5, 3), c = driver_permutations(50, 5, 4);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto& p : a) {
    std::set<Index> s(p.begin(), p.end());
    CHECK(s.size() == 50);
    CHECK(*s.begin() == 0);
    CHECK(*s.rbegin() == 49);
  }
}

TEST_CASE("permutation test") {
  SUBCASE("coupled pair reaches the minimum p-value") {
    const auto e = pair_ensemble(300, 1.0, 1);
    const auto r = permutation_test(e, {"X", std::nullopt}, {"Y", std::nullopt}, config(), 19, 5);
    CHECK(r.observed_gain == imbalance_gain(scan_alpha(e, {"X", std::nullopt}, {"Y", std::nullopt}, config())).gain);
    CHECK(r.null_samples.size() == 19);
    CHECK(r.p_value == doctest::Approx(1.0 / 20.0));
    CHECK_FALSE(r.small_sample);
  }
  SUBCASE("zero observed gain gives p >= 0.5") {
    const auto e = pair_ensemble(200, 1.0, 2);
    const auto r = permutation_test(e, {"Y", std::nullopt}, {"X", std::nullopt}, config(), 19, 5);
    if (r.observed_gain == 0.0) CHECK(r.p_value >= 0.5);
    CHECK(r.p_value >= 1.0 / 20.0);
    CHECK(r.p_value <= 1.0);
  }
  SUBCASE("observed gain is invariant under a whole-ensemble relabeling") {
    const auto e = pair_ensemble(120, 0.6, 3);
    std::vector<Eigen::MatrixXd> data;
    for (Index r = e.realizations() - 1; r >= 0; --r) data.push_back(e.realization(r));
    const TrajectoryEnsemble flipped(data, e.groups(), 1.0);
    const auto a = permutation_test(e, {"X", std::nullopt}, {"Y", std::nullopt}, config(), 19, 1);
    const auto b = permutation_test(flipped, {"X", std::nullopt}, {"Y", std::nullopt}, config(), 19, 1);
    CHECK(a.observed_gain == b.observed_gain);
  }
  SUBCASE("null samples equal gains of explicitly permuted drivers") {
    const auto e = pair_ensemble(80, 0.5, 4);
    const auto r = permutation_test(e, {"X", std::nullopt}, {"Y", std::nullopt}, config(), 19, 9);
    const auto perms = driver_permutations(80, 19, 9);
    for (std::size_t p = 0; p < perms.size(); ++p) {
      std::vector<Eigen::MatrixXd> data;
      for (Index i = 0; i < 80; ++i) {
        Eigen::MatrixXd m = e.realization(i);
        m.col(0) = e.realization(perms[p][static_cast<std::size_t>(i)]).col(0);
        data.push_back(m);
      }
      const TrajectoryEnsemble shuffled(data, e.groups(), 1.0);
      REQUIRE(r.null_samples(static_cast<Index>(p)) ==
              imbalance_gain(scan_alpha(shuffled, {"X", std::nullopt}, {"Y", std::nullopt}, config())).gain);
    }
  }
  SUBCASE("guards") {
    const auto e = pair_ensemble(8, 0.5, 5);
    auto c = config();
    c.k = 1;
    CHECK(permutation_test(e, {"X", std::nullopt}, {"Y", std::nullopt}, c, 19, 1).small_sample);
    CHECK_THROWS_AS(permutation_test(e, {"X", std::nullopt}, {"Y", std::nullopt}, c, 18, 1), ConfigError);
  }
}

TEST_CASE("Student t thresholds and the repeated-estimate test") {
  CHECK(t_threshold(0.001, 19) == doctest::Approx(3.579).epsilon(1e-3));
  CHECK(t_threshold(0.05, 9) == doctest::Approx(1.833).epsilon(1e-3));
  CHECK_THROWS_AS(t_threshold(0.0, 5), ConfigError);

  const std::vector<double> zeros(10, 0.0);
  CHECK_FALSE(repeated_t_test(zeros, 2.0).reject);
  const std::vector<double> constant(10, 0.3);
  const auto inf = repeated_t_test(constant, 2.0);
  CHECK(inf.reject);
  CHECK(inf.infinite);

  const std::vector<double> v{0.1, 0.3, 0.2, 0.4, 0.25};
  const auto t = repeated_t_test(v, 2.0);
  CHECK(t.mean == doctest::Approx(0.25));
  CHECK(t.sd == doctest::Approx(std::sqrt(0.05 / 4)));
  CHECK(t.t_stat == doctest::Approx(0.25 / (t.sd / std::sqrt(5.0))));
  std::vector<double> scaled(v);
  for (double& x : scaled) x *= 37.0;
  CHECK(repeated_t_test(scaled, 2.0).t_stat == doctest::Approx(t.t_stat));
  CHECK(repeated_t_test(scaled, 2.0).reject == t.reject);
  CHECK_THROWS_AS(repeated_t_test(std::vector<double>{1.0}, 2.0), ConfigError);
}

TEST_CASE("t-test calibration under the null") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(20.0));
  const double thr = t_threshold(0.001, 19);
  int rejections = 0;
  std::vector<double> v(20);
  for (int rep = 0; rep < 10000; ++rep) {
    for (double& x : v) x = g(rng);
    rejections += repeated_t_test(v, thr).reject;
  }
  CHECK(rejections <= 25);  // expected 10
}

TEST_CASE("Kendall tau-b") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(kendall_tau(a, a) == 1.0);
  CHECK(kendall_tau(a, std::vector<double>{4, 3, 2, 1}) == -1.0);
  CHECK(kendall_tau(a, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(2.0 / 3.0));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(15), y(15);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    CHECK(kendall_tau(x, y) == doctest::Approx(oracle::kendall_tau_b(x, y)));
  }
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DataError);
}

TEST_CASE("FPR protocol") {
  FprOptions o;
  o.eps_grid = {0.0, 0.1, 0.2};
  o.n_estimates = 10;
  o.p_threshold = 0.01;
  o.sweep = {0.001, 0.5};
  o.seed = 4;
  SUBCASE("symmetric noise rarely rejects; reruns are identical") {
    auto est = [](double, Index, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return std::normal_distribution<double>(0.0, 1.0)(rng);
    };
    const auto a = fpr_protocol(o, est), b = fpr_protocol(o, est);
    CHECK(a.tested == 3);
    CHECK(a.rejections <= 1);
    REQUIRE(a.rows.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) CHECK(a.rows[r].estimates == b.rows[r].estimates);
    REQUIRE(a.sweep.size() == 2);
    CHECK(a.sweep[1].fpr >= a.sweep[0].fpr);
  }
  SUBCASE("systematic positive values always reject") {
    const auto r = fpr_protocol(o, [](double eps, Index i, std::uint64_t) { return 1.0 + eps + 0.01 * i; });
    CHECK(r.fpr == 1.0);
  }
  SUBCASE("failed cells invalidate their row") {
    const auto r = fpr_protocol(o, [](double eps, Index i, std::uint64_t) -> double {
      if (eps > 0.15 && i == 3) throw SimulationError("blow-up", 1.0);
      return 1.0 + 0.01 * i;
    });
    CHECK(r.tested == 2);
    CHECK_FALSE(r.rows[2].valid);
    CHECK(r.rows[2].failures.size() == 1);
  }
}
