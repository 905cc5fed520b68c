#include "rankcause/dynsys.hpp"
#include "rankcause/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rankcause;

namespace {

SystemSpec short_spec(Family f, Index n = 2000, Index transient = 2000) {
  SystemSpec s = default_spec(f);
  s.n_samples = n;
  s.transient = transient;
  s.seed = 17;
  return s;
}

Eigen::VectorXd one_euler_step(SystemSpec s, const Eigen::VectorXd& x0) {
  s.integrator = Integrator::euler;
  s.downsample = 1;
  s.transient = 0;
  s.n_samples = 1;
  s.initial_state = x0;
  return simulate(s).samples.row(0).transpose();
}

}  // namespace

TEST_CASE("identical spec and seed give bit-identical trajectories") {
  for (Family f : {Family::rossler_pair, Family::lorenz_pair, Family::lorenz96_pair, Family::rossler_network}) {
    const auto s = short_spec(f, 500, 200);
    CHECK(simulate(s).samples == simulate(s).samples);
  }
  auto a = short_spec(Family::rossler_pair, 100, 10), b = a;
  b.seed = 18;
  CHECK(simulate(a).samples != simulate(b).samples);
}

TEST_CASE("trajectory layout and names") {
  const auto t = simulate(short_spec(Family::rossler_pair, 10, 0));
  CHECK(t.samples.rows() == 10);
  CHECK(t.samples.cols() == 6);
  CHECK(t.groups.at("X") == std::vector<Index>{0, 1, 2});
  CHECK(t.groups.at("Y") == std::vector<Index>{3, 4, 5});
  CHECK(t.variable_names.front() == "x1");
  CHECK(t.variable_names.back() == "y3");
  CHECK(t.sampling_step == doctest::Approx(0.0785 * 4));
  const auto l96 = simulate(short_spec(Family::lorenz96_pair, 5, 0));
  CHECK(l96.samples.cols() == 80);
  const auto net = simulate(short_spec(Family::rossler_network, 5, 0));
  CHECK(net.groups.at("Z") == std::vector<Index>{6, 7, 8});
}

TEST_CASE("initial conditions follow the family protocol") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = default_spec(Family::rossler_pair);
    r.seed = seed;
    const auto x = initial_state(r);
    CHECK(x.minCoeff() >= 5.0);
    CHECK(x.maxCoeff() <= 15.0);
    auto l = default_spec(Family::lorenz96_pair);
    l.seed = seed;
    const auto y = initial_state(l);
    CHECK(y(0) >= 5.0);
    CHECK(y(0) <= 6.0);
    CHECK(y(40) >= 6.0);
    CHECK(y(40) <= 7.0);
    for (Index i = 1; i < 40; ++i) REQUIRE(y(i) == 5.0);
    for (Index i = 41; i < 80; ++i) REQUIRE(y(i) == 6.0);
  }
}

TEST_CASE("Rossler drift with diffusive coupling") {
  auto s = default_spec(Family::rossler_pair);
  s.params = RosslerParams{1.015, 0.985, 0.2, 0.1};
  s.dt = 0.001;
  Eigen::VectorXd x(6);
  x << 1.0, 2.0, 3.0, -1.0, 0.5, 0.25;
  const auto next = one_euler_step(s, x);
  Eigen::VectorXd f(6);
  f << -1.015 * 2.0 - 3.0 + 0.1 * (-1.0 - 1.0), 1.015 * 1.0 + 0.15 * 2.0, 0.2 + 3.0 * (1.0 - 10.0),
      -0.985 * 0.5 - 0.25 + 0.2 * (1.0 - -1.0), 0.985 * -1.0 + 0.15 * 0.5, 0.2 + 0.25 * (-1.0 - 10.0);
  for (Index i = 0; i < 6; ++i) CHECK(next(i) == doctest::Approx(x(i) + 0.001 * f(i)).epsilon(1e-14));
}

TEST_CASE("Lorenz coupling uses the squared driver variable") {
  auto s = default_spec(Family::lorenz_pair);
  s.params = LorenzParams{0.3, 0.7};
  Eigen::VectorXd x(6);
  x << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  const auto next = one_euler_step(s, x);
  const double dt = s.dt;
  CHECK(next(1) == doctest::Approx(2.0 + dt * (1.0 * (28.0 - 3.0) - 2.0 + 0.7 * 16.0)).epsilon(1e-14));
  CHECK(next(4) == doctest::Approx(5.0 + dt * (4.0 * (28.0 - 6.0) - 5.0 + 0.3 * 1.0)).epsilon(1e-14));
  CHECK(next(0) == doctest::Approx(1.0 + dt * 10.0).epsilon(1e-14));
}

TEST_CASE("Lorenz 96 drift") {
  auto s = default_spec(Family::lorenz96_pair);
  s.params = Lorenz96Params{5.0, 6.0, 0.5, 2.0, 4};
  Eigen::VectorXd x(8);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  const auto next = one_euler_step(s, x);
  const double dt = s.dt;
  // x_0' = omega (x_1 - x_{-2}) x_{-1} - x_0 + F_X with cyclic indices.
  CHECK(next(0) == doctest::Approx(1 + dt * 2.0 * ((2 - 3) * 4 - 1 + 5.0)).epsilon(1e-14));
  CHECK(next(4) == doctest::Approx(5 + dt * ((6 - 7) * 8 - 5 + 6.0 + 0.5 * 1)).epsilon(1e-14));
}

TEST_CASE("a driven-only perturbation leaves the driver bit-identical") {
  auto s = short_spec(Family::rossler_pair, 1000, 0);
  s.params = RosslerParams{1.015, 1.015, 0.12, 0.0};
  Eigen::VectorXd x0 = initial_state(s);
  s.initial_state = x0;
  const auto base = simulate(s);
  x0(3) += 0.5;
  x0(5) *= 1.1;
  s.initial_state = x0;
  const auto moved = simulate(s);
  CHECK(base.samples.leftCols(3) == moved.samples.leftCols(3));
  CHECK(base.samples.rightCols(3) != moved.samples.rightCols(3));
}

TEST_CASE("the driver of a unidirectional pair matches its uncoupled run") {
  auto free = short_spec(Family::rossler_pair, 500, 100);
  auto driven = free;
  driven.params = RosslerParams{1.015, 1.015, 0.1, 0.0};
  const auto a = simulate(free), b = simulate(driven);
  CHECK(a.samples.leftCols(3) == b.samples.leftCols(3));
  CHECK(a.samples.rightCols(3) != b.samples.rightCols(3));
}

TEST_CASE("strong Rossler coupling synchronizes the pair") {
  auto s = short_spec(Family::rossler_pair, 500, 20000);
  s.params = RosslerParams{1.015, 1.015, 0.25, 0.0};
  const auto t = simulate(s);
  const double gap = (t.samples.leftCols(3) - t.samples.rightCols(3)).cwiseAbs().maxCoeff();
  CHECK(gap < 1e-6);
}

TEST_CASE("measurement noise") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd w(50000, 2);
  for (Index i = 0; i < w.size(); ++i) w(i) = g(rng);
  CHECK(add_measurement_noise(w, 0.0, 1) == w);
  const auto noisy = add_measurement_noise(w, 1.0, 1);
  for (Index c = 0; c < 2; ++c) {
    const auto col = noisy.col(c).array();
    const double sd = std::sqrt((col - col.mean()).square().mean());
    CHECK(sd == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
  }
  CHECK(add_measurement_noise(w, 1.0, 1) == noisy);
  CHECK_THROWS_AS(add_measurement_noise(w, -0.1, 1), ConfigError);
}

TEST_CASE("dynamical noise") {
  SUBCASE("zero amplitude equals a deterministic Euler run") {
    auto s = short_spec(Family::rossler_pair, 300, 100);
    const auto noisy = simulate_dynamical_noise(s, 0.0);
    s.integrator = Integrator::euler;
    const auto plain = simulate(s);
    CHECK((noisy.samples - plain.samples).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("Ornstein-Uhlenbeck stationary variance") {
    const double theta = 0.5, sigma = 0.8;
    IntegrationPlan plan;
    plan.dt = 0.01;
    plan.downsample = 10;
    plan.transient = 1000;
    plan.n_samples = 100000;
    plan.integrator = Integrator::euler;
    plan.noise_amplitude = sigma;
    plan.noise_targets = {0};
    Rng rng = make_rng(1, "noise");
    const auto out = integrate([&](const Eigen::VectorXd& x, Eigen::VectorXd& d) { d(0) = -theta * x(0); },
                               Eigen::VectorXd::Zero(1), plan, &rng);
    const auto c = out.col(0).array();
    const double var = (c - c.mean()).square().mean();
    CHECK(var == doctest::Approx(sigma * sigma / (2 * theta)).epsilon(0.1));
  }
  SUBCASE("noise draws do not shift initial conditions") {
    auto s = short_spec(Family::rossler_pair, 10, 0);
    const auto x0 = initial_state(s);
    s.integrator = Integrator::euler;
    s.noise = NoiseSpec{NoiseKind::dynamical, 0.1, {}};
    CHECK(initial_state(s) == x0);
  }
}

TEST_CASE("blow-up reports the model time reached") {
  IntegrationPlan plan;
  plan.dt = 0.1;
  plan.n_samples = 100;
  try {
    integrate([](const Eigen::VectorXd& x, Eigen::VectorXd& d) { d(0) = x(0) * x(0); }, Eigen::VectorXd::Ones(1), plan,
              nullptr);
    FAIL("expected a SimulationError");
  } catch (const SimulationError& e) {
    CHECK(e.time_reached() > 0.0);
    CHECK(e.time_reached() < 10.0);
  }
}

TEST_CASE("spec validation") {
  auto s = default_spec(Family::rossler_pair);
  s.noise = NoiseSpec{NoiseKind::dynamical, 0.1, {}};
  CHECK_THROWS_AS(s.validate(), ConfigError);  // needs euler
  s = default_spec(Family::rossler_pair);
  s.dt = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = default_spec(Family::lorenz96_pair);
  s.params = Lorenz96Params{5, 6, 0, -1.0, 40};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = default_spec(Family::lorenz_pair);
  s.params = RosslerParams{};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK(family_from_string("rossler") == Family::rossler_pair);
  CHECK(family_from_string("lorenz96") == Family::lorenz96_pair);
  CHECK_THROWS_AS(family_from_string("duffing"), ConfigError);
}
