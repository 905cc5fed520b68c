#include "rankcause/report.hpp"
#include "rankcause/error.hpp"

#include <doctest.h>

#include <sstream>

using namespace rankcause;

TEST_CASE("system spec JSON round trip") {
  SystemSpec s = default_spec(Family::lorenz_pair);
  s.params = LorenzParams{0.05, 0.1};
  s.seed = 99;
  s.n_samples = 1234;
  const Json j = to_json(s);
  const SystemSpec back = system_spec_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(std::get<LorenzParams>(back.params).eps_yx == 0.1);
  CHECK(back.dt == 0.01);
}

TEST_CASE("system spec parsing keeps family defaults and rejects unknown keys") {
  const SystemSpec s = system_spec_from_json(Json::parse(R"({"family":"lorenz96","params":{"eps":1.0}})"));
  CHECK(s.family == Family::lorenz96_pair);
  CHECK(s.dt == 0.03);
  CHECK(s.downsample == 2);
  CHECK(std::get<Lorenz96Params>(s.params).forcing_y == 6.0);
  CHECK_THROWS_AS(system_spec_from_json(Json::parse(R"({"family":"rossler","colour":1})")), ConfigError);
  CHECK_THROWS_AS(system_spec_from_json(Json::parse(R"({"family":"rossler","params":{"eps":1}})")), ConfigError);
  CHECK_THROWS_AS(system_spec_from_json(Json::parse(R"({"family":"rossler","dt":-1})")), ConfigError);
}

TEST_CASE("network couplings round trip") {
  const SystemSpec s = system_spec_from_json(
      Json::parse(R"({"family":"rossler_network","params":{"coupling":[[0,0,0.03],[0,0,0.05],[0,0,0]]}})"));
  const auto& p = std::get<RosslerNetworkParams>(s.params);
  CHECK(p.coupling(p.index_of("X"), p.index_of("Z")) == 0.03);
  CHECK(p.coupling(p.index_of("Y"), p.index_of("Z")) == 0.05);
  CHECK(to_json(system_spec_from_json(to_json(s))) == to_json(s));
  CHECK_THROWS_AS(system_spec_from_json(Json::parse(R"({"family":"rossler_network","params":{"coupling":[[0]]}})")),
                  ConfigError);
}

TEST_CASE("profiles survive a JSON round trip bit-exactly") {
  ImbalanceProfile p;
  p.alpha_grid = linear_alpha_grid(1.5, 7);
  p.delta = Eigen::VectorXd::LinSpaced(7, 0.3, 0.123456789012345);
  p.k = 3;
  p.tau = 5;
  p.n = 2000;
  p.driver = "X";
  p.driven = "Y";
  const auto back = profile_from_json(Json::parse(to_json(p).dump()));
  CHECK(back.alpha_grid == p.alpha_grid);
  CHECK(back.delta == p.delta);
  CHECK(back.k == 3);
  CHECK_THROWS_AS(profile_from_json(Json::parse(R"({"alpha_grid":[0]})")), DataError);
}

TEST_CASE("CSV writers") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  ImbalanceProfile p;
  p.alpha_grid = Eigen::Vector2d(0.0, 0.5);
  p.delta = Eigen::Vector2d(0.4, 0.35);
  std::ostringstream out;
  write_profile_csv(out, p);
  CHECK(out.str() == "alpha,delta\n0,0.4\n0.5,0.35\n");

  std::vector<TauPoint> taus(1);
  taus[0].tau = 5;
  taus[0].average.gain = 0.25;
  taus[0].average.standard_error = 0.01;
  std::ostringstream t;
  write_tau_csv(t, taus);
  CHECK(t.str() == "tau,gain,se\n5,0.25,0.01\n");

  FprReport r;
  r.sweep = {{0.001, 0.0}, {0.05, 0.5}};
  std::ostringstream s;
  write_sweep_csv(s, r);
  CHECK(s.str() == "p_threshold,fpr\n0.001,0\n0.05,0.5\n");
}
