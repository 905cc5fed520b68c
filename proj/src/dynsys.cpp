#include "rankcause/dynsys.hpp"

#include "rankcause/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace rankcause {

std::string to_string(Family family) {
  switch (family) {
    case Family::rossler_pair: return "rossler_pair";
    case Family::lorenz_pair: return "lorenz_pair";
    case Family::lorenz96_pair: return "lorenz96_pair";
    case Family::rossler_network: return "rossler_network";
  }
  throw InternalError("unknown family");
}

Family family_from_string(const std::string& name) {
  if (name == "rossler_pair" || name == "rossler") return Family::rossler_pair;
  if (name == "lorenz_pair" || name == "lorenz") return Family::lorenz_pair;
  if (name == "lorenz96_pair" || name == "lorenz96") return Family::lorenz96_pair;
  if (name == "rossler_network" || name == "rossler_triple") return Family::rossler_network;
  throw ConfigError("unknown system family '" + name + "'");
}

Index RosslerNetworkParams::index_of(const std::string& system) const {
  auto it = std::find(systems.begin(), systems.end(), system);
  if (it == systems.end()) throw ConfigError("unknown system '" + system + "' in Rossler network");
  return static_cast<Index>(it - systems.begin());
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// System names and per-system dimension, in state order.
struct Layout {
  std::vector<std::string> systems;
  Index per_system = 3;
};

Layout layout_of(const SystemSpec& spec) {
  switch (spec.family) {
    case Family::rossler_pair:
    case Family::lorenz_pair: return {{"X", "Y"}, 3};
    case Family::lorenz96_pair: return {{"X", "Y"}, std::get<Lorenz96Params>(spec.params).dimension};
    case Family::rossler_network: return {std::get<RosslerNetworkParams>(spec.params).systems, 3};
  }
  throw InternalError("unknown family");
}

void check_params_match(const SystemSpec& spec) {
  const bool ok = (spec.family == Family::rossler_pair && std::holds_alternative<RosslerParams>(spec.params)) ||
                  (spec.family == Family::lorenz_pair && std::holds_alternative<LorenzParams>(spec.params)) ||
                  (spec.family == Family::lorenz96_pair && std::holds_alternative<Lorenz96Params>(spec.params)) ||
                  (spec.family == Family::rossler_network && std::holds_alternative<RosslerNetworkParams>(spec.params));
  if (!ok) throw ConfigError("parameter block does not match family " + to_string(spec.family));
}

Drift rossler_network_drift(std::vector<double> omegas, Eigen::MatrixXd coupling) {
  return [omegas = std::move(omegas), c = std::move(coupling)](const Eigen::VectorXd& s, Eigen::VectorXd& d) {
    const auto m = static_cast<Index>(omegas.size());
    for (Index i = 0; i < m; ++i) {
      const Index o = 3 * i;
      const double w = omegas[static_cast<std::size_t>(i)];
      double dx1 = -w * s(o + 1) - s(o + 2);
      for (Index j = 0; j < m; ++j)
        if (j != i && c(i, j) != 0.0) dx1 = dx1 + c(i, j) * (s(3 * j) - s(o));
      d(o) = dx1;
      d(o + 1) = w * s(o) + 0.15 * s(o + 1);
      d(o + 2) = 0.2 + s(o + 2) * (s(o) - 10.0);
    }
  };
}

Drift lorenz_drift(LorenzParams p) {
  return [p](const Eigen::VectorXd& s, Eigen::VectorXd& d) {
    d(0) = 10.0 * (s(1) - s(0));
    d(1) = s(0) * (28.0 - s(2)) - s(1) + p.eps_yx * s(3) * s(3);
    d(2) = s(0) * s(1) - 8.0 / 3.0 * s(2);
    d(3) = 10.0 * (s(4) - s(3));
    d(4) = s(3) * (28.0 - s(5)) - s(4) + p.eps_xy * s(0) * s(0);
    d(5) = s(3) * s(4) - 8.0 / 3.0 * s(5);
  };
}

Drift lorenz96_drift(Lorenz96Params p) {
  return [p](const Eigen::VectorXd& s, Eigen::VectorXd& d) {
    const Index n = p.dimension;
    auto wrap = [n](Index i) { return (i % n + n) % n; };
    for (Index i = 0; i < n; ++i) {
      const double fx = (s(wrap(i + 1)) - s(wrap(i - 2))) * s(wrap(i - 1)) - s(i) + p.forcing_x;
      d(i) = p.omega_tilde * fx;
    }
    for (Index i = 0; i < n; ++i) {
      const double* y = s.data() + n;
      d(n + i) = (y[wrap(i + 1)] - y[wrap(i - 2)]) * y[wrap(i - 1)] - y[i] + p.forcing_y + p.eps * s(i);
    }
  };
}

Drift drift_of(const SystemSpec& spec) {
  switch (spec.family) {
    case Family::rossler_pair: {
      const auto& p = std::get<RosslerParams>(spec.params);
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
      c(1, 0) = p.eps_xy;
      c(0, 1) = p.eps_yx;
      return rossler_network_drift({p.omega1, p.omega2}, c);
    }
    case Family::lorenz_pair: return lorenz_drift(std::get<LorenzParams>(spec.params));
    case Family::lorenz96_pair: return lorenz96_drift(std::get<Lorenz96Params>(spec.params));
    case Family::rossler_network: {
      const auto& p = std::get<RosslerNetworkParams>(spec.params);
      return rossler_network_drift(p.omegas, p.coupling);
    }
  }
  throw InternalError("unknown family");
}

}  // namespace

Index SystemSpec::state_dimension() const {
  const Layout l = layout_of(*this);
  return static_cast<Index>(l.systems.size()) * l.per_system;
}

void SystemSpec::validate() const {
  check_params_match(*this);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (downsample < 1) throw ConfigError("downsample must be >= 1");
  if (transient < 0) throw ConfigError("transient must be >= 0");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RosslerParams>) {
          if (p.eps_xy < 0 || p.eps_yx < 0) throw ConfigError("couplings must be >= 0");
          if (!(p.omega1 > 0) || !(p.omega2 > 0)) throw ConfigError("Rossler frequencies must be positive");
        } else if constexpr (std::is_same_v<P, LorenzParams>) {
          if (p.eps_xy < 0 || p.eps_yx < 0) throw ConfigError("couplings must be >= 0");
        } else if constexpr (std::is_same_v<P, Lorenz96Params>) {
          if (p.eps < 0) throw ConfigError("coupling must be >= 0");
          if (!(p.omega_tilde > 0)) throw ConfigError("omega_tilde must be > 0");
          if (p.dimension < 4) throw ConfigError("Lorenz 96 dimension must be >= 4");
        } else {
          const auto m = p.systems.size();
          if (m < 1) throw ConfigError("Rossler network needs at least one system");
          if (p.omegas.size() != m) throw ConfigError("Rossler network needs one frequency per system");
          if (p.coupling.rows() != static_cast<Index>(m) || p.coupling.cols() != static_cast<Index>(m))
            throw ConfigError("Rossler network coupling must be M x M");
          if ((p.coupling.array() < 0.0).any()) throw ConfigError("couplings must be >= 0");
          std::vector<std::string> s = p.systems;
          std::sort(s.begin(), s.end());
          if (std::adjacent_find(s.begin(), s.end()) != s.end() ||
              std::any_of(s.begin(), s.end(), [](const std::string& n) { return n.empty(); }))
            throw ConfigError("Rossler network system names must be unique and non-empty");
        }
      },
      params);
  if (noise) {
    if (!(noise->amplitude >= 0.0)) throw ConfigError("noise amplitude must be >= 0");
    if (noise->kind == NoiseKind::dynamical && integrator != Integrator::euler)
      throw ConfigError("dynamical noise requires the euler (Euler-Maruyama) integrator");
    for (Index t : noise->targets)
      if (t < 0 || t >= state_dimension()) throw ConfigError("noise target out of range");
  }
  if (initial_state && initial_state->size() != state_dimension())
    throw ConfigError("initial_state has the wrong dimension");
}

SystemSpec default_spec(Family family) {
  SystemSpec s;
  s.family = family;
  switch (family) {
    case Family::rossler_pair:
      s.params = RosslerParams{};
      break;
    case Family::rossler_network:
      s.params = RosslerNetworkParams{};
      break;
    case Family::lorenz_pair:
      s.params = LorenzParams{};
      s.dt = 0.01;
      s.downsample = 5;
      s.n_samples = 205000;
      break;
    case Family::lorenz96_pair:
      s.params = Lorenz96Params{};
      s.dt = 0.03;
      s.downsample = 2;
      s.n_samples = 252500;
      break;
  }
  return s;
}

Eigen::VectorXd initial_state(const SystemSpec& spec) {
  spec.validate();
  if (spec.initial_state) return *spec.initial_state;
  const Layout l = layout_of(spec);
  Eigen::VectorXd x(spec.state_dimension());
  for (std::size_t s = 0; s < l.systems.size(); ++s) {
    Rng rng = make_rng(spec.seed, "init-" + l.systems[s]);
    const Index o = static_cast<Index>(s) * l.per_system;
    if (spec.family == Family::lorenz96_pair) {
      const auto& p = std::get<Lorenz96Params>(spec.params);
      const double f = s == 0 ? p.forcing_x : p.forcing_y;
      x.segment(o, l.per_system).setConstant(f);
      x(o) = f + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    } else {
      std::uniform_real_distribution<double> u(0.5, 1.5);
      for (Index c = 0; c < l.per_system; ++c) x(o + c) = 10.0 * u(rng);
    }
  }
  return x;
}

Eigen::MatrixXd integrate(const Drift& drift, Eigen::VectorXd x, const IntegrationPlan& plan, Rng* noise_rng) {
  if (!(plan.dt > 0.0) || plan.downsample < 1 || plan.transient < 0 || plan.n_samples < 1)
    throw ConfigError("invalid integration plan");
  const bool noisy = plan.noise_amplitude > 0.0;
  if (noisy && plan.integrator != Integrator::euler) throw ConfigError("noise requires the euler integrator");
  if (noisy && !noise_rng) throw ConfigError("noise requires a random stream");
  const Index d = x.size();
  const double dt = plan.dt;
  const double h2 = 0.5 * dt, h6 = dt / 6.0;
  const double sigma = plan.noise_amplitude * std::sqrt(dt);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd k1(d), k2(d), k3(d), k4(d), tmp(d);
  Eigen::MatrixXd out(plan.n_samples, d);

  const Index total = plan.transient + plan.n_samples;
  for (Index s = 0; s < total; ++s) {
    for (Index r = 0; r < plan.downsample; ++r) {
      if (plan.integrator == Integrator::rk4) {
        drift(x, k1);
        tmp.noalias() = x + h2 * k1;
        drift(tmp, k2);
        tmp.noalias() = x + h2 * k2;
        drift(tmp, k3);
        tmp.noalias() = x + dt * k3;
        drift(tmp, k4);
        x += h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      } else {
        drift(x, k1);
        x += dt * k1;
        if (noisy)
          for (Index t : plan.noise_targets) x(t) += sigma * normal(*noise_rng);
      }
    }
    if (!x.allFinite())
      throw SimulationError("integration produced a non-finite state",
                            static_cast<double>((s + 1) * plan.downsample) * dt);
    if (s >= plan.transient) out.row(s - plan.transient) = x.transpose();
  }
  return out;
}

Eigen::MatrixXd add_measurement_noise(const Eigen::MatrixXd& trajectory, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0)) throw ConfigError("noise fraction must be >= 0");
  if (fraction == 0.0) return trajectory;
  Eigen::MatrixXd out = trajectory;
  const double n = static_cast<double>(trajectory.rows());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < trajectory.cols(); ++c) {
    Rng rng = make_rng(seed, "measurement-noise", {static_cast<std::uint64_t>(c)});
    const double mean = trajectory.col(c).mean();
    const double sd = std::sqrt((trajectory.col(c).array() - mean).square().sum() / n);
    const double amp = fraction * sd;
    for (Index t = 0; t < trajectory.rows(); ++t) out(t, c) += amp * normal(rng);
  }
  return out;
}

Trajectory simulate(const SystemSpec& spec) {
  spec.validate();
  const Layout l = layout_of(spec);
  IntegrationPlan plan;
  plan.dt = spec.dt;
  plan.downsample = spec.downsample;
  plan.transient = spec.transient;
  plan.n_samples = spec.n_samples;
  plan.integrator = spec.integrator;

  Rng noise_rng = make_rng(spec.seed, "noise");
  if (spec.noise && spec.noise->kind == NoiseKind::dynamical) {
    plan.noise_amplitude = spec.noise->amplitude;
    plan.noise_targets = spec.noise->targets;
    if (plan.noise_targets.empty())
      for (std::size_t s = 0; s < l.systems.size(); ++s) plan.noise_targets.push_back(static_cast<Index>(s) * l.per_system);
  }

  Trajectory out;
  out.samples = integrate(drift_of(spec), initial_state(spec), plan, &noise_rng);
  if (spec.noise && spec.noise->kind == NoiseKind::measurement)
    out.samples = add_measurement_noise(out.samples, spec.noise->amplitude, derive_seed(spec.seed, "noise"));
  for (std::size_t s = 0; s < l.systems.size(); ++s) {
    auto& g = out.groups[l.systems[s]];
    for (Index c = 0; c < l.per_system; ++c) {
      g.push_back(static_cast<Index>(s) * l.per_system + c);
      out.variable_names.push_back(lower(l.systems[s]) + std::to_string(c + 1));
    }
  }
  out.sampling_step = spec.dt * static_cast<double>(spec.downsample);
  out.seed = spec.seed;
  return out;
}

Trajectory simulate_dynamical_noise(SystemSpec spec, double amplitude) {
  spec.integrator = Integrator::euler;
  spec.noise = NoiseSpec{NoiseKind::dynamical, amplitude, {}};
  return simulate(spec);
}

}  // namespace rankcause
