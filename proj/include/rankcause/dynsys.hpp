#pragma once

#include "rankcause/ensemble.hpp"
#include "rankcause/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rankcause {

enum class Family { rossler_pair, lorenz_pair, lorenz96_pair, rossler_network };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

// Diffusive coupling acts on the first coordinate:
// y1' += eps_xy (x1 - y1), x1' += eps_yx (y1 - x1).
struct RosslerParams {
  double omega1 = 1.015;
  double omega2 = 1.015;
  double eps_xy = 0.0;
  double eps_yx = 0.0;
};

// Quadratic coupling on the second coordinate:
// x2' += eps_yx y1^2, y2' += eps_xy x1^2.
struct LorenzParams {
  double eps_xy = 0.0;
  double eps_yx = 0.0;
};

// y_i' += eps x_i; the driver runs at omega_tilde times its own speed.
struct Lorenz96Params {
  double forcing_x = 5.0;
  double forcing_y = 6.0;
  double eps = 0.0;
  double omega_tilde = 1.0;
  Index dimension = 40;
};

// Any number of Rossler oscillators; coupling(i, j) >= 0 is the strength of
// the diffusive link j -> i on the first coordinate.
struct RosslerNetworkParams {
  std::vector<std::string> systems{"X", "Y", "Z"};
  std::vector<double> omegas{1.015, 0.985, 1.005};
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(3, 3);

  Index index_of(const std::string& system) const;
};

using FamilyParams = std::variant<RosslerParams, LorenzParams, Lorenz96Params, RosslerNetworkParams>;

enum class NoiseKind { measurement, dynamical };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::measurement;
  // Fraction of each variable's std (measurement) or absolute diffusion
  // amplitude (dynamical).
  double amplitude = 0.0;
  // Dynamical noise only; empty selects the first coordinate of every system.
  std::vector<Index> targets;
};

enum class Integrator { rk4, euler };

struct SystemSpec {
  Family family = Family::rossler_pair;
  FamilyParams params = RosslerParams{};
  double dt = 0.0785;
  Index downsample = 4;
  Index transient = 100000;  // retained-grid samples discarded before recording
  Index n_samples = 105000;
  std::uint64_t seed = 0;
  Integrator integrator = Integrator::rk4;
  std::optional<NoiseSpec> noise;
  std::optional<Eigen::VectorXd> initial_state;  // overrides the random draw

  Index state_dimension() const;
  void validate() const;
};

// Paper protocol for each family (step, downsampling, transient, length)
// with zero couplings.
SystemSpec default_spec(Family family);

struct Trajectory {
  Eigen::MatrixXd samples;  // n_samples x D
  GroupMap groups;
  std::vector<std::string> variable_names;
  double sampling_step = 1.0;  // dt * downsample
  std::uint64_t seed = 0;
};

Trajectory simulate(const SystemSpec& spec);

// Same protocol with Euler-Maruyama white noise of the given amplitude on
// the first coordinate of each system.
Trajectory simulate_dynamical_noise(SystemSpec spec, double amplitude);

// The random initial state simulate() would use.
Eigen::VectorXd initial_state(const SystemSpec& spec);

// Adds N(0, (fraction * std_d)^2) noise to every column d, std taken over
// the whole trajectory.
Eigen::MatrixXd add_measurement_noise(const Eigen::MatrixXd& trajectory, double fraction, std::uint64_t seed);

// Generic fixed-step driver shared by all families.
using Drift = std::function<void(const Eigen::VectorXd& state, Eigen::VectorXd& derivative)>;

struct IntegrationPlan {
  double dt = 0.01;
  Index downsample = 1;
  Index transient = 0;
  Index n_samples = 1;
  Integrator integrator = Integrator::rk4;
  double noise_amplitude = 0.0;      // Euler-Maruyama diffusion, euler only
  std::vector<Index> noise_targets;  // coordinates receiving noise
};

Eigen::MatrixXd integrate(const Drift& drift, Eigen::VectorXd state, const IntegrationPlan& plan, Rng* noise_rng);

}  // namespace rankcause
