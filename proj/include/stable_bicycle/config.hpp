#ifndef STABLE_BICYCLE_CONFIG_HPP
#define STABLE_BICYCLE_CONFIG_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stable_bicycle/nmpc.hpp"
#include "stable_bicycle/sim.hpp"
#include "stable_bicycle/vehicle.hpp"

namespace stable_bicycle {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * INI-style experiment configuration.
 *
 *   # comment
 *   [section]
 *   key = value
 *
 * Sections: vehicle, scenario, sweep, compare, bench, noise, ocp. Unknown
 * sections or keys are errors. Only `segment` (scenario) may repeat. Numbers
 * accept `inf`, `-inf`, `pi` and `pi/N`; lists are comma separated and may
 * be wrapped in brackets. See docs/config.md for every key.
 */
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  bool has(std::string_view section, std::string_view key) const;
  bool has_section(std::string_view section) const;

  std::string text(std::string_view section, std::string_view key, std::string fallback) const;
  double number(std::string_view section, std::string_view key, double fallback) const;
  std::uint64_t count(std::string_view section, std::string_view key,
                      std::uint64_t fallback) const;
  std::vector<double> numbers(std::string_view section, std::string_view key,
                              std::vector<double> fallback) const;
  bool flag(std::string_view section, std::string_view key, bool fallback) const;
  /// Every value of a repeatable key, in file order.
  std::vector<std::string> all(std::string_view section, std::string_view key) const;

 private:
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, std::multimap<std::string, Entry>, std::less<>> sections_;
  const Entry* find(std::string_view section, std::string_view key) const;
};

/// Parses a scalar with the extensions listed above; throws ConfigError.
double parse_number(std::string_view text);
std::vector<double> parse_number_list(std::string_view text);

VehicleParams load_vehicle(const Config& cfg);
Scenario load_scenario(const Config& cfg);

struct SweepConfig {
  double u_min = 0.0;
  double u_max = 25.0;
  std::size_t n_grid = 2501;
  std::vector<double> dts{0.001, 0.01, 0.1};
  double tolerance = 1e-12;
  std::size_t pairwise_grid = 0;  // 0 disables the independent-row check
};
SweepConfig load_sweep(const Config& cfg);

struct CompareConfig {
  std::vector<double> u0s{5, 10, 15, 20, 25};
  std::vector<double> steers{0.05, 0.10, 0.15, 0.20, 0.25};
  AccuracyConfig accuracy;
};
CompareConfig load_compare(const Config& cfg);

struct BenchConfig {
  std::size_t n_steps = 10000;
  std::size_t repeats = 1;
};
BenchConfig load_bench(const Config& cfg);

struct NoiseConfig {
  std::vector<double> sigmas{0.01, 0.05, 0.10};
  std::uint64_t seed = 1;
  std::size_t seeds = 1;  // seed, seed+1, ... each run at every sigma
};
NoiseConfig load_noise(const Config& cfg);

/// Noise-robustness base scenario: 5 m/s, constant 0.2674 rad steer.
Scenario default_noise_scenario();

struct MpcConfig {
  OcpSpec spec = OcpSpec::stop_start();
  ReferenceGenerator reference{{30.0, 30.0}, 6.0};
  ObstacleState obstacle{{15.0, 15.0}, Point2{18.0, 12.0}, std::nullopt, 0.05};
  bool obstacle_enabled = true;
  State6 initial{0.0, 0.0, 0.7853981633974483, 6.0, 0.0, 0.0};
  double duration = 20.0;
};
MpcConfig load_mpc(const Config& cfg);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_CONFIG_HPP
