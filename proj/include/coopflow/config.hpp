#pragma once

// Experiment configuration: scenario parameters plus algorithm settings, read from and written
// to a flat YAML mapping.

#include <string>
#include <string_view>
#include <vector>

#include "coopflow/model.hpp"

namespace coopflow {

enum class Algorithm { pfbp, edh, sirbp };

std::string_view to_string(Algorithm a);
std::string_view to_string(LinkMode m);
/// Throws ConfigError on unknown names.
Algorithm parse_algorithm(std::string_view name);
LinkMode parse_link_mode(std::string_view name);

struct AlgorithmConfig {
  Algorithm algo = Algorithm::pfbp;
  int particles = 200;
  int lambda_steps = 20;
  double lambda_ratio = 1.2;
  int mp_iters = 2;
  LinkMode mode = LinkMode::distributed;
  bool regularize = false;
  double sigma_r_vel = 0.15;
  double sigma_r_acc = 0.15;
  double anneal_max = 0.0;
  bool uniform_prior_positions = false;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  bool operator==(const AlgorithmConfig&) const = default;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  AlgorithmConfig algorithm;
  int runs = 1;
  // A run diverges when its mean final position error exceeds this [m].
  double divergence_threshold = 1.0;
  // Steps with their own CF curve; empty selects {1, K/2, K}.
  std::vector<int> cf_steps;
  std::vector<double> cf_thresholds = default_cf_thresholds();

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;

  std::vector<int> resolved_cf_steps() const;

  /// 51 log-spaced thresholds from 1e-3 to 1e2 m.
  static std::vector<double> default_cf_thresholds();
};

/// Parses YAML text. An empty document yields the defaults. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);

/// Reads and parses a file. Throws ConfigError if it cannot be read.
ExperimentConfig load_config(const std::string& path);

/// Full resolved configuration as YAML; parse_config(to_yaml(c)) == c.
std::string to_yaml(const ExperimentConfig& cfg);

}  // namespace coopflow
