#include "coopflow/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "coopflow/errors.hpp"

namespace coopflow {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string scalar_of(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, "expected a scalar");
  return node.Scalar();
}

double parse_double(const YAML::Node& node, const std::string& key) {
  const std::string s = scalar_of(node, key);
  const std::string l = lower(s);
  if (l == "inf" || l == ".inf" || l == "+inf" || l == "+.inf" || l == "infinity")
    return std::numeric_limits<double>::infinity();
  if (l == "-inf" || l == "-.inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || std::isnan(v)) throw ConfigError(key, "not a number: '" + s + "'");
  return v;
}

long long parse_integer(const YAML::Node& node, const std::string& key) {
  const std::string s = scalar_of(node, key);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0) throw ConfigError(key, "not an integer: '" + s + "'");
  return v;
}

int parse_int(const YAML::Node& node, const std::string& key) {
  const long long v = parse_integer(node, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(key, "out of range");
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const YAML::Node& node, const std::string& key) {
  const std::string s = scalar_of(node, key);
  char* end = nullptr;
  errno = 0;
  if (!s.empty() && s.front() == '-') throw ConfigError(key, "must be non-negative");
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0) throw ConfigError(key, "not an unsigned integer: '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const YAML::Node& node, const std::string& key) {
  const std::string l = lower(scalar_of(node, key));
  if (l == "true" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "no" || l == "off") return false;
  throw ConfigError(key, "not a boolean: '" + l + "'");
}

Vec3 parse_volume(const YAML::Node& node, const std::string& key) {
  if (node.IsScalar()) {
    const double e = parse_double(node, key);
    return Vec3::Constant(e);
  }
  if (!node.IsSequence() || node.size() != 3) throw ConfigError(key, "expected a scalar or 3 extents");
  Vec3 v;
  for (std::size_t d = 0; d < 3; ++d) v[static_cast<Eigen::Index>(d)] = parse_double(node[d], key);
  return v;
}

template <typename T, typename Fn>
std::vector<T> parse_list(const YAML::Node& node, const std::string& key, Fn&& element) {
  if (!node.IsSequence()) throw ConfigError(key, "expected a list");
  std::vector<T> out;
  for (const auto& item : node) out.push_back(element(item, key));
  return out;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pfbp: return "pfbp";
    case Algorithm::edh: return "edh";
    case Algorithm::sirbp: return "sirbp";
  }
  return "?";
}

std::string_view to_string(LinkMode m) {
  return m == LinkMode::distributed ? "distributed" : "centralized";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "pfbp") return Algorithm::pfbp;
  if (name == "edh") return Algorithm::edh;
  if (name == "sirbp") return Algorithm::sirbp;
  throw ConfigError("algo", "unknown algorithm '" + std::string(name) + "' (pfbp, edh, sirbp)");
}

LinkMode parse_link_mode(std::string_view name) {
  if (name == "distributed") return LinkMode::distributed;
  if (name == "centralized") return LinkMode::centralized;
  throw ConfigError("mode", "unknown mode '" + std::string(name) + "' (distributed, centralized)");
}

void AlgorithmConfig::validate() const {
  if (particles < 1) throw ConfigError("particles", "must be >= 1");
  if (algo == Algorithm::edh && particles < 2) throw ConfigError("particles", "edh needs >= 2 particles");
  if (lambda_steps < 1) throw ConfigError("lambda_steps", "must be >= 1");
  if (!(lambda_ratio > 0.0) || !std::isfinite(lambda_ratio)) throw ConfigError("lambda_ratio", "must be > 0");
  if (mp_iters < 1) throw ConfigError("mp_iters", "must be >= 1");
  if (!(sigma_r_vel >= 0.0) || !std::isfinite(sigma_r_vel)) throw ConfigError("sigma_r_vel", "must be >= 0");
  if (!(sigma_r_acc >= 0.0) || !std::isfinite(sigma_r_acc)) throw ConfigError("sigma_r_acc", "must be >= 0");
  if (!(anneal_max >= 0.0) || !std::isfinite(anneal_max)) throw ConfigError("anneal_max", "must be >= 0");
}

std::vector<double> ExperimentConfig::default_cf_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 50; ++i) t.push_back(std::pow(10.0, -3.0 + 5.0 * i / 50.0));
  return t;
}

std::vector<int> ExperimentConfig::resolved_cf_steps() const {
  if (!cf_steps.empty()) return cf_steps;
  std::vector<int> steps = {1, (scenario.K + 1) / 2, scenario.K};
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  algorithm.validate();
  if (runs < 1) throw ConfigError("runs", "must be >= 1");
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence_threshold", "must be > 0");
  for (int k : cf_steps)
    if (k < 0 || k > scenario.K) throw ConfigError("cf_steps", "steps must lie in [0, K]");
  if (cf_thresholds.empty()) throw ConfigError("cf_thresholds", "must not be empty");
  if (!std::is_sorted(cf_thresholds.begin(), cf_thresholds.end())) throw ConfigError("cf_thresholds", "must be sorted");
  for (double t : cf_thresholds)
    if (!(t >= 0.0)) throw ConfigError("cf_thresholds", "must be >= 0");
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  if (!root.IsMap()) throw ConfigError("", "top level must be a mapping");

  std::set<std::string> seen;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    const YAML::Node& v = kv.second;
    auto& s = cfg.scenario;
    auto& a = cfg.algorithm;
    if (key == "n_agents") s.n_agents = parse_int(v, key);
    else if (key == "n_anchors") s.n_anchors = parse_int(v, key);
    else if (key == "volume") s.volume = parse_volume(v, key);
    else if (key == "r_max") s.r_max = parse_double(v, key);
    else if (key == "sigma") s.sigma = parse_double(v, key);
    else if (key == "sigma_a") s.sigma_a = parse_double(v, key);
    else if (key == "dt") s.dt = parse_double(v, key);
    else if (key == "K") s.K = parse_int(v, key);
    else if (key == "seed") s.seed = parse_seed(v, key);
    else if (key == "prior_sigma_p") s.prior_sigma_p = parse_double(v, key);
    else if (key == "prior_sigma_a_factor") s.prior_sigma_a_factor = parse_double(v, key);
    else if (key == "algo") a.algo = parse_algorithm(scalar_of(v, key));
    else if (key == "particles") a.particles = parse_int(v, key);
    else if (key == "lambda_steps") a.lambda_steps = parse_int(v, key);
    else if (key == "lambda_ratio") a.lambda_ratio = parse_double(v, key);
    else if (key == "mp_iters") a.mp_iters = parse_int(v, key);
    else if (key == "mode") a.mode = parse_link_mode(scalar_of(v, key));
    else if (key == "regularize") a.regularize = parse_bool(v, key);
    else if (key == "sigma_r_vel") a.sigma_r_vel = parse_double(v, key);
    else if (key == "sigma_r_acc") a.sigma_r_acc = parse_double(v, key);
    else if (key == "anneal_max") a.anneal_max = parse_double(v, key);
    else if (key == "uniform_prior_positions") a.uniform_prior_positions = parse_bool(v, key);
    else if (key == "runs") cfg.runs = parse_int(v, key);
    else if (key == "divergence_threshold") cfg.divergence_threshold = parse_double(v, key);
    else if (key == "cf_steps") cfg.cf_steps = parse_list<int>(v, key, parse_int);
    else if (key == "cf_thresholds") cfg.cf_thresholds = parse_list<double>(v, key, parse_double);
    else throw ConfigError(key, "unknown key");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_yaml(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const auto& s = cfg.scenario;
  const auto& a = cfg.algorithm;
  out << YAML::BeginMap;
  out << YAML::Key << "n_agents" << YAML::Value << s.n_agents;
  out << YAML::Key << "n_anchors" << YAML::Value << s.n_anchors;
  out << YAML::Key << "volume" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.volume[0] << s.volume[1]
      << s.volume[2] << YAML::EndSeq;
  out << YAML::Key << "r_max" << YAML::Value << s.r_max;
  out << YAML::Key << "sigma" << YAML::Value << s.sigma;
  out << YAML::Key << "sigma_a" << YAML::Value << s.sigma_a;
  out << YAML::Key << "dt" << YAML::Value << s.dt;
  out << YAML::Key << "K" << YAML::Value << s.K;
  out << YAML::Key << "seed" << YAML::Value << static_cast<unsigned long long>(s.seed);
  out << YAML::Key << "prior_sigma_p" << YAML::Value << s.prior_sigma_p;
  out << YAML::Key << "prior_sigma_a_factor" << YAML::Value << s.prior_sigma_a_factor;
  out << YAML::Key << "algo" << YAML::Value << std::string(to_string(a.algo));
  out << YAML::Key << "particles" << YAML::Value << a.particles;
  out << YAML::Key << "lambda_steps" << YAML::Value << a.lambda_steps;
  out << YAML::Key << "lambda_ratio" << YAML::Value << a.lambda_ratio;
  out << YAML::Key << "mp_iters" << YAML::Value << a.mp_iters;
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(a.mode));
  out << YAML::Key << "regularize" << YAML::Value << a.regularize;
  out << YAML::Key << "sigma_r_vel" << YAML::Value << a.sigma_r_vel;
  out << YAML::Key << "sigma_r_acc" << YAML::Value << a.sigma_r_acc;
  out << YAML::Key << "anneal_max" << YAML::Value << a.anneal_max;
  out << YAML::Key << "uniform_prior_positions" << YAML::Value << a.uniform_prior_positions;
  out << YAML::Key << "runs" << YAML::Value << cfg.runs;
  out << YAML::Key << "divergence_threshold" << YAML::Value << cfg.divergence_threshold;
  out << YAML::Key << "cf_steps" << YAML::Value << YAML::Flow << cfg.cf_steps;
  out << YAML::Key << "cf_thresholds" << YAML::Value << YAML::Flow << cfg.cf_thresholds;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace coopflow
