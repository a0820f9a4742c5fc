#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace craqreg {

enum class EstimatorMethod { Ransac, LoRansac, MagsacSimplified };

std::string_view to_string(EstimatorMethod m);
/// Parses "ransac" | "lo-ransac" | "magsac-simplified"; throws ConfigError.
EstimatorMethod parse_estimator_method(std::string_view name);

struct EstimatorConfig {
  EstimatorMethod method = EstimatorMethod::Ransac;
  double tau_reproj = 5.0;
  int max_iters = 10000;
  double confidence = 0.995;
  std::uint64_t seed = 0;

  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

struct ResizePolicy {
  enum class Kind { SameWidth, CustomHeight, None };
  Kind kind = Kind::SameWidth;
  int height = 0;  // CustomHeight only

  static ResizePolicy same_width() { return {Kind::SameWidth, 0}; }
  static ResizePolicy custom_height(int h) { return {Kind::CustomHeight, h}; }
  static ResizePolicy none() { return {Kind::None, 0}; }

  friend bool operator==(const ResizePolicy&, const ResizePolicy&) = default;
};

/// "same-width" | "height:<h>" | "none"
std::string to_string(const ResizePolicy& p);
ResizePolicy parse_resize_policy(std::string_view text);

struct RegistrationConfig {
  int patch_size = 1024;
  int n_max = 8000;
  double tau_kp = 0.0;
  ResizePolicy resize = ResizePolicy::same_width();
  EstimatorConfig estimator;
  std::string backend = "junction";
  bool visualize_matches = false;
  /// Detection worker threads; 0 uses every hardware thread, 1 is serial.
  int workers = 0;

  friend bool operator==(const RegistrationConfig&, const RegistrationConfig&) = default;
};

/// Throws ConfigError naming the first violated field.
void validate(const RegistrationConfig& cfg);

nlohmann::json to_json(const EstimatorConfig& cfg);
nlohmann::json to_json(const RegistrationConfig& cfg);
/// Missing members keep their defaults; wrong types or invariant violations
/// throw ConfigError naming the field.
RegistrationConfig registration_config_from_json(const nlohmann::json& j);

}  // namespace craqreg
