#include "craqreg/config.hpp"

#include <charconv>

#include "craqreg/error.hpp"

namespace craqreg {

using nlohmann::json;

std::string_view to_string(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::Ransac: return "ransac";
    case EstimatorMethod::LoRansac: return "lo-ransac";
    case EstimatorMethod::MagsacSimplified: return "magsac-simplified";
  }
  return "ransac";
}

EstimatorMethod parse_estimator_method(std::string_view name) {
  if (name == "ransac") return EstimatorMethod::Ransac;
  if (name == "lo-ransac") return EstimatorMethod::LoRansac;
  if (name == "magsac-simplified") return EstimatorMethod::MagsacSimplified;
  throw ConfigError("estimator.method", "unknown estimator '" + std::string(name) + "'");
}

std::string to_string(const ResizePolicy& p) {
  switch (p.kind) {
    case ResizePolicy::Kind::SameWidth: return "same-width";
    case ResizePolicy::Kind::CustomHeight: return "height:" + std::to_string(p.height);
    case ResizePolicy::Kind::None: return "none";
  }
  return "none";
}

ResizePolicy parse_resize_policy(std::string_view text) {
  if (text == "same-width") return ResizePolicy::same_width();
  if (text == "none") return ResizePolicy::none();
  constexpr std::string_view prefix = "height:";
  if (text.starts_with(prefix)) {
    const auto digits = text.substr(prefix.size());
    int h = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), h);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) {
      return ResizePolicy::custom_height(h);
    }
  }
  throw ConfigError("resize", "invalid resize policy '" + std::string(text) + "'");
}

void validate(const RegistrationConfig& cfg) {
  if (cfg.patch_size < 64) throw ConfigError("patch_size", "patch_size must be >= 64");
  if (cfg.n_max < 4) throw ConfigError("n_max", "n_max must be >= 4");
  if (!(cfg.tau_kp >= 0.0 && cfg.tau_kp < 1.0))
    throw ConfigError("tau_kp", "tau_kp must lie in [0, 1)");
  if (cfg.resize.kind == ResizePolicy::Kind::CustomHeight && cfg.resize.height <= 0)
    throw ConfigError("resize", "custom height must be positive");
  if (cfg.backend != "junction")
    throw ConfigError("backend", "unknown backend '" + cfg.backend + "'");
  if (cfg.workers < 0) throw ConfigError("workers", "workers must be >= 0");
  const auto& e = cfg.estimator;
  if (!(e.tau_reproj > 0.0)) throw ConfigError("estimator.tau_reproj", "tau_reproj must be > 0");
  if (!(e.confidence > 0.0 && e.confidence < 1.0))
    throw ConfigError("estimator.confidence", "confidence must lie in (0, 1)");
  if (e.max_iters < 1) throw ConfigError("estimator.max_iters", "max_iters must be >= 1");
}

json to_json(const EstimatorConfig& cfg) {
  return json{{"method", to_string(cfg.method)},
              {"tau_reproj", cfg.tau_reproj},
              {"max_iters", cfg.max_iters},
              {"confidence", cfg.confidence},
              {"seed", cfg.seed}};
}

json to_json(const RegistrationConfig& cfg) {
  return json{{"patch_size", cfg.patch_size},
              {"n_max", cfg.n_max},
              {"tau_kp", cfg.tau_kp},
              {"resize", to_string(cfg.resize)},
              {"estimator", to_json(cfg.estimator)},
              {"backend", cfg.backend},
              {"visualize_matches", cfg.visualize_matches},
              {"workers", cfg.workers}};
}

namespace {

template <typename T>
void read_field(const json& obj, const char* key, const std::string& field, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(field, field + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(field, field + " must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(field, field + " must be a number");
    } else {
      if (!it->is_string()) throw ConfigError(field, field + " must be a string");
    }
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field, field + " has an invalid value");
  }
}

}  // namespace

RegistrationConfig registration_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "config must be a JSON object");
  RegistrationConfig cfg;
  read_field(j, "patch_size", "patch_size", cfg.patch_size);
  read_field(j, "n_max", "n_max", cfg.n_max);
  read_field(j, "tau_kp", "tau_kp", cfg.tau_kp);
  std::string resize = to_string(cfg.resize);
  read_field(j, "resize", "resize", resize);
  cfg.resize = parse_resize_policy(resize);
  read_field(j, "backend", "backend", cfg.backend);
  read_field(j, "visualize_matches", "visualize_matches", cfg.visualize_matches);
  read_field(j, "workers", "workers", cfg.workers);
  if (const auto it = j.find("estimator"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("estimator", "estimator must be an object");
    std::string method{to_string(cfg.estimator.method)};
    read_field(*it, "method", "estimator.method", method);
    cfg.estimator.method = parse_estimator_method(method);
    read_field(*it, "tau_reproj", "estimator.tau_reproj", cfg.estimator.tau_reproj);
    read_field(*it, "max_iters", "estimator.max_iters", cfg.estimator.max_iters);
    read_field(*it, "confidence", "estimator.confidence", cfg.estimator.confidence);
    read_field(*it, "seed", "estimator.seed", cfg.estimator.seed);
  }
  validate(cfg);
  return cfg;
}

}  // namespace craqreg
