#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "craqreg/config.hpp"

namespace craqreg {

struct ServiceOptions {
  std::filesystem::path config_path;  // empty: default_config_path()
  std::int64_t max_image_pixels = 200'000'000;
  int job_parallelism = 1;
};

/// $CRAQREG_CONFIG if set, else $HOME/.config/craqreg/config.json (or
/// ./craqreg_config.json without HOME).
std::filesystem::path default_config_path();

/// {"config": {...}, "defaults": bool}
nlohmann::json persisted_config_json(const RegistrationConfig& cfg);
/// Accepts either a PersistedConfig object or a bare RegistrationConfig.
RegistrationConfig persisted_config_from_json(const nlohmann::json& j);
RegistrationConfig load_persisted_config(const std::filesystem::path& path);
void save_persisted_config(const std::filesystem::path& path, const RegistrationConfig& cfg);

/// Local HTTP service exposing uploads, persisted configuration and
/// asynchronous registration jobs under /api.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port; the bound port is returned.
  int start(const std::string& host, int port);
  /// Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string make_uuid_v4();

}  // namespace craqreg
