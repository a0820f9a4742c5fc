#include "craqreg/service.hpp"

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "craqreg/error.hpp"
#include "craqreg/pipeline.hpp"
#include "craqreg/zip.hpp"

namespace craqreg {

using nlohmann::json;

std::filesystem::path default_config_path() {
  if (const char* env = std::getenv("CRAQREG_CONFIG"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home)
    return std::filesystem::path(home) / ".config" / "craqreg" / "config.json";
  return "craqreg_config.json";
}

json persisted_config_json(const RegistrationConfig& cfg) {
  return {{"config", to_json(cfg)}, {"defaults", cfg == RegistrationConfig{}}};
}

RegistrationConfig persisted_config_from_json(const json& j) {
  if (j.is_object() && j.contains("config")) return registration_config_from_json(j.at("config"));
  return registration_config_from_json(j);
}

RegistrationConfig load_persisted_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, path.string() + ": " + e.what());
  }
  return persisted_config_from_json(j);
}

void save_persisted_config(const std::filesystem::path& path, const RegistrationConfig& cfg) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << persisted_config_json(cfg).dump(2) << "\n";
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
}

std::string make_uuid_v4() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi, lo;
  {
    std::lock_guard lock(mu);
    hi = rng();
    lo = rng();
  }
  hi = (hi & ~0xf000ULL) | 0x4000ULL;
  lo = (lo & ~(0xc000ULL << 48)) | (0x8000ULL << 48);
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0xffff),
                static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

namespace {

enum class JobState { Pending, Running, Done, Failed };

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Pending: return "pending";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "failed";
}

struct Job {
  std::string id;
  JobState state = JobState::Pending;
  std::string stage;
  std::string message;
  RegistrationConfig cfg;
  std::string reference_id;
  std::string moving_id;
  std::shared_ptr<const ImageBuffer> reference;
  std::shared_ptr<const ImageBuffer> moving;

  json result;
  std::map<std::string, std::vector<std::uint8_t>> assets;
  std::vector<BundleFile> bundle;
  ImageBuffer warped;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& field = {}) {
  json body = {{"error", message}};
  if (!field.empty()) body["field"] = field;
  send_json(res, status, body);
}

void send_png(httplib::Response& res, const std::vector<std::uint8_t>& bytes) {
  res.status = 200;
  res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::thread server_thread;

  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  RegistrationConfig config;
  std::map<std::string, std::shared_ptr<const ImageBuffer>> images;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::deque<std::shared_ptr<Job>> queue;
  std::vector<std::thread> workers;

  explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
    if (options.config_path.empty()) options.config_path = default_config_path();
    if (options.job_parallelism < 1) options.job_parallelism = 1;
    config = load_persisted_config(options.config_path);
    routes();
    for (int i = 0; i < options.job_parallelism; ++i) workers.emplace_back([this] { work(); });
  }

  ~Impl() {
    server.stop();
    if (server_thread.joinable()) server_thread.join();
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    cv.notify_all();
    for (auto& w : workers) w.join();
  }

  void work() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [this] { return stopping || !queue.empty(); });
        if (stopping) return;
        job = queue.front();
        queue.pop_front();
        job->state = JobState::Running;
      }
      run(*job);
    }
  }

  void run(Job& job) {
    try {
      RegistrationOutput out = register_pair(*job.reference, *job.moving, job.cfg);
      std::vector<BundleFile> bundle = make_bundle(out, *job.reference, job.cfg);
      std::map<std::string, std::vector<std::uint8_t>> assets;
      for (const auto& f : bundle) {
        if (f.name == "result.json") continue;
        assets[f.name.substr(0, f.name.size() - 4)] = f.bytes;
      }
      assets["moving"] = encode_png(*job.moving);
      json result = result_json(out, job.cfg);
      std::lock_guard lock(mu);
      job.result = std::move(result);
      job.assets = std::move(assets);
      job.bundle = std::move(bundle);
      job.warped = std::move(out.warped_moving);
      job.state = JobState::Done;
    } catch (const Error& e) {
      std::lock_guard lock(mu);
      job.stage = failing_stage(e.kind());
      job.message = e.what();
      job.state = JobState::Failed;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      job.stage = "internal";
      job.message = e.what();
      job.state = JobState::Failed;
    }
  }

  // Caller holds mu.
  json job_json(const Job& job) const {
    json j = {{"job_id", job.id},
              {"state", to_string(job.state)},
              {"config", to_json(job.cfg)},
              {"reference_id", job.reference_id},
              {"moving_id", job.moving_id}};
    if (job.state == JobState::Failed) {
      j["stage"] = job.stage;
      j["message"] = job.message;
    }
    if (job.state == JobState::Done) {
      json assets = json::object();
      for (const auto& [name, bytes] : job.assets)
        assets[name] = "/api/registrations/" + job.id + "/assets/" + name;
      j["assets"] = assets;
      for (const char* key : {"homography_original", "homography_working", "working_scale_ref",
                              "working_scale_mov", "report", "keypoints", "timings_ms"})
        j[key] = job.result.at(key);
    }
    return j;
  }

  std::shared_ptr<Job> find_job(const std::string& id) {
    std::lock_guard lock(mu);
    const auto it = jobs.find(id);
    return it == jobs.end() ? nullptr : it->second;
  }

  // Looks up a finished job, answering 404/409 itself when there is none.
  std::shared_ptr<Job> done_job(const std::string& id, httplib::Response& res) {
    auto job = find_job(id);
    if (!job) {
      send_error(res, 404, "unknown job " + id);
      return nullptr;
    }
    std::lock_guard lock(mu);
    if (job->state != JobState::Done) {
      send_error(res, 409, "job " + id + " is " + std::string(to_string(job->state)));
      return nullptr;
    }
    return job;
  }

  void routes() {
    server.set_payload_max_length(std::size_t{2} << 30);

    server.Post("/api/images", [this](const httplib::Request& req, httplib::Response& res) {
      std::string bytes;
      if (req.is_multipart_form_data()) {
        if (req.files.empty()) return send_error(res, 400, "multipart request carries no file");
        bytes = req.has_file("image") ? req.get_file_value("image").content
                                      : req.files.begin()->second.content;
      } else {
        bytes = req.body;
      }
      if (bytes.empty()) return send_error(res, 400, "empty image upload");
      std::shared_ptr<const ImageBuffer> img;
      try {
        img = std::make_shared<const ImageBuffer>(
            decode_image(std::vector<std::uint8_t>(bytes.begin(), bytes.end())));
      } catch (const Error& e) {
        return send_error(res, 400, e.what());
      }
      const std::int64_t pixels = static_cast<std::int64_t>(img->width()) * img->height();
      if (pixels > options.max_image_pixels)
        return send_error(res, 413,
                          "image has " + std::to_string(pixels) + " pixels, limit is " +
                              std::to_string(options.max_image_pixels));
      const std::string id = make_uuid_v4();
      {
        std::lock_guard lock(mu);
        images[id] = img;
      }
      send_json(res, 201, {{"image_id", id}, {"width", img->width()}, {"height", img->height()}});
    });

    server.Get("/api/config", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mu);
      send_json(res, 200, persisted_config_json(config));
    });

    server.Put("/api/config", [this](const httplib::Request& req, httplib::Response& res) {
      RegistrationConfig cfg;
      try {
        cfg = persisted_config_from_json(json::parse(req.body));
      } catch (const json::parse_error& e) {
        return send_error(res, 400, e.what());
      } catch (const ConfigError& e) {
        return send_error(res, 400, e.what(), e.field());
      }
      std::lock_guard lock(mu);
      try {
        save_persisted_config(options.config_path, cfg);
      } catch (const Error& e) {
        return send_error(res, 500, e.what());
      }
      config = cfg;
      send_json(res, 200, persisted_config_json(config));
    });

    server.Post("/api/config/reset", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mu);
      try {
        save_persisted_config(options.config_path, RegistrationConfig{});
      } catch (const Error& e) {
        return send_error(res, 500, e.what());
      }
      config = RegistrationConfig{};
      send_json(res, 200, persisted_config_json(config));
    });

    server.Post("/api/registrations", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        return send_error(res, 400, e.what());
      }
      if (!body.is_object()) return send_error(res, 400, "request body must be a JSON object");
      const auto id_of = [&](const char* key) -> std::string {
        const auto it = body.find(key);
        return it != body.end() && it->is_string() ? it->get<std::string>() : std::string{};
      };
      auto job = std::make_shared<Job>();
      job->reference_id = id_of("reference_id");
      job->moving_id = id_of("moving_id");
      if (job->reference_id.empty()) return send_error(res, 400, "missing reference_id", "reference_id");
      if (job->moving_id.empty()) return send_error(res, 400, "missing moving_id", "moving_id");

      std::unique_lock lock(mu);
      RegistrationConfig cfg = config;
      if (const auto it = body.find("config"); it != body.end() && !it->is_null()) {
        // Members not given keep the persisted values.
        json merged = to_json(config);
        merged.merge_patch(*it);
        try {
          cfg = registration_config_from_json(merged);
        } catch (const ConfigError& e) {
          return send_error(res, 400, e.what(), e.field());
        }
      }
      const auto ref = images.find(job->reference_id);
      if (ref == images.end()) return send_error(res, 404, "unknown image " + job->reference_id);
      const auto mov = images.find(job->moving_id);
      if (mov == images.end()) return send_error(res, 404, "unknown image " + job->moving_id);
      job->reference = ref->second;
      job->moving = mov->second;
      job->cfg = cfg;
      job->id = make_uuid_v4();
      jobs[job->id] = job;
      queue.push_back(job);
      lock.unlock();
      cv.notify_one();
      send_json(res, 202, {{"job_id", job->id}});
    });

    server.Get(R"(/api/registrations/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto job = find_job(req.matches[1]);
                 if (!job) return send_error(res, 404, "unknown job " + req.matches[1].str());
                 std::lock_guard lock(mu);
                 send_json(res, 200, job_json(*job));
               });

    server.Get(R"(/api/registrations/([^/]+)/assets/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const std::string name = req.matches[2];
                 if (name != "warped" && name != "overlay_redcyan" && name != "matches" &&
                     name != "reference" && name != "moving")
                   return send_error(res, 404, "unknown asset " + name);
                 const auto job = done_job(req.matches[1], res);
                 if (!job) return;
                 std::lock_guard lock(mu);
                 const auto it = job->assets.find(name);
                 if (it == job->assets.end())
                   return send_error(res, 404, "asset " + name + " was not produced");
                 send_png(res, it->second);
               });

    server.Get(R"(/api/registrations/([^/]+)/blend)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 double alpha = 0.35;
                 if (req.has_param("alpha")) {
                   const std::string text = req.get_param_value("alpha");
                   std::size_t used = 0;
                   try {
                     alpha = std::stod(text, &used);
                   } catch (const std::exception&) {
                     used = 0;
                   }
                   if (used != text.size() || text.empty())
                     return send_error(res, 400, "alpha must be a number", "alpha");
                 }
                 const auto job = done_job(req.matches[1], res);
                 if (!job) return;
                 std::shared_ptr<const ImageBuffer> ref;
                 ImageBuffer warped;
                 {
                   std::lock_guard lock(mu);
                   ref = job->reference;
                   warped = job->warped;
                 }
                 try {
                   send_png(res, encode_png(overlay_blend(*ref, warped, alpha)));
                 } catch (const Error& e) {
                   send_error(res, 400, e.what(), "alpha");
                 }
               });

    server.Get(R"(/api/registrations/([^/]+)/export)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto job = done_job(req.matches[1], res);
                 if (!job) return;
                 std::vector<BundleFile> bundle;
                 {
                   std::lock_guard lock(mu);
                   bundle = job->bundle;
                 }
                 const auto zip = make_zip(bundle);
                 res.status = 200;
                 res.set_header("Content-Disposition",
                                "attachment; filename=\"registration-" + job->id + ".zip\"");
                 res.set_content(std::string(zip.begin(), zip.end()), "application/zip");
               });
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::wait() {
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void Service::stop() { impl_->server.stop(); }

}  // namespace craqreg
