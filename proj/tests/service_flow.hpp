#pragma once

// Drives the HTTP service through upload -> configure -> run -> poll ->
// fetch assets -> export, recording what went wrong.

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "craqreg/image.hpp"
#include "craqreg/zip.hpp"

namespace flow {

struct Outcome {
  std::vector<std::string> failures;
  std::string job_id;
  nlohmann::json record;
  std::vector<std::string> zip_names;
  bool ok() const { return failures.empty(); }
};

inline std::string upload(httplib::Client& cli, const craqreg::ImageBuffer& img, Outcome& o) {
  const auto png = craqreg::encode_png(img);
  httplib::MultipartFormDataItems items{
      {"image", std::string(png.begin(), png.end()), "image.png", "image/png"}};
  const auto res = cli.Post("/api/images", items);
  if (!res || res->status != 201) {
    o.failures.push_back("upload failed");
    return {};
  }
  const auto j = nlohmann::json::parse(res->body);
  if (j.at("width") != img.width() || j.at("height") != img.height())
    o.failures.push_back("upload reported wrong size");
  return j.at("image_id");
}

inline Outcome happy_path(int port, const craqreg::ImageBuffer& ref, const craqreg::ImageBuffer& mov,
                          const nlohmann::json& config) {
  Outcome o;
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(60, 0);
  const std::string rid = upload(cli, ref, o);
  const std::string mid = upload(cli, mov, o);
  if (!o.ok()) return o;

  auto res = cli.Put("/api/config", config.dump(), "application/json");
  if (!res || res->status != 200) o.failures.push_back("PUT /api/config failed");
  res = cli.Get("/api/config");
  if (!res || res->status != 200 ||
      nlohmann::json::parse(res->body).at("config") != nlohmann::json::parse(config.dump()).at("config"))
    o.failures.push_back("config PUT -> GET is not the identity");

  const nlohmann::json body = {{"reference_id", rid}, {"moving_id", mid}};
  res = cli.Post("/api/registrations", body.dump(), "application/json");
  if (!res || res->status != 202) {
    o.failures.push_back("POST /api/registrations failed");
    return o;
  }
  o.job_id = nlohmann::json::parse(res->body).at("job_id");

  const std::vector<std::string> order{"pending", "running", "done"};
  std::size_t seen = 0;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(120);
  for (;;) {
    res = cli.Get("/api/registrations/" + o.job_id);
    if (!res || res->status != 200) {
      o.failures.push_back("polling failed");
      return o;
    }
    o.record = nlohmann::json::parse(res->body);
    const std::string state = o.record.at("state");
    if (state == "failed") {
      o.failures.push_back("job failed: " + o.record.value("message", std::string{}));
      return o;
    }
    const auto pos = std::find(order.begin(), order.end(), state) - order.begin();
    if (static_cast<std::size_t>(pos) < seen) o.failures.push_back("job state regressed");
    seen = static_cast<std::size_t>(pos);
    if (state == "done") break;
    if (std::chrono::steady_clock::now() > deadline) {
      o.failures.push_back("job did not finish");
      return o;
    }
    const auto early = cli.Get("/api/registrations/" + o.job_id + "/assets/warped");
    if (early && early->status != 409 && early->status != 200)
      o.failures.push_back("asset before completion gave " + std::to_string(early->status));
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  for (const char* asset : {"warped", "overlay_redcyan", "reference", "moving"}) {
    res = cli.Get("/api/registrations/" + o.job_id + "/assets/" + asset);
    if (!res || res->status != 200 || res->get_header_value("Content-Type") != "image/png") {
      o.failures.push_back(std::string("asset ") + asset + " missing");
      continue;
    }
    const auto img = craqreg::decode_image(std::vector<std::uint8_t>(res->body.begin(), res->body.end()));
    const bool is_moving = std::string(asset) == "moving";
    const auto& want = is_moving ? mov : ref;
    if (img.width() != want.width() || img.height() != want.height())
      o.failures.push_back(std::string("asset ") + asset + " has wrong size");
  }
  res = cli.Get("/api/registrations/" + o.job_id + "/blend?alpha=0.35");
  if (!res || res->status != 200) o.failures.push_back("blend failed");

  res = cli.Get("/api/registrations/" + o.job_id + "/export");
  if (!res || res->status != 200) {
    o.failures.push_back("export failed");
    return o;
  }
  const std::vector<std::uint8_t> zip(res->body.begin(), res->body.end());
  o.zip_names = craqreg::zip_entry_names(zip);
  return o;
}

}  // namespace flow
