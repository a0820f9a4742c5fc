// craqreg: command-line front end (register, evaluate, serve, synth).

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "craqreg/error.hpp"
#include "craqreg/evaluation.hpp"
#include "craqreg/pipeline.hpp"
#include "craqreg/service.hpp"
#include "craqreg/synthetic.hpp"

namespace fs = std::filesystem;
using namespace craqreg;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDetection = 3;
constexpr int kExitMatching = 4;
constexpr int kExitEstimation = 5;

int exit_code(ErrorKind kind) {
  const std::string_view stage = failing_stage(kind);
  if (stage == "detection") return kExitDetection;
  if (stage == "matching") return kExitMatching;
  if (stage == "estimation") return kExitEstimation;
  return kExitUsage;
}

struct ConfigFlags {
  std::optional<int> patch_size;
  std::optional<int> n_max;
  std::optional<double> tau_kp;
  std::optional<std::string> estimator;
  std::optional<double> reproj;
  std::optional<std::string> resize;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool visualize = false;

  void add_to(CLI::App& app) {
    app.add_option("--patch-size", patch_size, "Detection patch size in pixels");
    app.add_option("--max-keypoints", n_max, "Keypoint budget per image");
    app.add_option("--tau-kp", tau_kp, "Keypoint confidence threshold in [0, 1)");
    app.add_option("--estimator", estimator, "ransac | lo-ransac | magsac-simplified");
    app.add_option("--reproj-thresh", reproj, "Inlier reprojection threshold (working px)");
    app.add_option("--resize", resize, "same-width | height:<h> | none");
    app.add_option("--backend", backend, "Detector backend");
    app.add_option("--seed", seed, "Estimator seed");
    app.add_option("--workers", workers, "Detection threads (0 = all, 1 = serial)");
    app.add_flag("--visualize-matches", visualize, "Also render matches.png");
  }

  RegistrationConfig build() const {
    RegistrationConfig cfg;
    if (patch_size) cfg.patch_size = *patch_size;
    if (n_max) cfg.n_max = *n_max;
    if (tau_kp) cfg.tau_kp = *tau_kp;
    if (estimator) cfg.estimator.method = parse_estimator_method(*estimator);
    if (reproj) cfg.estimator.tau_reproj = *reproj;
    if (resize) cfg.resize = parse_resize_policy(*resize);
    if (backend) cfg.backend = *backend;
    if (seed) cfg.estimator.seed = *seed;
    if (workers) cfg.workers = *workers;
    cfg.visualize_matches = visualize;
    validate(cfg);
    return cfg;
  }
};

ImageBuffer load_image(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "no such file: " + path.string());
  return read_image(path);
}

int cmd_register(const fs::path& ref_path, const fs::path& mov_path, const fs::path& out_dir,
                 const std::optional<fs::path>& annotations, const ConfigFlags& flags) {
  const RegistrationConfig cfg = flags.build();
  const ImageBuffer ref = load_image(ref_path);
  const ImageBuffer mov = load_image(mov_path);
  std::optional<ControlPointAnnotation> ann;
  if (annotations) ann = load_annotation(*annotations);

  const RegistrationOutput out = register_pair(ref, mov, cfg);
  write_bundle(make_bundle(out, ref, cfg), out_dir);
  std::printf("registered %s onto %s: %d/%zu inliers, %d iterations\n", mov_path.c_str(),
              ref_path.c_str(), out.report.inlier_count(), out.matches.size(),
              out.report.iterations_run);
  std::printf("bundle written to %s\n", out_dir.c_str());
  if (ann) {
    const auto errors = pair_errors(out.h_original, *ann);
    std::printf("control points: %zu  ME %.3f px  MAE %.3f px\n", errors.size(), me(errors),
                mae(errors));
  }
  return 0;
}

std::vector<double> or_default(std::vector<double> v, std::vector<double> fallback) {
  return v.empty() ? fallback : v;
}

int cmd_evaluate(const fs::path& manifest_path, const std::vector<double>& thr_me,
                 const std::vector<double>& thr_mae, const std::optional<fs::path>& out_dir,
                 int jobs, const ConfigFlags& flags) {
  const RegistrationConfig cfg = flags.build();
  const DatasetManifest manifest = load_manifest(manifest_path);
  const SuccessRateTable table = evaluate_dataset(manifest, cfg, thr_me, thr_mae, jobs);
  std::cout << format_table(table);
  std::cout << "\n" << format_csv(table);
  if (out_dir) {
    fs::create_directories(*out_dir);
    std::ofstream(*out_dir / "success_rates.csv") << format_csv(table);
    std::set<std::string> domains;
    for (const auto& row : table.rows) domains.insert(row.domain);
    for (const auto& domain : domains) {
      for (Metric m : {Metric::ME, Metric::MAE}) {
        const auto name = "curve_" + domain + "_" + std::string(to_string(m)) + ".csv";
        std::ofstream(*out_dir / name) << format_curve_csv(table, domain, m);
      }
    }
  }
  return 0;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const std::string& host, int port, std::int64_t max_pixels, int jobs) {
  ServiceOptions opts;
  opts.max_image_pixels = max_pixels;
  opts.job_parallelism = jobs;
  Service service(opts);
  const int bound = service.start(host, port);
  std::printf("craqreg service on http://%s:%d (config %s)\n", host.c_str(), bound,
              default_config_path().c_str());
  std::fflush(stdout);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.wait();
  g_service = nullptr;
  return 0;
}

int cmd_synth(const fs::path& out_dir, int count, int size, const std::string& modality,
              std::uint64_t seed) {
  synth::Modality mod;
  if (modality == "identity") mod = synth::Modality::IdentityNoise;
  else if (modality == "inverted") mod = synth::Modality::Inverted;
  else if (modality == "gamma-blur") mod = synth::Modality::GammaBlur;
  else throw Error(ErrorKind::InvalidInput, "unknown modality " + modality);
  fs::create_directories(out_dir);
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    const auto pair = synth::make_pair(size, size, mod, seed + static_cast<std::uint64_t>(i));
    const std::string id = modality + "-" + std::to_string(i);
    write_png(pair.reference, out_dir / (id + "_ref.png"));
    write_png(pair.moving, out_dir / (id + "_mov.png"));
    auto ann = pair.annotation;
    ann.pair_id = id;
    std::ofstream(out_dir / (id + ".json")) << to_json(ann).dump(2) << "\n";
    entries.push_back({{"pair_id", id},
                       {"reference", id + "_ref.png"},
                       {"moving", id + "_mov.png"},
                       {"annotation", id + ".json"},
                       {"domain", modality}});
  }
  std::ofstream(out_dir / "manifest.json") << nlohmann::json{{"entries", entries}}.dump(2) << "\n";
  std::printf("%d pairs written to %s\n", count, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal craquelure-based image registration"};
  app.require_subcommand(1);

  ConfigFlags reg_flags;
  fs::path reference, moving, out_dir;
  std::optional<fs::path> annotations;
  auto* reg = app.add_subcommand("register", "Register a moving image onto a reference");
  reg->add_option("--reference", reference, "Reference image")->required();
  reg->add_option("--moving", moving, "Moving image")->required();
  reg->add_option("--out", out_dir, "Output bundle directory")->required();
  reg->add_option("--annotations", annotations, "Control-point annotation JSON");
  reg_flags.add_to(*reg);

  ConfigFlags eval_flags;
  fs::path manifest;
  std::vector<double> thr_me, thr_mae;
  std::optional<fs::path> eval_out;
  int eval_jobs = 1;
  auto* eval = app.add_subcommand("evaluate", "Success rates over an annotated dataset");
  eval->add_option("--manifest", manifest, "Dataset manifest JSON")->required();
  eval->add_option("--thresholds-me", thr_me, "ME thresholds (default 1..6)")->delimiter(',');
  eval->add_option("--thresholds-mae", thr_mae, "MAE thresholds (default 5..10)")->delimiter(',');
  eval->add_option("--out", eval_out, "Directory for CSV tables and curves");
  eval->add_option("--jobs", eval_jobs, "Pairs registered concurrently")->check(CLI::PositiveNumber);
  eval_flags.add_to(*eval);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::int64_t max_pixels = 200'000'000;
  int serve_jobs = 1;
  auto* serve = app.add_subcommand("serve", "Run the local HTTP service");
  serve->add_option("--port", port, "Listen port (0 picks a free one)");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--max-pixels", max_pixels, "Upload size cap in pixels");
  serve->add_option("--jobs", serve_jobs, "Concurrent registration jobs")->check(CLI::PositiveNumber);

  fs::path synth_out;
  int synth_count = 13, synth_size = 640;
  std::string synth_modality = "identity";
  std::uint64_t synth_seed = 1;
  auto* syn = app.add_subcommand("synth", "Write a synthetic annotated craquelure dataset");
  syn->add_option("--out", synth_out, "Output directory")->required();
  syn->add_option("--count", synth_count, "Number of pairs")->check(CLI::PositiveNumber);
  syn->add_option("--size", synth_size, "Image side length")->check(CLI::Range(128, 8192));
  syn->add_option("--modality", synth_modality, "identity | inverted | gamma-blur");
  syn->add_option("--seed", synth_seed, "First scene seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*reg) return cmd_register(reference, moving, out_dir, annotations, reg_flags);
    if (*eval)
      return cmd_evaluate(manifest, or_default(thr_me, {1, 2, 3, 4, 5, 6}),
                          or_default(thr_mae, {5, 6, 7, 8, 9, 10}), eval_out, eval_jobs,
                          eval_flags);
    if (*serve) return cmd_serve(host, port, max_pixels, serve_jobs);
    if (*syn) return cmd_synth(synth_out, synth_count, synth_size, synth_modality, synth_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: invalid %s: %s\n", e.field().c_str(), e.what());
    return kExitUsage;
  } catch (const Error& e) {
    if (exit_code(e.kind()) == kExitUsage) {
      std::fprintf(stderr, "error: %s\n", e.what());
    } else {
      std::fprintf(stderr, "error: %s stage failed: %s\n",
                   std::string(failing_stage(e.kind())).c_str(), e.what());
    }
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
