#include "craqreg/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "craqreg/error.hpp"
#include "craqreg/image.hpp"
#include "craqreg/pipeline.hpp"

namespace craqreg {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput,
                what + ": malformed JSON at " + location(text, e.byte) + ": " + e.what());
  }
}

Point2 read_point(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorKind::InvalidInput, ctx + " must be an [x, y] pair of numbers");
  }
  const Point2 p{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw Error(ErrorKind::InvalidInput, ctx + " is not finite");
  }
  return p;
}

std::string required_string(const json& j, const char* key, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorKind::InvalidInput, ctx + ": missing string member '" + key + "'");
  }
  return it->get<std::string>();
}

bool inside(const Point2& p, const ImageBuffer& img) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= img.width() && p.y <= img.height();
}

std::string format_rate(double r) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1) << r;
  return ss.str();
}

std::string format_threshold(double t) {
  std::ostringstream ss;
  ss << t;
  return ss.str();
}

}  // namespace

std::string_view to_string(Metric m) { return m == Metric::ME ? "ME" : "MAE"; }

std::vector<double> pair_errors(const Homography& h, const ControlPointAnnotation& ann) {
  std::vector<double> out;
  out.reserve(ann.points.size());
  for (const auto& c : ann.points) out.push_back(reprojection_error(h, c));
  return out;
}

double me(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorKind::EmptyErrorList, "ME of an empty error list");
  double s = 0.0;
  for (double e : errors) s += e;
  return s / static_cast<double>(errors.size());
}

double mae(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorKind::EmptyErrorList, "MAE of an empty error list");
  return *std::max_element(errors.begin(), errors.end());
}

double success_rate(std::span<const double> per_pair_metric, double eps) {
  if (per_pair_metric.empty()) throw Error(ErrorKind::EmptyDataset, "no pairs to rate");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "threshold must be positive");
  const auto hits = std::count_if(per_pair_metric.begin(), per_pair_metric.end(),
                                  [eps](double m) { return m <= eps; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(per_pair_metric.size());
}

ControlPointAnnotation parse_annotation(const std::string& text) {
  const json j = parse_json(text, "annotation");
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "annotation must be a JSON object");
  ControlPointAnnotation ann;
  ann.pair_id = required_string(j, "pair_id", "annotation");
  const auto pts = j.find("points");
  if (pts == j.end() || !pts->is_array() || pts->empty()) {
    throw Error(ErrorKind::InvalidInput, "annotation needs a non-empty 'points' array");
  }
  for (std::size_t i = 0; i < pts->size(); ++i) {
    const json& p = (*pts)[i];
    const std::string ctx = "points[" + std::to_string(i) + "]";
    if (!p.is_object() || !p.contains("reference") || !p.contains("moving")) {
      throw Error(ErrorKind::InvalidInput, ctx + " needs 'reference' and 'moving'");
    }
    ann.points.push_back({read_point(p["reference"], ctx + ".reference"),
                          read_point(p["moving"], ctx + ".moving")});
  }
  return ann;
}

ControlPointAnnotation load_annotation(const std::filesystem::path& path) {
  try {
    return parse_annotation(read_text(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

json to_json(const ControlPointAnnotation& ann) {
  json pts = json::array();
  for (const auto& c : ann.points) {
    pts.push_back({{"reference", {c.a.x, c.a.y}}, {"moving", {c.b.x, c.b.y}}});
  }
  return {{"pair_id", ann.pair_id}, {"points", pts}};
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const json j = parse_json(text, path.string());
  const auto entries = j.find("entries");
  if (!j.is_object() || entries == j.end() || !entries->is_array()) {
    throw Error(ErrorKind::InvalidInput, path.string() + ": manifest needs an 'entries' array");
  }
  const auto base = path.parent_path();
  const auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  DatasetManifest m;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const json& e = (*entries)[i];
    const std::string ctx = path.string() + ": entries[" + std::to_string(i) + "]";
    if (!e.is_object()) throw Error(ErrorKind::InvalidInput, ctx + " must be an object");
    ManifestEntry entry;
    entry.pair_id = required_string(e, "pair_id", ctx);
    entry.reference = resolve(required_string(e, "reference", ctx));
    entry.moving = resolve(required_string(e, "moving", ctx));
    entry.annotation = resolve(required_string(e, "annotation", ctx));
    entry.domain = e.contains("domain") && e["domain"].is_string() ? e["domain"].get<std::string>()
                                                                   : std::string("default");
    if (!seen.insert(entry.pair_id).second) {
      throw Error(ErrorKind::InvalidInput, ctx + ": duplicate pair_id '" + entry.pair_id + "'");
    }
    for (const auto& f : {entry.reference, entry.moving, entry.annotation}) {
      if (!std::filesystem::exists(f)) {
        throw Error(ErrorKind::Io, ctx + ": missing file " + f.string());
      }
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

SuccessRateTable tabulate(std::vector<PairResult> pairs, const std::string& method,
                          std::span<const double> thresholds_me,
                          std::span<const double> thresholds_mae) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no pairs");
  SuccessRateTable table;
  std::vector<std::string> domains;
  for (const auto& p : pairs)
    if (std::find(domains.begin(), domains.end(), p.domain) == domains.end())
      domains.push_back(p.domain);
  for (const auto& domain : domains) {
    std::vector<double> mes;
    std::vector<double> maes;
    for (const auto& p : pairs) {
      if (p.domain != domain) continue;
      mes.push_back(p.me);
      maes.push_back(p.mae);
    }
    for (double eps : thresholds_me)
      table.rows.push_back({method, domain, Metric::ME, eps, success_rate(mes, eps)});
    for (double eps : thresholds_mae)
      table.rows.push_back({method, domain, Metric::MAE, eps, success_rate(maes, eps)});
  }
  table.pairs = std::move(pairs);
  return table;
}

SuccessRateTable evaluate_dataset(const DatasetManifest& manifest, const RegistrationConfig& cfg,
                                  std::span<const double> thresholds_me,
                                  std::span<const double> thresholds_mae, int workers) {
  if (manifest.entries.empty()) throw Error(ErrorKind::EmptyDataset, "manifest has no entries");
  validate(cfg);
  const std::size_t n = manifest.entries.size();
  std::vector<PairResult> results(n);
  std::vector<std::exception_ptr> fatal(n);

  const auto run_one = [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    PairResult& r = results[i];
    r.pair_id = e.pair_id;
    r.domain = e.domain;
    try {
      const ImageBuffer ref = read_image(e.reference);
      const ImageBuffer mov = read_image(e.moving);
      const ControlPointAnnotation ann = load_annotation(e.annotation);
      for (const auto& c : ann.points) {
        if (!inside(c.a, ref) || !inside(c.b, mov)) {
          throw Error(ErrorKind::InvalidInput,
                      e.annotation.string() + ": control point outside image bounds");
        }
      }
      try {
        const RegistrationOutput out = register_pair(ref, mov, cfg);
        const auto errs = pair_errors(out.h_original, ann);
        r.me = me(errs);
        r.mae = mae(errs);
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::InvalidConfig) throw;
        r.me = kInf;
        r.mae = kInf;
        r.failure = std::string(failing_stage(err.kind())) + ": " + err.what();
      }
    } catch (...) {
      fatal[i] = std::current_exception();
    }
  };

  const int pool = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (pool == 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < pool; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
    for (auto& th : threads) th.join();
  }
  for (const auto& f : fatal)
    if (f) std::rethrow_exception(f);
  return tabulate(std::move(results), std::string(to_string(cfg.estimator.method)), thresholds_me,
                  thresholds_mae);
}

std::string format_table(const SuccessRateTable& table) {
  std::ostringstream ss;
  ss << std::left << std::setw(20) << "method" << std::setw(12) << "domain" << std::setw(8)
     << "metric" << std::right << std::setw(10) << "epsilon" << std::setw(10) << "SR [%]"
     << "\n";
  for (const auto& r : table.rows) {
    ss << std::left << std::setw(20) << r.method << std::setw(12) << r.domain << std::setw(8)
       << to_string(r.metric) << std::right << std::setw(10) << format_threshold(r.threshold)
       << std::setw(10) << format_rate(r.rate) << "\n";
  }
  ss << "\npair_id,domain,ME,MAE,failure\n";
  for (const auto& p : table.pairs) {
    ss << p.pair_id << "," << p.domain << "," << p.me << "," << p.mae << "," << p.failure << "\n";
  }
  return ss.str();
}

std::string format_csv(const SuccessRateTable& table) {
  std::ostringstream ss;
  ss << "method,domain,metric,threshold,success_rate\n";
  for (const auto& r : table.rows) {
    ss << r.method << "," << r.domain << "," << to_string(r.metric) << ","
       << format_threshold(r.threshold) << "," << std::setprecision(17) << r.rate
       << std::setprecision(6) << "\n";
  }
  return ss.str();
}

std::string format_curve_csv(const SuccessRateTable& table, const std::string& domain, Metric metric) {
  std::ostringstream ss;
  ss << "threshold,success_rate\n";
  for (const auto& r : table.rows) {
    if (r.domain != domain || r.metric != metric) continue;
    ss << format_threshold(r.threshold) << "," << std::setprecision(17) << r.rate
       << std::setprecision(6) << "\n";
  }
  return ss.str();
}

}  // namespace craqreg
