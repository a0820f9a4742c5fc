#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "craqreg/config.hpp"
#include "craqreg/geometry.hpp"

namespace craqreg {

struct ControlPointAnnotation {
  std::string pair_id;
  std::vector<Correspondence> points;  // original image coordinates
};

struct ManifestEntry {
  std::string pair_id;
  std::filesystem::path reference;
  std::filesystem::path moving;
  std::filesystem::path annotation;
  std::string domain;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

enum class Metric { ME, MAE };

struct SuccessRateRow {
  std::string method;
  std::string domain;
  Metric metric = Metric::ME;
  double threshold = 0.0;
  double rate = 0.0;  // percent
};

struct PairResult {
  std::string pair_id;
  std::string domain;
  double me = 0.0;   // +inf when registration failed
  double mae = 0.0;  // +inf when registration failed
  std::string failure;  // empty on success, otherwise "<stage>: <message>"
};

struct SuccessRateTable {
  std::vector<SuccessRateRow> rows;
  std::vector<PairResult> pairs;
};

/// Per-point forward transfer error in reference pixels.
std::vector<double> pair_errors(const Homography& h, const ControlPointAnnotation& ann);

double me(std::span<const double> errors);
double mae(std::span<const double> errors);

/// 100 * |{m <= eps}| / n. Infinite entries (failed pairs) never count.
double success_rate(std::span<const double> per_pair_metric, double eps);

/// Parse errors raise Error(InvalidInput) with a "line L, column C" location.
ControlPointAnnotation parse_annotation(const std::string& text);
ControlPointAnnotation load_annotation(const std::filesystem::path& path);
/// Relative paths are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const ControlPointAnnotation& ann);

/// Registers every pair (failures score +inf) and tabulates success rates
/// per domain, metric and threshold. `workers` bounds concurrent pairs.
SuccessRateTable evaluate_dataset(const DatasetManifest& manifest, const RegistrationConfig& cfg,
                                  std::span<const double> thresholds_me,
                                  std::span<const double> thresholds_mae, int workers = 1);

/// Aggregates precomputed per-pair results (used by evaluate_dataset).
SuccessRateTable tabulate(std::vector<PairResult> pairs, const std::string& method,
                          std::span<const double> thresholds_me,
                          std::span<const double> thresholds_mae);

std::string format_table(const SuccessRateTable& table);
/// method,domain,metric,threshold,success_rate
std::string format_csv(const SuccessRateTable& table);
/// One success-rate curve: threshold,success_rate for a (domain, metric).
std::string format_curve_csv(const SuccessRateTable& table, const std::string& domain, Metric metric);

std::string_view to_string(Metric m);

}  // namespace craqreg
