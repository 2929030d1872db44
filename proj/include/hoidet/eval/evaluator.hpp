#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/proposals.hpp"
#include "hoidet/scoring.hpp"

namespace hoidet::eval {

struct ScoredDetection {
  std::string image_id;
  HoiId hoi_id = 0;
  BBox human_box;
  BBox object_box;
  double score = 0.0;

  friend bool operator==(const ScoredDetection&, const ScoredDetection&) = default;
};

enum class EvalSetting { kDefault, kKnownObject };
enum class ApMode { kAllPoints, kElevenPoint };

[[nodiscard]] std::string_view to_string(EvalSetting s);
[[nodiscard]] EvalSetting parse_setting(std::string_view text);
[[nodiscard]] std::string_view to_string(ApMode m);
[[nodiscard]] ApMode parse_ap_mode(std::string_view text);

/// One detection per (proposal, class) entry of a scores file.
[[nodiscard]] std::vector<ScoredDetection> flatten(std::span<const ScoredProposal> scored);

/// Indices of `dets` by descending score; ties broken by (image_id, human
/// box, object box, hoi_id) ascending.
[[nodiscard]] std::vector<std::size_t> ranking(std::span<const ScoredDetection> dets);

/// Greedy matching for one class. Detections are visited in ranking order;
/// a detection is a true positive iff min(IoU_h, IoU_o) > thresh against a
/// not-yet-matched instance of its image, and it consumes the instance with
/// the highest min-IoU. Returns TP flags in ranking order.
[[nodiscard]] std::vector<bool> match_detections(std::span<const ScoredDetection> dets,
                                                 std::span<const HOIInstance> gt,
                                                 double thresh = kMatchIoU);

/// All-points interpolated AP (precision replaced by its running maximum from
/// the right), or the 11-point variant. nullopt when n_gt == 0.
[[nodiscard]] std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt,
                                                      ApMode mode = ApMode::kAllPoints);

/// Images a class is evaluated on: every image (Default) or the images whose
/// positive labels include a class with the same object category (Known Object).
[[nodiscard]] std::set<std::string> evaluated_images(const Dataset& test, HoiId hoi_id,
                                                     EvalSetting setting);

struct EvalReport {
  EvalSetting setting = EvalSetting::kDefault;
  ApMode ap_mode = ApMode::kAllPoints;
  double match_threshold = kMatchIoU;
  std::vector<std::optional<double>> ap;  // nullopt: no ground truth in the evaluated images
  std::vector<std::size_t> n_gt;
  std::optional<double> map_full;
  std::optional<double> map_rare;
  std::optional<double> map_non_rare;
};

/// Throws ValidationError if a detection refers to an image not in `test`.
[[nodiscard]] EvalReport evaluate(std::span<const ScoredDetection> dets, const Dataset& test,
                                  EvalSetting setting, const RareSplit& split,
                                  ApMode mode = ApMode::kAllPoints, double thresh = kMatchIoU,
                                  int threads = 1);

struct NamedReport {
  std::string method;
  const EvalReport* default_report = nullptr;
  const EvalReport* known_report = nullptr;
};

inline constexpr std::string_view kTableHeader = "HOIDET-EVAL v1";

/// mAP (%) table: one row per method, Default | Known Object x Full | Rare | Non-Rare.
[[nodiscard]] std::string format_table(std::span<const NamedReport> rows);

/// Per-class rows: hoi_id,verb,object,rare,n_gt_default,ap_default,n_gt_known,ap_known.
[[nodiscard]] std::string format_per_class_csv(const Taxonomy& taxonomy, const RareSplit& split,
                                               const EvalReport& default_report,
                                               const EvalReport& known_report);

struct PerClassAp {
  std::vector<std::optional<double>> ap_default;
  std::vector<std::optional<double>> ap_known;
  std::set<HoiId> rare;
  std::set<HoiId> non_rare;
};

[[nodiscard]] PerClassAp load_per_class_csv(const std::filesystem::path& path);

}  // namespace hoidet::eval
