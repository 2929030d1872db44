#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hoidet/core_model.hpp"

namespace hoidet {

inline constexpr std::string_view kProposalsHeader = "HOIDET-PROPOSALS v1";

/// Coverage / training-positive rule: min(IoU_h, IoU_o) >= this.
inline constexpr double kCoverageIoU = 0.5;
/// Test-time true-positive rule: min(IoU_h, IoU_o) > this.
inline constexpr double kMatchIoU = 0.5;
/// Lower bound of the type-I negative band [0.1, 0.5).
inline constexpr double kTypeINegativeIoU = 0.1;

inline constexpr int kDefaultTopHumans = 10;
inline constexpr int kDefaultTopObjects = 10;

struct Proposal {
  std::string image_id;
  Detection human;
  Detection object;
  std::string object_category;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

/// Proposals grouped by (image, object category).
///
/// Stored flat in a canonical order: image_id ascending, object categories
/// in taxonomy order, then (human rank, object rank).
class ProposalSet {
 public:
  ProposalSet() = default;
  /// Takes proposals already in canonical order.
  explicit ProposalSet(std::vector<Proposal> proposals);

  [[nodiscard]] const std::vector<Proposal>& all() const { return proposals_; }
  [[nodiscard]] std::size_t size() const { return proposals_.size(); }
  [[nodiscard]] bool empty() const { return proposals_.empty(); }

  /// Proposals of one (image, category) group; empty span if none.
  [[nodiscard]] std::span<const Proposal> group(const std::string& image_id,
                                                const std::string& category) const;
  /// Index range [first, last) of all proposals of one image.
  [[nodiscard]] std::pair<std::size_t, std::size_t> image_range(const std::string& image_id) const;
  [[nodiscard]] std::vector<std::string> image_ids() const;

  friend bool operator==(const ProposalSet& a, const ProposalSet& b) {
    return a.proposals_ == b.proposals_;
  }

 private:
  std::vector<Proposal> proposals_;
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> groups_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> images_;
};

/// Pairs the top `top_h` person detections with the top `top_o` detections
/// of every object category in each image. Ranking is score descending, ties
/// broken by (x1, y1, x2, y2). For the "person" object category a detection
/// is never paired with itself.
[[nodiscard]] ProposalSet generate_proposals(std::span<const Detection> detections, int top_h,
                                             int top_o, const Taxonomy& taxonomy,
                                             int threads = 1);

[[nodiscard]] std::string serialize_proposals(const ProposalSet& props);
[[nodiscard]] ProposalSet load_proposals(const std::filesystem::path& path,
                                         const Taxonomy& taxonomy);
void save_proposals(const ProposalSet& props, const std::filesystem::path& path);

struct RecallReport {
  /// Per class; nullopt when the class has no ground-truth instances.
  std::vector<std::optional<double>> per_class;
  std::vector<std::size_t> n_gt;
  std::optional<double> mean_full;
  std::optional<double> mean_rare;
  std::optional<double> mean_non_rare;
};

/// Fraction of ground-truth instances covered by some proposal of the same
/// object category in the same image with min(IoU_h, IoU_o) >= iou_thresh.
/// Rare/non-rare is decided by `ds`'s own instance counts.
[[nodiscard]] RecallReport proposal_recall(const ProposalSet& props, const Dataset& ds,
                                           double iou_thresh = kCoverageIoU,
                                           int rare_threshold = kDefaultRareThreshold);

/// Mean of the engaged entries of `values` restricted to `ids`.
[[nodiscard]] std::optional<double> mean_over(std::span<const std::optional<double>> values,
                                              const std::set<HoiId>& ids);

}  // namespace hoidet
