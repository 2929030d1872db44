#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/image_cache.hpp"
#include "hoidet/model.hpp"
#include "hoidet/proposals.hpp"

namespace hoidet {

inline constexpr std::string_view kScoresHeader = "HOIDET-SCORES v1";

/// Per-class probabilities for one proposal, restricted to the classes of
/// the proposal's object category.
struct ScoredProposal {
  std::string image_id;
  std::string object_category;
  BBox human_box;
  BBox object_box;
  std::vector<std::pair<HoiId, double>> probs;

  friend bool operator==(const ScoredProposal&, const ScoredProposal&) = default;
};

struct ScoreResult {
  std::vector<ScoredProposal> scored;                       // proposal order
  std::vector<std::pair<std::string, std::string>> errors;  // (image_id, message)
};

/// sigma(s_k) for every proposal. With `only`, s is that single stream's
/// output instead of the sum. Images whose raster is missing are reported
/// in `errors` and skipped.
[[nodiscard]] ScoreResult score_all(const HORCNNModel& model, const ProposalSet& props,
                                    const Taxonomy& taxonomy, const ImageCache& images,
                                    int threads = 1, std::optional<StreamKind> only = std::nullopt);

[[nodiscard]] std::string serialize_scores(const std::vector<ScoredProposal>& scored);
void save_scores(const std::vector<ScoredProposal>& scored, const std::filesystem::path& path);
[[nodiscard]] std::vector<ScoredProposal> load_scores(const std::filesystem::path& path,
                                                      const Taxonomy& taxonomy);

}  // namespace hoidet
