#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/eval/evaluator.hpp"
#include "hoidet/image_cache.hpp"
#include "hoidet/model.hpp"
#include "hoidet/proposals.hpp"
#include "hoidet/scoring.hpp"
#include "hoidet/training.hpp"

namespace hoidet {

/// A dataset split together with what the model consumes from it.
struct SplitData {
  const Dataset* dataset = nullptr;
  const ProposalSet* proposals = nullptr;
  const ImageCache* images = nullptr;
};

struct ModelSpec {
  std::string variant = "ho";
  int patch_size = 64;
  int ip_size = kDefaultPatternSize;
};

/// Seed used for weight init; independent of the sampling stream.
[[nodiscard]] std::uint64_t init_seed(const TrainConfig& cfg);

struct TrainedModel {
  HORCNNModel model;
  TrainResult result;
};

/// Builds, initializes and trains one variant on `train`.
[[nodiscard]] TrainedModel train_variant(const ModelSpec& spec, const SplitData& train,
                                         const TrainConfig& cfg,
                                         const ProgressFn& progress = {});

/// Uniform(0,1) score for every (proposal, class of its category) entry.
[[nodiscard]] std::vector<ScoredProposal> baseline_random(const ProposalSet& props,
                                                          const Taxonomy& taxonomy,
                                                          std::uint64_t seed);

/// Single patch stream on the attention-window crop, trained and scored with
/// the same protocol as every other variant.
[[nodiscard]] TrainedModel baseline_union(const SplitData& train, const TrainConfig& cfg,
                                          int patch_size = 64);

/// Per-class linear map of (human score, object score), same loss and sampler.
[[nodiscard]] TrainedModel baseline_score_linear(const SplitData& train, const TrainConfig& cfg);

/// Scores `test` with each active stream alone and evaluates each.
[[nodiscard]] std::vector<std::pair<StreamKind, eval::EvalReport>> per_stream_eval(
    const HORCNNModel& model, const SplitData& test, eval::EvalSetting setting,
    const RareSplit& split, int threads = 1);

/// One stream alone; throws PreconditionError if `kind` is inactive.
[[nodiscard]] eval::EvalReport stream_eval(const HORCNNModel& model, StreamKind kind,
                                           const SplitData& test, eval::EvalSetting setting,
                                           const RareSplit& split, int threads = 1);

}  // namespace hoidet
