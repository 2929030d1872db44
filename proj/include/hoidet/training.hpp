#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/image_cache.hpp"
#include "hoidet/model.hpp"
#include "hoidet/proposals.hpp"
#include "hoidet/rng.hpp"

namespace hoidet {

struct TrainConfig {
  double base_lr = 1e-3;
  int phase1_iterations = 2000;  // at base_lr
  int phase2_iterations = 1000;  // at base_lr * lr_decay
  double lr_decay = 0.1;
  double momentum = 0.9;
  int images_per_batch = 8;
  int proposals_per_image = 8;
  int positives_per_image = 1;
  int type1_negatives = 3;
  int type2_negatives = 4;
  std::uint64_t seed = 0;
  int threads = 1;

  [[nodiscard]] int total_iterations() const { return phase1_iterations + phase2_iterations; }
  [[nodiscard]] double lr_at(int iteration) const {
    return iteration < phase1_iterations ? base_lr : base_lr * lr_decay;
  }
  /// Throws PreconditionError unless the per-image bucket counts sum to
  /// proposals_per_image and every count is sane.
  void validate() const;
};

enum class SampleSource { kPositive, kTypeI, kTypeII, kResampled };

[[nodiscard]] const char* to_string(SampleSource source);

struct TrainingSample {
  std::size_t proposal = 0;  // index into ProposalSet::all()
  std::vector<float> labels;
  SampleSource source = SampleSource::kPositive;
};

/// Per-image sampling pools, computed once from the ground truth.
///
/// A proposal's label y_k is 1 iff min(IoU_h, IoU_o) >= 0.5 against some
/// instance of class k in the same image whose object category equals the
/// proposal's. For a chosen ground-truth category c: positives are
/// category-c proposals with a nonzero label; type-I negatives are the
/// remaining category-c proposals whose best min-IoU lies in [0.1, 0.5);
/// type-II negatives are the proposals of every other category.
class SamplerIndex {
 public:
  struct CategoryPools {
    std::string category;
    std::vector<std::size_t> positives;
    std::vector<std::size_t> type1;
    std::vector<std::size_t> type2;
  };
  struct ImageEntry {
    std::string image_id;
    std::size_t first = 0;  // proposal range [first, last)
    std::size_t last = 0;
    std::vector<CategoryPools> categories;  // empty when the image has no instances
  };

  SamplerIndex(const Dataset& ds, const ProposalSet& props);

  [[nodiscard]] const std::vector<ImageEntry>& images() const { return images_; }
  [[nodiscard]] const std::vector<float>& labels(std::size_t proposal) const {
    return labels_.at(proposal);
  }
  [[nodiscard]] double best_min_iou(std::size_t proposal) const { return best_.at(proposal); }
  /// One line per training image skipped for having no proposals.
  [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<ImageEntry> images_;
  std::vector<std::vector<float>> labels_;
  std::vector<double> best_;
  std::vector<std::string> warnings_;
};

/// Draws proposals_per_image samples from one image. Shortfalls cascade
/// positive -> type-I -> type-II, then resample with replacement from all of
/// the image's proposals.
[[nodiscard]] std::vector<TrainingSample> sample_image(const SamplerIndex& index,
                                                       std::size_t image, const TrainConfig& cfg,
                                                       Rng& rng);

/// images_per_batch distinct images (fewer if the index is smaller), each
/// contributing proposals_per_image samples, in draw order.
[[nodiscard]] std::vector<TrainingSample> sample_minibatch(const SamplerIndex& index,
                                                           const TrainConfig& cfg, Rng& rng);

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(int iteration, double loss);
  [[nodiscard]] int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean per-proposal loss per iteration
  std::vector<std::string> warnings;
};

using ProgressFn = std::function<void(int iteration, double loss)>;

/// SGD with momentum over sampled minibatches. The batch is split into one
/// work unit per sampled image; unit gradients are reduced in draw order, so
/// the result does not depend on cfg.threads.
TrainResult train(HORCNNModel& model, const SamplerIndex& index, const ProposalSet& props,
                  const ImageCache& images, const TrainConfig& cfg,
                  const ProgressFn& progress = {});

/// Mean of `curve` over [first, first + window).
[[nodiscard]] double window_mean(const std::vector<double>& curve, std::size_t first,
                                 std::size_t window);

}  // namespace hoidet
