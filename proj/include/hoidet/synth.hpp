#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/image.hpp"

namespace hoidet::synth {

enum class ShapeKind { kBicycle, kChair, kBall, kKite, kBox };
enum class Pattern { kSolid, kStripes, kChecker };

struct Appearance {
  ShapeKind shape = ShapeKind::kBox;
  std::array<std::uint8_t, 3> color{200, 200, 200};
  Pattern pattern = Pattern::kSolid;
};

/// Where the object sits relative to the human.
enum class Placement {
  kBelowOverlap,  // human on top of the object (ride, sit on)
  kBeside,        // object next to the human, bottoms aligned (walk, kick)
  kAboveHead,     // object held over the head (carry, throw)
  kInFront,       // object overlapping the torso side (hold)
  kFarAbove,      // object high above and to the side (fly)
};

struct SynthRule {
  HoiId hoi_id = 0;
  std::string verb;
  std::string object_category;
  Appearance human{ShapeKind::kBox, {70, 90, 160}, Pattern::kSolid};  // clothing color family
  Appearance object;
  Placement placement = Placement::kBeside;
  int object_min = 12;  // object side lengths in pixels, [min, max]
  int object_max = 16;
  double aspect = 1.0;  // object width / height
  double rate = 1.0;    // relative frequency; 0 keeps the class out of every image
};

struct NoiseModel {
  double box_jitter = 0.0;   // std-dev of coordinate noise, fraction of box size
  double score_noise = 0.0;  // std-dev added to scores before clamping
  double fp_rate = 0.0;      // per true detection, chance of an injected false positive
  double miss_rate = 0.0;    // chance of dropping a true detection
  double near_miss_fraction = 0.5;  // share of false positives that are shifted duplicates
  double fp_score_max = 0.7;        // false-positive scores are uniform in [0, this)
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratorConfig {
  std::vector<SynthRule> rules;
  int train_images = 400;
  int test_images = 100;
  int image_size = 128;
  std::uint64_t seed = 7;
  double background_rate = 0.15;  // images with no interaction at all
  double invisible_rate = 0.02;   // chance per image of an extra invisible-only label
  int max_groups = 3;             // interacting pairs per image
  int max_bystanders = 0;         // people not interacting with anything
  int max_idle_objects = 0;       // objects nobody interacts with
  double crowding = 0.0;          // chance that a new entity is placed next to an earlier one
};

/// 8 classes over 4 object categories, 400/100 images. Classes 0-5 differ
/// within their category only by layout; 6 and 7 share a layout and differ
/// only by object appearance; 5 and 7 are rare.
[[nodiscard]] GeneratorConfig default_benchmark(std::uint64_t seed = 7);

/// Four classes over two categories, each class with its own layout, no
/// rare classes or invisible labels. Small enough for convergence tests.
[[nodiscard]] GeneratorConfig separable_benchmark(std::uint64_t seed = 7);

[[nodiscard]] Taxonomy taxonomy_of(const std::vector<SynthRule>& rules);

/// Counts recorded while generating, independent of dataset_stats.
struct DeclaredCounts {
  std::size_t images = 0;
  std::size_t positives = 0;
  std::size_t instances = 0;
  std::size_t boxes = 0;
};

struct SynthSplit {
  Dataset dataset;
  std::map<std::string, Image> images;
  DeclaredCounts declared;
  std::vector<Detection> extras;  // bystanders and idle objects, score 1.0
};

struct SynthOutput {
  SynthSplit train;
  SynthSplit test;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic in config.seed; each image draws from its own stream
/// derived from (seed, split, index), so `threads` never changes the output.
[[nodiscard]] SynthOutput generate(const GeneratorConfig& config, int threads = 1);

/// Writes one split as a dataset root at `root`: annotations plus PNG rasters.
void write_split(SynthSplit& split, const std::filesystem::path& root, int threads = 1);

/// One score-1.0 detection per distinct ground-truth box.
[[nodiscard]] std::vector<Detection> perfect_detections(const Dataset& ds);

/// What an ideal detector sees: every ground-truth box plus the bystanders
/// and idle objects, score 1.0, grouped by image in dataset order.
[[nodiscard]] std::vector<Detection> scene_detections(const SynthSplit& split);

/// Jitter, score noise, misses and injected false positives (near-miss
/// duplicates and random boxes of random categories).
[[nodiscard]] std::vector<Detection> corrupt_detections(const std::vector<Detection>& dets,
                                                        const NoiseModel& noise, const Dataset& ds);

/// The noise used for the default benchmark's detector files.
[[nodiscard]] NoiseModel default_noise(std::uint64_t seed);

}  // namespace hoidet::synth
