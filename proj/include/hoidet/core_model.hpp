#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hoidet/geometry.hpp"

namespace hoidet {

inline constexpr std::string_view kPersonCategory = "person";
inline constexpr std::string_view kTaxonomyHeader = "HOIDET-TAXONOMY v1";
inline constexpr std::string_view kAnnotationsHeader = "HOIDET-ANNOTATIONS v1";
inline constexpr std::string_view kDetectionsHeader = "HOIDET-DETECTIONS v1";

inline constexpr const char* kTaxonomyFile = "taxonomy.txt";
inline constexpr const char* kAnnotationsFile = "annotations.jsonl";
inline constexpr const char* kImagesDir = "images";

using HoiId = int;

struct HOICategory {
  HoiId id = 0;
  std::string verb;
  std::string object_category;

  friend bool operator==(const HOICategory&, const HOICategory&) = default;
};

/// Ordered HOI classes plus the object categories they involve.
///
/// Object categories are listed in order of first appearance among the
/// classes, so the taxonomy file alone determines the whole value.
class Taxonomy {
 public:
  Taxonomy() = default;
  /// Throws ValidationError unless ids are dense 0..K-1 in order and
  /// (verb, object_category) pairs are unique.
  explicit Taxonomy(std::vector<HOICategory> categories);

  [[nodiscard]] int num_classes() const { return static_cast<int>(categories_.size()); }
  [[nodiscard]] const std::vector<HOICategory>& categories() const { return categories_; }
  [[nodiscard]] const HOICategory& category(HoiId id) const { return categories_.at(id); }
  [[nodiscard]] const std::vector<std::string>& object_categories() const {
    return object_categories_;
  }
  [[nodiscard]] bool has_object_category(std::string_view name) const;
  /// HOI ids whose object category is `object_category`, ascending.
  [[nodiscard]] const std::vector<HoiId>& classes_of(std::string_view object_category) const;
  [[nodiscard]] const std::string& object_of(HoiId id) const {
    return categories_.at(id).object_category;
  }

  friend bool operator==(const Taxonomy& a, const Taxonomy& b) {
    return a.categories_ == b.categories_;
  }

 private:
  std::vector<HOICategory> categories_;
  std::vector<std::string> object_categories_;
  std::map<std::string, std::vector<HoiId>, std::less<>> by_object_;
};

struct Detection {
  std::string image_id;
  std::string category;
  BBox box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct HOIInstance {
  std::string image_id;
  HoiId hoi_id = 0;
  BBox human_box;
  BBox object_box;

  friend bool operator==(const HOIInstance&, const HOIInstance&) = default;
};

struct ImageAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::set<HoiId> positives;
  std::vector<HOIInstance> instances;
  std::set<HoiId> invisible;

  friend bool operator==(const ImageAnnotation&, const ImageAnnotation&) = default;
};

enum class Split { kTrain, kTest };

[[nodiscard]] std::string_view to_string(Split split);
[[nodiscard]] Split parse_split(std::string_view text);

/// One split of an HOI detection dataset.
///
/// `image_dir` is where the rasters live; it is a location, not part of the
/// value, and is ignored by equality.
struct Dataset {
  Taxonomy taxonomy;
  Split split = Split::kTrain;
  std::vector<ImageAnnotation> annotations;
  std::filesystem::path image_dir;

  [[nodiscard]] std::filesystem::path image_path(std::string_view image_id) const;
  /// Index of the annotation with `image_id`, if any.
  [[nodiscard]] std::optional<std::size_t> find(std::string_view image_id) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.taxonomy == b.taxonomy && a.split == b.split && a.annotations == b.annotations;
  }
};

/// Checks every ImageAnnotation / Dataset invariant. Throws ValidationError
/// naming the offending image_id.
void validate(const Dataset& ds);

[[nodiscard]] Taxonomy load_taxonomy(const std::filesystem::path& path);
[[nodiscard]] std::string serialize_taxonomy(const Taxonomy& taxonomy);

[[nodiscard]] std::string serialize_annotations(const Dataset& ds);
[[nodiscard]] Dataset parse_annotations(const std::vector<std::string>& lines,
                                        const Taxonomy& taxonomy,
                                        const std::filesystem::path& path);

/// Reads taxonomy.txt, annotations.jsonl and points image_dir at images/.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& root);

/// Writes taxonomy.txt and annotations.jsonl; copies rasters from
/// ds.image_dir when it differs from the destination.
void save_dataset(const Dataset& ds, const std::filesystem::path& root);

struct StatsTable {
  std::size_t images = 0;
  std::size_t positives = 0;
  std::size_t instances = 0;
  std::size_t boxes = 0;
  double instances_per_positive = 0.0;
  double boxes_per_positive = 0.0;

  friend bool operator==(const StatsTable&, const StatsTable&) = default;
};

[[nodiscard]] StatsTable dataset_stats(const Dataset& ds);

struct RareSplit {
  std::set<HoiId> rare;
  std::set<HoiId> non_rare;
};

inline constexpr int kDefaultRareThreshold = 10;

/// A class is rare iff it has fewer than `threshold` training instances.
/// Invisible-only labels do not count as instances.
[[nodiscard]] RareSplit rare_split(const Dataset& train, int threshold = kDefaultRareThreshold);

/// Per-class instance counts over a dataset.
[[nodiscard]] std::vector<std::size_t> instance_counts(const Dataset& ds);

[[nodiscard]] std::string serialize_detections(const std::vector<Detection>& detections);
[[nodiscard]] std::vector<Detection> load_detections(const std::filesystem::path& path);
void save_detections(const std::vector<Detection>& detections, const std::filesystem::path& path);

/// Checks categories against the taxonomy (plus "person") and boxes/scores.
void validate_detections(const std::vector<Detection>& detections, const Taxonomy& taxonomy);

}  // namespace hoidet
