#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/image.hpp"

namespace hoidet {

/// In-memory rasters for a dataset split, keyed by image_id.
class ImageCache {
 public:
  ImageCache() = default;

  /// Loads every raster of `ds` (or only `only` when non-empty). Missing or
  /// unreadable files are recorded instead of thrown.
  static ImageCache load(const Dataset& ds, int threads = 1, const std::set<std::string>& only = {});

  void insert(std::string image_id, Image image) { images_[std::move(image_id)] = std::move(image); }
  [[nodiscard]] const Image* find(const std::string& image_id) const {
    auto it = images_.find(image_id);
    return it == images_.end() ? nullptr : &it->second;
  }
  /// (image_id, error message) for rasters that failed to load.
  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& failures() const {
    return failures_;
  }

 private:
  std::map<std::string, Image> images_;
  std::vector<std::pair<std::string, std::string>> failures_;
};

}  // namespace hoidet
