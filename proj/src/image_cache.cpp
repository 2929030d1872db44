#include "hoidet/image_cache.hpp"

#include <optional>

#include "hoidet/parallel.hpp"

namespace hoidet {

ImageCache ImageCache::load(const Dataset& ds, int threads, const std::set<std::string>& only) {
  std::vector<const ImageAnnotation*> wanted;
  for (const auto& ann : ds.annotations) {
    if (only.empty() || only.contains(ann.image_id)) wanted.push_back(&ann);
  }
  std::vector<std::optional<Image>> loaded(wanted.size());
  std::vector<std::string> errors(wanted.size());
  parallel_for(wanted.size(), threads, [&](std::size_t i) {
    try {
      loaded[i] = read_png(ds.image_path(wanted[i]->image_id));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  ImageCache cache;
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    if (loaded[i]) {
      cache.images_.emplace(wanted[i]->image_id, std::move(*loaded[i]));
    } else {
      cache.failures_.emplace_back(wanted[i]->image_id, errors[i]);
    }
  }
  return cache;
}

}  // namespace hoidet
