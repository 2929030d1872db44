#include "hoidet/interaction_pattern.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hoidet/errors.hpp"
#include "hoidet/image.hpp"

namespace hoidet {

std::string_view to_string(PairFeatureMode m) {
  switch (m) {
    case PairFeatureMode::kIP0: return "ip0";
    case PairFeatureMode::kIP1: return "ip1";
    case PairFeatureMode::kVec0: return "vec0";
    case PairFeatureMode::kVec1: return "vec1";
  }
  return "?";
}

PairFeatureMode parse_pair_mode(std::string_view text) {
  if (text == "ip0") return PairFeatureMode::kIP0;
  if (text == "ip1") return PairFeatureMode::kIP1;
  if (text == "vec0") return PairFeatureMode::kVec0;
  if (text == "vec1") return PairFeatureMode::kVec1;
  throw PreconditionError("unknown pair feature mode '" + std::string(text) + "'");
}

namespace {

constexpr double kSnap = 65536.0;

double snap(double v) { return std::nearbyint(v * kSnap) / kSnap; }

/// Maps an axis of window extent `extent` onto `n` cells starting at `pad`.
struct AxisMap {
  double extent;
  int n;
  int pad;

  /// Marks cells whose centers fall in [lo, hi). Cell j (0-based within the
  /// content) has center (2j+1)*extent / (2n); compare without dividing.
  void range(double lo, double hi, int& first, int& last) const {
    first = -1;
    last = -2;
    for (int j = 0; j < n; ++j) {
      const double c = (2.0 * j + 1.0) * extent;
      if (2.0 * n * lo <= c && c < 2.0 * n * hi) {
        if (first < 0) first = j + pad;
        last = j + pad;
      }
    }
  }
};

struct RelBox {
  double x1, y1, x2, y2;
};

}  // namespace

InteractionPattern encode_ip(const BBox& human, const BBox& object, int size, bool padded,
                             std::span<const BBox> extra_boxes) {
  if (size < 2) throw PreconditionError("encode_ip: size must be >= 2");
  if (!human.is_valid() || !object.is_valid()) throw PreconditionError("encode_ip: invalid box");

  std::vector<BBox> boxes{human, object};
  boxes.insert(boxes.end(), extra_boxes.begin(), extra_boxes.end());
  BBox window = boxes[0];
  for (const auto& b : boxes) {
    if (!b.is_valid()) throw PreconditionError("encode_ip: invalid extra box");
    window = attention_window(window, b);
  }

  std::vector<RelBox> rel;
  rel.reserve(boxes.size());
  double width = 0.0;
  double height = 0.0;
  for (const auto& b : boxes) {
    RelBox r{snap(b.x1 - window.x1), snap(b.y1 - window.y1), snap(b.x2 - window.x1),
             snap(b.y2 - window.y1)};
    width = std::max(width, r.x2);
    height = std::max(height, r.y2);
    rel.push_back(r);
  }

  AxisMap xs{width, size, 0};
  AxisMap ys{height, size, 0};
  if (padded && width != height) {
    const double longer = std::max(width, height);
    const double shorter = std::min(width, height);
    const int n = std::clamp(static_cast<int>(std::floor(shorter * size / longer + 0.5)), 1, size);
    const int pad_total = size - n;
    AxisMap& short_axis = width < height ? xs : ys;
    short_axis.n = n;
    short_axis.pad = (pad_total + 1) / 2;
  }

  InteractionPattern ip;
  ip.channels = static_cast<int>(boxes.size());
  ip.size = size;
  ip.window = window;
  ip.cells.assign(static_cast<std::size_t>(ip.channels) * size * size, 0);
  for (int c = 0; c < ip.channels; ++c) {
    int c0 = 0, c1 = 0, r0 = 0, r1 = 0;
    xs.range(rel[c].x1, rel[c].x2, c0, c1);
    ys.range(rel[c].y1, rel[c].y2, r0, r1);
    for (int r = r0; r <= r1; ++r) {
      auto* row = ip.cells.data() + (static_cast<std::size_t>(c) * size + r) * size;
      for (int col = c0; col <= c1; ++col) row[col] = 1;
    }
  }
  return ip;
}

std::array<double, 2> encode_vec(const BBox& human, const BBox& object, bool padded) {
  const BBox w = attention_window(human, object);
  const double dx = object.center_x() - human.center_x();
  const double dy = object.center_y() - human.center_y();
  if (padded) {
    const double longer = std::max(w.width(), w.height());
    return {dx / longer, dy / longer};
  }
  return {dx / w.width(), dy / w.height()};
}

AveragePattern average_ip(std::span<const HOIInstance> instances, HoiId hoi_id, int size,
                          bool padded) {
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  AveragePattern avg{size, std::vector<double>(plane, 0.0), std::vector<double>(plane, 0.0)};
  std::size_t count = 0;
  for (const auto& inst : instances) {
    if (inst.hoi_id != hoi_id) continue;
    const auto ip = encode_ip(inst.human_box, inst.object_box, size, padded);
    const auto h = ip.channel(0);
    const auto o = ip.channel(1);
    for (std::size_t i = 0; i < plane; ++i) {
      avg.human[i] += h[i];
      avg.object[i] += o[i];
    }
    ++count;
  }
  if (count == 0) {
    throw EmptyClassError("average_ip: no instances of class " + std::to_string(hoi_id));
  }
  for (std::size_t i = 0; i < plane; ++i) {
    avg.human[i] /= static_cast<double>(count);
    avg.object[i] /= static_cast<double>(count);
  }
  return avg;
}

void write_average_png(std::span<const double> grid, int size, int cell_px,
                       const std::filesystem::path& path) {
  const int px = size * cell_px;
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(px) * px);
  for (int y = 0; y < px; ++y) {
    for (int x = 0; x < px; ++x) {
      const double v = std::clamp(grid[static_cast<std::size_t>(y / cell_px) * size + x / cell_px], 0.0, 1.0);
      gray[static_cast<std::size_t>(y) * px + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  write_gray_png(px, px, gray, path);
}

}  // namespace hoidet
