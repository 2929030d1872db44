#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/geometry.hpp"

namespace hoidet {

/// How the pairwise stream sees a human-object pair.
///   kIP0 / kIP1: Interaction Pattern without / with aspect-preserving padding.
///   kVec0 / kVec1: center-to-center vector normalized by window dims / longer side.
enum class PairFeatureMode { kIP0, kIP1, kVec0, kVec1 };

[[nodiscard]] constexpr bool is_padded(PairFeatureMode m) {
  return m == PairFeatureMode::kIP1 || m == PairFeatureMode::kVec1;
}
[[nodiscard]] constexpr bool is_pattern(PairFeatureMode m) {
  return m == PairFeatureMode::kIP0 || m == PairFeatureMode::kIP1;
}
[[nodiscard]] std::string_view to_string(PairFeatureMode m);
[[nodiscard]] PairFeatureMode parse_pair_mode(std::string_view text);

inline constexpr int kDefaultPatternSize = 64;

/// C x S x S binary grid. Channel 0 is the human, 1 the object, 2.. extras.
struct InteractionPattern {
  int channels = 0;
  int size = 0;
  BBox window;
  std::vector<std::uint8_t> cells;

  [[nodiscard]] std::uint8_t at(int channel, int row, int col) const {
    return cells[(static_cast<std::size_t>(channel) * size + row) * size + col];
  }
  [[nodiscard]] std::span<const std::uint8_t> channel(int c) const {
    const std::size_t plane = static_cast<std::size_t>(size) * size;
    return {cells.data() + plane * c, plane};
  }

  friend bool operator==(const InteractionPattern&, const InteractionPattern&) = default;
};

/// Rasterizes the boxes inside their attention window.
///
/// Coordinates are taken relative to the window and snapped to a 2^-16 grid,
/// which makes the result exactly invariant to joint translations. A cell is
/// set iff its center falls inside the (half-open) box. Unpadded patterns
/// stretch the window to S x S; padded ones scale the longer side to S and
/// center the shorter side, the odd padding cell going to the top/left.
[[nodiscard]] InteractionPattern encode_ip(const BBox& human, const BBox& object, int size,
                                           bool padded, std::span<const BBox> extra_boxes = {});

/// object_center - human_center, normalized by the window (width, height)
/// when unpadded or by its longer side when padded.
[[nodiscard]] std::array<double, 2> encode_vec(const BBox& human, const BBox& object, bool padded);

class EmptyClassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AveragePattern {
  int size = 0;
  std::vector<double> human;
  std::vector<double> object;
};

/// Cell-wise mean of encode_ip over all instances of `hoi_id`.
/// Throws EmptyClassError when there are none.
[[nodiscard]] AveragePattern average_ip(std::span<const HOIInstance> instances, HoiId hoi_id,
                                        int size, bool padded);

/// Writes a mean grid as an 8-bit grayscale PNG, each cell scaled up to
/// `cell_px` pixels.
void write_average_png(std::span<const double> grid, int size, int cell_px,
                       const std::filesystem::path& path);

}  // namespace hoidet
