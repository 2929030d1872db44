#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoidet/geometry.hpp"
#include "hoidet/image.hpp"
#include "hoidet/interaction_pattern.hpp"
#include "hoidet/nn/network.hpp"

namespace hoidet {

/// One branch of the multi-stream scorer. Every stream maps a proposal to
/// per-class scores; the model sums them.
///   kHuman / kObject: patch network on the box crop.
///   kPairwise: fc or conv network on the Interaction Pattern.
///   kVec: small fc network on the center-to-center vector.
///   kScoreOffset: affine map of the object detection score (+S path).
///   kUnion: patch network on the attention-window crop (union baseline).
///   kDetectorScores: per-class linear map of (human, object) detector
///     scores (score-linear baseline).
enum class StreamKind : std::uint32_t {
  kHuman = 0,
  kObject = 1,
  kPairwise = 2,
  kVec = 3,
  kScoreOffset = 4,
  kUnion = 5,
  kDetectorScores = 6,
};

enum class PairwiseArch : std::uint32_t { kFc = 0, kConv = 1 };

[[nodiscard]] std::string_view to_string(StreamKind kind);
[[nodiscard]] StreamKind parse_stream_kind(std::string_view text);
[[nodiscard]] std::string_view to_string(PairwiseArch arch);

struct StreamConfig {
  std::vector<StreamKind> streams;
  PairwiseArch pairwise_arch = PairwiseArch::kConv;
  PairFeatureMode pair_mode = PairFeatureMode::kIP1;
  int patch_size = 64;
  int ip_size = kDefaultPatternSize;
  bool per_class_offset = false;

  [[nodiscard]] bool has(StreamKind kind) const;
  /// Throws PreconditionError on an inconsistent configuration.
  void validate() const;

  /// Variant names join tokens with '+': "ho", "human", "object",
  /// "ip0-fc", "ip1-fc", "ip0-conv", "ip1-conv", "vec0-fc", "vec1-fc", "s",
  /// "union", "score-linear". Example: "ho+ip1-conv+s".
  [[nodiscard]] static StreamConfig from_variant(std::string_view variant, int patch_size,
                                                 int ip_size);
  [[nodiscard]] std::string variant_name() const;
};

inline constexpr int kHiddenUnits = 256;

[[nodiscard]] std::vector<nn::LayerSpec> patch_stream_layers(int num_classes);
[[nodiscard]] std::vector<nn::LayerSpec> pairwise_conv_layers(int num_classes);
[[nodiscard]] std::vector<nn::LayerSpec> pairwise_fc_layers(int num_classes);
[[nodiscard]] std::vector<nn::LayerSpec> vec_stream_layers(int num_classes);

struct ParityReport {
  std::size_t conv_params = 0;
  std::size_t fc_params = 0;
  double relative_gap = 0.0;  // |conv - fc| / conv
  bool within_tolerance = false;
};

inline constexpr double kParityTolerance = 0.10;

/// Exact parameter counts of the two pairwise architectures. Throws
/// PreconditionError when `ip_size` cannot feed the conv architecture
/// (two 2x2 poolings need a multiple of 4).
[[nodiscard]] ParityReport pairwise_param_parity(int num_classes, int ip_size = kDefaultPatternSize);

/// What a stream sees of one proposal.
struct ProposalInput {
  const Image* image = nullptr;
  BBox human;
  BBox object;
  double human_score = 0.0;
  double object_score = 0.0;
};

class HORCNNModel {
 public:
  struct Stream {
    StreamKind kind;
    nn::Network<float> net;
  };

  struct Output {
    std::vector<float> scores;                   // K summed scores
    std::vector<std::vector<float>> per_stream;  // K per stream (offset broadcast)
    bool degenerate = false;                     // clipped box had zero area
  };

  struct Workspace {
    std::vector<nn::Network<float>::Trace> traces;
    std::vector<std::vector<float>> inputs;
    std::vector<float> grad_scores;
    std::vector<float> grad_stream;
  };

  HORCNNModel() = default;
  HORCNNModel(StreamConfig config, int num_classes);

  [[nodiscard]] const StreamConfig& config() const { return config_; }
  [[nodiscard]] int num_classes() const { return num_classes_; }
  [[nodiscard]] const std::vector<Stream>& streams() const { return streams_; }
  [[nodiscard]] std::vector<Stream>& streams() { return streams_; }
  [[nodiscard]] std::size_t param_count() const;
  [[nodiscard]] std::size_t stream_offset(std::size_t stream) const { return offsets_.at(stream); }

  /// Seeded init. The offset and detector-score streams start at zero, so the
/// offset is inert until trained.
  void init(std::uint64_t seed);
  void zero_params();

  /// Concatenated parameters of all streams.
  [[nodiscard]] std::vector<float> flat_params() const;
  void set_flat_params(std::span<const float> params);

  [[nodiscard]] Output forward(const ProposalInput& input, Workspace& ws) const;

  /// Forward + backward of the multilabel loss on one proposal. Adds
  /// `scale` * d(loss)/d(params) into `grad` (flat layout) and returns the
  /// unscaled loss. Degenerate proposals contribute nothing and return 0.
  double accumulate_gradient(const ProposalInput& input, std::span<const float> labels,
                             double scale, std::span<float> grad, Workspace& ws) const;

 private:
  void build_inputs(const ProposalInput& in, const BBox& h, const BBox& o, Workspace& ws) const;

  StreamConfig config_;
  int num_classes_ = 0;
  std::vector<Stream> streams_;
  std::vector<std::size_t> offsets_;
};

/// Checkpoint: "HOIDETCK", version, config, layer table, then the weights of
/// every stream as little-endian IEEE-754 binary32.
void save_model(const HORCNNModel& model, const std::filesystem::path& path);
[[nodiscard]] HORCNNModel load_model(const std::filesystem::path& path);
[[nodiscard]] std::vector<std::uint8_t> serialize_model(const HORCNNModel& model);

}  // namespace hoidet
