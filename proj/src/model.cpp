#include "hoidet/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "hoidet/errors.hpp"
#include "hoidet/nn/loss.hpp"
#include "hoidet/rng.hpp"
#include "hoidet/text_io.hpp"

namespace hoidet {

using nn::LayerSpec;

std::string_view to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::kHuman: return "human";
    case StreamKind::kObject: return "object";
    case StreamKind::kPairwise: return "pairwise";
    case StreamKind::kVec: return "vec";
    case StreamKind::kScoreOffset: return "score-offset";
    case StreamKind::kUnion: return "union";
    case StreamKind::kDetectorScores: return "detector-scores";
  }
  return "?";
}

StreamKind parse_stream_kind(std::string_view text) {
  for (auto k : {StreamKind::kHuman, StreamKind::kObject, StreamKind::kPairwise, StreamKind::kVec,
                 StreamKind::kScoreOffset, StreamKind::kUnion, StreamKind::kDetectorScores}) {
    if (to_string(k) == text) return k;
  }
  throw PreconditionError("unknown stream '" + std::string(text) + "'");
}

std::string_view to_string(PairwiseArch arch) { return arch == PairwiseArch::kFc ? "fc" : "conv"; }

bool StreamConfig::has(StreamKind kind) const {
  return std::find(streams.begin(), streams.end(), kind) != streams.end();
}

void StreamConfig::validate() const {
  if (streams.empty()) throw PreconditionError("model needs at least one stream");
  if (has(StreamKind::kPairwise) && has(StreamKind::kVec)) {
    throw PreconditionError("at most one of the pairwise and vec streams may be active");
  }
  if (has(StreamKind::kPairwise) && !is_pattern(pair_mode)) {
    throw PreconditionError("pairwise stream needs an Interaction Pattern mode (ip0/ip1)");
  }
  if (has(StreamKind::kVec) && is_pattern(pair_mode)) {
    throw PreconditionError("vec stream needs a vector mode (vec0/vec1)");
  }
  const bool patches = has(StreamKind::kHuman) || has(StreamKind::kObject) || has(StreamKind::kUnion);
  if (patches && (patch_size < 4 || patch_size % 4 != 0)) {
    throw PreconditionError("patch_size must be a positive multiple of 4");
  }
  if (has(StreamKind::kPairwise)) {
    if (ip_size < 2) throw PreconditionError("ip_size must be >= 2");
    if (pairwise_arch == PairwiseArch::kConv && ip_size % 4 != 0) {
      throw PreconditionError("conv pairwise stream needs ip_size to be a multiple of 4");
    }
  }
}

namespace {

constexpr StreamKind kCanonicalOrder[] = {
    StreamKind::kHuman, StreamKind::kObject,         StreamKind::kUnion,      StreamKind::kPairwise,
    StreamKind::kVec,   StreamKind::kDetectorScores, StreamKind::kScoreOffset};

int canonical_rank(StreamKind k) {
  for (int i = 0; i < 7; ++i) {
    if (kCanonicalOrder[i] == k) return i;
  }
  return 99;
}

}  // namespace

StreamConfig StreamConfig::from_variant(std::string_view variant, int patch_size, int ip_size) {
  StreamConfig cfg;
  cfg.patch_size = patch_size;
  cfg.ip_size = ip_size;
  auto add = [&](StreamKind k) {
    if (!cfg.has(k)) cfg.streams.push_back(k);
  };
  for (auto token : text::split(variant, '+')) {
    if (token == "ho") {
      add(StreamKind::kHuman);
      add(StreamKind::kObject);
    } else if (token == "human") {
      add(StreamKind::kHuman);
    } else if (token == "object") {
      add(StreamKind::kObject);
    } else if (token == "union") {
      add(StreamKind::kUnion);
    } else if (token == "score-linear") {
      add(StreamKind::kDetectorScores);
    } else if (token == "s") {
      add(StreamKind::kScoreOffset);
    } else if (token == "s-per-class") {
      add(StreamKind::kScoreOffset);
      cfg.per_class_offset = true;
    } else {
      const auto dash = token.find('-');
      if (dash == std::string_view::npos) {
        throw PreconditionError("unknown variant token '" + std::string(token) + "'");
      }
      cfg.pair_mode = parse_pair_mode(token.substr(0, dash));
      const auto arch = token.substr(dash + 1);
      if (arch == "fc") {
        cfg.pairwise_arch = PairwiseArch::kFc;
      } else if (arch == "conv") {
        cfg.pairwise_arch = PairwiseArch::kConv;
      } else {
        throw PreconditionError("unknown pairwise architecture '" + std::string(arch) + "'");
      }
      if (is_pattern(cfg.pair_mode)) {
        add(StreamKind::kPairwise);
      } else {
        if (cfg.pairwise_arch != PairwiseArch::kFc) {
          throw PreconditionError("vector features only support the fc architecture");
        }
        add(StreamKind::kVec);
      }
    }
  }
  std::sort(cfg.streams.begin(), cfg.streams.end(),
            [](StreamKind a, StreamKind b) { return canonical_rank(a) < canonical_rank(b); });
  cfg.validate();
  return cfg;
}

std::string StreamConfig::variant_name() const {
  std::vector<std::string> tokens;
  if (has(StreamKind::kHuman) && has(StreamKind::kObject)) {
    tokens.emplace_back("ho");
  } else if (has(StreamKind::kHuman)) {
    tokens.emplace_back("human");
  } else if (has(StreamKind::kObject)) {
    tokens.emplace_back("object");
  }
  if (has(StreamKind::kUnion)) tokens.emplace_back("union");
  if (has(StreamKind::kPairwise) || has(StreamKind::kVec)) {
    tokens.push_back(std::string(to_string(pair_mode)) + "-" + std::string(to_string(pairwise_arch)));
  }
  if (has(StreamKind::kDetectorScores)) tokens.emplace_back("score-linear");
  if (has(StreamKind::kScoreOffset)) tokens.emplace_back(per_class_offset ? "s-per-class" : "s");
  std::string out;
  for (const auto& t : tokens) out += (out.empty() ? "" : "+") + t;
  return out;
}

std::vector<LayerSpec> patch_stream_layers(int k) {
  return {LayerSpec::conv(5, 32), LayerSpec::relu(), LayerSpec::maxpool(),
          LayerSpec::conv(5, 64), LayerSpec::relu(), LayerSpec::maxpool(),
          LayerSpec::flatten(),   LayerSpec::fc(kHiddenUnits), LayerSpec::relu(),
          LayerSpec::fc(k)};
}

std::vector<LayerSpec> pairwise_conv_layers(int k) {
  return {LayerSpec::conv(5, 16), LayerSpec::relu(), LayerSpec::maxpool(),
          LayerSpec::conv(5, 32), LayerSpec::relu(), LayerSpec::maxpool(),
          LayerSpec::flatten(),   LayerSpec::fc(kHiddenUnits), LayerSpec::relu(),
          LayerSpec::fc(k)};
}

std::vector<LayerSpec> pairwise_fc_layers(int k) {
  return {LayerSpec::flatten(), LayerSpec::fc(kHiddenUnits), LayerSpec::relu(), LayerSpec::fc(k)};
}

std::vector<LayerSpec> vec_stream_layers(int k) {
  return {LayerSpec::fc(kHiddenUnits), LayerSpec::relu(), LayerSpec::fc(k)};
}

ParityReport pairwise_param_parity(int k, int ip_size) {
  if (k < 1) throw PreconditionError("pairwise_param_parity: K must be >= 1");
  if (ip_size < 4 || ip_size % 4 != 0) {
    throw PreconditionError("pairwise_param_parity: ip_size " + std::to_string(ip_size) +
                            " cannot feed the conv architecture (needs a multiple of 4)");
  }
  const nn::Shape in{2, ip_size, ip_size};
  ParityReport r;
  r.conv_params = nn::count_params(in, pairwise_conv_layers(k));
  r.fc_params = nn::count_params(in, pairwise_fc_layers(k));
  const double conv = static_cast<double>(r.conv_params);
  r.relative_gap = std::abs(conv - static_cast<double>(r.fc_params)) / conv;
  r.within_tolerance = r.relative_gap <= kParityTolerance;
  return r;
}

namespace {

nn::Network<float> build_stream(StreamKind kind, const StreamConfig& cfg, int k) {
  const nn::Shape patch{3, cfg.patch_size, cfg.patch_size};
  switch (kind) {
    case StreamKind::kHuman:
    case StreamKind::kObject:
    case StreamKind::kUnion:
      return {patch, patch_stream_layers(k)};
    case StreamKind::kPairwise: {
      const nn::Shape in{2, cfg.ip_size, cfg.ip_size};
      return {in, cfg.pairwise_arch == PairwiseArch::kConv ? pairwise_conv_layers(k)
                                                           : pairwise_fc_layers(k)};
    }
    case StreamKind::kVec:
      return {nn::Shape{2, 1, 1}, vec_stream_layers(k)};
    case StreamKind::kDetectorScores:
      return {nn::Shape{2, 1, 1}, {LayerSpec::fc(k)}};
    case StreamKind::kScoreOffset:
      return {nn::Shape{1, 1, 1}, {LayerSpec::fc(cfg.per_class_offset ? k : 1)}};
  }
  throw PreconditionError("unknown stream kind");
}

}  // namespace

HORCNNModel::HORCNNModel(StreamConfig config, int num_classes)
    : config_(std::move(config)), num_classes_(num_classes) {
  if (num_classes < 1) throw PreconditionError("model needs K >= 1");
  config_.validate();
  offsets_.push_back(0);
  for (StreamKind kind : config_.streams) {
    streams_.push_back({kind, build_stream(kind, config_, num_classes)});
    offsets_.push_back(offsets_.back() + streams_.back().net.param_count());
  }
}

std::size_t HORCNNModel::param_count() const { return offsets_.back(); }

void HORCNNModel::init(std::uint64_t seed) {
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    auto& s = streams_[i];
    // the two linear score maps are plain logistic regressions; zero is the natural start
    if (s.kind == StreamKind::kScoreOffset || s.kind == StreamKind::kDetectorScores) {
      std::fill(s.net.params().begin(), s.net.params().end(), 0.0f);
    } else {
      s.net.init(mix_seed(seed, 1000 + static_cast<std::uint64_t>(s.kind)));
    }
  }
}

void HORCNNModel::zero_params() {
  for (auto& s : streams_) std::fill(s.net.params().begin(), s.net.params().end(), 0.0f);
}

std::vector<float> HORCNNModel::flat_params() const {
  std::vector<float> out;
  out.reserve(param_count());
  for (const auto& s : streams_) out.insert(out.end(), s.net.params().begin(), s.net.params().end());
  return out;
}

void HORCNNModel::set_flat_params(std::span<const float> params) {
  if (params.size() != param_count()) throw PreconditionError("set_flat_params: size mismatch");
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    auto dst = streams_[i].net.params();
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              params.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]), dst.begin());
  }
}

void HORCNNModel::build_inputs(const ProposalInput& in, const BBox& h, const BBox& o,
                               Workspace& ws) const {
  ws.inputs.resize(streams_.size());
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    auto& buf = ws.inputs[i];
    buf.resize(streams_[i].net.input_shape().size());
    switch (streams_[i].kind) {
      case StreamKind::kHuman:
        crop_resize(*in.image, h, config_.patch_size, buf);
        break;
      case StreamKind::kObject:
        crop_resize(*in.image, o, config_.patch_size, buf);
        break;
      case StreamKind::kUnion:
        crop_resize(*in.image, attention_window(h, o), config_.patch_size, buf);
        break;
      case StreamKind::kPairwise: {
        const auto ip = encode_ip(h, o, config_.ip_size, is_padded(config_.pair_mode));
        std::transform(ip.cells.begin(), ip.cells.end(), buf.begin(),
                       [](std::uint8_t v) { return static_cast<float>(v); });
        break;
      }
      case StreamKind::kVec: {
        const auto v = encode_vec(h, o, is_padded(config_.pair_mode));
        buf[0] = static_cast<float>(v[0]);
        buf[1] = static_cast<float>(v[1]);
        break;
      }
      case StreamKind::kDetectorScores:
        // centered so the weights do not start out fighting the bias
        buf[0] = static_cast<float>(in.human_score - 0.5);
        buf[1] = static_cast<float>(in.object_score - 0.5);
        break;
      case StreamKind::kScoreOffset:
        buf[0] = static_cast<float>(in.object_score);
        break;
    }
  }
}

HORCNNModel::Output HORCNNModel::forward(const ProposalInput& in, Workspace& ws) const {
  const auto k = static_cast<std::size_t>(num_classes_);
  Output out;
  out.scores.assign(k, 0.0f);
  out.per_stream.resize(streams_.size());
  BBox h = in.human;
  BBox o = in.object;
  if (in.image != nullptr) {
    h = clip_to_image(h, in.image->width, in.image->height);
    o = clip_to_image(o, in.image->width, in.image->height);
  }
  const bool needs_image = config_.has(StreamKind::kHuman) || config_.has(StreamKind::kObject) ||
                           config_.has(StreamKind::kUnion);
  if (needs_image && in.image == nullptr) {
    throw PreconditionError("forward: an appearance stream needs the image raster");
  }
  if (!h.is_valid() || !o.is_valid()) {
    out.degenerate = true;
    std::fill(out.scores.begin(), out.scores.end(), -std::numeric_limits<float>::infinity());
    for (auto& ps : out.per_stream) ps.assign(k, -std::numeric_limits<float>::infinity());
    return out;
  }
  build_inputs(in, h, o, ws);
  ws.traces.resize(streams_.size());
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    streams_[i].net.forward(ws.inputs[i], ws.traces[i]);
    const auto s = streams_[i].net.output(ws.traces[i]);
    auto& ps = out.per_stream[i];
    if (s.size() == 1 && k != 1) {
      ps.assign(k, s[0]);
    } else {
      ps.assign(s.begin(), s.end());
    }
    for (std::size_t c = 0; c < k; ++c) out.scores[c] += ps[c];
  }
  return out;
}

double HORCNNModel::accumulate_gradient(const ProposalInput& in, std::span<const float> labels,
                                        double scale, std::span<float> grad, Workspace& ws) const {
  if (grad.size() != param_count()) throw PreconditionError("accumulate_gradient: bad buffer");
  const auto out = forward(in, ws);
  if (out.degenerate) return 0.0;
  const auto k = static_cast<std::size_t>(num_classes_);
  ws.grad_scores.resize(k);
  const double loss = nn::multilabel_loss<float>(out.scores, labels, ws.grad_scores);
  for (auto& g : ws.grad_scores) g = static_cast<float>(g * scale);
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    const auto out_size = streams_[i].net.output_shape().size();
    ws.grad_stream.assign(out_size, 0.0f);
    if (out_size == 1 && k != 1) {
      double total = 0.0;
      for (float g : ws.grad_scores) total += g;
      ws.grad_stream[0] = static_cast<float>(total);
    } else {
      std::copy(ws.grad_scores.begin(), ws.grad_scores.end(), ws.grad_stream.begin());
    }
    streams_[i].net.backward(ws.traces[i], ws.grad_stream,
                             grad.subspan(offsets_[i], offsets_[i + 1] - offsets_[i]));
  }
  return loss;
}

namespace {

constexpr char kMagic[8] = {'H', 'O', 'I', 'D', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::vector<std::uint8_t> data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void bytes(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  [[nodiscard]] bool done() const { return pos_ == data_.size(); }
  void fail(const std::string& what) const {
    throw ParseError(name_ + ": checkpoint " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) fail("truncated");
  }
  std::vector<std::uint8_t> data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const HORCNNModel& model) {
  const auto& cfg = model.config();
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  put_u32(out, static_cast<std::uint32_t>(cfg.patch_size));
  put_u32(out, static_cast<std::uint32_t>(cfg.ip_size));
  put_u32(out, static_cast<std::uint32_t>(cfg.pairwise_arch));
  put_u32(out, static_cast<std::uint32_t>(cfg.pair_mode));
  put_u32(out, cfg.per_class_offset ? 1U : 0U);
  put_u32(out, static_cast<std::uint32_t>(model.streams().size()));
  for (const auto& s : model.streams()) {
    put_u32(out, static_cast<std::uint32_t>(s.kind));
    const auto in = s.net.input_shape();
    put_u32(out, static_cast<std::uint32_t>(in.c));
    put_u32(out, static_cast<std::uint32_t>(in.h));
    put_u32(out, static_cast<std::uint32_t>(in.w));
    put_u32(out, static_cast<std::uint32_t>(s.net.layers().size()));
    for (std::size_t li = 0; li < s.net.layers().size(); ++li) {
      const auto& l = s.net.layers()[li];
      put_u32(out, static_cast<std::uint32_t>(l.kind));
      put_u32(out, static_cast<std::uint32_t>(l.kernel));
      put_u32(out, static_cast<std::uint32_t>(l.units));
      put_u64(out, s.net.layer_param_count(li));
    }
  }
  for (const auto& s : model.streams()) {
    for (float w : s.net.params()) put_u32(out, std::bit_cast<std::uint32_t>(w));
  }
  return out;
}

void save_model(const HORCNNModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  text::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

HORCNNModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path.string());
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) r.fail("bad magic");
  if (r.u32() != kCheckpointVersion) r.fail("unsupported version");
  const auto k = static_cast<int>(r.u32());
  StreamConfig cfg;
  cfg.patch_size = static_cast<int>(r.u32());
  cfg.ip_size = static_cast<int>(r.u32());
  const auto arch = r.u32();
  const auto mode = r.u32();
  if (arch > 1 || mode > 3) r.fail("invalid config");
  cfg.pairwise_arch = static_cast<PairwiseArch>(arch);
  cfg.pair_mode = static_cast<PairFeatureMode>(mode);
  cfg.per_class_offset = r.u32() != 0;
  const auto n_streams = r.u32();
  if (n_streams == 0 || n_streams > 7) r.fail("invalid stream count");
  struct Table {
    nn::Shape in;
    std::vector<nn::LayerSpec> layers;
    std::vector<std::uint64_t> counts;
  };
  std::vector<Table> tables;
  for (std::uint32_t i = 0; i < n_streams; ++i) {
    const auto kind = r.u32();
    if (kind > 6) r.fail("unknown stream kind");
    cfg.streams.push_back(static_cast<StreamKind>(kind));
    Table t;
    t.in = {static_cast<int>(r.u32()), static_cast<int>(r.u32()), static_cast<int>(r.u32())};
    const auto n_layers = r.u32();
    if (n_layers > 64) r.fail("invalid layer count");
    for (std::uint32_t li = 0; li < n_layers; ++li) {
      const auto lk = r.u32();
      if (lk > 4) r.fail("unknown layer kind");
      nn::LayerSpec spec{static_cast<nn::LayerKind>(lk), static_cast<int>(r.u32()),
                         static_cast<int>(r.u32())};
      t.layers.push_back(spec);
      t.counts.push_back(r.u64());
    }
    tables.push_back(std::move(t));
  }
  HORCNNModel model(cfg, k);
  for (std::size_t i = 0; i < model.streams().size(); ++i) {
    auto& net = model.streams()[i].net;
    if (!(net.input_shape() == tables[i].in) || net.layers() != tables[i].layers) {
      r.fail("layer table does not match the configured architecture");
    }
    for (std::size_t li = 0; li < tables[i].counts.size(); ++li) {
      if (net.layer_param_count(li) != tables[i].counts[li]) r.fail("parameter count mismatch");
    }
  }
  for (auto& s : model.streams()) {
    for (float& w : s.net.params()) w = r.f32();
  }
  if (!r.done()) r.fail("has trailing bytes");
  return model;
}

}  // namespace hoidet
