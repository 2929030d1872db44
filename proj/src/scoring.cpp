#include "hoidet/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hoidet/errors.hpp"
#include "hoidet/nn/loss.hpp"
#include "hoidet/parallel.hpp"
#include "hoidet/text_io.hpp"

namespace hoidet {

ScoreResult score_all(const HORCNNModel& model, const ProposalSet& props, const Taxonomy& taxonomy,
                      const ImageCache& images, int threads, std::optional<StreamKind> only) {
  if (model.num_classes() != taxonomy.num_classes()) {
    throw PreconditionError("score_all: model K does not match the taxonomy");
  }
  std::optional<std::size_t> only_index;
  if (only) {
    for (std::size_t i = 0; i < model.streams().size(); ++i) {
      if (model.streams()[i].kind == *only) only_index = i;
    }
    if (!only_index) {
      throw PreconditionError("stream '" + std::string(to_string(*only)) + "' is not active in this model");
    }
  }
  const bool needs_image = model.config().has(StreamKind::kHuman) ||
                           model.config().has(StreamKind::kObject) ||
                           model.config().has(StreamKind::kUnion);
  const auto ids = props.image_ids();
  std::vector<std::vector<ScoredProposal>> per_image(ids.size());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    const Image* image = images.find(ids[i]);
    if (needs_image && image == nullptr) {
      errors[i] = "missing image raster";
      return;
    }
    HORCNNModel::Workspace ws;
    const auto [first, last] = props.image_range(ids[i]);
    for (std::size_t p = first; p < last; ++p) {
      const auto& prop = props.all()[p];
      const auto out = model.forward({image, prop.human.box, prop.object.box, prop.human.score,
                                      prop.object.score},
                                     ws);
      const auto& s = only_index ? out.per_stream[*only_index] : out.scores;
      ScoredProposal sp{prop.image_id, prop.object_category, prop.human.box, prop.object.box, {}};
      for (HoiId id : taxonomy.classes_of(prop.object_category)) {
        const float v = s[static_cast<std::size_t>(id)];
        sp.probs.emplace_back(id, std::isinf(v) && v < 0 ? 0.0 : nn::sigmoid(v));
      }
      per_image[i].push_back(std::move(sp));
    }
  });
  ScoreResult result;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) result.errors.emplace_back(ids[i], errors[i]);
    std::move(per_image[i].begin(), per_image[i].end(), std::back_inserter(result.scored));
  }
  return result;
}

std::string serialize_scores(const std::vector<ScoredProposal>& scored) {
  std::string out(kScoresHeader);
  out += '\n';
  for (const auto& s : scored) {
    out += s.image_id + "\t" + s.object_category + "\t" + text::format_box(s.human_box) + "\t" +
           text::format_box(s.object_box) + "\t";
    for (std::size_t i = 0; i < s.probs.size(); ++i) {
      if (i > 0) out += ',';
      out += std::to_string(s.probs[i].first) + ":" + text::format_double(s.probs[i].second);
    }
    out += '\n';
  }
  return out;
}

void save_scores(const std::vector<ScoredProposal>& scored, const std::filesystem::path& path) {
  text::write_file(path, serialize_scores(scored));
}

std::vector<ScoredProposal> load_scores(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  const auto lines = text::read_lines(path);
  text::expect_header(lines, kScoresHeader, path);
  std::vector<ScoredProposal> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 5) throw ParseError(text::where(path, i + 1, "expected 5 tab-separated fields"));
    const auto ctx = text::where(path, i + 1, "scores");
    ScoredProposal s;
    s.image_id = std::string(f[0]);
    s.object_category = std::string(f[1]);
    s.human_box = text::parse_box(f[2], ctx + " field human box");
    s.object_box = text::parse_box(f[3], ctx + " field object box");
    if (!f[4].empty()) {
      for (auto item : text::split(f[4], ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw ParseError(ctx + ": expected 'hoi_id:prob'");
        const auto id = static_cast<HoiId>(text::parse_int(item.substr(0, colon), ctx + " hoi_id"));
        if (id < 0 || id >= taxonomy.num_classes()) {
          throw ValidationError(ctx + ": hoi_id " + std::to_string(id) + " not in [0, K)");
        }
        if (taxonomy.object_of(id) != s.object_category) {
          throw ValidationError(ctx + ": hoi_id " + std::to_string(id) +
                                " does not belong to category '" + s.object_category + "'");
        }
        s.probs.emplace_back(id, text::parse_double(item.substr(colon + 1), ctx + " probability"));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hoidet
