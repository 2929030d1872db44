#include "hoidet/proposals.hpp"

#include <algorithm>
#include <tuple>

#include "hoidet/errors.hpp"
#include "hoidet/parallel.hpp"
#include "hoidet/text_io.hpp"

namespace hoidet {

ProposalSet::ProposalSet(std::vector<Proposal> proposals) : proposals_(std::move(proposals)) {
  for (std::size_t i = 0; i < proposals_.size(); ++i) {
    const auto& p = proposals_[i];
    auto key = std::make_pair(p.image_id, p.object_category);
    auto [git, gnew] = groups_.try_emplace(key, i, i + 1);
    if (!gnew) {
      if (git->second.second != i) {
        throw ValidationError("proposals for image '" + p.image_id + "' category '" +
                              p.object_category + "' are not contiguous");
      }
      git->second.second = i + 1;
    }
    auto [iit, inew] = images_.try_emplace(p.image_id, i, i + 1);
    if (!inew) {
      if (iit->second.second != i) {
        throw ValidationError("proposals for image '" + p.image_id + "' are not contiguous");
      }
      iit->second.second = i + 1;
    }
  }
}

std::span<const Proposal> ProposalSet::group(const std::string& image_id,
                                             const std::string& category) const {
  auto it = groups_.find({image_id, category});
  if (it == groups_.end()) return {};
  return {proposals_.data() + it->second.first, it->second.second - it->second.first};
}

std::pair<std::size_t, std::size_t> ProposalSet::image_range(const std::string& image_id) const {
  auto it = images_.find(image_id);
  return it == images_.end() ? std::pair<std::size_t, std::size_t>{0, 0} : it->second;
}

std::vector<std::string> ProposalSet::image_ids() const {
  std::vector<std::string> out;
  out.reserve(images_.size());
  for (const auto& [id, range] : images_) out.push_back(id);
  return out;
}

namespace {

bool ranks_before(const Detection& a, const Detection& b) {
  return std::make_tuple(-a.score, a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
         std::make_tuple(-b.score, b.box.x1, b.box.y1, b.box.x2, b.box.y2);
}

std::vector<std::size_t> top_k(const std::vector<Detection>& dets, std::string_view category,
                               int k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].category == category) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_before(dets[a], dets[b]); });
  if (idx.size() > static_cast<std::size_t>(k)) idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

ProposalSet generate_proposals(std::span<const Detection> detections, int top_h, int top_o,
                               const Taxonomy& taxonomy, int threads) {
  if (top_h < 1 || top_o < 1) throw PreconditionError("generate_proposals: top counts must be >= 1");
  std::map<std::string, std::vector<Detection>> per_image;
  for (const auto& d : detections) per_image[d.image_id].push_back(d);

  std::vector<const std::pair<const std::string, std::vector<Detection>>*> images;
  for (const auto& entry : per_image) images.push_back(&entry);
  std::vector<std::vector<Proposal>> out(images.size());

  parallel_for(images.size(), threads, [&](std::size_t i) {
    const auto& [image_id, dets] = *images[i];
    const auto humans = top_k(dets, kPersonCategory, top_h);
    if (humans.empty()) return;
    for (const auto& category : taxonomy.object_categories()) {
      const auto objects = top_k(dets, category, top_o);
      for (std::size_t h : humans) {
        for (std::size_t o : objects) {
          if (h == o) continue;
          out[i].push_back({image_id, dets[h], dets[o], category});
        }
      }
    }
  });

  std::vector<Proposal> flat;
  for (auto& v : out) std::move(v.begin(), v.end(), std::back_inserter(flat));
  return ProposalSet(std::move(flat));
}

std::string serialize_proposals(const ProposalSet& props) {
  std::string out(kProposalsHeader);
  out += '\n';
  for (const auto& p : props.all()) {
    out += p.image_id + "\t" + p.object_category + "\t" + text::format_box(p.human.box) + "\t" +
           text::format_double(p.human.score) + "\t" + text::format_box(p.object.box) + "\t" +
           text::format_double(p.object.score) + "\n";
  }
  return out;
}

ProposalSet load_proposals(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  const auto lines = text::read_lines(path);
  text::expect_header(lines, kProposalsHeader, path);
  std::vector<Proposal> props;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 6) throw ParseError(text::where(path, i + 1, "expected 6 tab-separated fields"));
    const auto ctx = text::where(path, i + 1, "proposal");
    Proposal p;
    p.image_id = std::string(f[0]);
    p.object_category = std::string(f[1]);
    if (!taxonomy.has_object_category(p.object_category)) {
      throw ValidationError(ctx + ": unknown object category '" + p.object_category + "'");
    }
    p.human = {p.image_id, std::string(kPersonCategory), text::parse_box(f[2], ctx + " field human box"),
               text::parse_double(f[3], ctx + " field human score")};
    p.object = {p.image_id, p.object_category, text::parse_box(f[4], ctx + " field object box"),
                text::parse_double(f[5], ctx + " field object score")};
    props.push_back(std::move(p));
  }
  return ProposalSet(std::move(props));
}

void save_proposals(const ProposalSet& props, const std::filesystem::path& path) {
  text::write_file(path, serialize_proposals(props));
}

std::optional<double> mean_over(std::span<const std::optional<double>> values,
                                const std::set<HoiId>& ids) {
  double sum = 0.0;
  std::size_t n = 0;
  for (HoiId id : ids) {
    const auto& v = values[static_cast<std::size_t>(id)];
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

RecallReport proposal_recall(const ProposalSet& props, const Dataset& ds, double iou_thresh,
                             int rare_threshold) {
  if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) {
    throw PreconditionError("proposal_recall: iou_thresh must lie in (0, 1)");
  }
  const auto k = static_cast<std::size_t>(ds.taxonomy.num_classes());
  std::vector<std::size_t> covered(k, 0);
  RecallReport report;
  report.n_gt.assign(k, 0);
  for (const auto& ann : ds.annotations) {
    for (const auto& inst : ann.instances) {
      const auto id = static_cast<std::size_t>(inst.hoi_id);
      ++report.n_gt[id];
      for (const auto& p : props.group(ann.image_id, ds.taxonomy.object_of(inst.hoi_id))) {
        if (pair_min_iou(p.human.box, p.object.box, inst.human_box, inst.object_box) >= iou_thresh) {
          ++covered[id];
          break;
        }
      }
    }
  }
  report.per_class.resize(k);
  for (std::size_t id = 0; id < k; ++id) {
    if (report.n_gt[id] > 0) {
      report.per_class[id] = static_cast<double>(covered[id]) / static_cast<double>(report.n_gt[id]);
    }
  }
  const auto split = rare_split(ds, rare_threshold);
  std::set<HoiId> all;
  for (std::size_t id = 0; id < k; ++id) all.insert(static_cast<HoiId>(id));
  report.mean_full = mean_over(report.per_class, all);
  report.mean_rare = mean_over(report.per_class, split.rare);
  report.mean_non_rare = mean_over(report.per_class, split.non_rare);
  return report;
}

}  // namespace hoidet
