#include "hoidet/eval/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

#include "hoidet/errors.hpp"
#include "hoidet/parallel.hpp"
#include "hoidet/text_io.hpp"

namespace hoidet::eval {

std::string_view to_string(EvalSetting s) {
  return s == EvalSetting::kDefault ? "default" : "known-object";
}

EvalSetting parse_setting(std::string_view text) {
  if (text == "default") return EvalSetting::kDefault;
  if (text == "known-object") return EvalSetting::kKnownObject;
  throw PreconditionError("unknown evaluation setting '" + std::string(text) + "'");
}

std::string_view to_string(ApMode m) { return m == ApMode::kAllPoints ? "all-points" : "11-point"; }

ApMode parse_ap_mode(std::string_view text) {
  if (text == "all-points") return ApMode::kAllPoints;
  if (text == "11-point") return ApMode::kElevenPoint;
  throw PreconditionError("unknown AP mode '" + std::string(text) + "'");
}

std::vector<ScoredDetection> flatten(std::span<const ScoredProposal> scored) {
  std::vector<ScoredDetection> out;
  for (const auto& s : scored) {
    for (const auto& [id, p] : s.probs) out.push_back({s.image_id, id, s.human_box, s.object_box, p});
  }
  return out;
}

std::vector<std::size_t> ranking(std::span<const ScoredDetection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = dets[a];
    const auto& y = dets[b];
    if (x.score != y.score) return x.score > y.score;
    return std::tie(x.image_id, x.human_box, x.object_box, x.hoi_id, a) <
           std::tie(y.image_id, y.human_box, y.object_box, y.hoi_id, b);
  });
  return order;
}

std::vector<bool> match_detections(std::span<const ScoredDetection> dets,
                                   std::span<const HOIInstance> gt, double thresh) {
  std::map<std::string, std::vector<std::size_t>, std::less<>> gt_by_image;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_by_image[gt[i].image_id].push_back(i);
  std::vector<bool> used(gt.size(), false);
  std::vector<bool> flags;
  flags.reserve(dets.size());
  for (std::size_t idx : ranking(dets)) {
    const auto& d = dets[idx];
    auto it = gt_by_image.find(d.image_id);
    std::optional<std::size_t> best;
    double best_iou = thresh;
    if (it != gt_by_image.end()) {
      for (std::size_t g : it->second) {
        if (used[g]) continue;
        const double m = pair_min_iou(d.human_box, d.object_box, gt[g].human_box, gt[g].object_box);
        if (m > best_iou) {
          best_iou = m;
          best = g;
        }
      }
    }
    if (best) used[*best] = true;
    flags.push_back(best.has_value());
  }
  return flags;
}

std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt, ApMode mode) {
  if (n_gt == 0) return std::nullopt;
  std::vector<double> precision(flags.size());
  std::vector<std::size_t> tp_count(flags.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) ++tp;
    tp_count[i] = tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = flags.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  const double n = static_cast<double>(n_gt);
  if (mode == ApMode::kAllPoints) {
    double sum = 0.0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (flags[i]) sum += precision[i];
    }
    return sum / n;
  }
  double sum = 0.0;
  for (int t = 0; t <= 10; ++t) {
    const double level = t / 10.0;
    double best = 0.0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (static_cast<double>(tp_count[i]) / n >= level) {
        best = precision[i];  // interpolated precision is non-increasing
        break;
      }
    }
    sum += best;
  }
  return sum / 11.0;
}

std::set<std::string> evaluated_images(const Dataset& test, HoiId hoi_id, EvalSetting setting) {
  std::set<std::string> out;
  const auto& category = test.taxonomy.object_of(hoi_id);
  for (const auto& ann : test.annotations) {
    if (setting == EvalSetting::kDefault) {
      out.insert(ann.image_id);
      continue;
    }
    for (HoiId pos : ann.positives) {
      if (test.taxonomy.object_of(pos) == category) {
        out.insert(ann.image_id);
        break;
      }
    }
  }
  return out;
}

EvalReport evaluate(std::span<const ScoredDetection> dets, const Dataset& test, EvalSetting setting,
                    const RareSplit& split, ApMode mode, double thresh, int threads) {
  const int k = test.taxonomy.num_classes();
  std::set<std::string, std::less<>> known_images;
  for (const auto& ann : test.annotations) known_images.insert(ann.image_id);
  std::vector<std::vector<ScoredDetection>> per_class(static_cast<std::size_t>(k));
  for (const auto& d : dets) {
    if (!known_images.contains(d.image_id)) {
      throw ValidationError("scored detection refers to unknown image '" + d.image_id + "'");
    }
    if (d.hoi_id < 0 || d.hoi_id >= k) {
      throw ValidationError("scored detection has hoi_id " + std::to_string(d.hoi_id) + " outside [0, K)");
    }
    per_class[static_cast<std::size_t>(d.hoi_id)].push_back(d);
  }

  EvalReport report;
  report.setting = setting;
  report.ap_mode = mode;
  report.match_threshold = thresh;
  report.ap.resize(static_cast<std::size_t>(k));
  report.n_gt.assign(static_cast<std::size_t>(k), 0);
  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t c) {
    const auto id = static_cast<HoiId>(c);
    const auto images = evaluated_images(test, id, setting);
    std::vector<HOIInstance> gt;
    for (const auto& ann : test.annotations) {
      if (!images.contains(ann.image_id)) continue;
      for (const auto& inst : ann.instances) {
        if (inst.hoi_id == id) gt.push_back(inst);
      }
    }
    std::vector<ScoredDetection> kept;
    for (const auto& d : per_class[c]) {
      if (images.contains(d.image_id)) kept.push_back(d);
    }
    report.n_gt[c] = gt.size();
    const auto flags = match_detections(kept, gt, thresh);
    report.ap[c] = average_precision(flags, gt.size(), mode);
  });

  std::set<HoiId> all;
  for (int c = 0; c < k; ++c) all.insert(c);
  report.map_full = mean_over(report.ap, all);
  report.map_rare = mean_over(report.ap, split.rare);
  report.map_non_rare = mean_over(report.ap, split.non_rare);
  return report;
}

namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "N/A";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

std::string exact(const std::optional<double>& v) { return v ? text::format_double(*v) : ""; }

}  // namespace

std::string format_table(std::span<const NamedReport> rows) {
  std::string out(kTableHeader);
  out += "\nmethod\tdefault_full\tdefault_rare\tdefault_non_rare\tknown_full\tknown_rare\tknown_non_rare\n";
  for (const auto& r : rows) {
    out += r.method;
    for (const EvalReport* rep : {r.default_report, r.known_report}) {
      if (rep == nullptr) {
        out += "\tN/A\tN/A\tN/A";
      } else {
        out += "\t" + percent(rep->map_full) + "\t" + percent(rep->map_rare) + "\t" +
               percent(rep->map_non_rare);
      }
    }
    out += '\n';
  }
  return out;
}

std::string format_per_class_csv(const Taxonomy& taxonomy, const RareSplit& split,
                                 const EvalReport& default_report, const EvalReport& known_report) {
  std::string out = "hoi_id,verb,object,rare,n_gt_default,ap_default,n_gt_known,ap_known\n";
  for (const auto& c : taxonomy.categories()) {
    const auto i = static_cast<std::size_t>(c.id);
    out += std::to_string(c.id) + "," + c.verb + "," + c.object_category + "," +
           (split.rare.contains(c.id) ? "1" : "0") + "," + std::to_string(default_report.n_gt[i]) +
           "," + exact(default_report.ap[i]) + "," + std::to_string(known_report.n_gt[i]) + "," +
           exact(known_report.ap[i]) + "\n";
  }
  return out;
}

PerClassAp load_per_class_csv(const std::filesystem::path& path) {
  const auto lines = text::read_lines(path);
  if (lines.empty() || !lines[0].starts_with("hoi_id,")) {
    throw ParseError(text::where(path, 1, "expected per-class AP header"));
  }
  PerClassAp out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], ',');
    if (f.size() != 8) throw ParseError(text::where(path, i + 1, "expected 8 comma-separated fields"));
    const auto ctx = text::where(path, i + 1, "per-class AP");
    const auto id = static_cast<HoiId>(text::parse_int(f[0], ctx));
    if (id != static_cast<HoiId>(out.ap_default.size())) {
      throw ParseError(ctx + ": class ids must be dense and ordered");
    }
    (f[3] == "1" ? out.rare : out.non_rare).insert(id);
    out.ap_default.push_back(f[5].empty() ? std::nullopt : std::optional(text::parse_double(f[5], ctx)));
    out.ap_known.push_back(f[7].empty() ? std::nullopt : std::optional(text::parse_double(f[7], ctx)));
  }
  return out;
}

}  // namespace hoidet::eval
