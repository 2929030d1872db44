// Independent reference implementations used by the unit tests and the
// acceptance runner. They favour obviousness over speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/eval/evaluator.hpp"
#include "hoidet/geometry.hpp"
#include "hoidet/interaction_pattern.hpp"
#include "hoidet/nn/network.hpp"
#include "hoidet/rng.hpp"

namespace oracle {

using hoidet::BBox;

// ---- Interaction Patterns ------------------------------------------------

/// Rasterizes integer-coordinate boxes at one pixel per unit inside their
/// attention window, then samples each cell at the pixel under its center.
/// Returns channel-major 0/1 cells, like InteractionPattern::cells.
inline std::vector<std::uint8_t> raster_ip(const std::vector<BBox>& boxes, int s, bool padded) {
  long wx1 = static_cast<long>(boxes[0].x1), wy1 = static_cast<long>(boxes[0].y1);
  long wx2 = static_cast<long>(boxes[0].x2), wy2 = static_cast<long>(boxes[0].y2);
  for (const auto& b : boxes) {
    wx1 = std::min(wx1, static_cast<long>(b.x1));
    wy1 = std::min(wy1, static_cast<long>(b.y1));
    wx2 = std::max(wx2, static_cast<long>(b.x2));
    wy2 = std::max(wy2, static_cast<long>(b.y2));
  }
  const long w = wx2 - wx1;
  const long h = wy2 - wy1;

  // Per axis: number of content cells and leading padding.
  long nx = s, ny = s, px = 0, py = 0;
  if (padded && w != h) {
    const long longer = std::max(w, h);
    const long shorter = std::min(w, h);
    long n = (2 * shorter * s + longer) / (2 * longer);  // round half up
    n = std::clamp<long>(n, 1, s);
    const long pad = (s - n + 1) / 2;
    if (w < h) {
      nx = n;
      px = pad;
    } else {
      ny = n;
      py = pad;
    }
  }

  std::vector<std::uint8_t> cells(boxes.size() * static_cast<std::size_t>(s) * s, 0);
  for (std::size_t c = 0; c < boxes.size(); ++c) {
    const auto& b = boxes[c];
    // Pixel mask of the box in window coordinates.
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w * h), 0);
    for (long y = static_cast<long>(b.y1) - wy1; y < static_cast<long>(b.y2) - wy1; ++y) {
      for (long x = static_cast<long>(b.x1) - wx1; x < static_cast<long>(b.x2) - wx1; ++x) {
        mask[static_cast<std::size_t>(y * w + x)] = 1;
      }
    }
    for (int row = 0; row < s; ++row) {
      const long jr = row - py;
      if (jr < 0 || jr >= ny) continue;
      const long py_pix = ((2 * jr + 1) * h) / (2 * ny);  // pixel under the cell center
      for (int col = 0; col < s; ++col) {
        const long jc = col - px;
        if (jc < 0 || jc >= nx) continue;
        const long px_pix = ((2 * jc + 1) * w) / (2 * nx);
        cells[(c * s + row) * s + col] = mask[static_cast<std::size_t>(py_pix * w + px_pix)];
      }
    }
  }
  return cells;
}

inline BBox random_int_box(hoidet::Rng& rng, int lo, int hi, int max_side) {
  const int x1 = rng.uniform_int(lo, hi);
  const int y1 = rng.uniform_int(lo, hi);
  return {static_cast<double>(x1), static_cast<double>(y1),
          static_cast<double>(x1 + rng.uniform_int(1, max_side)),
          static_cast<double>(y1 + rng.uniform_int(1, max_side))};
}

inline BBox random_real_box(hoidet::Rng& rng, double lo, double hi, double max_side) {
  const double x1 = rng.uniform(lo, hi);
  const double y1 = rng.uniform(lo, hi);
  return {x1, y1, x1 + rng.uniform(0.5, max_side), y1 + rng.uniform(0.5, max_side)};
}

// ---- Evaluation ----------------------------------------------------------

/// Pixel-set IoU for integer boxes.
inline double pixel_iou(const BBox& a, const BBox& b) {
  long inter = 0, ua = 0, ub = 0;
  const long x0 = static_cast<long>(std::min(a.x1, b.x1)), x1 = static_cast<long>(std::max(a.x2, b.x2));
  const long y0 = static_cast<long>(std::min(a.y1, b.y1)), y1 = static_cast<long>(std::max(a.y2, b.y2));
  for (long y = y0; y < y1; ++y) {
    for (long x = x0; x < x1; ++x) {
      const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
      const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
      inter += in_a && in_b;
      ua += in_a;
      ub += in_b;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(ua + ub - inter);
}

/// True positives among the detections scoring >= tau, matched greedily
/// from the highest score down. Scores must be distinct.
inline std::size_t true_positives_at(const std::vector<hoidet::eval::ScoredDetection>& dets,
                                     const std::vector<hoidet::HOIInstance>& gt, double tau,
                                     double thresh) {
  std::vector<const hoidet::eval::ScoredDetection*> kept;
  for (const auto& d : dets) {
    if (d.score >= tau) kept.push_back(&d);
  }
  std::sort(kept.begin(), kept.end(), [](auto* a, auto* b) { return a->score > b->score; });
  std::vector<bool> used(gt.size(), false);
  std::size_t tp = 0;
  for (const auto* d : kept) {
    double best = thresh;
    std::optional<std::size_t> pick;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].image_id != d->image_id) continue;
      const double m = std::min(hoidet::iou(d->human_box, gt[g].human_box),
                                hoidet::iou(d->object_box, gt[g].object_box));
      if (m > best) {
        best = m;
        pick = g;
      }
    }
    if (pick) {
      used[*pick] = true;
      ++tp;
    }
  }
  return tp;
}

/// All-points AP by enumerating every score threshold: precision and recall
/// are recomputed from scratch at each one.
inline std::optional<double> threshold_ap(const std::vector<hoidet::eval::ScoredDetection>& dets,
                                          const std::vector<hoidet::HOIInstance>& gt,
                                          double thresh = hoidet::kMatchIoU) {
  if (gt.empty()) return std::nullopt;
  std::vector<double> taus;
  for (const auto& d : dets) taus.push_back(d.score);
  std::sort(taus.rbegin(), taus.rend());
  std::vector<double> precision;
  std::vector<std::size_t> tps;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const std::size_t tp = true_positives_at(dets, gt, taus[i], thresh);
    tps.push_back(tp);
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const std::size_t prev = i == 0 ? 0 : tps[i - 1];
    if (tps[i] == prev) continue;
    double best = 0.0;
    for (std::size_t j = i; j < taus.size(); ++j) best = std::max(best, precision[j]);
    sum += best;  // recall step is exactly one instance
  }
  return sum / static_cast<double>(gt.size());
}

/// Per-class AP of `dets` on `test` under `setting`, by the threshold oracle.
inline std::vector<std::optional<double>> oracle_evaluate(
    const std::vector<hoidet::eval::ScoredDetection>& dets, const hoidet::Dataset& test,
    hoidet::eval::EvalSetting setting) {
  std::vector<std::optional<double>> out;
  for (const auto& cat : test.taxonomy.categories()) {
    std::set<std::string> images;
    for (const auto& ann : test.annotations) {
      bool keep = setting == hoidet::eval::EvalSetting::kDefault;
      for (auto p : ann.positives) keep = keep || test.taxonomy.object_of(p) == cat.object_category;
      if (keep) images.insert(ann.image_id);
    }
    std::vector<hoidet::HOIInstance> gt;
    for (const auto& ann : test.annotations) {
      if (!images.contains(ann.image_id)) continue;
      for (const auto& inst : ann.instances) {
        if (inst.hoi_id == cat.id) gt.push_back(inst);
      }
    }
    std::vector<hoidet::eval::ScoredDetection> mine;
    for (const auto& d : dets) {
      if (d.hoi_id == cat.id && images.contains(d.image_id)) mine.push_back(d);
    }
    out.push_back(threshold_ap(mine, gt));
  }
  return out;
}

/// A random test split of at most five images and its detections, at most
/// ten per class, with distinct scores. Boxes sit on a coarse grid so exact
/// matches and near misses both occur.
struct MicroInstance {
  hoidet::Dataset test;
  std::vector<hoidet::eval::ScoredDetection> dets;
};

inline MicroInstance micro_instance(std::uint64_t seed) {
  hoidet::Rng rng(hoidet::mix_seed(seed, 0xE7A1));
  MicroInstance mi;
  mi.test.taxonomy = hoidet::Taxonomy({{0, "ride", "bicycle"}, {1, "walk", "bicycle"}, {2, "kick", "ball"}});
  mi.test.split = hoidet::Split::kTest;
  const int n_images = rng.uniform_int(1, 5);
  auto box = [&] {
    const double x = 4.0 * rng.uniform_int(0, 6);
    const double y = 4.0 * rng.uniform_int(0, 6);
    return BBox{x, y, x + 4.0 * rng.uniform_int(1, 3), y + 4.0 * rng.uniform_int(1, 3)};
  };
  for (int i = 0; i < n_images; ++i) {
    hoidet::ImageAnnotation ann;
    ann.image_id = "img" + std::to_string(i);
    ann.width = 64;
    ann.height = 64;
    const int n_inst = rng.uniform_int(0, 3);
    for (int k = 0; k < n_inst; ++k) {
      const int hoi = rng.uniform_int(0, 2);
      ann.instances.push_back({ann.image_id, hoi, box(), box()});
      ann.positives.insert(hoi);
    }
    mi.test.annotations.push_back(ann);
  }
  std::set<double> used;
  auto fresh_score = [&] {
    double s = rng.uniform();
    while (used.contains(s)) s = rng.uniform();
    used.insert(s);
    return s;
  };
  for (int hoi = 0; hoi < 3; ++hoi) {
    const int n = rng.uniform_int(0, 10);
    for (int k = 0; k < n; ++k) {
      const auto& ann = mi.test.annotations[rng.below(mi.test.annotations.size())];
      hoidet::eval::ScoredDetection d{ann.image_id, hoi, box(), box(), fresh_score()};
      // Often reuse a ground-truth pair (possibly of another class) or a perturbed one.
      if (!ann.instances.empty() && rng.bernoulli(0.6)) {
        const auto& inst = ann.instances[rng.below(ann.instances.size())];
        d.human_box = inst.human_box;
        d.object_box = inst.object_box;
        if (rng.bernoulli(0.3)) d.object_box = d.object_box.translated(rng.uniform_int(-2, 2), 0.0);
      }
      mi.dets.push_back(d);
    }
  }
  return mi;
}

// ---- Student t -----------------------------------------------------------

/// Two-sided p-value by composite Simpson integration of the t density from
/// 0 to |t|.
inline double t_two_sided_p_simpson(double t, double df, int intervals = 200000) {
  const double c = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
                   std::sqrt(df * 3.14159265358979323846);
  auto f = [&](double x) { return c * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0); };
  const double b = std::fabs(t);
  const double hstep = b / intervals;
  double sum = f(0.0) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(i * hstep) * (i % 2 ? 4.0 : 2.0);
  const double half_mass = sum * hstep / 3.0;  // P(0 < T < |t|)
  return 1.0 - 2.0 * half_mass;
}

// ---- Gradients -----------------------------------------------------------

/// Norm-wise relative error between two gradient vectors.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

struct GradCheck {
  double param_error = 0.0;
  double input_error = 0.0;
};

/// Compares backward() against central differences of L = sum_i r_i out_i.
inline GradCheck check_network(hoidet::nn::Network<double>& net, std::uint64_t seed,
                               double step = 1e-6) {
  hoidet::Rng rng(seed);
  std::vector<double> input(net.input_shape().size());
  for (auto& v : input) v = rng.uniform(-1.0, 1.0);
  std::vector<double> r(net.output_shape().size());
  for (auto& v : r) v = rng.uniform(-1.0, 1.0);

  hoidet::nn::Network<double>::Trace trace;
  auto loss = [&](const std::vector<double>& in) {
    net.forward(in, trace);
    const auto out = net.output(trace);
    double l = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) l += r[i] * out[i];
    return l;
  };

  net.forward(input, trace);
  std::vector<double> gp(net.param_count(), 0.0);
  std::vector<double> gi(input.size(), 0.0);
  net.backward(trace, r, gp, gi);

  std::vector<double> np(gp.size());
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + step;
    const double up = loss(input);
    params[i] = keep - step;
    const double down = loss(input);
    params[i] = keep;
    np[i] = (up - down) / (2.0 * step);
  }
  std::vector<double> ni(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    auto in = input;
    in[i] += step;
    const double up = loss(in);
    in[i] -= 2.0 * step;
    const double down = loss(in);
    ni[i] = (up - down) / (2.0 * step);
  }
  return {relative_error(gp, np), relative_error(gi, ni)};
}

}  // namespace oracle
