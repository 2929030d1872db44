#include "hoidet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <set>

#include "hoidet/errors.hpp"
#include "hoidet/parallel.hpp"
#include "hoidet/rng.hpp"

namespace hoidet::synth {
namespace fs = std::filesystem;

namespace {

using Rgb = std::array<std::uint8_t, 3>;

std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

Rgb shade(const Rgb& c, int delta) {
  return {clamp8(c[0] + delta), clamp8(c[1] + delta), clamp8(c[2] + delta)};
}

void put(Image& img, int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.pixel(x, y);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

Rgb patterned(const Appearance& a, int x, int y) {
  switch (a.pattern) {
    case Pattern::kStripes:
      return (y / 2) % 2 == 0 ? a.color : shade(a.color, -70);
    case Pattern::kChecker:
      return ((x / 3) + (y / 3)) % 2 == 0 ? a.color : shade(a.color, 60);
    case Pattern::kSolid:
      break;
  }
  return a.color;
}

// Pixel (x, y) is covered when its center lies inside the shape.
template <typename Inside>
void fill(Image& img, double x1, double y1, double x2, double y2, const Appearance& a,
          Inside inside) {
  const int xa = static_cast<int>(std::floor(x1));
  const int xb = static_cast<int>(std::ceil(x2));
  const int ya = static_cast<int>(std::floor(y1));
  const int yb = static_cast<int>(std::ceil(y2));
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) {
      const double cx = x + 0.5;
      const double cy = y + 0.5;
      if (cx < x1 || cx >= x2 || cy < y1 || cy >= y2) continue;
      // normalized coordinates in [0,1) within the rectangle
      if (inside((cx - x1) / (x2 - x1), (cy - y1) / (y2 - y1))) put(img, x, y, patterned(a, x, y));
    }
  }
}

void fill_rect(Image& img, double x1, double y1, double x2, double y2, const Appearance& a) {
  fill(img, x1, y1, x2, y2, a, [](double, double) { return true; });
}

void fill_ellipse(Image& img, double x1, double y1, double x2, double y2, const Appearance& a) {
  fill(img, x1, y1, x2, y2, a, [](double u, double v) {
    const double du = u - 0.5;
    const double dv = v - 0.5;
    return du * du + dv * dv <= 0.25;
  });
}

void fill_ring(Image& img, double x1, double y1, double x2, double y2, const Appearance& a) {
  fill(img, x1, y1, x2, y2, a, [](double u, double v) {
    const double r2 = (u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5);
    return r2 <= 0.25 && r2 >= 0.09;
  });
}

void fill_diamond(Image& img, double x1, double y1, double x2, double y2, const Appearance& a) {
  fill(img, x1, y1, x2, y2, a,
       [](double u, double v) { return std::abs(u - 0.5) + std::abs(v - 0.5) <= 0.5; });
}

void draw_object(Image& img, const BBox& b, const Appearance& a) {
  const double w = b.width();
  const double h = b.height();
  switch (a.shape) {
    case ShapeKind::kBicycle: {
      const double d = std::min(h * 0.62, w * 0.45);
      fill_ring(img, b.x1, b.y2 - d, b.x1 + d, b.y2, a);
      fill_ring(img, b.x2 - d, b.y2 - d, b.x2, b.y2, a);
      fill_rect(img, b.x1 + d * 0.5, b.y1 + h * 0.25, b.x2 - d * 0.5, b.y1 + h * 0.25 + 2.0, a);
      fill_rect(img, b.x1 + w * 0.45, b.y1, b.x1 + w * 0.45 + 2.0, b.y2 - d * 0.5, a);
      fill_rect(img, b.x2 - d * 0.6, b.y1, b.x2 - d * 0.6 + 2.0, b.y1 + h * 0.3, a);
      break;
    }
    case ShapeKind::kChair: {
      fill_rect(img, b.x1, b.y1, b.x1 + std::max(2.0, w * 0.22), b.y1 + h * 0.6, a);
      fill_rect(img, b.x1, b.y1 + h * 0.45, b.x2, b.y1 + h * 0.6, a);
      fill_rect(img, b.x1, b.y1 + h * 0.6, b.x1 + 2.0, b.y2, a);
      fill_rect(img, b.x2 - 2.0, b.y1 + h * 0.6, b.x2, b.y2, a);
      break;
    }
    case ShapeKind::kBall:
      fill_ellipse(img, b.x1, b.y1, b.x2, b.y2, a);
      break;
    case ShapeKind::kKite: {
      fill_diamond(img, b.x1, b.y1, b.x2, b.y2, a);
      break;
    }
    case ShapeKind::kBox:
      fill_rect(img, b.x1, b.y1, b.x2, b.y2, a);
      break;
  }
}

void draw_human(Image& img, const BBox& b, const Rgb& clothing) {
  const double w = b.width();
  const double h = b.height();
  const Appearance skin{ShapeKind::kBox, {214, 172, 140}, Pattern::kSolid};
  const Appearance body{ShapeKind::kBox, clothing, Pattern::kSolid};
  const Appearance legs{ShapeKind::kBox, shade(clothing, -50), Pattern::kSolid};
  const double head = std::min(w * 0.8, h * 0.24);
  const double cx = b.center_x();
  fill_ellipse(img, cx - head * 0.5, b.y1, cx + head * 0.5, b.y1 + head, skin);
  fill_rect(img, b.x1, b.y1 + head, b.x2, b.y1 + h * 0.62, body);
  fill_rect(img, b.x1 + w * 0.1, b.y1 + h * 0.62, cx - 0.5, b.y2, legs);
  fill_rect(img, cx + 0.5, b.y1 + h * 0.62, b.x2 - w * 0.1, b.y2, legs);
}

void draw_background(Image& img, Rng& rng) {
  const Rgb base{clamp8(rng.uniform_int(90, 170)), clamp8(rng.uniform_int(90, 170)),
                 clamp8(rng.uniform_int(90, 170))};
  const int period = rng.uniform_int(6, 20);
  const bool vertical = rng.bernoulli(0.5);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int band = ((vertical ? x : y) / period) % 2 == 0 ? 6 : -6;
      const int n = rng.uniform_int(-10, 10);
      auto* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) p[c] = clamp8(base[c] + band + n);
    }
  }
  // low-contrast clutter that is neither a person nor an object of interest
  const int clutter = rng.uniform_int(0, 3);
  for (int i = 0; i < clutter; ++i) {
    const double w = rng.uniform_int(6, 24);
    const double h = rng.uniform_int(6, 24);
    const double x = rng.uniform(0.0, img.width - w);
    const double y = rng.uniform(0.0, img.height - h);
    const Appearance a{ShapeKind::kBox, shade(base, rng.uniform_int(-40, 40)), Pattern::kSolid};
    if (rng.bernoulli(0.5)) {
      fill_rect(img, x, y, x + w, y + h, a);
    } else {
      fill_ellipse(img, x, y, x + w, y + h, a);
    }
  }
}

struct Layout {
  BBox human;
  BBox object;
  BBox window;
};

// Object placement relative to a human box anchored at the origin.
Layout sample_layout(const SynthRule& rule, Rng& rng) {
  const double hh = rng.uniform_int(30, 40);
  const double hw = std::round(hh * rng.uniform(0.38, 0.48));
  const double side = rng.uniform_int(rule.object_min, rule.object_max);
  const double root = std::sqrt(rule.aspect);
  const double ow = std::max(3.0, std::round(side * root));
  const double oh = std::max(3.0, std::round(side / root));
  const bool right = rng.bernoulli(0.5);
  double ox = 0.0;
  double oy = 0.0;
  switch (rule.placement) {
    case Placement::kBelowOverlap:
      ox = std::round(hw / 2 - ow / 2 + rng.uniform(-2.0, 2.0));
      oy = std::round(hh * rng.uniform(0.55, 0.7));
      break;
    case Placement::kBeside: {
      const double gap = rng.uniform_int(1, 5);
      ox = right ? hw + gap : -gap - ow;
      oy = std::round(hh - oh + rng.uniform(-2.0, 2.0));
      break;
    }
    case Placement::kAboveHead:
      ox = std::round(hw / 2 - ow / 2 + rng.uniform(-2.0, 2.0));
      oy = std::round(-oh + hh * rng.uniform(0.05, 0.15));
      break;
    case Placement::kInFront:
      ox = right ? std::round(hw * rng.uniform(0.4, 0.7))
                 : std::round(hw * (1.0 - rng.uniform(0.4, 0.7)) - ow);
      oy = std::round(hh * rng.uniform(0.35, 0.5) - oh / 2);
      break;
    case Placement::kFarAbove: {
      const double dx = rng.uniform_int(6, 16);
      ox = right ? hw + dx : -dx - ow;
      oy = -oh - rng.uniform_int(4, 12);
      break;
    }
  }
  Layout l;
  l.human = {0.0, 0.0, hw, hh};
  l.object = {ox, oy, ox + ow, oy + oh};
  l.window = attention_window(l.human, l.object);
  return l;
}

// Shifts a layout to a random spot where it lies fully inside the image.
bool place(Layout& l, int size, Rng& rng) {
  const double free_x = size - l.window.width();
  const double free_y = size - l.window.height();
  if (free_x < 0 || free_y < 0) return false;
  const double dx = std::floor(rng.uniform(0.0, free_x + 1.0)) - l.window.x1;
  const double dy = std::floor(rng.uniform(0.0, free_y + 1.0)) - l.window.y1;
  l.human = l.human.translated(dx, dy);
  l.object = l.object.translated(dx, dy);
  l.window = l.window.translated(dx, dy);
  return true;
}

// Offset that puts `window` somewhere around `anchor`, or a uniform spot.
std::pair<double, double> spot(const BBox& window, const std::vector<BBox>& taken,
                               double crowding, int size, Rng& rng) {
  const double fx = size - window.width();
  const double fy = size - window.height();
  if (!taken.empty() && rng.bernoulli(crowding)) {
    const BBox& a = taken[static_cast<std::size_t>(rng.below(taken.size()))];
    const double x = std::clamp(std::floor(a.center_x() - window.width() / 2 +
                                           rng.uniform(-1.0, 1.0) * (a.width() + window.width())),
                                0.0, fx);
    const double y = std::clamp(std::floor(a.center_y() - window.height() / 2 +
                                           rng.uniform(-0.5, 0.5) * (a.height() + window.height())),
                                0.0, fy);
    return {x - window.x1, y - window.y1};
  }
  return {std::floor(rng.uniform(0.0, fx + 1.0)) - window.x1,
          std::floor(rng.uniform(0.0, fy + 1.0)) - window.y1};
}

bool overlaps(const BBox& a, const BBox& b, double margin) {
  return a.x1 < b.x2 + margin && b.x1 < a.x2 + margin && a.y1 < b.y2 + margin &&
         b.y1 < a.y2 + margin;
}

std::string rule_name(const SynthRule& r) {
  return "rule " + std::to_string(r.hoi_id) + " (" + r.verb + " " + r.object_category + ")";
}

void check_rules(const GeneratorConfig& cfg) {
  if (cfg.rules.empty()) throw PreconditionError("synth: at least one rule is required");
  if (cfg.image_size < 16) throw PreconditionError("synth: image_size must be >= 16");
  if (cfg.train_images < 0 || cfg.test_images < 0) {
    throw PreconditionError("synth: image counts must be non-negative");
  }
  if (cfg.max_groups < 1) throw PreconditionError("synth: max_groups must be >= 1");
  for (double r : {cfg.background_rate, cfg.invisible_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw PreconditionError("synth: rates must lie in [0, 1]");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.rules.size(); ++i) {
    const auto& r = cfg.rules[i];
    if (!(r.rate >= 0.0) || !std::isfinite(r.rate)) {
      throw PreconditionError("synth: " + rule_name(r) + " has an invalid rate");
    }
    if (r.object_min < 1 || r.object_max < r.object_min || !(r.aspect > 0.0)) {
      throw PreconditionError("synth: " + rule_name(r) + " has invalid object size");
    }
    total += r.rate;
    if (r.rate == 0.0) continue;
    Rng rng(mix_seed(cfg.seed, 0xF17ULL + i));
    bool fits = false;
    for (int t = 0; t < 200 && !fits; ++t) {
      Layout l = sample_layout(r, rng);
      fits = place(l, cfg.image_size, rng);
    }
    if (!fits) {
      throw GenerationError("synth: " + rule_name(r) + " cannot fit in a " +
                            std::to_string(cfg.image_size) + "px image");
    }
  }
  if (total <= 0.0 && cfg.background_rate < 1.0) {
    throw PreconditionError("synth: every rule has rate 0");
  }
}

const SynthRule& pick_rule(const std::vector<SynthRule>& rules, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (const auto& r : rules) {
    if (r.rate <= 0.0) continue;
    if (u < r.rate) return r;
    u -= r.rate;
  }
  for (auto it = rules.rbegin(); it != rules.rend(); ++it) {
    if (it->rate > 0.0) return *it;
  }
  return rules.back();
}

struct Generated {
  ImageAnnotation ann;
  Image image;
  std::vector<Detection> extras;
};

Generated generate_image(const GeneratorConfig& cfg, Split split, int index, double total) {
  Rng rng(mix_seed(cfg.seed, (split == Split::kTrain ? 0ULL : 1ULL << 32) + index));
  Generated g;
  char id[32];
  std::snprintf(id, sizeof id, "%s_%05d", split == Split::kTrain ? "train" : "test", index);
  g.ann.image_id = id;
  g.ann.width = cfg.image_size;
  g.ann.height = cfg.image_size;
  g.image = Image(cfg.image_size, cfg.image_size);
  draw_background(g.image, rng);

  const bool background_only = total <= 0.0 || rng.bernoulli(cfg.background_rate);
  const int groups = background_only ? 0 : rng.uniform_int(1, cfg.max_groups);
  const int bystanders = rng.uniform_int(0, cfg.max_bystanders);
  const int idle = rng.uniform_int(0, cfg.max_idle_objects);
  // Boxes of different entities never touch; pair windows may overlap.
  std::vector<BBox> taken;
  auto is_free = [&](const BBox& b) {
    return std::none_of(taken.begin(), taken.end(),
                        [&](const BBox& t) { return overlaps(t, b, 1.0); });
  };
  auto random_clothing = [&](const SynthRule& rule) {
    return Rgb{clamp8(rule.human.color[0] + rng.uniform_int(-30, 30)),
               clamp8(rule.human.color[1] + rng.uniform_int(-30, 30)),
               clamp8(rule.human.color[2] + rng.uniform_int(-30, 30))};
  };
  for (int gi = 0; gi < groups; ++gi) {
    const SynthRule& rule = pick_rule(cfg.rules, total, rng);
    Layout l = sample_layout(rule, rng);
    const Rgb clothing = random_clothing(rule);
    bool ok = false;
    if (l.window.width() > cfg.image_size || l.window.height() > cfg.image_size) continue;
    for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
      const auto [dx, dy] = spot(l.window, taken, cfg.crowding, cfg.image_size, rng);
      Layout trial{l.human.translated(dx, dy), l.object.translated(dx, dy),
                   l.window.translated(dx, dy)};
      ok = is_free(trial.human) && is_free(trial.object);
      if (ok) l = trial;
    }
    if (!ok) continue;  // image too crowded for this pair
    taken.push_back(l.human);
    taken.push_back(l.object);
    draw_object(g.image, l.object, rule.object);
    draw_human(g.image, l.human, clothing);
    g.ann.positives.insert(rule.hoi_id);
    g.ann.instances.push_back({g.ann.image_id, rule.hoi_id, l.human, l.object});
  }
  // Bystanders and idle objects reuse a rule's sizes but are drawn alone.
  for (int i = 0; i < bystanders + idle; ++i) {
    const bool person = i < bystanders;
    const SynthRule& rule = pick_rule(cfg.rules, total, rng);
    Layout l = sample_layout(rule, rng);
    const Rgb clothing = random_clothing(rule);
    BBox b = person ? l.human : l.object;
    b = b.translated(-b.x1, -b.y1);
    bool ok = false;
    if (b.width() > cfg.image_size || b.height() > cfg.image_size) continue;
    for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
      const auto [dx, dy] = spot(b, taken, cfg.crowding, cfg.image_size, rng);
      const BBox trial = b.translated(dx, dy);
      ok = is_free(trial);
      if (ok) b = trial;
    }
    if (!ok) continue;
    taken.push_back(b);
    g.extras.push_back({g.ann.image_id,
                        person ? std::string(kPersonCategory) : rule.object_category, b, 1.0});
    if (person) {
      draw_human(g.image, b, clothing);
    } else {
      draw_object(g.image, b, rule.object);
    }
  }
  if (!background_only && rng.bernoulli(cfg.invisible_rate)) {
    const SynthRule& rule = pick_rule(cfg.rules, total, rng);
    if (!g.ann.positives.contains(rule.hoi_id)) {
      g.ann.positives.insert(rule.hoi_id);
      g.ann.invisible.insert(rule.hoi_id);
    }
  }
  return g;
}

SynthSplit generate_split(const GeneratorConfig& cfg, const Taxonomy& tax, Split split, int n,
                          int threads) {
  double total = 0.0;
  for (const auto& r : cfg.rules) total += r.rate;
  std::vector<Generated> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = generate_image(cfg, split, static_cast<int>(i), total);
  });
  SynthSplit s;
  s.dataset.taxonomy = tax;
  s.dataset.split = split;
  for (auto& g : out) {
    s.declared.images += 1;
    s.declared.positives += g.ann.positives.size();
    s.declared.instances += g.ann.instances.size();
    std::set<BBox> boxes;
    for (const auto& inst : g.ann.instances) {
      boxes.insert(inst.human_box);
      boxes.insert(inst.object_box);
    }
    s.declared.boxes += boxes.size();
    s.images.emplace(g.ann.image_id, std::move(g.image));
    std::move(g.extras.begin(), g.extras.end(), std::back_inserter(s.extras));
    s.dataset.annotations.push_back(std::move(g.ann));
  }
  validate(s.dataset);
  return s;
}

}  // namespace

void NoiseModel::validate() const {
  for (double r : {fp_rate, miss_rate, near_miss_fraction, fp_score_max}) {
    if (!(r >= 0.0 && r <= 1.0)) throw PreconditionError("noise rates must lie in [0, 1]");
  }
  if (!(box_jitter >= 0.0) || !(score_noise >= 0.0) || !std::isfinite(box_jitter) ||
      !std::isfinite(score_noise)) {
    throw PreconditionError("noise scales must be finite and non-negative");
  }
}

Taxonomy taxonomy_of(const std::vector<SynthRule>& rules) {
  std::vector<HOICategory> cats;
  cats.reserve(rules.size());
  for (const auto& r : rules) cats.push_back({r.hoi_id, r.verb, r.object_category});
  return Taxonomy(std::move(cats));
}

GeneratorConfig default_benchmark(std::uint64_t seed) {
  const Appearance bicycle{ShapeKind::kBicycle, {40, 40, 200}, Pattern::kSolid};
  const Appearance chair{ShapeKind::kChair, {150, 90, 30}, Pattern::kSolid};
  const Appearance ball{ShapeKind::kBall, {240, 240, 240}, Pattern::kChecker};
  const Appearance red_kite{ShapeKind::kKite, {220, 30, 30}, Pattern::kSolid};
  const Appearance yellow_kite{ShapeKind::kKite, {235, 215, 20}, Pattern::kStripes};
  GeneratorConfig cfg;
  cfg.seed = seed;
  auto rule = [](HoiId id, const char* verb, const char* obj, Appearance a, Placement p, int lo,
                 int hi, double aspect, double rate) {
    SynthRule r;
    r.hoi_id = id;
    r.verb = verb;
    r.object_category = obj;
    r.object = a;
    r.placement = p;
    r.object_min = lo;
    r.object_max = hi;
    r.aspect = aspect;
    r.rate = rate;
    return r;
  };
  cfg.max_groups = 3;
  cfg.max_bystanders = 2;
  cfg.max_idle_objects = 1;
  cfg.crowding = 0.5;
  cfg.rules = {
      rule(0, "ride", "bicycle", bicycle, Placement::kBelowOverlap, 22, 28, 1.6, 1.0),
      rule(1, "walk", "bicycle", bicycle, Placement::kBeside, 22, 28, 1.6, 1.0),
      rule(2, "sit_on", "chair", chair, Placement::kBelowOverlap, 16, 22, 0.85, 1.0),
      rule(3, "carry", "chair", chair, Placement::kAboveHead, 16, 22, 0.85, 1.0),
      rule(4, "kick", "ball", ball, Placement::kBeside, 9, 13, 1.0, 1.0),
      rule(5, "throw", "ball", ball, Placement::kAboveHead, 9, 13, 1.0, 0.05),
      rule(6, "fly", "kite", red_kite, Placement::kFarAbove, 13, 18, 1.0, 1.0),
      rule(7, "launch", "kite", yellow_kite, Placement::kFarAbove, 13, 18, 1.0, 0.05),
  };
  return cfg;
}

GeneratorConfig separable_benchmark(std::uint64_t seed) {
  GeneratorConfig cfg = default_benchmark(seed);
  cfg.rules.resize(4);
  cfg.train_images = 150;
  cfg.test_images = 40;
  cfg.background_rate = 0.05;
  cfg.invisible_rate = 0.0;
  return cfg;
}

SynthOutput generate(const GeneratorConfig& config, int threads) {
  check_rules(config);
  const Taxonomy tax = taxonomy_of(config.rules);
  SynthOutput out;
  out.train = generate_split(config, tax, Split::kTrain, config.train_images, threads);
  out.test = generate_split(config, tax, Split::kTest, config.test_images, threads);
  return out;
}

void write_split(SynthSplit& split, const fs::path& root, int threads) {
  std::error_code ec;
  fs::create_directories(root / kImagesDir, ec);
  if (ec) throw IoError("cannot create " + (root / kImagesDir).string() + ": " + ec.message());
  split.dataset.image_dir = root / kImagesDir;
  const auto& anns = split.dataset.annotations;
  parallel_for(anns.size(), threads, [&](std::size_t i) {
    const auto it = split.images.find(anns[i].image_id);
    if (it == split.images.end()) {
      throw PreconditionError("synth: no raster for image '" + anns[i].image_id + "'");
    }
    write_png(it->second, split.dataset.image_path(anns[i].image_id));
  });
  save_dataset(split.dataset, root);
}

std::vector<Detection> perfect_detections(const Dataset& ds) {
  std::vector<Detection> out;
  for (const auto& ann : ds.annotations) {
    std::set<BBox> seen;
    for (const auto& inst : ann.instances) {
      if (seen.insert(inst.human_box).second) {
        out.push_back({ann.image_id, std::string(kPersonCategory), inst.human_box, 1.0});
      }
      if (seen.insert(inst.object_box).second) {
        out.push_back({ann.image_id, ds.taxonomy.object_of(inst.hoi_id), inst.object_box, 1.0});
      }
    }
  }
  return out;
}

std::vector<Detection> scene_detections(const SynthSplit& split) {
  const auto gt = perfect_detections(split.dataset);
  std::map<std::string, std::vector<const Detection*>> extras;
  for (const auto& d : split.extras) extras[d.image_id].push_back(&d);
  std::vector<Detection> out;
  out.reserve(gt.size() + split.extras.size());
  std::size_t i = 0;
  for (const auto& ann : split.dataset.annotations) {
    for (; i < gt.size() && gt[i].image_id == ann.image_id; ++i) out.push_back(gt[i]);
    if (const auto it = extras.find(ann.image_id); it != extras.end()) {
      for (const auto* d : it->second) out.push_back(*d);
    }
  }
  return out;
}

std::vector<Detection> corrupt_detections(const std::vector<Detection>& dets,
                                          const NoiseModel& noise, const Dataset& ds) {
  noise.validate();
  std::vector<std::string> categories{std::string(kPersonCategory)};
  for (const auto& c : ds.taxonomy.object_categories()) categories.push_back(c);
  Rng rng(mix_seed(noise.seed, 0xC0221ULL));
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    const auto idx = ds.find(d.image_id);
    if (!idx) throw ValidationError("detection refers to unknown image '" + d.image_id + "'");
    const auto& ann = ds.annotations[*idx];
    const double w = ann.width;
    const double h = ann.height;
    // every draw happens unconditionally so one decision never shifts the others
    const bool miss = rng.bernoulli(noise.miss_rate);
    const double j[4] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double sn = rng.normal();
    const bool fp = rng.bernoulli(noise.fp_rate);
    const bool near_miss = rng.bernoulli(noise.near_miss_fraction);
    const double u[6] = {rng.uniform(), rng.uniform(), rng.uniform(),
                         rng.uniform(), rng.uniform(), rng.uniform()};
    const std::size_t cat = static_cast<std::size_t>(rng.below(categories.size()));

    if (!miss) {
      Detection c = d;
      const double bw = d.box.width();
      const double bh = d.box.height();
      const BBox moved{d.box.x1 + j[0] * noise.box_jitter * bw,
                       d.box.y1 + j[1] * noise.box_jitter * bh,
                       d.box.x2 + j[2] * noise.box_jitter * bw,
                       d.box.y2 + j[3] * noise.box_jitter * bh};
      const BBox clipped = clip_to_image(moved, w, h);
      if (clipped.is_valid()) c.box = clipped;
      c.score = std::clamp(d.score + sn * noise.score_noise, 0.0, 1.0);
      out.push_back(std::move(c));
    }
    if (fp) {
      Detection f;
      f.image_id = d.image_id;
      if (near_miss) {
        // same category, shifted along one axis far enough that IoU with
        // the source drops below 0.5; the shift points away from the border
        const bool along_x = u[5] < 0.5;
        const double ext = along_x ? d.box.width() : d.box.height();
        const double lo = along_x ? d.box.x1 : d.box.y1;
        const double hi = along_x ? d.box.x2 : d.box.y2;
        const double limit = along_x ? w : h;
        const double mag = (0.34 + 0.06 * u[1]) * ext;
        double shift = u[0] < 0.5 ? -mag : mag;
        if (lo + shift < 0.0 || hi + shift > limit) shift = -shift;
        const double cross = (u[2] - 0.5) * 0.2 * (along_x ? d.box.height() : d.box.width());
        f.category = d.category;
        f.box = clip_to_image(along_x ? d.box.translated(shift, cross) : d.box.translated(cross, shift),
                              w, h);
      } else {
        const double bw = std::min(w, 8.0 + 32.0 * u[0]);
        const double bh = std::min(h, 8.0 + 32.0 * u[1]);
        const double x = u[2] * (w - bw);
        const double y = u[3] * (h - bh);
        f.category = categories[cat];
        f.box = {x, y, x + bw, y + bh};
      }
      f.score = noise.fp_score_max * u[4];
      if (f.box.is_valid()) out.push_back(std::move(f));
    }
  }
  return out;
}

NoiseModel default_noise(std::uint64_t seed) {
  NoiseModel n;
  n.box_jitter = 0.06;
  n.score_noise = 0.08;
  n.fp_rate = 0.8;
  n.near_miss_fraction = 0.7;
  n.miss_rate = 0.03;
  n.seed = seed;
  return n;
}

}  // namespace hoidet::synth
