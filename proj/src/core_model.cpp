#include "hoidet/core_model.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "hoidet/errors.hpp"
#include "hoidet/text_io.hpp"

namespace hoidet {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

Taxonomy::Taxonomy(std::vector<HOICategory> categories) : categories_(std::move(categories)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const auto& c = categories_[i];
    if (c.id != static_cast<HoiId>(i)) {
      throw ValidationError("taxonomy: class ids must be dense 0..K-1 in order; got id " +
                            std::to_string(c.id) + " at position " + std::to_string(i));
    }
    if (c.verb.empty() || c.object_category.empty()) {
      throw ValidationError("taxonomy: class " + std::to_string(c.id) +
                            " has an empty verb or object category");
    }
    if (!seen.emplace(c.verb, c.object_category).second) {
      throw ValidationError("taxonomy: duplicate (verb, object) pair '" + c.verb + " " +
                            c.object_category + "'");
    }
    auto [it, inserted] = by_object_.try_emplace(c.object_category);
    if (inserted) object_categories_.push_back(c.object_category);
    it->second.push_back(c.id);
  }
}

bool Taxonomy::has_object_category(std::string_view name) const {
  return by_object_.find(name) != by_object_.end();
}

const std::vector<HoiId>& Taxonomy::classes_of(std::string_view object_category) const {
  static const std::vector<HoiId> kEmpty;
  auto it = by_object_.find(object_category);
  return it == by_object_.end() ? kEmpty : it->second;
}

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw ParseError("unknown split '" + std::string(text) + "'");
}

fs::path Dataset::image_path(std::string_view image_id) const {
  return image_dir / (std::string(image_id) + ".png");
}

std::optional<std::size_t> Dataset::find(std::string_view image_id) const {
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (annotations[i].image_id == image_id) return i;
  }
  return std::nullopt;
}

namespace {

void check_box(const BBox& box, const ImageAnnotation& ann, std::string_view role) {
  const std::string prefix = "image '" + ann.image_id + "': ";
  if (!box.is_valid()) {
    throw ValidationError(prefix + std::string(role) + " box " + text::format_box(box) +
                          " is degenerate (need x1 < x2 and y1 < y2)");
  }
  if (box.x1 < 0.0 || box.y1 < 0.0 || box.x2 > ann.width || box.y2 > ann.height) {
    throw ValidationError(prefix + std::string(role) + " box " + text::format_box(box) +
                          " lies outside the image");
  }
}

}  // namespace

void validate(const Dataset& ds) {
  const int k = ds.taxonomy.num_classes();
  std::set<std::string, std::less<>> ids;
  for (const auto& ann : ds.annotations) {
    const std::string prefix = "image '" + ann.image_id + "': ";
    if (ann.image_id.empty()) throw ValidationError("annotation with empty image_id");
    if (ann.image_id.find_first_of("\t\n/\\") != std::string::npos) {
      throw ValidationError(prefix + "image_id contains a forbidden character");
    }
    if (!ids.insert(ann.image_id).second) throw ValidationError(prefix + "duplicate image_id");
    if (ann.width <= 0 || ann.height <= 0) throw ValidationError(prefix + "non-positive size");
    for (HoiId id : ann.positives) {
      if (id < 0 || id >= k) {
        throw ValidationError(prefix + "positive label " + std::to_string(id) + " not in [0, K)");
      }
    }
    std::set<HoiId> with_instances;
    for (const auto& inst : ann.instances) {
      if (inst.image_id != ann.image_id) {
        throw ValidationError(prefix + "instance refers to image '" + inst.image_id + "'");
      }
      if (inst.hoi_id < 0 || inst.hoi_id >= k) {
        throw ValidationError(prefix + "instance hoi_id " + std::to_string(inst.hoi_id) +
                              " not in [0, K)");
      }
      if (!ann.positives.contains(inst.hoi_id)) {
        throw ValidationError(prefix + "instance hoi_id " + std::to_string(inst.hoi_id) +
                              " is not a positive label");
      }
      check_box(inst.human_box, ann, "human");
      check_box(inst.object_box, ann, "object");
      with_instances.insert(inst.hoi_id);
    }
    for (HoiId id : ann.invisible) {
      if (!ann.positives.contains(id)) {
        throw ValidationError(prefix + "invisible label " + std::to_string(id) +
                              " is not a positive label");
      }
      if (with_instances.contains(id)) {
        throw ValidationError(prefix + "invisible label " + std::to_string(id) +
                              " also has instances");
      }
    }
  }
}

Taxonomy load_taxonomy(const fs::path& path) {
  const auto lines = text::read_lines(path);
  text::expect_header(lines, kTaxonomyHeader, path);
  std::vector<HOICategory> cats;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = text::split(lines[i], '\t');
    const auto ctx = text::where(path, i + 1, "taxonomy");
    if (fields.size() != 3) {
      throw ParseError(text::where(path, i + 1, "expected 'id<TAB>verb<TAB>object_category'"));
    }
    cats.push_back({static_cast<HoiId>(text::parse_int(fields[0], ctx + " field id")),
                    std::string(fields[1]), std::string(fields[2])});
  }
  return Taxonomy(std::move(cats));
}

std::string serialize_taxonomy(const Taxonomy& taxonomy) {
  std::string out(kTaxonomyHeader);
  out += '\n';
  for (const auto& c : taxonomy.categories()) {
    out += std::to_string(c.id) + "\t" + c.verb + "\t" + c.object_category + "\n";
  }
  return out;
}

namespace {

ojson box_json(const BBox& b) { return ojson::array({b.x1, b.y1, b.x2, b.y2}); }

BBox json_box(const ojson& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) throw ParseError(ctx + ": expected [x1,y1,x2,y2]");
  BBox b;
  double* dst[4] = {&b.x1, &b.y1, &b.x2, &b.y2};
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw ParseError(ctx + ": box coordinate is not a number");
    *dst[i] = j[i].get<double>();
  }
  return b;
}

const ojson& field(const ojson& obj, const char* name, const std::string& ctx) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(ctx + ": missing field '" + name + "'");
  return *it;
}

std::set<HoiId> id_set(const ojson& j, const std::string& ctx) {
  if (!j.is_array()) throw ParseError(ctx + ": expected an array of class ids");
  std::set<HoiId> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError(ctx + ": class id is not an integer");
    out.insert(v.get<HoiId>());
  }
  return out;
}

}  // namespace

std::string serialize_annotations(const Dataset& ds) {
  std::string out(kAnnotationsHeader);
  out += " split=";
  out += to_string(ds.split);
  out += '\n';
  for (const auto& ann : ds.annotations) {
    ojson j;
    j["image_id"] = ann.image_id;
    j["width"] = ann.width;
    j["height"] = ann.height;
    j["positives"] = ojson(std::vector<HoiId>(ann.positives.begin(), ann.positives.end()));
    ojson insts = ojson::array();
    for (const auto& inst : ann.instances) {
      ojson ij;
      ij["image_id"] = inst.image_id;
      ij["hoi_id"] = inst.hoi_id;
      ij["human_box"] = box_json(inst.human_box);
      ij["object_box"] = box_json(inst.object_box);
      insts.push_back(std::move(ij));
    }
    j["instances"] = std::move(insts);
    j["invisible"] = ojson(std::vector<HoiId>(ann.invisible.begin(), ann.invisible.end()));
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset parse_annotations(const std::vector<std::string>& lines, const Taxonomy& taxonomy,
                          const fs::path& path) {
  const std::string prefix = std::string(kAnnotationsHeader) + " split=";
  if (lines.empty() || !lines.front().starts_with(prefix)) {
    throw ParseError(text::where(path, 1, "expected header '" + prefix + "<train|test>'"));
  }
  Dataset ds;
  ds.taxonomy = taxonomy;
  ds.split = parse_split(std::string_view(lines.front()).substr(prefix.size()));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = text::where(path, i + 1, "annotation");
    ojson j;
    try {
      j = ojson::parse(lines[i]);
    } catch (const ojson::parse_error& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    try {
      ImageAnnotation ann;
      ann.image_id = field(j, "image_id", ctx).get<std::string>();
      ann.width = field(j, "width", ctx).get<int>();
      ann.height = field(j, "height", ctx).get<int>();
      ann.positives = id_set(field(j, "positives", ctx), ctx + " field positives");
      ann.invisible = id_set(field(j, "invisible", ctx), ctx + " field invisible");
      const auto& insts = field(j, "instances", ctx);
      if (!insts.is_array()) throw ParseError(ctx + ": field instances is not an array");
      for (const auto& ij : insts) {
        HOIInstance inst;
        inst.image_id = field(ij, "image_id", ctx).get<std::string>();
        inst.hoi_id = field(ij, "hoi_id", ctx).get<HoiId>();
        inst.human_box = json_box(field(ij, "human_box", ctx), ctx + " field human_box");
        inst.object_box = json_box(field(ij, "object_box", ctx), ctx + " field object_box");
        ann.instances.push_back(std::move(inst));
      }
      ds.annotations.push_back(std::move(ann));
    } catch (const ojson::type_error& e) {
      throw ParseError(ctx + ": " + e.what());
    }
  }
  return ds;
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
  auto taxonomy = load_taxonomy(root / kTaxonomyFile);
  const auto ann_path = root / kAnnotationsFile;
  auto ds = parse_annotations(text::read_lines(ann_path), taxonomy, ann_path);
  ds.image_dir = root / kImagesDir;
  validate(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  validate(ds);
  std::error_code ec;
  fs::create_directories(root / kImagesDir, ec);
  if (ec) throw IoError("cannot create " + (root / kImagesDir).string() + ": " + ec.message());
  text::write_file(root / kTaxonomyFile, serialize_taxonomy(ds.taxonomy));
  text::write_file(root / kAnnotationsFile, serialize_annotations(ds));
  const fs::path dest = root / kImagesDir;
  if (ds.image_dir.empty() || !fs::exists(ds.image_dir)) return;
  if (fs::equivalent(ds.image_dir, dest, ec)) return;
  for (const auto& ann : ds.annotations) {
    const auto src = ds.image_path(ann.image_id);
    if (fs::exists(src)) {
      fs::copy_file(src, dest / src.filename(), fs::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy " + src.string() + ": " + ec.message());
    }
  }
}

StatsTable dataset_stats(const Dataset& ds) {
  StatsTable t;
  t.images = ds.annotations.size();
  for (const auto& ann : ds.annotations) {
    t.positives += ann.positives.size();
    t.instances += ann.instances.size();
    std::set<BBox> boxes;
    for (const auto& inst : ann.instances) {
      boxes.insert(inst.human_box);
      boxes.insert(inst.object_box);
    }
    t.boxes += boxes.size();
  }
  if (t.positives > 0) {
    t.instances_per_positive = static_cast<double>(t.instances) / static_cast<double>(t.positives);
    t.boxes_per_positive = static_cast<double>(t.boxes) / static_cast<double>(t.positives);
  }
  return t;
}

std::vector<std::size_t> instance_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.taxonomy.num_classes()), 0);
  for (const auto& ann : ds.annotations) {
    for (const auto& inst : ann.instances) ++counts.at(static_cast<std::size_t>(inst.hoi_id));
  }
  return counts;
}

RareSplit rare_split(const Dataset& train, int threshold) {
  if (threshold < 1) throw PreconditionError("rare_split: threshold must be >= 1");
  const auto counts = instance_counts(train);
  RareSplit split;
  for (std::size_t id = 0; id < counts.size(); ++id) {
    (counts[id] < static_cast<std::size_t>(threshold) ? split.rare : split.non_rare)
        .insert(static_cast<HoiId>(id));
  }
  return split;
}

std::string serialize_detections(const std::vector<Detection>& detections) {
  std::string out(kDetectionsHeader);
  out += '\n';
  for (const auto& d : detections) {
    out += d.image_id + "\t" + d.category + "\t" + text::format_box(d.box) + "\t" +
           text::format_double(d.score) + "\n";
  }
  return out;
}

std::vector<Detection> load_detections(const fs::path& path) {
  const auto lines = text::read_lines(path);
  text::expect_header(lines, kDetectionsHeader, path);
  std::vector<Detection> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 4) {
      throw ParseError(text::where(path, i + 1, "expected 4 tab-separated fields"));
    }
    const auto ctx = text::where(path, i + 1, "detection");
    out.push_back({std::string(f[0]), std::string(f[1]), text::parse_box(f[2], ctx + " field box"),
                   text::parse_double(f[3], ctx + " field score")});
  }
  return out;
}

void save_detections(const std::vector<Detection>& detections, const fs::path& path) {
  text::write_file(path, serialize_detections(detections));
}

void validate_detections(const std::vector<Detection>& detections, const Taxonomy& taxonomy) {
  for (const auto& d : detections) {
    if (d.category != kPersonCategory && !taxonomy.has_object_category(d.category)) {
      throw ValidationError("image '" + d.image_id + "': unknown detection category '" +
                            d.category + "'");
    }
    if (!d.box.is_valid()) {
      throw ValidationError("image '" + d.image_id + "': degenerate detection box " +
                            text::format_box(d.box));
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError("image '" + d.image_id + "': detection score outside [0,1]");
    }
  }
}

}  // namespace hoidet
