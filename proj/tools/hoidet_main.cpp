// hoidet: command-line entry point for every pipeline stage.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hoidet/annotation/server.hpp"
#include "hoidet/core_model.hpp"
#include "hoidet/errors.hpp"
#include "hoidet/eval/evaluator.hpp"
#include "hoidet/eval/ttest.hpp"
#include "hoidet/image_cache.hpp"
#include "hoidet/interaction_pattern.hpp"
#include "hoidet/manifest.hpp"
#include "hoidet/model.hpp"
#include "hoidet/pipeline.hpp"
#include "hoidet/proposals.hpp"
#include "hoidet/rng.hpp"
#include "hoidet/scoring.hpp"
#include "hoidet/synth.hpp"
#include "hoidet/text_io.hpp"
#include "hoidet/training.hpp"

namespace fs = std::filesystem;
using namespace hoidet;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string num(double v) { return text::format_double(v); }

std::string pct(const std::optional<double>& v) {
  if (!v) return "N/A";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
  return buf;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---- synth ---------------------------------------------------------------

struct SynthOpts {
  std::uint64_t seed = 7;
  std::optional<std::uint64_t> noise_seed;
  std::string out;
  int train_images = -1;
  int test_images = -1;
  int image_size = -1;
  bool separable = false;
  int threads = 1;
};

nlohmann::ordered_json declared_json(const synth::DeclaredCounts& d) {
  return {{"images", d.images}, {"positives", d.positives}, {"instances", d.instances}, {"boxes", d.boxes}};
}

void run_synth(const SynthOpts& o) {
  auto cfg = o.separable ? synth::separable_benchmark(o.seed) : synth::default_benchmark(o.seed);
  if (o.train_images >= 0) cfg.train_images = o.train_images;
  if (o.test_images >= 0) cfg.test_images = o.test_images;
  if (o.image_size > 0) cfg.image_size = o.image_size;
  const std::uint64_t noise_seed = o.noise_seed.value_or(o.seed);
  const fs::path out(o.out);

  RunManifest m;
  m.command = "synth";
  m.config = {{"preset", o.separable ? "separable" : "default"},
              {"train_images", std::to_string(cfg.train_images)},
              {"test_images", std::to_string(cfg.test_images)},
              {"image_size", std::to_string(cfg.image_size)}};
  m.seeds = {{"seed", o.seed}, {"noise_seed", noise_seed}};
  m.outputs = {(out / "train").string(), (out / "test").string(), (out / "declared.json").string()};
  fs::create_directories(out);
  write_manifest(m, manifest_path(out, true));

  auto gen = synth::generate(cfg, o.threads);
  nlohmann::ordered_json declared;
  for (auto* split : {&gen.train, &gen.test}) {
    const std::string name(to_string(split->dataset.split));
    const fs::path root = out / name;
    synth::write_split(*split, root, o.threads);
    const auto perfect = synth::perfect_detections(split->dataset);
    save_detections(perfect, root / "detections_perfect.tsv");
    const auto scene = synth::scene_detections(*split);
    const std::uint64_t s = mix_seed(noise_seed, split->dataset.split == Split::kTrain ? 0 : 1);
    save_detections(synth::corrupt_detections(scene, synth::default_noise(s), split->dataset),
                    root / "detections.tsv");
    declared[name] = declared_json(split->declared);
  }
  text::write_file(out / "declared.json", declared.dump(2) + "\n");
  std::cout << "wrote " << gen.train.dataset.annotations.size() << " train and "
            << gen.test.dataset.annotations.size() << " test images to " << out.string() << "\n";
}

// ---- stats ---------------------------------------------------------------

std::string stats_row(const std::string& name, const StatsTable& t) {
  return name + "\t" + std::to_string(t.images) + "\t" + std::to_string(t.positives) + "\t" +
         std::to_string(t.instances) + "\t" + std::to_string(t.boxes) + "\t" +
         num(t.instances_per_positive) + "\t" + num(t.boxes_per_positive) + "\n";
}

void run_stats(const std::string& root_arg) {
  const fs::path root(root_arg);
  std::string out = "split\timages\tpositives\tinstances\tboxes\tinstances_per_positive\tboxes_per_positive\n";
  if (fs::exists(root / kTaxonomyFile)) {
    const auto ds = load_dataset(root);
    out += stats_row(std::string(to_string(ds.split)), dataset_stats(ds));
  } else {
    bool any = false;
    for (const char* split : {"train", "test"}) {
      if (!fs::exists(root / split / kTaxonomyFile)) continue;
      const auto ds = load_dataset(root / split);
      out += stats_row(split, dataset_stats(ds));
      any = true;
    }
    if (!any) throw UsageError("no dataset root at " + root.string());
  }
  std::cout << out;
}

// ---- propose / recall ----------------------------------------------------

std::string recall_table(const std::vector<std::pair<std::string, RecallReport>>& rows) {
  std::string out = "HOIDET-RECALL v1\nsetting\tfull\trare\tnon_rare\n";
  for (const auto& [name, r] : rows) {
    out += name + "\t" + pct(r.mean_full) + "\t" + pct(r.mean_rare) + "\t" + pct(r.mean_non_rare) + "\n";
  }
  return out;
}

struct ProposeOpts {
  std::string dataset;
  std::string detections;
  std::string out;
  int top = -1;
  int top_humans = kDefaultTopHumans;
  int top_objects = kDefaultTopObjects;
  int threads = 1;
};

void run_propose(ProposeOpts o) {
  if (o.top > 0) o.top_humans = o.top_objects = o.top;
  if (o.top_humans < 1 || o.top_objects < 1) throw PreconditionError("top counts must be >= 1");
  const auto ds = load_dataset(o.dataset);
  const auto dets = load_detections(o.detections);
  validate_detections(dets, ds.taxonomy);
  RunManifest m;
  m.command = "propose";
  m.config = {{"top_humans", std::to_string(o.top_humans)}, {"top_objects", std::to_string(o.top_objects)}};
  m.inputs = {o.dataset, o.detections};
  m.outputs = {o.out};
  write_manifest(m, manifest_path(o.out, false));
  const auto props = generate_proposals(dets, o.top_humans, o.top_objects, ds.taxonomy, o.threads);
  ensure_parent(o.out);
  save_proposals(props, o.out);
  const std::string name = "top" + std::to_string(o.top_humans) + "x" + std::to_string(o.top_objects);
  std::cout << recall_table({{name, proposal_recall(props, ds)}});
}

void run_recall(const std::string& dataset, const std::string& proposals, double iou_thresh,
                int rare_threshold) {
  const auto ds = load_dataset(dataset);
  const auto props = load_proposals(proposals, ds.taxonomy);
  const auto r = proposal_recall(props, ds, iou_thresh, rare_threshold);
  std::string out = recall_table({{fs::path(proposals).filename().string(), r}});
  out += "hoi_id\tn_gt\trecall\n";
  for (std::size_t i = 0; i < r.per_class.size(); ++i) {
    out += std::to_string(i) + "\t" + std::to_string(r.n_gt[i]) + "\t" + pct(r.per_class[i]) + "\n";
  }
  std::cout << out;
}

// ---- train ---------------------------------------------------------------

struct TrainOpts {
  std::string dataset;
  std::string proposals;
  std::string out;
  std::string variant = "ho+ip1-conv";
  int patch_size = 64;
  int ip_size = kDefaultPatternSize;
  TrainConfig cfg;
};

void run_train(TrainOpts o) {
  const auto ds = load_dataset(o.dataset);
  const auto props = load_proposals(o.proposals, ds.taxonomy);
  o.cfg.validate();
  const auto config = StreamConfig::from_variant(o.variant, o.patch_size, o.ip_size);
  const fs::path loss_path = fs::path(o.out).string() + ".loss.tsv";
  RunManifest m;
  m.command = "train";
  m.config = {{"variant", config.variant_name()},
              {"patch_size", std::to_string(o.patch_size)},
              {"ip_size", std::to_string(o.ip_size)},
              {"base_lr", num(o.cfg.base_lr)},
              {"lr_decay", num(o.cfg.lr_decay)},
              {"momentum", num(o.cfg.momentum)},
              {"phase1_iterations", std::to_string(o.cfg.phase1_iterations)},
              {"phase2_iterations", std::to_string(o.cfg.phase2_iterations)},
              {"images_per_batch", std::to_string(o.cfg.images_per_batch)},
              {"proposals_per_image", std::to_string(o.cfg.proposals_per_image)}};
  m.seeds = {{"seed", o.cfg.seed}, {"init_seed", init_seed(o.cfg)}};
  m.inputs = {o.dataset, o.proposals};
  m.outputs = {o.out, loss_path.string()};
  write_manifest(m, manifest_path(o.out, false));

  std::set<std::string> needed;
  const bool needs_pixels = config.has(StreamKind::kHuman) || config.has(StreamKind::kObject) ||
                            config.has(StreamKind::kUnion);
  if (needs_pixels) {
    for (const auto& id : props.image_ids()) needed.insert(id);
  }
  const ImageCache images = needs_pixels ? ImageCache::load(ds, o.cfg.threads, needed) : ImageCache{};
  for (const auto& [id, err] : images.failures()) {
    throw IoError("image '" + id + "': " + err);
  }
  const auto progress = [&](int it, double loss) {
    if ((it + 1) % 100 == 0) std::cerr << "iteration " << it + 1 << " loss " << loss << "\n";
  };
  const auto trained = train_variant({o.variant, o.patch_size, o.ip_size}, {&ds, &props, &images}, o.cfg, progress);
  for (const auto& w : trained.result.warnings) std::cerr << "warning: " << w << "\n";
  ensure_parent(o.out);
  save_model(trained.model, o.out);
  std::string curve = "iteration\tloss\n";
  for (std::size_t i = 0; i < trained.result.loss_curve.size(); ++i) {
    curve += std::to_string(i) + "\t" + num(trained.result.loss_curve[i]) + "\n";
  }
  text::write_file(loss_path, curve);
  std::cout << "trained " << config.variant_name() << " (" << trained.model.param_count()
            << " parameters) -> " << o.out << "\n";
}

// ---- score ---------------------------------------------------------------

struct ScoreOpts {
  std::string dataset;
  std::string proposals;
  std::string model;
  std::string out;
  std::string stream;
  bool random = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

void run_score(const ScoreOpts& o) {
  const auto ds = load_dataset(o.dataset);
  const auto props = load_proposals(o.proposals, ds.taxonomy);
  RunManifest m;
  m.command = "score";
  m.inputs = {o.dataset, o.proposals};
  m.outputs = {o.out};
  if (o.random) {
    m.config = {{"method", "random"}};
    m.seeds = {{"seed", o.seed}};
    write_manifest(m, manifest_path(o.out, false));
    ensure_parent(o.out);
    save_scores(baseline_random(props, ds.taxonomy, o.seed), o.out);
    return;
  }
  if (o.model.empty()) throw UsageError("score needs --model or --random");
  const auto model = load_model(o.model);
  std::optional<StreamKind> only;
  if (!o.stream.empty()) only = parse_stream_kind(o.stream);
  m.config = {{"method", "model"}, {"stream", o.stream.empty() ? "all" : o.stream}};
  m.inputs.push_back(o.model);
  write_manifest(m, manifest_path(o.out, false));
  std::set<std::string> needed;
  for (const auto& id : props.image_ids()) needed.insert(id);
  const auto images = ImageCache::load(ds, o.threads, needed);
  const auto result = score_all(model, props, ds.taxonomy, images, o.threads, only);
  for (const auto& [id, err] : result.errors) std::cerr << "error: image " << id << ": " << err << "\n";
  ensure_parent(o.out);
  save_scores(result.scored, o.out);
}

// ---- eval ----------------------------------------------------------------

struct EvalOpts {
  std::string dataset;
  std::string train;
  std::vector<std::string> scores;
  std::string setting = "both";
  int rare_threshold = kDefaultRareThreshold;
  std::string ap = "all-points";
  std::string out;
  std::string per_class;
  int threads = 1;
};

void run_eval(const EvalOpts& o) {
  const auto test = load_dataset(o.dataset);
  const auto train = load_dataset(o.train);
  if (!(train.taxonomy == test.taxonomy)) throw ValidationError("train and test taxonomies differ");
  const auto split = rare_split(train, o.rare_threshold);
  const auto mode = eval::parse_ap_mode(o.ap);
  const bool want_default = o.setting == "both" || o.setting == "default";
  const bool want_known = o.setting == "both" || o.setting == "known-object";
  if (!want_default && !want_known) throw UsageError("--setting must be default, known-object or both");
  if (!o.per_class.empty() && o.scores.size() != 1) {
    throw UsageError("--per-class needs exactly one --scores input");
  }

  std::vector<std::pair<std::string, std::string>> inputs;
  for (const auto& s : o.scores) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      inputs.emplace_back(fs::path(s).stem().string(), s);
    } else {
      inputs.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!fs::exists(inputs.back().second)) throw UsageError("missing input " + inputs.back().second);
  }

  RunManifest m;
  m.command = "eval";
  m.config = {{"setting", o.setting}, {"rare_threshold", std::to_string(o.rare_threshold)}, {"ap", o.ap}};
  m.inputs = {o.dataset, o.train};
  for (const auto& [name, path] : inputs) m.inputs.push_back(name + "=" + path);
  if (!o.out.empty()) m.outputs.push_back(o.out);
  if (!o.per_class.empty()) m.outputs.push_back(o.per_class);
  if (!o.out.empty()) write_manifest(m, manifest_path(o.out, false));

  std::vector<std::pair<eval::EvalReport, eval::EvalReport>> reports;
  reports.reserve(inputs.size());
  for (const auto& [name, path] : inputs) {
    const auto dets = eval::flatten(load_scores(path, test.taxonomy));
    reports.emplace_back(
        eval::evaluate(dets, test, eval::EvalSetting::kDefault, split, mode, kMatchIoU, o.threads),
        eval::evaluate(dets, test, eval::EvalSetting::kKnownObject, split, mode, kMatchIoU, o.threads));
  }
  std::vector<eval::NamedReport> rows;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    rows.push_back({inputs[i].first, want_default ? &reports[i].first : nullptr,
                    want_known ? &reports[i].second : nullptr});
  }
  const auto table = eval::format_table(rows);
  if (!o.out.empty()) {
    ensure_parent(o.out);
    text::write_file(o.out, table);
  }
  if (!o.per_class.empty()) {
    ensure_parent(o.per_class);
    text::write_file(o.per_class, eval::format_per_class_csv(test.taxonomy, split, reports[0].first,
                                                             reports[0].second));
  }
  std::cout << table;
}

// ---- ttest ---------------------------------------------------------------

void run_ttest(const std::string& a_path, const std::string& b_path, const std::string& setting,
               const std::string& subset) {
  const auto a = eval::load_per_class_csv(a_path);
  const auto b = eval::load_per_class_csv(b_path);
  if (a.ap_default.size() != b.ap_default.size()) {
    throw ValidationError("per-class files cover different class counts");
  }
  const bool known = setting == "known-object";
  if (!known && setting != "default") throw UsageError("--setting must be default or known-object");
  const auto& va = known ? a.ap_known : a.ap_default;
  const auto& vb = known ? b.ap_known : b.ap_default;
  std::vector<double> xa;
  std::vector<double> xb;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const auto id = static_cast<HoiId>(i);
    if (subset == "rare" && !a.rare.contains(id)) continue;
    if (subset == "non-rare" && !a.non_rare.contains(id)) continue;
    if (subset != "full" && subset != "rare" && subset != "non-rare") {
      throw UsageError("--subset must be full, rare or non-rare");
    }
    if (!va[i] || !vb[i]) continue;  // AP undefined for this class in either run
    xa.push_back(*va[i]);
    xb.push_back(*vb[i]);
  }
  const auto r = eval::paired_ttest(xa, xb);
  std::cout << "HOIDET-TTEST v1\npair\tn\tt\tp\n"
            << fs::path(a_path).stem().string() << " vs " << fs::path(b_path).stem().string() << "\t"
            << xa.size() << "\t" << num(r.t) << "\t" << num(r.p) << "\n";
}

// ---- avg-ip --------------------------------------------------------------

void run_avg_ip(const std::string& dataset, const std::string& out, int size, const std::string& mode,
                int cell_px) {
  const auto ds = load_dataset(dataset);
  const auto pm = parse_pair_mode(mode);
  if (!is_pattern(pm)) throw UsageError("--mode must be ip0 or ip1");
  std::vector<HOIInstance> all;
  for (const auto& ann : ds.annotations) all.insert(all.end(), ann.instances.begin(), ann.instances.end());
  RunManifest m;
  m.command = "avg-ip";
  m.config = {{"size", std::to_string(size)}, {"mode", mode}, {"cell_px", std::to_string(cell_px)}};
  m.inputs = {dataset};
  m.outputs = {out};
  fs::create_directories(out);
  write_manifest(m, manifest_path(out, true));
  for (const auto& c : ds.taxonomy.categories()) {
    try {
      const auto avg = average_ip(all, c.id, size, is_padded(pm));
      const std::string stem = "class_" + std::to_string(c.id) + "_" + c.verb + "_" + c.object_category;
      write_average_png(avg.human, size, cell_px, fs::path(out) / (stem + "_human.png"));
      write_average_png(avg.object, size, cell_px, fs::path(out) / (stem + "_object.png"));
    } catch (const EmptyClassError&) {
      std::cerr << "skipped class " << c.id << ": no instances\n";
    }
  }
}

// ---- serve ---------------------------------------------------------------

void run_serve(const std::string& dataset, const std::string& journal, const std::string& host, int port,
               double lease_minutes) {
  auto ds = load_dataset(dataset);
  annotation::TaskStore store(std::move(ds), journal, annotation::system_clock(),
                              static_cast<std::int64_t>(lease_minutes * 60000.0));
  annotation::AnnotationServer server(store);
  std::cerr << "serving " << store.progress().total << " tasks on " << host << ":" << port << "\n";
  server.run(host, port);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-object interaction detection pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("hoidet ") + kToolVersion);

  SynthOpts so;
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark");
  synth_cmd->add_option("--seed", so.seed, "generator seed");
  synth_cmd->add_option("--noise-seed", so.noise_seed, "detection noise seed (defaults to --seed)");
  synth_cmd->add_option("--out", so.out, "output directory")->required();
  synth_cmd->add_option("--train-images", so.train_images);
  synth_cmd->add_option("--test-images", so.test_images);
  synth_cmd->add_option("--image-size", so.image_size);
  synth_cmd->add_flag("--separable", so.separable, "small four-class preset");
  synth_cmd->add_option("--threads", so.threads)->check(CLI::PositiveNumber);

  std::string stats_root;
  auto* stats_cmd = app.add_subcommand("stats", "dataset statistics");
  stats_cmd->add_option("root", stats_root, "dataset root, or a synth output directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  ProposeOpts po;
  auto* propose_cmd = app.add_subcommand("propose", "pair top detections into proposals");
  propose_cmd->add_option("--dataset", po.dataset)->required()->check(CLI::ExistingDirectory);
  propose_cmd->add_option("--detections", po.detections)->required()->check(CLI::ExistingFile);
  propose_cmd->add_option("--out", po.out)->required();
  propose_cmd->add_option("--top", po.top, "sets both top counts");
  propose_cmd->add_option("--top-humans", po.top_humans);
  propose_cmd->add_option("--top-objects", po.top_objects);
  propose_cmd->add_option("--threads", po.threads)->check(CLI::PositiveNumber);

  std::string rc_dataset;
  std::string rc_props;
  double rc_iou = kCoverageIoU;
  int rc_rare = kDefaultRareThreshold;
  auto* recall_cmd = app.add_subcommand("recall", "proposal recall table");
  recall_cmd->add_option("--dataset", rc_dataset)->required()->check(CLI::ExistingDirectory);
  recall_cmd->add_option("--proposals", rc_props)->required()->check(CLI::ExistingFile);
  recall_cmd->add_option("--iou", rc_iou);
  recall_cmd->add_option("--rare-threshold", rc_rare);

  TrainOpts to;
  auto* train_cmd = app.add_subcommand("train", "train a model variant");
  train_cmd->add_option("--dataset", to.dataset)->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--proposals", to.proposals)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", to.out, "checkpoint path")->required();
  train_cmd->add_option("--variant", to.variant, "e.g. ho, ho+ip1-conv+s, union, score-linear");
  train_cmd->add_option("--patch-size", to.patch_size);
  train_cmd->add_option("--ip-size", to.ip_size);
  train_cmd->add_option("--lr", to.cfg.base_lr);
  train_cmd->add_option("--lr-decay", to.cfg.lr_decay);
  train_cmd->add_option("--momentum", to.cfg.momentum);
  train_cmd->add_option("--iterations", to.cfg.phase1_iterations, "iterations at the base rate");
  train_cmd->add_option("--decay-iterations", to.cfg.phase2_iterations, "iterations at the decayed rate");
  train_cmd->add_option("--images-per-batch", to.cfg.images_per_batch);
  train_cmd->add_option("--seed", to.cfg.seed);
  train_cmd->add_option("--threads", to.cfg.threads)->check(CLI::PositiveNumber);

  ScoreOpts sco;
  auto* score_cmd = app.add_subcommand("score", "score proposals with a model or at random");
  score_cmd->add_option("--dataset", sco.dataset)->required()->check(CLI::ExistingDirectory);
  score_cmd->add_option("--proposals", sco.proposals)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--model", sco.model)->check(CLI::ExistingFile);
  score_cmd->add_option("--out", sco.out)->required();
  score_cmd->add_option("--stream", sco.stream, "score with this stream alone");
  score_cmd->add_flag("--random", sco.random, "uniform random baseline");
  score_cmd->add_option("--seed", sco.seed);
  score_cmd->add_option("--threads", sco.threads)->check(CLI::PositiveNumber);

  EvalOpts eo;
  auto* eval_cmd = app.add_subcommand("eval", "mAP tables");
  eval_cmd->add_option("--dataset", eo.dataset, "test dataset root")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--train", eo.train, "training root (decides rare classes)")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--scores", eo.scores, "[name=]scores file; repeatable")->required();
  eval_cmd->add_option("--setting", eo.setting, "default, known-object or both");
  eval_cmd->add_option("--rare-threshold", eo.rare_threshold);
  eval_cmd->add_option("--ap", eo.ap, "all-points or 11-point");
  eval_cmd->add_option("--out", eo.out, "table file");
  eval_cmd->add_option("--per-class", eo.per_class, "per-class CSV");
  eval_cmd->add_option("--threads", eo.threads)->check(CLI::PositiveNumber);

  std::string tt_a;
  std::string tt_b;
  std::string tt_setting = "default";
  std::string tt_subset = "full";
  auto* ttest_cmd = app.add_subcommand("ttest", "paired t-test on two per-class CSVs");
  ttest_cmd->add_option("--a", tt_a)->required()->check(CLI::ExistingFile);
  ttest_cmd->add_option("--b", tt_b)->required()->check(CLI::ExistingFile);
  ttest_cmd->add_option("--setting", tt_setting);
  ttest_cmd->add_option("--subset", tt_subset);

  std::string ai_dataset;
  std::string ai_out;
  int ai_size = kDefaultPatternSize;
  std::string ai_mode = "ip1";
  int ai_cell = 4;
  auto* avg_cmd = app.add_subcommand("avg-ip", "per-class average Interaction Patterns as PNG");
  avg_cmd->add_option("--dataset", ai_dataset)->required()->check(CLI::ExistingDirectory);
  avg_cmd->add_option("--out", ai_out)->required();
  avg_cmd->add_option("--size", ai_size)->check(CLI::PositiveNumber);
  avg_cmd->add_option("--mode", ai_mode, "ip0 or ip1");
  avg_cmd->add_option("--cell-px", ai_cell)->check(CLI::PositiveNumber);

  std::string sv_dataset;
  std::string sv_journal;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  double sv_lease = 30.0;
  auto* serve_cmd = app.add_subcommand("serve", "annotation task server");
  serve_cmd->add_option("--dataset", sv_dataset)->required()->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--journal", sv_journal)->required();
  serve_cmd->add_option("--host", sv_host);
  serve_cmd->add_option("--port", sv_port);
  serve_cmd->add_option("--lease-minutes", sv_lease)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*synth_cmd) run_synth(so);
    if (*stats_cmd) run_stats(stats_root);
    if (*propose_cmd) run_propose(po);
    if (*recall_cmd) run_recall(rc_dataset, rc_props, rc_iou, rc_rare);
    if (*train_cmd) run_train(to);
    if (*score_cmd) run_score(sco);
    if (*eval_cmd) run_eval(eo);
    if (*ttest_cmd) run_ttest(tt_a, tt_b, tt_setting, tt_subset);
    if (*avg_cmd) run_avg_ip(ai_dataset, ai_out, ai_size, ai_mode, ai_cell);
    if (*serve_cmd) run_serve(sv_dataset, sv_journal, sv_host, sv_port, sv_lease);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: validation: " << one_line(e.what()) << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: validation: " << one_line(e.what()) << "\n";
    return kExitValidation;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: diverged: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
