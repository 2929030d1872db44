#include "hoidet/pipeline.hpp"

#include "hoidet/errors.hpp"
#include "hoidet/rng.hpp"

namespace hoidet {

namespace {

void require(const SplitData& d, const char* what) {
  if (d.dataset == nullptr || d.proposals == nullptr || d.images == nullptr) {
    throw PreconditionError(std::string(what) + ": incomplete split data");
  }
}

}  // namespace

std::uint64_t init_seed(const TrainConfig& cfg) { return mix_seed(cfg.seed, 0x1417ULL); }

TrainedModel train_variant(const ModelSpec& spec, const SplitData& train, const TrainConfig& cfg,
                           const ProgressFn& progress) {
  require(train, "train");
  cfg.validate();
  const auto config = StreamConfig::from_variant(spec.variant, spec.patch_size, spec.ip_size);
  TrainedModel out{HORCNNModel(config, train.dataset->taxonomy.num_classes()), {}};
  out.model.init(init_seed(cfg));
  const SamplerIndex index(*train.dataset, *train.proposals);
  out.result = hoidet::train(out.model, index, *train.proposals, *train.images, cfg, progress);
  return out;
}

std::vector<ScoredProposal> baseline_random(const ProposalSet& props, const Taxonomy& taxonomy,
                                            std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xBA5EULL));
  std::vector<ScoredProposal> out;
  out.reserve(props.size());
  for (const auto& p : props.all()) {
    ScoredProposal sp{p.image_id, p.object_category, p.human.box, p.object.box, {}};
    for (HoiId id : taxonomy.classes_of(p.object_category)) sp.probs.emplace_back(id, rng.uniform());
    out.push_back(std::move(sp));
  }
  return out;
}

TrainedModel baseline_union(const SplitData& train, const TrainConfig& cfg, int patch_size) {
  return train_variant({"union", patch_size, kDefaultPatternSize}, train, cfg);
}

TrainedModel baseline_score_linear(const SplitData& train, const TrainConfig& cfg) {
  return train_variant({"score-linear", 64, kDefaultPatternSize}, train, cfg);
}

eval::EvalReport stream_eval(const HORCNNModel& model, StreamKind kind, const SplitData& test,
                             eval::EvalSetting setting, const RareSplit& split, int threads) {
  require(test, "stream_eval");
  const auto scored =
      score_all(model, *test.proposals, test.dataset->taxonomy, *test.images, threads, kind);
  if (!scored.errors.empty()) {
    throw IoError("stream_eval: image '" + scored.errors.front().first +
                  "': " + scored.errors.front().second);
  }
  const auto dets = eval::flatten(scored.scored);
  return eval::evaluate(dets, *test.dataset, setting, split, eval::ApMode::kAllPoints, kMatchIoU,
                        threads);
}

std::vector<std::pair<StreamKind, eval::EvalReport>> per_stream_eval(const HORCNNModel& model,
                                                                     const SplitData& test,
                                                                     eval::EvalSetting setting,
                                                                     const RareSplit& split,
                                                                     int threads) {
  std::vector<std::pair<StreamKind, eval::EvalReport>> out;
  for (const auto& s : model.streams()) {
    out.emplace_back(s.kind, stream_eval(model, s.kind, test, setting, split, threads));
  }
  return out;
}

}  // namespace hoidet
