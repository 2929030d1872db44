#include "hoidet/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hoidet/errors.hpp"
#include "hoidet/parallel.hpp"

namespace hoidet {

void TrainConfig::validate() const {
  if (phase1_iterations < 0 || phase2_iterations < 0) {
    throw PreconditionError("iteration counts must be >= 0");
  }
  if (images_per_batch < 1 || proposals_per_image < 1) {
    throw PreconditionError("batch dimensions must be >= 1");
  }
  if (positives_per_image < 0 || type1_negatives < 0 || type2_negatives < 0) {
    throw PreconditionError("per-image sample counts must be >= 0");
  }
  if (positives_per_image + type1_negatives + type2_negatives != proposals_per_image) {
    throw PreconditionError("positives + type-I + type-II must equal proposals_per_image");
  }
  if (!(base_lr >= 0.0) || !(momentum >= 0.0 && momentum < 1.0) || !(lr_decay >= 0.0)) {
    throw PreconditionError("invalid learning-rate schedule or momentum");
  }
}

const char* to_string(SampleSource source) {
  switch (source) {
    case SampleSource::kPositive: return "positive";
    case SampleSource::kTypeI: return "type-I";
    case SampleSource::kTypeII: return "type-II";
    case SampleSource::kResampled: return "resampled";
  }
  return "?";
}

SamplerIndex::SamplerIndex(const Dataset& ds, const ProposalSet& props) {
  const auto k = static_cast<std::size_t>(ds.taxonomy.num_classes());
  const auto& all = props.all();
  labels_.assign(all.size(), std::vector<float>(k, 0.0f));
  best_.assign(all.size(), 0.0);
  for (const auto& ann : ds.annotations) {
    const auto [first, last] = props.image_range(ann.image_id);
    if (first == last) {
      warnings_.push_back("image '" + ann.image_id + "' has no proposals; skipped");
      continue;
    }
    for (std::size_t p = first; p < last; ++p) {
      for (const auto& inst : ann.instances) {
        if (ds.taxonomy.object_of(inst.hoi_id) != all[p].object_category) continue;
        const double m = pair_min_iou(all[p].human.box, all[p].object.box, inst.human_box,
                                      inst.object_box);
        best_[p] = std::max(best_[p], m);
        if (m >= kCoverageIoU) labels_[p][static_cast<std::size_t>(inst.hoi_id)] = 1.0f;
      }
    }
    ImageEntry entry{ann.image_id, first, last, {}};
    for (const auto& category : ds.taxonomy.object_categories()) {
      const bool present = std::any_of(ann.instances.begin(), ann.instances.end(), [&](const auto& i) {
        return ds.taxonomy.object_of(i.hoi_id) == category;
      });
      if (!present) continue;
      CategoryPools pools{category, {}, {}, {}};
      for (std::size_t p = first; p < last; ++p) {
        if (all[p].object_category != category) {
          pools.type2.push_back(p);
        } else if (std::any_of(labels_[p].begin(), labels_[p].end(), [](float y) { return y > 0; })) {
          pools.positives.push_back(p);
        } else if (best_[p] >= kTypeINegativeIoU) {
          pools.type1.push_back(p);
        }
      }
      entry.categories.push_back(std::move(pools));
    }
    images_.push_back(std::move(entry));
  }
}

namespace {

/// Up to `n` distinct elements of `pool` in random order.
std::vector<std::size_t> draw_distinct(const std::vector<std::size_t>& pool, std::size_t n, Rng& rng) {
  std::vector<std::size_t> tmp = pool;
  const std::size_t take = std::min(n, tmp.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.below(tmp.size() - i);
    std::swap(tmp[i], tmp[j]);
  }
  tmp.resize(take);
  return tmp;
}

}  // namespace

std::vector<TrainingSample> sample_image(const SamplerIndex& index, std::size_t image,
                                         const TrainConfig& cfg, Rng& rng) {
  const auto& entry = index.images().at(image);
  static const std::vector<std::size_t> kNone;
  std::vector<std::size_t> everything;
  for (std::size_t p = entry.first; p < entry.last; ++p) everything.push_back(p);

  const std::vector<std::size_t>* positives = &kNone;
  const std::vector<std::size_t>* type1 = &kNone;
  const std::vector<std::size_t>* type2 = &everything;
  if (!entry.categories.empty()) {
    const auto& pools = entry.categories[rng.below(entry.categories.size())];
    positives = &pools.positives;
    type1 = &pools.type1;
    type2 = &pools.type2;
  }

  std::vector<TrainingSample> out;
  auto emit = [&](const std::vector<std::size_t>& picks, SampleSource source) {
    for (std::size_t p : picks) out.push_back({p, index.labels(p), source});
  };
  const auto pos = draw_distinct(*positives, static_cast<std::size_t>(cfg.positives_per_image), rng);
  emit(pos, SampleSource::kPositive);
  const std::size_t need1 = static_cast<std::size_t>(cfg.type1_negatives) +
                            (static_cast<std::size_t>(cfg.positives_per_image) - pos.size());
  const auto neg1 = draw_distinct(*type1, need1, rng);
  emit(neg1, SampleSource::kTypeI);
  const std::size_t need2 = static_cast<std::size_t>(cfg.type2_negatives) + (need1 - neg1.size());
  const auto neg2 = draw_distinct(*type2, need2, rng);
  emit(neg2, SampleSource::kTypeII);
  for (std::size_t i = neg2.size(); i < need2; ++i) {
    const std::size_t p = everything[rng.below(everything.size())];
    out.push_back({p, index.labels(p), SampleSource::kResampled});
  }
  return out;
}

std::vector<TrainingSample> sample_minibatch(const SamplerIndex& index, const TrainConfig& cfg,
                                             Rng& rng) {
  std::vector<std::size_t> ids(index.images().size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto picked = draw_distinct(ids, static_cast<std::size_t>(cfg.images_per_batch), rng);
  std::vector<TrainingSample> batch;
  for (std::size_t img : picked) {
    auto s = sample_image(index, img, cfg, rng);
    std::move(s.begin(), s.end(), std::back_inserter(batch));
  }
  return batch;
}

TrainingDivergedError::TrainingDivergedError(int iteration, double loss)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "training diverged at iteration " << iteration << " (loss " << loss << ")";
        return os.str();
      }()),
      iteration_(iteration) {}

double window_mean(const std::vector<double>& curve, std::size_t first, std::size_t window) {
  const std::size_t last = std::min(curve.size(), first + window);
  if (first >= last) return 0.0;
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i) sum += curve[i];
  return sum / static_cast<double>(last - first);
}

TrainResult train(HORCNNModel& model, const SamplerIndex& index, const ProposalSet& props,
                  const ImageCache& images, const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  TrainResult result;
  result.warnings = index.warnings();
  if (index.images().empty()) throw PreconditionError("train: no training image has proposals");

  const std::size_t n_params = model.param_count();
  std::vector<float> params = model.flat_params();
  std::vector<float> velocity(n_params, 0.0f);
  std::vector<float> grad(n_params, 0.0f);
  const auto units = static_cast<std::size_t>(cfg.images_per_batch);
  std::vector<nn::AlignedVector<float>> unit_grads(units, nn::AlignedVector<float>(n_params, 0.0f));
  std::vector<double> unit_loss(units, 0.0);
  std::vector<HORCNNModel::Workspace> workspaces(units);
  Rng rng(mix_seed(cfg.seed, 0x5A3D));
  const auto& all = props.all();
  const int total = cfg.total_iterations();
  result.loss_curve.reserve(static_cast<std::size_t>(total));

  for (int it = 0; it < total; ++it) {
    const auto batch = sample_minibatch(index, cfg, rng);
    const std::size_t per_image = static_cast<std::size_t>(cfg.proposals_per_image);
    const std::size_t n_units = batch.size() / per_image;
    const double scale = 1.0 / static_cast<double>(batch.size());
    parallel_for(n_units, cfg.threads, [&](std::size_t u) {
      auto& g = unit_grads[u];
      std::fill(g.begin(), g.end(), 0.0f);
      double loss = 0.0;
      for (std::size_t j = u * per_image; j < (u + 1) * per_image; ++j) {
        const auto& p = all[batch[j].proposal];
        ProposalInput in{images.find(p.image_id), p.human.box, p.object.box, p.human.score,
                         p.object.score};
        loss += model.accumulate_gradient(in, batch[j].labels, scale, g, workspaces[u]);
      }
      unit_loss[u] = loss;
    });
    double loss = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0f);
    for (std::size_t u = 0; u < n_units; ++u) {
      loss += unit_loss[u];
      const auto& g = unit_grads[u];
      for (std::size_t i = 0; i < n_params; ++i) grad[i] += g[i];
    }
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss)) throw TrainingDivergedError(it, loss);
    result.loss_curve.push_back(loss);

    const auto lr = static_cast<float>(cfg.lr_at(it));
    const auto mu = static_cast<float>(cfg.momentum);
    for (std::size_t i = 0; i < n_params; ++i) {
      velocity[i] = mu * velocity[i] + lr * grad[i];
      params[i] -= velocity[i];
    }
    model.set_flat_params(params);
    if (progress) progress(it, loss);
  }
  return result;
}

}  // namespace hoidet
