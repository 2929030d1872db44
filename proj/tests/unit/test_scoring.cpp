#include <doctest.h>

#include <cmath>

#include "hoidet/errors.hpp"
#include "hoidet/pipeline.hpp"
#include "hoidet/scoring.hpp"
#include "test_util.hpp"

using namespace hoidet;

namespace {

struct Fixture {
  Dataset ds = testutil::tiny_dataset();
  ProposalSet props;
  ImageCache images;
  Fixture() {
    const std::vector<Detection> dets{{"a", "person", {2, 2, 10, 20}, 0.9}, {"a", "bicycle", {4, 15, 14, 28}, 0.8},
                                      {"a", "ball", {30, 1, 35, 6}, 0.2}, {"b", "person", {1, 1, 5, 5}, 0.7},
                                      {"b", "ball", {6, 6, 9, 9}, 0.6}};
    props = generate_proposals(dets, 10, 10, ds.taxonomy);
    Image img(40, 30);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(i * 7);
    images.insert("a", img);
    images.insert("b", img);
  }
};

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("zero weights give one half, restricted to the category's classes") {
  Fixture f;
  HORCNNModel model(StreamConfig::from_variant("ho+ip1-conv", 8, 8), 3);
  model.zero_params();
  const auto r = score_all(model, f.props, f.ds.taxonomy, f.images);
  REQUIRE(r.scored.size() == f.props.size());
  for (const auto& s : r.scored) {
    const auto& ids = f.ds.taxonomy.classes_of(s.object_category);
    REQUIRE(s.probs.size() == ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      CHECK(s.probs[i].first == ids[i]);
      CHECK(s.probs[i].second == 0.5);
    }
  }
}

TEST_CASE("random weights stay inside (0, 1) and threads do not matter") {
  Fixture f;
  HORCNNModel model(StreamConfig::from_variant("ho+ip1-conv+s", 8, 8), 3);
  model.init(17);
  const auto one = score_all(model, f.props, f.ds.taxonomy, f.images, 1);
  const auto four = score_all(model, f.props, f.ds.taxonomy, f.images, 4);
  CHECK(serialize_scores(one.scored) == serialize_scores(four.scored));
  for (const auto& s : one.scored) {
    for (const auto& [k, p] : s.probs) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("missing raster is reported per image") {
  Fixture f;
  ImageCache partial;
  partial.insert("a", *f.images.find("a"));
  HORCNNModel model(StreamConfig::from_variant("ho", 8, 8), 3);
  model.init(1);
  const auto r = score_all(model, f.props, f.ds.taxonomy, partial);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].first == "b");
  for (const auto& s : r.scored) CHECK(s.image_id == "a");
}

TEST_CASE("scores file round trip") {
  Fixture f;
  testutil::TempDir dir;
  const auto scored = baseline_random(f.props, f.ds.taxonomy, 3);
  save_scores(scored, dir / "s.tsv");
  CHECK(load_scores(dir / "s.tsv", f.ds.taxonomy) == scored);
  CHECK(baseline_random(f.props, f.ds.taxonomy, 3) == scored);
  CHECK_FALSE(baseline_random(f.props, f.ds.taxonomy, 4) == scored);
  std::size_t entries = 0;
  for (const auto& s : scored) entries += s.probs.size();
  std::size_t expected = 0;
  for (const auto& p : f.props.all()) expected += f.ds.taxonomy.classes_of(p.object_category).size();
  CHECK(entries == expected);
}

TEST_CASE("single-stream scoring and per-stream evaluation") {
  Fixture f;
  HORCNNModel model(StreamConfig::from_variant("ho+ip1-conv", 8, 8), 3);
  model.init(2);
  const auto full = score_all(model, f.props, f.ds.taxonomy, f.images);
  const auto h = score_all(model, f.props, f.ds.taxonomy, f.images, 1, StreamKind::kHuman);
  const auto o = score_all(model, f.props, f.ds.taxonomy, f.images, 1, StreamKind::kObject);
  const auto p = score_all(model, f.props, f.ds.taxonomy, f.images, 1, StreamKind::kPairwise);
  auto logit = [](double q) { return std::log(q / (1 - q)); };
  for (std::size_t i = 0; i < full.scored.size(); ++i) {
    for (std::size_t j = 0; j < full.scored[i].probs.size(); ++j) {
      const double sum = logit(h.scored[i].probs[j].second) + logit(o.scored[i].probs[j].second) +
                         logit(p.scored[i].probs[j].second);
      CHECK(logit(full.scored[i].probs[j].second) == doctest::Approx(sum).epsilon(1e-4));
    }
  }
  f.ds.split = Split::kTest;
  const SplitData test{&f.ds, &f.props, &f.images};
  const auto per = per_stream_eval(model, test, eval::EvalSetting::kDefault, {{}, {0, 1, 2}});
  CHECK(per.size() == 3);
  CHECK_THROWS_AS((void)stream_eval(model, StreamKind::kUnion, test, eval::EvalSetting::kDefault, {}),
                  PreconditionError);
}

TEST_CASE("union of identical boxes sees the box crop") {
  Fixture f;
  HORCNNModel uni(StreamConfig::from_variant("union", 8, 8), 3);
  HORCNNModel hum(StreamConfig::from_variant("human", 8, 8), 3);
  uni.init(4);
  hum.set_flat_params(uni.flat_params());
  const BBox b{3, 4, 20, 25};
  HORCNNModel::Workspace ws;
  const ProposalInput in{f.images.find("a"), b, b, 0.5, 0.5};
  CHECK(uni.forward(in, ws).scores == hum.forward(in, ws).scores);
}

}  // TEST_SUITE
