#include <doctest.h>

#include "hoidet/errors.hpp"
#include "hoidet/proposals.hpp"
#include "hoidet/synth.hpp"
#include "test_util.hpp"

using namespace hoidet;

namespace {

Taxonomy with_person() {
  return Taxonomy({{0, "ride", "bicycle"}, {1, "hug", "person"}});
}

std::vector<Detection> grid(const std::string& image, const std::string& cat, int n, double y) {
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({image, cat, {3.0 * i, y, 3.0 * i + 2, y + 2}, 0.1 + 0.05 * i});
  }
  return out;
}

}  // namespace

TEST_SUITE("proposals") {

TEST_CASE("cross product per category") {
  auto dets = grid("a", "person", 10, 0);
  auto bikes = grid("a", "bicycle", 10, 10);
  dets.insert(dets.end(), bikes.begin(), bikes.end());
  const auto props = generate_proposals(dets, 10, 10, with_person());
  CHECK(props.group("a", "bicycle").size() == 100);
  CHECK(props.group("a", "person").size() == 90);  // self-pairs excluded
}

TEST_CASE("three persons pair with each other six ways") {
  const auto props = generate_proposals(grid("a", "person", 3, 0), 10, 10, with_person());
  CHECK(props.group("a", "person").size() == 6);
  for (const auto& p : props.all()) CHECK_FALSE(p.human == p.object);
}

TEST_CASE("no humans, no proposals") {
  const auto props = generate_proposals(grid("a", "bicycle", 4, 0), 10, 10, with_person());
  CHECK(props.empty());
}

TEST_CASE("top-k ranking and tie-break") {
  std::vector<Detection> dets{{"a", "person", {5, 0, 6, 1}, 0.5}, {"a", "person", {1, 0, 2, 1}, 0.5},
                              {"a", "person", {0, 0, 1, 1}, 0.9}, {"a", "bicycle", {0, 5, 1, 6}, 0.3}};
  const auto props = generate_proposals(dets, 2, 10, with_person());
  const auto g = props.group("a", "bicycle");
  REQUIRE(g.size() == 2);
  CHECK(g[0].human.box.x1 == 0);
  CHECK(g[1].human.box.x1 == 1);
  CHECK_THROWS_AS((void)generate_proposals(dets, 0, 1, with_person()), PreconditionError);
}

TEST_CASE("serialization round trip and header") {
  testutil::TempDir dir;
  auto dets = grid("b", "person", 2, 0);
  auto more = grid("a", "bicycle", 2, 10);
  auto hum = grid("a", "person", 2, 0);
  dets.insert(dets.end(), more.begin(), more.end());
  dets.insert(dets.end(), hum.begin(), hum.end());
  const auto props = generate_proposals(dets, 10, 10, with_person());
  save_proposals(props, dir / "p.tsv");
  CHECK(load_proposals(dir / "p.tsv", with_person()) == props);
  CHECK(testutil::slurp(dir / "p.tsv").rfind(std::string(kProposalsHeader), 0) == 0);
  CHECK(props.image_ids() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("output does not depend on threads") {
  const auto cfg = synth::separable_benchmark(3);
  const auto gen = synth::generate(cfg);
  const auto dets = synth::corrupt_detections(synth::scene_detections(gen.train),
                                              synth::default_noise(4), gen.train.dataset);
  const auto one = generate_proposals(dets, 10, 10, gen.train.dataset.taxonomy, 1);
  const auto four = generate_proposals(dets, 10, 10, gen.train.dataset.taxonomy, 4);
  CHECK(serialize_proposals(one) == serialize_proposals(four));
}

TEST_CASE("recall: perfect, empty and monotone") {
  auto cfg = synth::default_benchmark(5);
  cfg.train_images = 0;
  cfg.test_images = 60;
  const auto gen = synth::generate(cfg);
  const auto& ds = gen.test.dataset;
  const auto perfect = generate_proposals(synth::perfect_detections(ds), 10, 10, ds.taxonomy);
  CHECK(*proposal_recall(perfect, ds).mean_full == 1.0);
  CHECK(*proposal_recall(ProposalSet{}, ds).mean_full == 0.0);

  const auto noisy = synth::corrupt_detections(synth::scene_detections(gen.test), synth::default_noise(6), ds);
  double prev = -1.0;
  for (int top : {1, 2, 5, 10}) {
    const double r = *proposal_recall(generate_proposals(noisy, top, top, ds.taxonomy), ds).mean_full;
    CHECK(r >= prev);
    prev = r;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("class without instances is N/A") {
  const auto ds = testutil::tiny_dataset();
  const auto r = proposal_recall(ProposalSet{}, ds);
  CHECK_FALSE(r.per_class[2].has_value());
  CHECK(r.n_gt[2] == 0);
}

}  // TEST_SUITE
