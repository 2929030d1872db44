#include <doctest.h>

#include <fstream>

#include "hoidet/core_model.hpp"
#include "hoidet/errors.hpp"
#include "hoidet/text_io.hpp"
#include "test_util.hpp"

using namespace hoidet;

TEST_SUITE("core") {

TEST_CASE("taxonomy rejects sparse ids and duplicate pairs") {
  CHECK_THROWS_AS(Taxonomy({{1, "ride", "bicycle"}}), ValidationError);
  CHECK_THROWS_AS(Taxonomy({{0, "ride", "bicycle"}, {1, "ride", "bicycle"}}), ValidationError);
  const auto t = testutil::tiny_taxonomy();
  CHECK(t.num_classes() == 3);
  CHECK(t.object_categories() == std::vector<std::string>{"bicycle", "ball"});
  CHECK(t.classes_of("bicycle") == std::vector<HoiId>{0, 1});
  CHECK(t.has_object_category("ball"));
  CHECK_FALSE(t.has_object_category("person"));
}

TEST_CASE("dataset round trip keeps every field") {
  testutil::TempDir dir;
  const auto ds = testutil::tiny_dataset();
  save_dataset(ds, dir.path());
  const auto back = load_dataset(dir.path());
  CHECK(back == ds);
  CHECK(back.annotations[1].invisible == std::set<HoiId>{2});
  CHECK(back.image_dir == dir.path() / kImagesDir);
}

TEST_CASE("empty dataset round trips") {
  testutil::TempDir dir;
  Dataset ds;
  ds.taxonomy = testutil::tiny_taxonomy();
  save_dataset(ds, dir.path());
  CHECK(load_dataset(dir.path()) == ds);
  CHECK(dataset_stats(ds) == StatsTable{});
}

TEST_CASE("validation rejects broken annotations") {
  auto ds = testutil::tiny_dataset();
  SUBCASE("degenerate box") { ds.annotations[0].instances[0].human_box.x2 = 2; }
  SUBCASE("instance label not positive") { ds.annotations[0].positives = {0}; }
  SUBCASE("invisible label with instances") { ds.annotations[0].invisible = {0}; }
  SUBCASE("invisible label not positive") { ds.annotations[2].invisible = {1}; }
  SUBCASE("box outside the image") { ds.annotations[0].instances[0].object_box.y2 = 31; }
  SUBCASE("duplicate image id") { ds.annotations[2].image_id = "a"; }
  SUBCASE("hoi id out of range") { ds.annotations[2].positives = {3}; }
  CHECK_THROWS_AS(validate(ds), ValidationError);
}

TEST_CASE("validation error names the image") {
  auto ds = testutil::tiny_dataset();
  ds.annotations[0].positives = {0};
  try {
    validate(ds);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
}

TEST_CASE("malformed annotation line is a parse error naming the line") {
  testutil::TempDir dir;
  save_dataset(testutil::tiny_dataset(), dir.path());
  {
    std::ofstream out(dir / kAnnotationsFile, std::ios::app);
    out << "{\"image_id\": \"d\", \"width\": \n";
  }
  try {
    (void)load_dataset(dir.path());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":5:") != std::string::npos);
  }
}

TEST_CASE("stats count shared boxes once") {
  const auto t = dataset_stats(testutil::tiny_dataset());
  CHECK(t.images == 3);
  CHECK(t.positives == 3);
  CHECK(t.instances == 2);
  CHECK(t.boxes == 3);
  CHECK(t.instances_per_positive == doctest::Approx(2.0 / 3.0));
  CHECK(t.boxes_per_positive == doctest::Approx(1.0));
}

TEST_CASE("rare split boundary") {
  Dataset ds;
  ds.taxonomy = testutil::tiny_taxonomy();
  auto add = [&](HoiId id, int count) {
    for (int i = 0; i < count; ++i) {
      const std::string name = "i" + std::to_string(id) + "_" + std::to_string(i);
      ds.annotations.push_back({name, 20, 20, {id}, {{name, id, {0, 0, 5, 5}, {5, 5, 10, 10}}}, {}});
    }
  };
  add(0, 9);
  add(1, 10);
  ds.annotations.push_back({"inv", 20, 20, {2}, {}, {2}});
  const auto split = rare_split(ds, 10);
  CHECK(split.rare == std::set<HoiId>{0, 2});
  CHECK(split.non_rare == std::set<HoiId>{1});
  for (int t = 1; t < 15; ++t) {
    const auto s = rare_split(ds, t);
    CHECK(s.rare.size() + s.non_rare.size() == 3);
  }
  CHECK(instance_counts(ds) == std::vector<std::size_t>{9, 10, 0});
}

TEST_CASE("detections file round trip and validation") {
  testutil::TempDir dir;
  std::vector<Detection> dets{{"a", "person", {1, 2, 3, 4}, 0.5}, {"a", "ball", {0.25, 0, 9, 9}, 1.0}};
  save_detections(dets, dir / "d.tsv");
  CHECK(load_detections(dir / "d.tsv") == dets);
  CHECK(testutil::slurp(dir / "d.tsv").rfind(std::string(kDetectionsHeader), 0) == 0);
  validate_detections(dets, testutil::tiny_taxonomy());
  dets.push_back({"a", "kite", {0, 0, 1, 1}, 0.5});
  CHECK_THROWS_AS(validate_detections(dets, testutil::tiny_taxonomy()), ValidationError);
  dets.back() = {"a", "ball", {0, 0, 1, 1}, 1.5};
  CHECK_THROWS_AS(validate_detections(dets, testutil::tiny_taxonomy()), ValidationError);
}

}  // TEST_SUITE
