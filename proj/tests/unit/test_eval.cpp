#include <doctest.h>

#include "hoidet/errors.hpp"
#include "hoidet/eval/evaluator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hoidet;
using eval::ApMode;
using eval::EvalSetting;
using eval::ScoredDetection;

namespace {

Dataset small_test() {
  Dataset ds;
  ds.taxonomy = testutil::tiny_taxonomy();
  ds.split = Split::kTest;
  ds.annotations.push_back({"a", 50, 50, {0}, {{"a", 0, {0, 0, 10, 10}, {10, 10, 20, 20}}}, {}});
  ds.annotations.push_back({"b", 50, 50, {2}, {{"b", 2, {0, 0, 10, 10}, {30, 30, 35, 35}}}, {}});
  ds.annotations.push_back({"c", 50, 50, {}, {}, {}});
  return ds;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("worked AP example") {
  CHECK(*eval::average_precision({true, false, true}, 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(*eval::average_precision({true, true}, 2) == 1.0);
  CHECK(*eval::average_precision({}, 3) == 0.0);
  CHECK_FALSE(eval::average_precision({false}, 0).has_value());
}

TEST_CASE("11-point AP") {
  // Precision 1 up to recall 0.5, 2/3 at recall 1.
  const double expected = (6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0;
  CHECK(*eval::average_precision({true, false, true}, 2, ApMode::kElevenPoint) ==
        doctest::Approx(expected));
}

TEST_CASE("min-IoU matching rule") {
  const std::vector<HOIInstance> gt{{"a", 0, {0, 0, 10, 10}, {0, 0, 10, 10}}};
  // Human IoU 0.6 (shift), object IoU 0.4: the pair is rejected.
  const BBox h{0, 0, 10, 10};
  BBox h6{0, 0, 10, 10};
  h6.x1 = 2.5;  // IoU 0.75... tighten below
  h6 = {0, 0, 10, 10};
  h6.x2 = 6.0;  // IoU 0.6
  BBox o4{0, 0, 4, 10};  // IoU 0.4
  CHECK(iou(h6, gt[0].human_box) == doctest::Approx(0.6));
  CHECK(iou(o4, gt[0].object_box) == doctest::Approx(0.4));
  const std::vector<ScoredDetection> dets{{"a", 0, h6, o4, 0.9}, {"a", 0, h, gt[0].object_box, 0.8},
                                          {"a", 0, h, gt[0].object_box, 0.7}};
  CHECK(eval::match_detections(dets, gt) == std::vector<bool>{false, true, false});
  // Exactly 0.5 is not enough.
  const std::vector<ScoredDetection> half{{"a", 0, {0, 0, 5, 10}, gt[0].object_box, 0.5}};
  CHECK(eval::match_detections(half, gt) == std::vector<bool>{false});
}

TEST_CASE("ties rank by a deterministic key") {
  std::vector<ScoredDetection> dets{{"b", 0, {0, 0, 1, 1}, {0, 0, 1, 1}, 0.5},
                                    {"a", 0, {0, 0, 1, 1}, {0, 0, 1, 1}, 0.5},
                                    {"a", 0, {0, 0, 1, 1}, {0, 0, 1, 1}, 0.7}};
  CHECK(eval::ranking(dets) == std::vector<std::size_t>{2, 1, 0});
}

TEST_CASE("perfect detections score 1 in both settings") {
  const auto ds = small_test();
  std::vector<ScoredDetection> dets;
  for (const auto& ann : ds.annotations) {
    for (const auto& inst : ann.instances) dets.push_back({inst.image_id, inst.hoi_id, inst.human_box, inst.object_box, 1.0});
  }
  const RareSplit split{{}, {0, 1, 2}};
  for (auto s : {EvalSetting::kDefault, EvalSetting::kKnownObject}) {
    const auto r = eval::evaluate(dets, ds, s, split);
    CHECK(*r.map_full == 1.0);
    CHECK_FALSE(r.ap[1].has_value());
  }
}

TEST_CASE("background false positives lower Default but not KnownObject") {
  const auto ds = small_test();
  std::vector<ScoredDetection> dets{{"a", 0, {0, 0, 10, 10}, {10, 10, 20, 20}, 0.5},
                                    {"c", 0, {0, 0, 10, 10}, {10, 10, 20, 20}, 0.9},
                                    {"b", 0, {0, 0, 10, 10}, {10, 10, 20, 20}, 0.8}};
  const RareSplit split{{}, {0, 1, 2}};
  const auto def = eval::evaluate(dets, ds, EvalSetting::kDefault, split);
  const auto known = eval::evaluate(dets, ds, EvalSetting::kKnownObject, split);
  CHECK(*def.ap[0] == doctest::Approx(1.0 / 3.0));
  CHECK(*known.ap[0] == 1.0);
  CHECK(*def.map_full <= *known.map_full);
}

TEST_CASE("unknown image is an error") {
  const std::vector<ScoredDetection> dets{{"zzz", 0, {0, 0, 1, 1}, {0, 0, 1, 1}, 0.5}};
  CHECK_THROWS_AS((void)eval::evaluate(dets, small_test(), EvalSetting::kDefault, {}), ValidationError);
}

TEST_CASE("KnownObject images are a subset of Default images") {
  const auto ds = small_test();
  for (HoiId k = 0; k < 3; ++k) {
    const auto known = eval::evaluated_images(ds, k, EvalSetting::kKnownObject);
    const auto def = eval::evaluated_images(ds, k, EvalSetting::kDefault);
    CHECK(std::includes(def.begin(), def.end(), known.begin(), known.end()));
  }
}

TEST_CASE("evaluate equals the threshold-enumeration oracle") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto mi = oracle::micro_instance(seed);
    for (auto s : {EvalSetting::kDefault, EvalSetting::kKnownObject}) {
      const auto r = eval::evaluate(mi.dets, mi.test, s, {{}, {0, 1, 2}});
      const auto o = oracle::oracle_evaluate(mi.dets, mi.test, s);
      REQUIRE(r.ap.size() == o.size());
      for (std::size_t k = 0; k < o.size(); ++k) {
        CHECK(r.ap[k].has_value() == o[k].has_value());
        if (o[k]) CHECK(*r.ap[k] == *o[k]);
      }
    }
  }
}

TEST_CASE("AP is invariant under monotone transforms and dropping false positives") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto mi = oracle::micro_instance(seed);
    const auto base = eval::evaluate(mi.dets, mi.test, EvalSetting::kDefault, {});
    auto squashed = mi.dets;
    for (auto& d : squashed) d.score = std::pow(d.score, 3.0) * 0.5 + 0.1;
    const auto same = eval::evaluate(squashed, mi.test, EvalSetting::kDefault, {});
    CHECK(same.ap == base.ap);
    std::vector<ScoredDetection> tps;
    for (int k = 0; k < 3; ++k) {
      std::vector<ScoredDetection> cls;
      std::vector<HOIInstance> gt;
      for (const auto& d : mi.dets) {
        if (d.hoi_id == k) cls.push_back(d);
      }
      for (const auto& a : mi.test.annotations) {
        for (const auto& i : a.instances) {
          if (i.hoi_id == k) gt.push_back(i);
        }
      }
      const auto flags = eval::match_detections(cls, gt);
      const auto order = eval::ranking(cls);
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (flags[i]) tps.push_back(cls[order[i]]);
      }
    }
    const auto clean = eval::evaluate(tps, mi.test, EvalSetting::kDefault, {});
    for (std::size_t k = 0; k < 3; ++k) {
      if (base.ap[k]) CHECK(*clean.ap[k] >= *base.ap[k]);
    }
  }
}

TEST_CASE("table and per-class CSV") {
  const auto ds = small_test();
  const std::vector<ScoredDetection> dets{{"a", 0, {0, 0, 10, 10}, {10, 10, 20, 20}, 0.5}};
  const RareSplit split{{2}, {0, 1}};
  const auto def = eval::evaluate(dets, ds, EvalSetting::kDefault, split);
  const auto known = eval::evaluate(dets, ds, EvalSetting::kKnownObject, split);
  const std::vector<eval::NamedReport> rows{{"m", &def, &known}, {"d", &def, nullptr}};
  const auto table = eval::format_table(rows);
  CHECK(table.rfind(std::string(eval::kTableHeader), 0) == 0);
  CHECK(table.find("m\t50.00\t0.00\t100.00\t50.00\t0.00\t100.00") != std::string::npos);
  CHECK(table.find("d\t50.00\t0.00\t100.00\tN/A\tN/A\tN/A") != std::string::npos);

  testutil::TempDir dir;
  {
    std::ofstream out(dir / "pc.csv");
    out << eval::format_per_class_csv(ds.taxonomy, split, def, known);
  }
  const auto pc = eval::load_per_class_csv(dir / "pc.csv");
  CHECK(pc.ap_default == def.ap);
  CHECK(pc.ap_known == known.ap);
  CHECK(pc.rare == split.rare);
}

}  // TEST_SUITE
