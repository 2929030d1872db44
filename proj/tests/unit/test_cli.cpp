#include <doctest.h>

#include "hoidet/core_model.hpp"
#include "hoidet/eval/evaluator.hpp"
#include "test_util.hpp"

using testutil::run_cli;
using testutil::slurp;

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("").status == 2);
  CHECK(run_cli("frobnicate").status == 2);
  const auto r = run_cli("stats /definitely/not/here");
  CHECK(r.status == 2);
  CHECK(r.out.rfind("error: ", 0) == 0);
  CHECK(run_cli("train --dataset /nope --proposals /nope --out x").status == 2);
}

TEST_CASE("validation errors exit with 3") {
  testutil::TempDir dir;
  save_dataset(testutil::tiny_dataset(), dir / "ds");
  {
    std::ofstream out(dir / "bad.tsv");
    out << "HOIDET-DETECTIONS v1\na\tperson\t1,2,3\t0.5\n";
  }
  const auto r = run_cli("propose --dataset " + (dir / "ds").string() + " --detections " +
                         (dir / "bad.tsv").string() + " --out " + (dir / "p.tsv").string());
  CHECK(r.status == 3);
  CHECK(r.out.find("error: ") == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
}

TEST_CASE("small pipeline through the executable") {
  testutil::TempDir dir;
  const auto root = dir.path().string();
  auto ok = [](const testutil::CliResult& r) {
    INFO(r.out);
    CHECK(r.status == 0);
  };
  ok(run_cli("synth --separable --train-images 12 --test-images 6 --out " + root + "/data"));
  CHECK(std::filesystem::exists(dir / "data/manifest.json"));
  CHECK(std::filesystem::exists(dir / "data/declared.json"));
  const auto stats = run_cli("stats " + root + "/data");
  ok(stats);
  CHECK(stats.out.find("train\t12\t") != std::string::npos);

  for (const char* split : {"train", "test"}) {
    ok(run_cli(std::string("propose --dataset ") + root + "/data/" + split + " --detections " + root + "/data/" +
               split + "/detections.tsv --top 5 --out " + root + "/" + split + "_props.tsv"));
  }
  const auto perfect = run_cli("propose --dataset " + root + "/data/test --detections " + root +
                               "/data/test/detections_perfect.tsv --out " + root + "/perfect_props.tsv");
  ok(perfect);
  CHECK(perfect.out.find("100.00") != std::string::npos);
  ok(run_cli("recall --dataset " + root + "/data/test --proposals " + root + "/test_props.tsv"));

  ok(run_cli("train --dataset " + root + "/data/train --proposals " + root +
             "/train_props.tsv --variant ho+ip1-conv+s --patch-size 8 --ip-size 8 --iterations 6 "
             "--decay-iterations 2 --images-per-batch 2 --out " + root + "/m.ckpt"));
  CHECK(std::filesystem::exists(dir / "m.ckpt.manifest.json"));
  CHECK(std::filesystem::exists(dir / "m.ckpt.loss.tsv"));
  ok(run_cli("score --dataset " + root + "/data/test --proposals " + root + "/test_props.tsv --model " + root +
             "/m.ckpt --out " + root + "/s.tsv"));
  ok(run_cli("score --dataset " + root + "/data/test --proposals " + root + "/test_props.tsv --model " + root +
             "/m.ckpt --stream pairwise --out " + root + "/s_pair.tsv"));
  ok(run_cli("score --dataset " + root + "/data/test --proposals " + root + "/test_props.tsv --random --seed 4 --out " +
             root + "/r.tsv"));
  const auto ev = run_cli("eval --dataset " + root + "/data/test --train " + root + "/data/train --scores model=" +
                          root + "/s.tsv --scores random=" + root + "/r.tsv --setting default --ap 11-point --out " +
                          root + "/table.tsv");
  ok(ev);
  const auto table = slurp(dir / "table.tsv");
  CHECK(table.rfind("HOIDET-EVAL v1\n", 0) == 0);
  CHECK(table.find("\nmodel\t") != std::string::npos);
  CHECK(table.find("\nrandom\t") != std::string::npos);
  CHECK(table.find("N/A") != std::string::npos);  // known-object columns not requested

  ok(run_cli("eval --dataset " + root + "/data/test --train " + root + "/data/train --scores " + root +
             "/s.tsv --per-class " + root + "/a.csv"));
  ok(run_cli("eval --dataset " + root + "/data/test --train " + root + "/data/train --scores " + root +
             "/r.tsv --per-class " + root + "/b.csv"));
  const auto tt = run_cli("ttest --a " + root + "/a.csv --b " + root + "/b.csv");
  ok(tt);
  CHECK(tt.out.rfind("HOIDET-TTEST v1\n", 0) == 0);
  ok(run_cli("avg-ip --dataset " + root + "/data/train --size 16 --out " + root + "/avg"));
  CHECK(std::filesystem::exists(dir / "avg/class_0_ride_bicycle_human.png"));
}

}  // TEST_SUITE
