// Exercises the installed CLI binary end to end. The binary path comes in
// through the A3D_CLI_PATH compile definition.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "a3d/attributes.hpp"
#include "a3d/io.hpp"
#include "a3d/synthetic.hpp"
#include "test_util.hpp"

using namespace a3d;
using testutil::TempDir;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(A3D_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::map<std::string, double> load_metrics(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string metric, split, value;
    std::getline(ss, metric, '\t');
    std::getline(ss, split, '\t');
    std::getline(ss, value, '\t');
    double v;
    if (parse_double(value, v)) out[metric + "/" + split] = v;
  }
  return out;
}

}  // namespace

TEST_CASE("cli filter reproduces the confidence-bbox-person composition") {
  TempDir dir;
  Rng rng(3);
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < 200; ++i) dets.push_back(testutil::random_detection(rng, i));
  io::save_detections(dir.file("in.txt"), dets);
  REQUIRE(run_cli("filter --detections " + dir.file("in.txt").string() + " --out " +
                  dir.file("out.txt").string()) == 0);
  auto got = io::load_detections(dir.file("out.txt"));
  auto want = apply_test_filters(dets, FilterConfig{});
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(testutil::same_detection(got[i], want[i]));
}

TEST_CASE("cli encode mean-pool of a single-detection video returns the feature itself") {
  TempDir dir;
  std::vector<DetectionRecord> dets(1);
  dets[0].video_id = "v0";
  dets[0].frame_index = 2;
  dets[0].label_words = {"guitar"};
  dets[0].confidence = 0.9;
  dets[0].bbox = {0, 0, 40, 40};
  dets[0].feature = Vec{0.25, -1.5, 3.0};
  io::save_detections(dir.file("d.txt"), dets);
  REQUIRE(run_cli("encode --detections " + dir.file("d.txt").string() + " --out " +
                  dir.file("r.txt").string() + " --encoder mean-pool") == 0);
  auto rows = io::load_tagged_vectors(dir.file("r.txt"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].video_id == "v0");
  CHECK(rows[0].tag == "mean_pool");
  CHECK(rows[0].values == Vec{0.25, -1.5, 3.0});
}

TEST_CASE("cli evaluate scores one-hot truths at accuracy 1.0") {
  TempDir dir;
  auto vocab = ClassVocabulary::from_labels({"A", "B", "C"});
  io::save_vocabulary(dir.file("v.txt"), vocab);
  std::vector<VideoSample> samples;
  std::vector<io::TaggedVector> preds;
  for (int i = 0; i < 9; ++i) {
    VideoSample s{"v" + std::to_string(i), Split::test, 1, i % 3};
    samples.push_back(s);
    Vec p(3, 0.0);
    p[s.true_label] = 1.0;
    preds.push_back({s.video_id, "joint", p});
  }
  io::save_samples(dir.file("s.txt"), samples);
  io::save_tagged_vectors(dir.file("p.txt"), preds);
  REQUIRE(run_cli("evaluate --predictions " + dir.file("p.txt").string() + " --samples " +
                  dir.file("s.txt").string() + " --vocab " + dir.file("v.txt").string() +
                  " --split 1 --out " + dir.file("m.txt").string()) == 0);
  auto metrics = load_metrics(dir.file("m.txt"));
  CHECK(metrics.at("accuracy/1") == 1.0);
  CHECK(metrics.at("accuracy/mean") == 1.0);
  CHECK(metrics.at("per_class_accuracy/A") == 1.0);
}

TEST_CASE("cli gen rejects a single class and is deterministic otherwise") {
  TempDir dir;
  CHECK(run_cli("gen --classes 1 --videos 10 --out-dir " + dir.file("x").string()) != 0);
  REQUIRE(run_cli("gen --seed 5 --classes 6 --videos 24 --out-dir " + dir.file("a").string()) ==
          0);
  REQUIRE(run_cli("gen --seed 5 --classes 6 --videos 24 --out-dir " + dir.file("b").string()) ==
          0);
  // the manifests record the differing --out-dir; the data must not
  for (const char* f :
       {"vocab.txt", "samples.txt", "features.txt", "detections.txt", "embeddings.txt"}) {
    CHECK(testutil::read_file(dir.file("a") / f) == testutil::read_file(dir.file("b") / f));
  }
}

TEST_CASE("cli demo gate thresholds 0 and 1 degenerate to p1-only and p2-only") {
  TempDir dir;
  const std::string common =
      " --seed 11 --classes 16 --videos 96 --max-epochs 8 --out-dir ";
  SUBCASE("threshold 0 disables the gate") {
    REQUIRE(run_cli("demo --gate-threshold 0" + common + dir.file("t0").string()) == 0);
    auto joint = load_metrics(dir.file("t0") / "metrics_joint.txt");
    auto p1 = load_metrics(dir.file("t0") / "metrics_p1.txt");
    CHECK(joint.at("accuracy/mean") == p1.at("accuracy/mean"));
    CHECK(joint.at("gate_fraction/all") == 0.0);
  }
  SUBCASE("threshold 1 saturates the gate") {
    int rc = run_cli("demo --gate-threshold 1" + common + dir.file("t1").string());
    CHECK(rc == 5);  // joint equals p2, so the ordering assertion fails
    auto joint = load_metrics(dir.file("t1") / "metrics_joint.txt");
    auto p2 = load_metrics(dir.file("t1") / "metrics_p2.txt");
    CHECK(joint.at("accuracy/mean") == p2.at("accuracy/mean"));
    CHECK(joint.at("gate_fraction/all") == 1.0);
  }
}

TEST_CASE("cli train then predict then evaluate round-trips through files") {
  TempDir dir;
  SyntheticConfig gen;
  gen.num_classes = 8;
  gen.num_videos = 48;
  auto data = gen_synthetic(gen, 13);
  io::save_vocabulary(dir.file("vocab.txt"), data.vocab);
  io::save_samples(dir.file("samples.txt"), data.samples);
  io::save_features(dir.file("features.txt"), data.features);
  io::save_detections(dir.file("detections.txt"), data.detections);
  io::save_embeddings(dir.file("embeddings.txt"), data.embeddings);

  auto in = [&](const char* f) { return dir.file(f).string(); };
  REQUIRE(run_cli("train --strategy attr-classifier --detections " + in("detections.txt") +
                  " --samples " + in("samples.txt") + " --vocab " + in("vocab.txt") +
                  " --embeddings " + in("embeddings.txt") + " --split 1 --max-epochs 10" +
                  " --out " + in("model.txt")) == 0);
  CHECK(std::filesystem::exists(dir.file("model.txt.loss")));
  CHECK(std::filesystem::exists(dir.file("model.txt.manifest.json")));

  REQUIRE(run_cli("predict --which joint --features " + in("features.txt") + " --detections " +
                  in("detections.txt") + " --samples " + in("samples.txt") + " --vocab " +
                  in("vocab.txt") + " --model " + in("model.txt") +
                  " --strategy attr-classifier --split 1 --out " + in("pred.txt")) == 0);

  REQUIRE(run_cli("evaluate --predictions " + in("pred.txt") + " --samples " +
                  in("samples.txt") + " --vocab " + in("vocab.txt") + " --split 1 --out " +
                  in("metrics.txt")) == 0);
  auto metrics = load_metrics(dir.file("metrics.txt"));
  CHECK(metrics.count("accuracy/1") == 1);
  CHECK(metrics.at("accuracy/1") >= 0.0);
  CHECK(metrics.at("accuracy/1") <= 1.0);
}

TEST_CASE("cli usage errors exit with the usage code") {
  CHECK(run_cli("predict --which p9") == 2);
  CHECK(run_cli("nonsense") == 2);
  TempDir dir;
  // missing --embeddings for attr-classifier strategy
  CHECK(run_cli("train --strategy attr-classifier --detections x --samples y --vocab z --out m") ==
        2);
}
