#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "a3d/inference.hpp"
#include "a3d/pipeline.hpp"
#include "a3d/synthetic.hpp"
#include "test_util.hpp"

using namespace a3d;

TEST_CASE("indicator is 1 strictly above zero") {
  CHECK(indicator(0.0) == 0);
  CHECK(indicator(0.05) == 1);
  CHECK(indicator(-1.0) == 0);
  CHECK(indicator(1e-300) == 1);
  CHECK_THROWS_AS(indicator(std::nan("")), NumericError);
}

TEST_CASE("joint_predict routes on max(p1) vs threshold") {
  GateConfig gate;  // 0.1
  Vec p1{0.5, 0.3, 0.2};
  Vec p2{0.1, 0.8, 0.1};
  SUBCASE("confident p1 wins exactly") {
    CHECK(joint_predict(p1, p2, gate) == p1);
  }
  SUBCASE("uniform over 51 classes falls back to p2") {
    Rng rng(1);
    Vec flat(51, 1.0 / 51.0);
    Vec other = testutil::random_distribution(rng, 51);
    Vec out = joint_predict(flat, other, gate);
    CHECK(out == other);
  }
  SUBCASE("threshold 0 always selects p1") {
    Rng rng(4);
    Vec nearly_flat(51, 1.0 / 51.0);
    Vec other = testutil::random_distribution(rng, 51);
    CHECK(joint_predict(nearly_flat, other, GateConfig{0.0}) == nearly_flat);
  }
  SUBCASE("exact tie goes to p2") {
    Rng rng(2);
    Vec flat(10, 0.1);
    GateConfig tie{0.1};
    Vec other = testutil::random_distribution(rng, 10);
    CHECK(joint_predict(flat, other, tie) == other);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(joint_predict(p1, Vec{0.5, 0.5}, gate), ValidationError);
    CHECK_THROWS_AS(joint_predict(Vec{0.7, 0.7, 0.7}, p2, gate), NumericError);
    CHECK_THROWS_AS(joint_predict(p1, p2, GateConfig{1.5}), ValidationError);
  }
}

TEST_CASE("joint_predict output is always exactly one of its inputs") {
  Rng rng(5);
  GateConfig gate;
  for (int t = 0; t < 500; ++t) {
    std::size_t n = 2 + rng.uniform_index(50);
    Vec p1 = testutil::random_distribution(rng, n);
    Vec p2 = testutil::random_distribution(rng, n);
    Vec out = joint_predict(p1, p2, gate);
    CHECK((out == p1 || out == p2));
    double conf = *std::max_element(p1.begin(), p1.end());
    CHECK(out == (conf > gate.threshold ? p1 : p2));
  }
}

TEST_CASE("threshold 1 selects p2 even for one-hot p1") {
  GateConfig gate{1.0};
  Vec one_hot{0.0, 1.0, 0.0};
  Vec p2{0.2, 0.3, 0.5};
  CHECK(joint_predict(one_hot, p2, gate) == p2);  // max == T routes to p2
  Vec soft{0.6, 0.3, 0.1};
  CHECK(joint_predict(soft, p2, gate) == p2);
}

namespace {

std::vector<VideoSample> make_samples(int n, int split_index, int num_classes) {
  std::vector<VideoSample> out;
  for (int i = 0; i < n; ++i)
    out.push_back({"v" + std::to_string(i), Split::test, split_index, i % num_classes});
  return out;
}

}  // namespace

TEST_CASE("evaluate counts argmax matches per split") {
  const int num_classes = 4;
  auto samples = make_samples(10, 1, num_classes);
  PredictionMap preds;
  SUBCASE("all correct") {
    for (const auto& s : samples) {
      Vec p(num_classes, 0.0);
      p[s.true_label] = 1.0;
      preds[{1, s.video_id}] = p;
    }
    auto rep = evaluate(samples, preds, num_classes);
    CHECK(rep.mean_accuracy == 1.0);
    REQUIRE(rep.splits.size() == 1);
    CHECK(rep.splits[0].total == 10);
    CHECK(rep.splits[0].correct == 10);
  }
  SUBCASE("alternating correct/incorrect is 0.5") {
    for (int i = 0; i < 10; ++i) {
      const auto& s = samples[i];
      Vec p(num_classes, 0.0);
      p[i % 2 == 0 ? s.true_label : (s.true_label + 1) % num_classes] = 1.0;
      preds[{1, s.video_id}] = p;
    }
    CHECK(evaluate(samples, preds, num_classes).mean_accuracy == 0.5);
  }
  SUBCASE("missing prediction is an error") {
    CHECK_THROWS_AS(evaluate(samples, preds, num_classes), ValidationError);
  }
}

TEST_CASE("evaluate matches a brute-force count and ignores sample order") {
  Rng rng(9);
  const int num_classes = 6;
  std::vector<VideoSample> samples;
  PredictionMap preds;
  for (int split = 1; split <= 3; ++split) {
    for (int i = 0; i < 40; ++i) {
      VideoSample s{"v" + std::to_string(i), rng.uniform() < 0.3 ? Split::train : Split::test,
                    split, (int)rng.uniform_index(num_classes)};
      samples.push_back(s);
      preds[{split, s.video_id}] = testutil::random_distribution(rng, num_classes);
    }
  }
  auto rep = evaluate(samples, preds, num_classes);

  // brute force
  for (const auto& st : rep.splits) {
    std::size_t correct = 0, total = 0;
    for (const auto& s : samples) {
      if (s.split != Split::test || s.split_index != st.split_index) continue;
      const Vec& p = preds.at({s.split_index, s.video_id});
      std::size_t best = 0;
      for (std::size_t j = 1; j < p.size(); ++j)
        if (p[j] > p[best]) best = j;
      total++;
      if ((int)best == s.true_label) correct++;
    }
    CHECK(st.total == total);
    CHECK(st.correct == correct);
  }
  double mean = 0.0;
  for (const auto& st : rep.splits) mean += st.accuracy;
  CHECK(rep.mean_accuracy == doctest::Approx(mean / 3.0).epsilon(1e-15));

  // permutation invariance
  auto shuffled = samples;
  auto perm = rng.permutation(shuffled.size());
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i] = samples[perm[i]];
  auto rep2 = evaluate(shuffled, preds, num_classes);
  CHECK(rep2.mean_accuracy == rep.mean_accuracy);
  for (std::size_t i = 0; i < rep.splits.size(); ++i) {
    CHECK(rep2.splits[i].split_index == rep.splits[i].split_index);
    CHECK(rep2.splits[i].correct == rep.splits[i].correct);
  }
}

TEST_CASE("argmax ties break toward the lowest class index") {
  Vec tie{0.4, 0.4, 0.2};
  CHECK(argmax_lowest(tie) == 0);
  std::vector<VideoSample> samples{{"v0", Split::test, 1, 0}};
  PredictionMap preds;
  preds[{1, "v0"}] = tie;
  CHECK(evaluate(samples, preds, 3).mean_accuracy == 1.0);
}

TEST_CASE("run_pipeline on a synthetic bundle") {
  SyntheticConfig gen;
  gen.num_classes = 16;
  gen.num_videos = 160;
  gen.low_conf_fraction = 0.3;
  auto data = gen_synthetic(gen, 71);

  TrainConfig tc;
  tc.seed = 71;
  FilterConfig fc;
  PipelineModels models;
  models.encoder = EncoderKind::pred_agg;
  for (int split = 1; split <= 3; ++split) {
    auto tm = train_strategy(data, split, Strategy::attr_classifier, fc, tc, 8);
    models.per_split[split] = {std::move(tm.linear), std::nullopt};
  }
  PipelineConfig cfg;
  auto reports = run_pipeline(data, cfg, models);

  SUBCASE("three-way ordering holds on the constructed data") {
    CHECK(reports.joint.mean_accuracy >= reports.p1_only.mean_accuracy);
    CHECK(reports.p1_only.mean_accuracy > reports.p2_only.mean_accuracy);
  }

  SUBCASE("gate statistic equals the independent count") {
    std::map<std::string, const Vec*> spatial, temporal;
    for (const auto& f : data.features)
      (f.stream == Stream::spatial ? spatial : temporal)[f.video_id] = &f.vector;
    std::size_t routed = 0, total = 0;
    for (const auto& s : data.samples) {
      if (s.split != Split::test) continue;
      Vec p1 = fuse_revised(*spatial.at(s.video_id), *temporal.at(s.video_id),
                            cfg.fusion_weights);
      total++;
      if (!(*std::max_element(p1.begin(), p1.end()) > cfg.gate.threshold)) routed++;
    }
    REQUIRE(reports.joint.gate_fraction.has_value());
    CHECK(*reports.joint.gate_fraction ==
          doctest::Approx((double)routed / (double)total).epsilon(1e-15));
  }

  SUBCASE("per-class tables count every test sample once") {
    std::size_t total = 0;
    for (const auto& pc : reports.joint.per_class) total += pc.total;
    std::size_t expect = 0;
    for (const auto& s : data.samples) expect += s.split == Split::test ? 1 : 0;
    CHECK(total == expect);
  }
}

TEST_CASE("run_pipeline with zero low-confidence videos reproduces p1 exactly") {
  SyntheticConfig gen;
  gen.num_classes = 12;
  gen.num_videos = 60;
  gen.low_conf_fraction = 0.0;
  auto data = gen_synthetic(gen, 5);
  TrainConfig tc;
  tc.seed = 5;
  tc.max_epochs = 5;
  FilterConfig fc;
  PipelineModels models;
  models.encoder = EncoderKind::pred_agg;
  for (int split = 1; split <= 3; ++split) {
    auto tm = train_strategy(data, split, Strategy::attr_classifier, fc, tc, 8);
    models.per_split[split] = {std::move(tm.linear), std::nullopt};
  }
  PipelineConfig cfg;
  auto reports = run_pipeline(data, cfg, models);
  CHECK(*reports.joint.gate_fraction == 0.0);
  CHECK(reports.joint.mean_accuracy == reports.p1_only.mean_accuracy);
  for (std::size_t i = 0; i < reports.joint.splits.size(); ++i) {
    CHECK(reports.joint.splits[i].correct == reports.p1_only.splits[i].correct);
    CHECK(reports.joint.splits[i].total == reports.p1_only.splits[i].total);
  }
}

TEST_CASE("run_pipeline requires a non-empty test split") {
  SyntheticConfig gen;
  gen.num_classes = 4;
  gen.num_videos = 12;
  auto data = gen_synthetic(gen, 3);
  for (auto& s : data.samples) s.split = Split::train;  // no test samples anywhere
  PipelineModels models;
  models.encoder = EncoderKind::pred_agg;
  models.per_split[1] = {LinearModel::zeros(4, 4), std::nullopt};
  PipelineConfig cfg;
  CHECK_THROWS_AS(run_pipeline(data, cfg, models), ValidationError);
}

TEST_CASE("attribute_predict encoders agree with their definitions") {
  Rng rng(55);
  LinearModel m = LinearModel::zeros(3, 4);
  for (double& w : m.weights) w = rng.normal();
  std::vector<Vec> feats{testutil::random_vec(rng, 4), testutil::random_vec(rng, 4)};

  Vec via_mean = attribute_predict(feats, EncoderKind::mean_pool, m, nullptr);
  Vec rep = mean_pool(feats);
  Vec logits(3, 0.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 4; ++t) logits[c] += m.weights[c * 4 + t] * rep[t];
  CHECK(via_mean == softmax(logits));

  Vec via_agg = attribute_predict(feats, EncoderKind::pred_agg, m, nullptr);
  CHECK(is_distribution(via_agg));

  CHECK_THROWS_AS(attribute_predict(feats, EncoderKind::netvlad, m, nullptr), ValidationError);
}
