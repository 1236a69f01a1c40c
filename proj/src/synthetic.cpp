#include "a3d/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "a3d/rng.hpp"

namespace a3d {

namespace {

const char* kVerbs[] = {"playing",  "riding",    "throwing", "juggling", "kicking",
                        "swinging", "lifting",   "climbing", "rowing",   "skiing",
                        "strumming", "bouncing", "carrying", "pushing",  "pulling",
                        "spinning", "tossing",   "catching", "dribbling", "hoisting",
                        "paddling", "hauling",   "sharpening", "steering"};
const char* kNouns[] = {"guitar",   "horse",      "ball",    "torch",      "rope",
                        "bicycle",  "piano",      "bow",     "drum",       "kayak",
                        "barbell",  "skateboard", "violin",  "basketball", "hammer",
                        "ladder",   "surfboard",  "puck",    "racket",     "shovel",
                        "trumpet",  "wheel",      "anvil",   "canoe"};
const char* kDistractors[] = {"cloud",   "window", "shadow", "pavement", "lamp",
                              "bottle",  "curtain", "fence",  "carpet",   "ceiling",
                              "doorway", "bucket", "mirror", "plant",    "railing"};
constexpr std::size_t kBaseWords = 24;
constexpr std::size_t kNumDistractors = 15;

std::string base_word(const char* const* list, std::size_t k) {
  std::string w = list[k % kBaseWords];
  if (k >= kBaseWords) w += std::to_string(k / kBaseWords + 1);
  return w;
}

std::string capitalize(const std::string& w) {
  std::string out = w;
  out[0] = (char)std::toupper((unsigned char)out[0]);
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(Vec& v) {
  double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

// count orthonormal vectors of dimension dim via Gram-Schmidt on
// random normal draws (redrawing near-degenerate candidates).
std::vector<Vec> orthonormal_basis(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<Vec> basis;
  while (basis.size() < count) {
    Vec v(dim);
    for (double& x : v) x = rng.normal();
    for (const Vec& u : basis) {
      double c = dot(v, u);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= c * u[i];
    }
    double n = std::sqrt(dot(v, v));
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  return basis;
}

// anchor plus small noise orthogonal to it, unit length. Keeps the cosine
// to the anchor at 1/sqrt(1 + noise^2) regardless of the draw.
Vec near_anchor(const Vec& anchor, double noise, Rng& rng) {
  Vec z(anchor.size());
  for (double& x : z) x = rng.normal();
  double c = dot(z, anchor);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] -= c * anchor[i];
  normalize(z);
  Vec out(anchor.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = anchor[i] + noise * z[i];
  normalize(out);
  return out;
}

std::string pad_id(int i, int width) {
  std::string n = std::to_string(i);
  return "video_" + std::string(width > (int)n.size() ? width - n.size() : 0, '0') + n;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_classes < 2) throw ValidationError("gen: num_classes must be >= 2");
  if (num_videos < num_classes)
    throw ValidationError("gen: num_videos must be >= num_classes");
  if (!(low_conf_fraction >= 0.0) || !(low_conf_fraction <= 1.0))
    throw ValidationError("gen: low_conf_fraction must be in [0,1]");
  if (attr_feature_dim != 0 && attr_feature_dim < num_classes)
    throw ValidationError("gen: attr_feature_dim must be 0 (auto) or >= num_classes");
  if (embedding_dim != 0 && embedding_dim <= num_classes)
    throw ValidationError("gen: embedding_dim must be 0 (auto) or > num_classes");
  if (min_dets_per_video < 1 || max_dets_per_video < min_dets_per_video)
    throw ValidationError("gen: need 1 <= min_dets_per_video <= max_dets_per_video");
  if (!(distractor_rate >= 0.0) || !(distractor_rate <= 1.0))
    throw ValidationError("gen: distractor_rate must be in [0,1]");
  if (!(junk_rate >= 0.0) || !(junk_rate <= 1.0))
    throw ValidationError("gen: junk_rate must be in [0,1]");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw ValidationError("gen: train_fraction must be in (0,1)");
}

DatasetBundle gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t c = (std::size_t)cfg.num_classes;
  const std::size_t v = (std::size_t)cfg.num_videos;
  const std::size_t fdim = cfg.attr_feature_dim == 0 ? c : (std::size_t)cfg.attr_feature_dim;
  const std::size_t edim = cfg.embedding_dim == 0 ? c + 3 : (std::size_t)cfg.embedding_dim;

  DatasetBundle out;

  // Vocabulary: camel-cased verb+noun labels.
  std::vector<std::string> labels(c), verbs(c), nouns(c), tools(c);
  for (std::size_t k = 0; k < c; ++k) {
    verbs[k] = base_word(kVerbs, k);
    nouns[k] = base_word(kNouns, k);
    tools[k] = nouns[k] + "stand";
    labels[k] = capitalize(verbs[k]) + capitalize(nouns[k]);
  }
  out.vocab = ClassVocabulary::from_labels(labels);

  // Embeddings. One orthonormal anchor per class plus spare directions for
  // pushing distractors away from every anchor.
  const std::size_t n_extra = std::min<std::size_t>(3, edim - c);
  auto basis = orthonormal_basis(c + n_extra, edim, rng);
  for (std::size_t k = 0; k < c; ++k) {
    out.embeddings.insert(nouns[k], basis[k]);
    out.embeddings.insert(verbs[k], near_anchor(basis[k], 0.15, rng));
    out.embeddings.insert(tools[k], near_anchor(basis[k], 0.25, rng));
  }
  // Distractor words mix several anchors with a spare direction scaled so
  // the cosine to any single anchor stays below 1/sqrt(4.4) < 0.48.
  std::vector<std::string> distractor_words(kNumDistractors);
  auto mixed_word = [&](Vec& e) {
    std::size_t m = std::min<std::size_t>(6, c);
    auto order = rng.permutation(c);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < edim; ++i) e[i] += basis[order[j]][i];
    const Vec& spare = basis[c + rng.uniform_index(n_extra)];
    double s = std::sqrt(3.4 * (double)m);
    for (std::size_t i = 0; i < edim; ++i) e[i] += s * spare[i];
    normalize(e);
  };
  for (std::size_t d = 0; d < kNumDistractors; ++d) {
    std::string word = kDistractors[d];
    Vec e(edim, 0.0);
    mixed_word(e);
    out.embeddings.insert(word, e);
    distractor_words[d] = std::move(word);
  }
  {
    Vec e(edim, 0.0);
    mixed_word(e);
    out.embeddings.insert("person", e);
  }

  // Video content. Low-confidence flags hit the requested count exactly.
  const std::size_t n_low = (std::size_t)std::llround(cfg.low_conf_fraction * (double)v);
  std::vector<char> low(v, 0);
  {
    auto order = rng.permutation(v);
    for (std::size_t i = 0; i < n_low; ++i) low[order[i]] = 1;
  }
  const double margin = std::log(20.0 * (double)c);
  const int id_width = (int)std::to_string(v).size();

  std::vector<int> true_label(v);
  std::vector<std::string> video_ids(v);
  for (std::size_t i = 0; i < v; ++i) {
    true_label[i] = (int)(i % c);
    video_ids[i] = pad_id((int)i, id_width);
  }

  for (std::size_t i = 0; i < v; ++i) {
    const std::size_t k = (std::size_t)true_label[i];
    for (Stream stream : {Stream::spatial, Stream::temporal}) {
      StreamFeatures f;
      f.video_id = video_ids[i];
      f.stream = stream;
      f.vector.resize(c);
      if (low[i]) {
        for (double& x : f.vector) x = rng.normal(0.0, 0.05);
      } else {
        for (double& x : f.vector) x = rng.normal(0.0, 0.03 * margin);
        f.vector[k] += margin;
      }
      out.features.push_back(std::move(f));
    }

    const int nd = rng.uniform_int(cfg.min_dets_per_video, cfg.max_dets_per_video);
    for (int d = 0; d < nd; ++d) {
      DetectionRecord rec;
      rec.video_id = video_ids[i];
      rec.frame_index = rng.uniform_int(0, 63);
      double side_a = rng.uniform(25.0, 200.0), side_b = rng.uniform(25.0, 200.0);
      rec.bbox = {rng.uniform(0.0, 400.0), rng.uniform(0.0, 400.0), side_a, side_b};
      rec.confidence = rng.uniform(0.3, 0.99);
      Vec feat(fdim);

      bool junk = rng.uniform() < cfg.junk_rate;
      if (junk) {
        for (double& x : feat) x = rng.normal();
        switch (rng.uniform_int(0, 2)) {
          case 0:
            rec.label_words = {"person"};
            break;
          case 1:  // below the 20 px side threshold
            rec.label_words = {distractor_words[rng.uniform_index(kNumDistractors)]};
            rec.bbox.width = rng.uniform(2.0, 19.0);
            break;
          default:  // below the 0.02 confidence threshold
            rec.label_words = {distractor_words[rng.uniform_index(kNumDistractors)]};
            rec.confidence = rng.uniform(0.0005, 0.019);
        }
      } else {
        double p_distr = low[i] ? 0.1 : cfg.distractor_rate;
        if (rng.uniform() < p_distr) {
          rec.label_words = {distractor_words[rng.uniform_index(kNumDistractors)]};
          for (double& x : feat) x = rng.normal();
        } else {
          rec.label_words = {rng.uniform() < 0.5 ? nouns[k] : tools[k]};
          // Low-confidence videos carry the discriminative evidence;
          // confident videos get a weak, noisy version of it.
          double center = low[i] ? 3.0 : 0.75;
          double sigma = low[i] ? 0.3 : 1.8;
          for (std::size_t t = 0; t < fdim; ++t)
            feat[t] = (t == k ? center : 0.0) + rng.normal(0.0, sigma);
        }
      }
      rec.feature = std::move(feat);
      out.detections.push_back(std::move(rec));
    }
  }

  // Splits: independent train/test draw per split, then deterministic
  // repair so training sees every class and the test set is non-empty.
  for (int split_index = 1; split_index <= 3; ++split_index) {
    std::vector<char> is_train(v);
    for (std::size_t i = 0; i < v; ++i) is_train[i] = rng.uniform() < cfg.train_fraction;
    for (std::size_t k = 0; k < c; ++k) {
      bool has_train = false;
      for (std::size_t i = k; i < v; i += c) has_train |= (bool)is_train[i];
      if (!has_train) is_train[k] = 1;
    }
    std::size_t n_test = 0;
    for (std::size_t i = 0; i < v; ++i) n_test += is_train[i] ? 0 : 1;
    if (n_test == 0) {
      // flip the last video of a class that keeps train coverage
      std::vector<std::size_t> count(c, 0);
      for (std::size_t i = 0; i < v; ++i) count[true_label[i]]++;
      for (std::size_t i = v; i-- > 0;) {
        if (count[true_label[i]] > 1) {
          is_train[i] = 0;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < v; ++i)
      out.samples.push_back({video_ids[i], is_train[i] ? Split::train : Split::test,
                             split_index, true_label[i]});
  }
  return out;
}

}  // namespace a3d
