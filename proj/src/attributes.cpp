#include "a3d/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <unordered_set>

namespace a3d {

void FilterConfig::validate() const {
  if (!(min_confidence >= 0.0) || !(min_confidence <= 1.0))
    throw ValidationError("min_confidence must be in [0,1]");
  if (min_side_px < 0) throw ValidationError("min_side_px must be >= 0");
  if (!(t_sim >= -1.0) || !(t_sim <= 1.0))
    throw ValidationError("t_sim must be in [-1,1]");
}

template <typename Pred>
static std::vector<DetectionRecord> keep_if(std::span<const DetectionRecord> dets, Pred pred) {
  std::vector<DetectionRecord> out;
  out.reserve(dets.size());
  for (const auto& d : dets)
    if (pred(d)) out.push_back(d);
  return out;
}

std::vector<DetectionRecord> filter_by_confidence(std::span<const DetectionRecord> dets,
                                                  double min_confidence) {
  return keep_if(dets, [&](const DetectionRecord& d) { return d.confidence >= min_confidence; });
}

std::vector<DetectionRecord> filter_by_bbox(std::span<const DetectionRecord> dets,
                                            int min_side_px) {
  return keep_if(dets, [&](const DetectionRecord& d) {
    return std::min(d.bbox.width, d.bbox.height) >= (double)min_side_px;
  });
}

std::vector<DetectionRecord> filter_person(std::span<const DetectionRecord> dets,
                                           std::span<const std::string> person_words) {
  std::unordered_set<std::string> person;
  for (const auto& w : person_words) person.insert(to_lower(w));
  return keep_if(dets, [&](const DetectionRecord& d) {
    return std::none_of(d.label_words.begin(), d.label_words.end(),
                        [&](const std::string& w) { return person.count(to_lower(w)) > 0; });
  });
}

Vec label_vector(std::span<const std::string> words, const EmbeddingTable& table) {
  if (words.empty()) throw ValidationError("label_vector: no words");
  Vec sum(table.dim(), 0.0);
  std::size_t found = 0;
  for (const auto& w : words) {
    const Vec* v = table.find(w);
    if (!v) {
      std::cerr << "warning: word '" << w << "' not in embedding table, skipped\n";
      continue;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
    ++found;
  }
  if (found == 0) throw ValidationError("label_vector: no label word found in embedding table");
  for (double& x : sum) x /= (double)found;
  return sum;
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ValidationError("cosine_sim: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine_sim: zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::vector<DetectionRecord> filter_by_relevance(std::span<const DetectionRecord> dets,
                                                 std::span<const std::string> video_label_words,
                                                 const EmbeddingTable& table, double t_sim) {
  Vec s_label = label_vector(video_label_words, table);
  return keep_if(dets, [&](const DetectionRecord& d) {
    Vec s_attr;
    try {
      s_attr = label_vector(d.label_words, table);
    } catch (const ValidationError&) {
      std::cerr << "warning: detection label has no in-table word, discarded (video "
                << d.video_id << ", frame " << d.frame_index << ")\n";
      return false;
    }
    return cosine_sim(s_label, s_attr) >= t_sim;
  });
}

std::vector<DetectionRecord> apply_test_filters(std::span<const DetectionRecord> dets,
                                                const FilterConfig& cfg) {
  cfg.validate();
  auto a = filter_by_confidence(dets, cfg.min_confidence);
  auto b = filter_by_bbox(a, cfg.min_side_px);
  return filter_person(b, cfg.person_words);
}

}  // namespace a3d
