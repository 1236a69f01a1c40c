#pragma once

#include <span>
#include <string>
#include <vector>

#include "a3d/types.hpp"

namespace a3d {

struct FilterConfig {
  double min_confidence = 0.02;
  int min_side_px = 20;
  std::vector<std::string> person_words = {"person"};
  double t_sim = 0.5;
  void validate() const;
};

// All filters keep input order and keep records on >= at the boundary.
std::vector<DetectionRecord> filter_by_confidence(std::span<const DetectionRecord> dets,
                                                  double min_confidence);

// Keeps records with min(width, height) >= min_side_px.
std::vector<DetectionRecord> filter_by_bbox(std::span<const DetectionRecord> dets,
                                            int min_side_px);

// Removes records whose label words intersect person_words (lowercased).
std::vector<DetectionRecord> filter_person(std::span<const DetectionRecord> dets,
                                           std::span<const std::string> person_words);

// Mean of the embedding vectors of the in-table words; out-of-table words
// are skipped with a warning on stderr. Throws ValidationError when no
// word is found.
Vec label_vector(std::span<const std::string> words, const EmbeddingTable& table);

// u.v / (|u||v|). Throws on dimension mismatch or zero vector.
double cosine_sim(std::span<const double> u, std::span<const double> v);

// Keeps record a iff cosine_sim(s(video_label), s(a.label)) >= t_sim.
// Records whose label has no in-table word are discarded with a warning.
// Training-time filter: uses the ground-truth video label words.
std::vector<DetectionRecord> filter_by_relevance(std::span<const DetectionRecord> dets,
                                                 std::span<const std::string> video_label_words,
                                                 const EmbeddingTable& table, double t_sim);

// confidence, bbox and person filters composed; the full test-time chain.
std::vector<DetectionRecord> apply_test_filters(std::span<const DetectionRecord> dets,
                                                const FilterConfig& cfg);

}  // namespace a3d
