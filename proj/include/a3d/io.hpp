#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "a3d/encoding.hpp"
#include "a3d/types.hpp"

namespace a3d::io {

// All formats are line-oriented text. Numbers are written in shortest
// round-trip decimal form, so save-then-load reproduces identical doubles.
//
//   features:    video_id<TAB>stream<TAB>v1,v2,...,vN
//   detections:  video_id<TAB>frame<TAB>label words<TAB>confidence<TAB>x,y,w,h[<TAB>f1,...,fM]
//   embeddings:  word v1 v2 ... vD
//   samples:     a3d-samples v1 header, then video_id<TAB>split<TAB>split_index<TAB>true_label
//   vocabulary:  a3d-vocab v1 header, then one label per line
//   linear model / netvlad params / predictions / representations: see savers

std::vector<StreamFeatures> load_features(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, std::span<const StreamFeatures> records);

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path);
void save_detections(const std::filesystem::path& path, std::span<const DetectionRecord> records);

EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

ClassVocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const std::filesystem::path& path, const ClassVocabulary& vocab);

std::vector<VideoSample> load_samples(const std::filesystem::path& path);
void save_samples(const std::filesystem::path& path, std::span<const VideoSample> samples);

LinearModel load_linear_model(const std::filesystem::path& path);
void save_linear_model(const std::filesystem::path& path, const LinearModel& model);

NetVladParams load_netvlad_params(const std::filesystem::path& path);
void save_netvlad_params(const std::filesystem::path& path, const NetVladParams& params);

// video_id<TAB>tag<TAB>v1,...,vN; tag is an encoder name for representations
// and a pipeline name (p1/p2/joint) for predictions.
struct TaggedVector {
  std::string video_id;
  std::string tag;
  Vec values;
};
std::vector<TaggedVector> load_tagged_vectors(const std::filesystem::path& path);
void save_tagged_vectors(const std::filesystem::path& path, std::span<const TaggedVector> rows);

}  // namespace a3d::io
