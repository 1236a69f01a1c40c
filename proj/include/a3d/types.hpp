#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace a3d {

using Vec = std::vector<double>;

// Thrown on malformed or contract-violating input data (files, configs).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a computation produces or receives non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the identical double.
std::string fmt_double(double v);
bool parse_double(std::string_view s, double& out);

std::string to_lower(std::string_view s);

// Splits an action label into lowercase words. Handles camel case
// ("PlayingGuitar"), underscores, hyphens and spaces. Throws
// ValidationError if the label contains no letters or digits.
std::vector<std::string> parse_label(std::string_view label);

bool all_finite(std::span<const double> v);

class ClassVocabulary {
 public:
  ClassVocabulary() = default;
  // Validates: labels non-empty, unique. Index order = input order.
  static ClassVocabulary from_labels(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::string& label(std::size_t idx) const { return labels_.at(idx); }
  const std::vector<std::string>& labels() const { return labels_; }
  // -1 when absent.
  int index_of(const std::string& label) const;
  // parse_label applied to the label at idx.
  std::vector<std::string> label_words(std::size_t idx) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

enum class Stream { spatial, temporal };

std::string_view stream_name(Stream s);
std::optional<Stream> stream_from_name(std::string_view name);

struct StreamFeatures {
  std::string video_id;
  Stream stream = Stream::spatial;
  Vec vector;
};

struct BBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;
};

struct DetectionRecord {
  std::string video_id;
  long frame_index = 0;
  std::vector<std::string> label_words;
  double confidence = 0;
  BBox bbox;
  std::optional<Vec> feature;
};

// Validates one record against the type invariants; throws ValidationError
// with `where` prepended on violation.
void validate_detection(const DetectionRecord& rec, const std::string& where);

class EmbeddingTable {
 public:
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  // Lookup is lowercase-normalized. nullptr when absent.
  const Vec* find(std::string_view word) const;
  // Inserts (lowercased key); returns false if the word was already present
  // (the new vector still replaces the old one: last wins).
  bool insert(std::string_view word, Vec v);
  // Words in sorted order, for deterministic serialization.
  std::vector<std::string> sorted_words() const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vec> entries_;
};

enum class Split { train, test };

std::string_view split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

struct VideoSample {
  std::string video_id;
  Split split = Split::train;
  int split_index = 1;  // 1..3
  int true_label = 0;
};

struct LinearModel {
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::vector<double> weights;  // row-major [num_classes][input_dim]
  std::vector<double> biases;   // [num_classes]

  static LinearModel zeros(std::size_t num_classes, std::size_t input_dim);
  double weight(std::size_t c, std::size_t d) const {
    return weights[c * input_dim + d];
  }
  std::span<const double> row(std::size_t c) const {
    return {weights.data() + c * input_dim, input_dim};
  }
  void validate() const;  // finite entries, consistent dimensions
};

// True when every entry is >= 0 and the entries sum to 1 within tol.
bool is_distribution(std::span<const double> p, double tol = 1e-9);
// Throws NumericError naming `what` when is_distribution fails.
void check_distribution(std::span<const double> p, const char* what);

// Lowest index wins ties.
std::size_t argmax_lowest(std::span<const double> v);

}  // namespace a3d
