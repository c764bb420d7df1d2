#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "greybox/errors.hpp"

namespace greybox {

using AttributeId = int;
using ClassId = int;

inline constexpr AttributeId kBackground = 0;

// Ordered id <-> name table. Ids are contiguous starting at `FirstId`, names
// are unique and non-empty. Attributes start at 1 (0 is background), classes
// start at 0.
template <int FirstId>
class Vocabulary {
 public:
  Vocabulary() = default;

  // Entries may arrive in any order; they are stored sorted by id.
  explicit Vocabulary(std::vector<std::pair<int, std::string>> entries) {
    std::sort(entries.begin(), entries.end());
    names_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& [id, name] = entries[i];
      if (id != FirstId + static_cast<int>(i)) {
        throw ValidationError("vocabulary ids must be unique and contiguous from " +
                              std::to_string(FirstId) + "; got id " + std::to_string(id));
      }
      if (name.empty()) {
        throw ValidationError("vocabulary id " + std::to_string(id) + " has an empty name");
      }
      if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
        throw ValidationError("duplicate vocabulary name '" + name + "'");
      }
      names_.push_back(name);
    }
  }

  // Ids are assigned in order: FirstId, FirstId + 1, ...
  static Vocabulary from_names(const std::vector<std::string>& names) {
    std::vector<std::pair<int, std::string>> entries;
    entries.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      entries.emplace_back(FirstId + static_cast<int>(i), names[i]);
    }
    return Vocabulary(std::move(entries));
  }

  static constexpr int first_id() { return FirstId; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

  bool contains(int id) const noexcept {
    return id >= FirstId && id < FirstId + static_cast<int>(names_.size());
  }

  const std::string& name(int id) const {
    if (!contains(id)) throw ValidationError("unknown vocabulary id " + std::to_string(id));
    return names_[static_cast<std::size_t>(id - FirstId)];
  }

  std::optional<int> find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return FirstId + static_cast<int>(it - names_.begin());
  }

  // names()[i] is the name of id FirstId + i.
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> names_;
};

using AttributeVocabulary = Vocabulary<1>;
using ClassVocabulary = Vocabulary<0>;

struct BBox {
  AttributeId attribute = kBackground;
  int x = 0;  // column of the top-left pixel
  int y = 0;  // row of the top-left pixel
  int w = 0;
  int h = 0;

  long area() const noexcept { return static_cast<long>(w) * h; }
  bool contains(int row, int col) const noexcept {
    return col >= x && col < x + w && row >= y && row < y + h;
  }
  bool operator==(const BBox&) const = default;
};

// Row-major grid of attribute ids with an optional per-pixel confidence grid
// of identical shape.
class SegMap {
 public:
  SegMap() = default;
  SegMap(int height, int width);
  SegMap(int height, int width, std::vector<AttributeId> labels,
         std::optional<std::vector<double>> confidence = std::nullopt);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t cell_count() const noexcept { return labels_.size(); }

  AttributeId at(int row, int col) const { return labels_[index(row, col)]; }
  void set(int row, int col, AttributeId id) { labels_[index(row, col)] = id; }

  std::span<const AttributeId> labels() const noexcept { return labels_; }

  bool has_confidence() const noexcept { return confidence_.has_value(); }
  // 1.0 everywhere when no confidence grid is attached.
  double confidence_at(int row, int col) const {
    return confidence_ ? (*confidence_)[index(row, col)] : 1.0;
  }
  std::span<const double> confidence() const noexcept {
    return confidence_ ? std::span<const double>(*confidence_) : std::span<const double>();
  }
  void set_confidence(std::vector<double> confidence);
  void clear_confidence() noexcept { confidence_.reset(); }

  bool operator==(const SegMap&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<AttributeId> labels_;
  std::optional<std::vector<double>> confidence_;
};

// Binary presence vector; index j corresponds to attribute id j + 1.
class AttributeVector {
 public:
  AttributeVector() = default;
  explicit AttributeVector(std::size_t size) : bits_(size, 0) {}

  static AttributeVector from_ids(std::size_t size, std::span<const AttributeId> ids);
  static AttributeVector from_ids(std::size_t size, std::initializer_list<AttributeId> ids) {
    return from_ids(size, std::span<const AttributeId>(ids.begin(), ids.size()));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  bool test(std::size_t j) const { return bits_.at(j) != 0; }
  void set(std::size_t j, bool on = true) { bits_.at(j) = on ? 1 : 0; }
  void flip(std::size_t j) { bits_.at(j) ^= 1; }
  std::size_t count() const noexcept;
  bool none() const noexcept { return count() == 0; }

  // Present attribute ids in ascending order.
  std::vector<AttributeId> ids() const;
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  auto operator<=>(const AttributeVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct Sample {
  std::string id;
  ClassId label = 0;
  int height = 0;
  int width = 0;
  std::vector<BBox> boxes;
  SegMap gt_segmap;

  bool operator==(const Sample&) const = default;
};

struct TripleDataset {
  AttributeVocabulary attributes;
  ClassVocabulary classes;
  std::vector<Sample> samples;

  // Throws ValidationError naming the first offending sample.
  void validate() const;
  bool operator==(const TripleDataset&) const = default;
};

struct VectorizeConfig {
  double tau = 0.5;    // minimum per-pixel confidence
  int min_pixels = 1;  // qualifying cells needed for an attribute to count

  void validate() const;
};

// Pixels covered by no box are background. A pixel covered by several boxes
// takes the attribute of the smallest-area box; equal areas resolve to the
// lowest attribute id.
SegMap rasterize_bboxes(std::span<const BBox> boxes, int height, int width);

AttributeVector vectorize(const SegMap& segmap, const AttributeVocabulary& vocab,
                          const VectorizeConfig& cfg = {});

// Number of 4-connected regions per attribute id (background excluded).
std::map<AttributeId, int> count_regions(const SegMap& segmap);

void validate_segmap(const SegMap& segmap, const AttributeVocabulary& vocab);

// Dataset manifest (see README for the grammar). Samples come back sorted by id.
TripleDataset parse_manifest(std::istream& in, const std::string& source = "<manifest>");
TripleDataset load_dataset(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const TripleDataset& ds);
void save_dataset(const std::filesystem::path& path, const TripleDataset& ds);

// SegMap text grid: "H W" then H rows of W integers. Confidence files use the
// same layout with decimals in [0, 1].
SegMap parse_segmap(std::istream& labels, const std::string& source = "<segmap>");
std::vector<double> parse_confidence(std::istream& in, int height, int width,
                                     const std::string& source = "<confidence>");
void write_segmap(std::ostream& out, const SegMap& segmap);
void write_confidence(std::ostream& out, const SegMap& segmap);
SegMap read_segmap_file(const std::filesystem::path& labels,
                        const std::optional<std::filesystem::path>& confidence = std::nullopt);
void write_segmap_files(const std::filesystem::path& labels, const SegMap& segmap,
                        const std::optional<std::filesystem::path>& confidence = std::nullopt);

// Ground-truth attribute vectors and labels, in sample order.
std::vector<AttributeVector> ground_truth_vectors(const TripleDataset& ds,
                                                  const VectorizeConfig& cfg = {});
std::vector<ClassId> labels_of(const TripleDataset& ds);

// Deterministic stratification-free split; `test_fraction` of the samples
// (rounded down) go to the second dataset.
std::pair<TripleDataset, TripleDataset> split_dataset(const TripleDataset& ds,
                                                      double test_fraction,
                                                      std::uint64_t seed);

}  // namespace greybox
