#include "greybox/dataset.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "greybox/random.hpp"
#include "greybox/text.hpp"

namespace greybox {

namespace {

constexpr std::string_view kManifestHeader = "greybox-manifest";
constexpr int kManifestVersion = 1;

bool valid_sample_id(std::string_view id) {
  if (id.empty() || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

BBox parse_box(std::string_view tok) {
  std::vector<int> parts;
  std::size_t start = 0;
  while (start <= tok.size()) {
    auto comma = tok.find(',', start);
    if (comma == std::string_view::npos) comma = tok.size();
    parts.push_back(static_cast<int>(text::parse_int(tok.substr(start, comma - start))));
    start = comma + 1;
  }
  if (parts.size() != 5) throw std::invalid_argument("box must be attr,x,y,w,h: '" + std::string(tok) + "'");
  return BBox{parts[0], parts[1], parts[2], parts[3], parts[4]};
}

void check_box(const BBox& b, int height, int width, const std::string& sample_id) {
  if (b.w <= 0 || b.h <= 0) {
    throw ValidationError("sample '" + sample_id + "': box for attribute " +
                          std::to_string(b.attribute) + " has non-positive extent");
  }
  if (b.x < 0 || b.y < 0 || b.x + b.w > width || b.y + b.h > height) {
    throw ValidationError("sample '" + sample_id + "': box for attribute " +
                          std::to_string(b.attribute) + " lies outside the " +
                          std::to_string(height) + "x" + std::to_string(width) + " image");
  }
}

template <typename T>
std::vector<T> read_grid(std::istream& in, int height, int width, const std::string& source,
                         std::size_t& line_no, T (*convert)(std::string_view)) {
  std::vector<T> cells;
  cells.reserve(static_cast<std::size_t>(height) * static_cast<std::size_t>(width));
  std::string line;
  for (int row = 0; row < height; ++row) {
    if (!std::getline(in, line)) {
      throw ParseError(source, line_no + 1, "expected " + std::to_string(height) + " rows, got " +
                                                std::to_string(row));
    }
    ++line_no;
    std::istringstream fields(line);
    std::string tok;
    int col = 0;
    while (fields >> tok) {
      if (col == width) {
        throw ParseError(source, line_no, "row has more than " + std::to_string(width) + " values");
      }
      try {
        cells.push_back(convert(tok));
      } catch (const std::invalid_argument& e) {
        throw ParseError(source, line_no, e.what());
      }
      ++col;
    }
    if (col != width) {
      throw ParseError(source, line_no, "row has " + std::to_string(col) + " values, expected " +
                                            std::to_string(width));
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) throw ParseError(source, line_no, "trailing content after grid");
  }
  return cells;
}

AttributeId convert_label(std::string_view tok) {
  auto v = text::parse_int(tok);
  if (v < 0) throw std::invalid_argument("negative attribute id " + std::string(tok));
  return static_cast<AttributeId>(v);
}

double convert_confidence(std::string_view tok) {
  double v = text::parse_double(tok);
  if (v < 0.0 || v > 1.0) throw std::invalid_argument("confidence " + std::string(tok) + " outside [0, 1]");
  return v;
}

std::pair<int, int> read_shape(std::istream& in, const std::string& source, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto toks = text::tokenize(line);
    if (toks.size() != 2) throw ParseError(source, line_no, "expected header 'H W'");
    try {
      auto h = text::parse_int(toks[0]);
      auto w = text::parse_int(toks[1]);
      if (h <= 0 || w <= 0) throw std::invalid_argument("grid dimensions must be positive");
      return {static_cast<int>(h), static_cast<int>(w)};
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  throw ParseError(source, line_no + 1, "missing 'H W' header");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SegMap / AttributeVector

SegMap::SegMap(int height, int width)
    : height_(height),
      width_(width),
      labels_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), kBackground) {
  if (height <= 0 || width <= 0) throw ValidationError("segmentation map dimensions must be positive");
}

SegMap::SegMap(int height, int width, std::vector<AttributeId> labels,
               std::optional<std::vector<double>> confidence)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (height <= 0 || width <= 0) throw ValidationError("segmentation map dimensions must be positive");
  if (labels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ValidationError("label grid size does not match " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
  if (confidence) set_confidence(std::move(*confidence));
}

void SegMap::set_confidence(std::vector<double> confidence) {
  if (confidence.size() != labels_.size()) {
    throw ValidationError("confidence grid shape differs from label grid");
  }
  for (double c : confidence) {
    if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("confidence value outside [0, 1]");
  }
  confidence_ = std::move(confidence);
}

AttributeVector AttributeVector::from_ids(std::size_t size, std::span<const AttributeId> ids) {
  AttributeVector v(size);
  for (AttributeId id : ids) {
    if (id < 1 || static_cast<std::size_t>(id) > size) {
      throw ValidationError("attribute id " + std::to_string(id) + " outside vector of length " +
                            std::to_string(size));
    }
    v.set(static_cast<std::size_t>(id - 1));
  }
  return v;
}

std::size_t AttributeVector::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<AttributeId> AttributeVector::ids() const {
  std::vector<AttributeId> out;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) out.push_back(static_cast<AttributeId>(j + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

void VectorizeConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("vectorize tau must lie in [0, 1]");
  if (min_pixels < 1) throw ValidationError("vectorize min_pixels must be >= 1");
}

void validate_segmap(const SegMap& segmap, const AttributeVocabulary& vocab) {
  for (AttributeId id : segmap.labels()) {
    if (id != kBackground && !vocab.contains(id)) {
      throw ValidationError("segmentation map contains unknown attribute id " + std::to_string(id));
    }
  }
}

void TripleDataset::validate() const {
  std::set<std::string> seen;
  for (const auto& s : samples) {
    if (!valid_sample_id(s.id)) throw ValidationError("invalid sample id '" + s.id + "'");
    if (!seen.insert(s.id).second) throw ValidationError("duplicate sample id '" + s.id + "'");
    if (!classes.contains(s.label)) {
      throw ValidationError("sample '" + s.id + "': unknown class id " + std::to_string(s.label));
    }
    for (const auto& b : s.boxes) {
      if (!attributes.contains(b.attribute)) {
        throw ValidationError("sample '" + s.id + "': unknown attribute id " +
                              std::to_string(b.attribute));
      }
      check_box(b, s.height, s.width, s.id);
    }
    if (s.gt_segmap.height() != s.height || s.gt_segmap.width() != s.width) {
      throw ValidationError("sample '" + s.id + "': segmentation map shape mismatch");
    }
    try {
      validate_segmap(s.gt_segmap, attributes);
    } catch (const ValidationError& e) {
      throw ValidationError("sample '" + s.id + "': " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Rasterization and vectorization

SegMap rasterize_bboxes(std::span<const BBox> boxes, int height, int width) {
  SegMap map(height, width);
  for (const auto& b : boxes) {
    if (b.w <= 0 || b.h <= 0 || b.x < 0 || b.y < 0 || b.x + b.w > width || b.y + b.h > height) {
      throw ValidationError("box for attribute " + std::to_string(b.attribute) +
                            " is degenerate or out of bounds");
    }
    if (b.attribute <= kBackground) throw ValidationError("box has invalid attribute id");
  }
  // Winner per pixel: smallest area, then lowest attribute id. Track the
  // winning key instead of sorting so the result is independent of box order.
  std::vector<std::pair<long, AttributeId>> best(map.cell_count(), {-1, kBackground});
  for (const auto& b : boxes) {
    const std::pair<long, AttributeId> key{b.area(), b.attribute};
    for (int r = b.y; r < b.y + b.h; ++r) {
      for (int c = b.x; c < b.x + b.w; ++c) {
        auto& cell = best[static_cast<std::size_t>(r) * width + c];
        if (cell.first < 0 || key < cell) cell = key;
      }
    }
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto& cell = best[static_cast<std::size_t>(r) * width + c];
      if (cell.first >= 0) map.set(r, c, cell.second);
    }
  }
  return map;
}

AttributeVector vectorize(const SegMap& segmap, const AttributeVocabulary& vocab,
                          const VectorizeConfig& cfg) {
  cfg.validate();
  std::vector<int> qualifying(vocab.size(), 0);
  const auto labels = segmap.labels();
  const auto conf = segmap.confidence();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const AttributeId id = labels[i];
    if (id == kBackground) continue;
    if (!vocab.contains(id)) {
      throw ValidationError("segmentation map contains unknown attribute id " + std::to_string(id));
    }
    const double c = conf.empty() ? 1.0 : conf[i];
    if (c >= cfg.tau) ++qualifying[static_cast<std::size_t>(id - 1)];
  }
  AttributeVector out(vocab.size());
  for (std::size_t j = 0; j < qualifying.size(); ++j) {
    if (qualifying[j] >= cfg.min_pixels) out.set(j);
  }
  return out;
}

std::map<AttributeId, int> count_regions(const SegMap& segmap) {
  const int h = segmap.height();
  const int w = segmap.width();
  std::vector<std::uint8_t> visited(segmap.cell_count(), 0);
  std::map<AttributeId, int> counts;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const AttributeId id = segmap.at(r, c);
      if (id == kBackground || visited[static_cast<std::size_t>(r) * w + c]) continue;
      ++counts[id];
      stack.assign(1, {r, c});
      visited[static_cast<std::size_t>(r) * w + c] = 1;
      while (!stack.empty()) {
        auto [cr, cc] = stack.back();
        stack.pop_back();
        constexpr int dr[] = {-1, 1, 0, 0};
        constexpr int dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int nr = cr + dr[k];
          const int nc = cc + dc[k];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          auto& v = visited[static_cast<std::size_t>(nr) * w + nc];
          if (v || segmap.at(nr, nc) != id) continue;
          v = 1;
          stack.emplace_back(nr, nc);
        }
      }
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Manifest

TripleDataset parse_manifest(std::istream& in, const std::string& source) {
  std::vector<std::pair<int, std::string>> attrs;
  std::vector<std::pair<int, std::string>> classes;
  std::vector<Sample> samples;
  std::vector<std::size_t> sample_lines;
  bool header_seen = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::vector<std::string> toks;
    try {
      toks = text::tokenize(body);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
    try {
      if (!header_seen) {
        if (toks.size() != 2 || toks[0] != kManifestHeader) {
          throw std::invalid_argument("expected '" + std::string(kManifestHeader) + " " +
                                      std::to_string(kManifestVersion) + "' header");
        }
        if (text::parse_int(toks[1]) != kManifestVersion) {
          throw std::invalid_argument("unsupported manifest version " + toks[1]);
        }
        header_seen = true;
      } else if (toks[0] == "attribute" || toks[0] == "class") {
        if (toks.size() != 3) throw std::invalid_argument("expected '" + toks[0] + " <id> \"<name>\"'");
        auto& target = toks[0] == "attribute" ? attrs : classes;
        target.emplace_back(static_cast<int>(text::parse_int(toks[1])), toks[2]);
      } else if (toks[0] == "sample") {
        if (toks.size() < 4) throw std::invalid_argument("expected 'sample <id> <class> <H>x<W> boxes...'");
        Sample s;
        s.id = toks[1];
        if (!valid_sample_id(s.id)) throw std::invalid_argument("invalid sample id '" + s.id + "'");
        s.label = static_cast<ClassId>(text::parse_int(toks[2]));
        const auto x = toks[3].find('x');
        if (x == std::string::npos) throw std::invalid_argument("image size must be <H>x<W>");
        s.height = static_cast<int>(text::parse_int(std::string_view(toks[3]).substr(0, x)));
        s.width = static_cast<int>(text::parse_int(std::string_view(toks[3]).substr(x + 1)));
        if (s.height <= 0 || s.width <= 0) throw std::invalid_argument("image size must be positive");
        for (std::size_t i = 4; i < toks.size(); ++i) s.boxes.push_back(parse_box(toks[i]));
        samples.push_back(std::move(s));
        sample_lines.push_back(line_no);
      } else {
        throw std::invalid_argument("unknown record type '" + toks[0] + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (!header_seen) throw ParseError(source, line_no + 1, "empty manifest");

  TripleDataset ds;
  ds.attributes = AttributeVocabulary(std::move(attrs));
  ds.classes = ClassVocabulary(std::move(classes));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& s = samples[i];
    if (!seen.insert(s.id).second) {
      throw ParseError(source, sample_lines[i], "duplicate sample id '" + s.id + "'");
    }
    if (!ds.classes.contains(s.label)) {
      throw ValidationError("sample '" + s.id + "': unknown class id " + std::to_string(s.label));
    }
    for (const auto& b : s.boxes) {
      if (!ds.attributes.contains(b.attribute)) {
        throw ValidationError("sample '" + s.id + "': unknown attribute id " +
                              std::to_string(b.attribute));
      }
      check_box(b, s.height, s.width, s.id);
    }
    s.gt_segmap = rasterize_bboxes(s.boxes, s.height, s.width);
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  ds.samples = std::move(samples);
  return ds;
}

TripleDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_manifest(in, path.string());
}

void write_manifest(std::ostream& out, const TripleDataset& ds) {
  out << kManifestHeader << ' ' << kManifestVersion << '\n';
  for (std::size_t i = 0; i < ds.attributes.size(); ++i) {
    out << "attribute " << (i + 1) << ' ' << text::quote(ds.attributes.names()[i]) << '\n';
  }
  for (std::size_t i = 0; i < ds.classes.size(); ++i) {
    out << "class " << i << ' ' << text::quote(ds.classes.names()[i]) << '\n';
  }
  for (const auto& s : ds.samples) {
    out << "sample " << s.id << ' ' << s.label << ' ' << s.height << 'x' << s.width;
    for (const auto& b : s.boxes) {
      out << ' ' << b.attribute << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h;
    }
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const TripleDataset& ds) {
  auto out = open_out(path);
  write_manifest(out, ds);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// SegMap files

SegMap parse_segmap(std::istream& in, const std::string& source) {
  std::size_t line_no = 0;
  auto [h, w] = read_shape(in, source, line_no);
  auto cells = read_grid<AttributeId>(in, h, w, source, line_no, &convert_label);
  return SegMap(h, w, std::move(cells));
}

std::vector<double> parse_confidence(std::istream& in, int height, int width,
                                     const std::string& source) {
  std::size_t line_no = 0;
  auto [h, w] = read_shape(in, source, line_no);
  if (h != height || w != width) {
    throw ParseError(source, line_no, "confidence grid is " + std::to_string(h) + "x" +
                                          std::to_string(w) + ", labels are " +
                                          std::to_string(height) + "x" + std::to_string(width));
  }
  return read_grid<double>(in, h, w, source, line_no, &convert_confidence);
}

void write_segmap(std::ostream& out, const SegMap& segmap) {
  out << segmap.height() << ' ' << segmap.width() << '\n';
  for (int r = 0; r < segmap.height(); ++r) {
    for (int c = 0; c < segmap.width(); ++c) {
      if (c) out << ' ';
      out << segmap.at(r, c);
    }
    out << '\n';
  }
}

void write_confidence(std::ostream& out, const SegMap& segmap) {
  out << segmap.height() << ' ' << segmap.width() << '\n';
  for (int r = 0; r < segmap.height(); ++r) {
    for (int c = 0; c < segmap.width(); ++c) {
      if (c) out << ' ';
      out << text::format_double(segmap.confidence_at(r, c));
    }
    out << '\n';
  }
}

SegMap read_segmap_file(const std::filesystem::path& labels,
                        const std::optional<std::filesystem::path>& confidence) {
  auto in = open_in(labels);
  SegMap map = parse_segmap(in, labels.string());
  if (confidence) {
    auto cin = open_in(*confidence);
    map.set_confidence(parse_confidence(cin, map.height(), map.width(), confidence->string()));
  }
  return map;
}

void write_segmap_files(const std::filesystem::path& labels, const SegMap& segmap,
                        const std::optional<std::filesystem::path>& confidence) {
  {
    auto out = open_out(labels);
    write_segmap(out, segmap);
    if (!out) throw IoError("failed writing '" + labels.string() + "'");
  }
  if (confidence) {
    auto out = open_out(*confidence);
    write_confidence(out, segmap);
    if (!out) throw IoError("failed writing '" + confidence->string() + "'");
  }
}

// ---------------------------------------------------------------------------

std::vector<AttributeVector> ground_truth_vectors(const TripleDataset& ds,
                                                  const VectorizeConfig& cfg) {
  std::vector<AttributeVector> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(vectorize(s.gt_segmap, ds.attributes, cfg));
  return out;
}

std::vector<ClassId> labels_of(const TripleDataset& ds) {
  std::vector<ClassId> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(s.label);
  return out;
}

std::pair<TripleDataset, TripleDataset> split_dataset(const TripleDataset& ds,
                                                      double test_fraction,
                                                      std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ValidationError("test fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> order(ds.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(order.size()));
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  TripleDataset train{ds.attributes, ds.classes, {}};
  TripleDataset test{ds.attributes, ds.classes, {}};
  for (auto i : train_idx) train.samples.push_back(ds.samples[i]);
  for (auto i : test_idx) test.samples.push_back(ds.samples[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace greybox
