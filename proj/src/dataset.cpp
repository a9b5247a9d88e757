#include "selfpaced/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace selfpaced {

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("dataset '" + name + "': " + std::to_string(labels.size()) +
                                " labels for " + features.shape() + " features");
  }
  if (class_count == 0) throw std::invalid_argument("dataset '" + name + "': no classes");
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t y : labels) {
    if (y >= class_count) {
      throw std::invalid_argument("dataset '" + name + "': label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(class_count) + ")");
    }
    ++counts[y];
  }
  for (std::size_t c = 0; c < class_count; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("dataset '" + name + "': class " + std::to_string(c) +
                                  " has no samples");
    }
  }
  if (!subcluster_ids.empty() && subcluster_ids.size() != labels.size()) {
    throw std::invalid_argument("dataset '" + name + "': subcluster metadata length mismatch");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.features = gather_rows(features, indices);
  out.class_count = class_count;
  out.subcluster_centers = subcluster_centers;
  out.image_height = image_height;
  out.image_width = image_width;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  if (!subcluster_ids.empty()) {
    out.subcluster_ids.reserve(indices.size());
    for (std::size_t i : indices) out.subcluster_ids.push_back(subcluster_ids[i]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t y : labels) ++counts[y];
  return counts;
}

Dataset gen_gaussian_blobs(const BlobsSpec& spec, Rng& rng) {
  if (spec.classes == 0 || spec.subclusters_per_class == 0 || spec.samples_per_subcluster == 0 ||
      spec.dim == 0) {
    throw std::invalid_argument("gen_gaussian_blobs: all counts must be >= 1");
  }
  if (!(spec.cluster_std > 0.0)) throw std::invalid_argument("gen_gaussian_blobs: cluster_std must be > 0");

  const std::size_t groups = spec.classes * spec.subclusters_per_class;
  const std::size_t n = groups * spec.samples_per_subcluster;

  Dataset ds;
  ds.name = "blobs";
  ds.class_count = spec.classes;
  ds.subcluster_centers = Matrix(groups, spec.dim);
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t t = 0; t < spec.dim; ++t)
      ds.subcluster_centers(g, t) = rng.uniform(-0.5 * spec.center_spread, 0.5 * spec.center_spread);

  ds.features = Matrix(n, spec.dim);
  ds.labels.reserve(n);
  ds.subcluster_ids.reserve(n);
  std::size_t row = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t s = 0; s < spec.samples_per_subcluster; ++s, ++row) {
      for (std::size_t t = 0; t < spec.dim; ++t) {
        ds.features(row, t) = rng.normal(ds.subcluster_centers(g, t), spec.cluster_std);
      }
      ds.labels.push_back(g / spec.subclusters_per_class);
      ds.subcluster_ids.push_back(g);
    }
  }
  return ds;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::open_failed, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
  if (buf.size() < offset + 4) {
    throw IdxError(IdxError::Kind::truncated, "'" + path.string() + "': truncated header");
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    std::ostringstream msg;
    msg << "'" << path.string() << "': bad magic 0x" << std::hex << got << ", expected 0x" << want;
    throw IdxError(IdxError::Kind::bad_magic, msg.str());
  }
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  check_magic(read_be32(images, 0, images_path), 0x00000803u, images_path);
  check_magic(read_be32(labels, 0, labels_path), 0x00000801u, labels_path);

  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t height = read_be32(images, 8, images_path);
  const std::size_t width = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);

  const std::size_t pixels = height * width;
  if (images.size() < 16 + n_images * pixels) {
    throw IdxError(IdxError::Kind::truncated, "'" + images_path.string() + "': expected " +
                                                  std::to_string(n_images * pixels) +
                                                  " pixel bytes, found " +
                                                  std::to_string(images.size() - 16));
  }
  if (labels.size() < 8 + n_labels) {
    throw IdxError(IdxError::Kind::truncated, "'" + labels_path.string() + "': expected " +
                                                  std::to_string(n_labels) + " label bytes, found " +
                                                  std::to_string(labels.size() - 8));
  }
  if (n_images != n_labels) {
    throw IdxError(IdxError::Kind::count_mismatch, std::to_string(n_images) + " images but " +
                                                       std::to_string(n_labels) + " labels");
  }

  Dataset ds;
  ds.name = images_path.stem().string();
  ds.image_height = height;
  ds.image_width = width;
  ds.features = Matrix(n_images, pixels);
  auto out = ds.features.values();
  for (std::size_t i = 0; i < n_images * pixels; ++i) out[i] = static_cast<double>(images[16 + i]) / 255.0;
  ds.labels.reserve(n_labels);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    ds.labels.push_back(labels[8 + i]);
    max_label = std::max<std::size_t>(max_label, labels[8 + i]);
  }
  ds.class_count = n_labels == 0 ? 0 : max_label + 1;
  ds.validate();
  return ds;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  const auto res = std::from_chars(begin, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path.string() + "': missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw std::runtime_error("'" + path.string() + "': no column named '" + label_column + "'");
  }
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("'" + path.string() + "' line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == label_idx) {
        raw_labels.push_back(fields[j]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw std::runtime_error("'" + path.string() + "' line " + std::to_string(line_no) + ": column '" +
                                 header[j] + "' is not numeric: '" + fields[j] + "'");
      }
      values.push_back(v);
    }
  }

  bool numeric = true;
  std::map<double, std::size_t> numeric_ids;
  std::map<std::string, std::size_t> string_ids;
  for (const auto& s : raw_labels) {
    double v = 0.0;
    if (numeric && parse_double(s, v)) {
      numeric_ids.emplace(v, 0);
    } else {
      numeric = false;
    }
    string_ids.emplace(s, 0);
  }
  std::size_t next = 0;
  if (numeric) {
    for (auto& [k, id] : numeric_ids) id = next++;
  } else {
    for (auto& [k, id] : string_ids) id = next++;
  }

  Dataset ds;
  ds.name = path.stem().string();
  ds.features = Matrix(raw_labels.size(), dim, std::move(values));
  ds.class_count = next;
  ds.labels.reserve(raw_labels.size());
  for (const auto& s : raw_labels) {
    double v = 0.0;
    ds.labels.push_back(numeric ? (parse_double(s, v), numeric_ids.at(v)) : string_ids.at(s));
  }
  ds.validate();
  return ds;
}

Split split(std::size_t n, double test_fraction, Rng& rng) {
  if (n < 2) throw std::invalid_argument("split: need at least 2 samples");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span(order));
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  Split out;
  out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

Dataset standardize(const Dataset& ds, const Split& split) {
  if (split.train.empty()) throw std::invalid_argument("standardize: empty training split");
  const std::size_t d = ds.dim();
  std::vector<double> mu(d, 0.0);
  std::vector<double> sd(d, 0.0);
  const auto& x = ds.features;
  const double count = static_cast<double>(split.train.size());
  for (std::size_t j = 0; j < d; ++j) {
    // Shifted accumulation keeps constant columns exact.
    const double shift = x(split.train.front(), j);
    double acc = 0.0;
    for (std::size_t i : split.train) acc += x(i, j) - shift;
    mu[j] = shift + acc / count;
    double var = 0.0;
    for (std::size_t i : split.train) var += (x(i, j) - mu[j]) * (x(i, j) - mu[j]);
    sd[j] = std::max(std::sqrt(var / count), 1e-8);
  }
  Dataset out = ds;
  for (std::size_t i = 0; i < out.features.rows(); ++i) {
    auto row = out.features.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - mu[j]) / sd[j];
  }
  return out;
}

void horizontal_flip(std::span<double> image, std::size_t height, std::size_t width) {
  if (image.size() != height * width) throw DimensionError("horizontal_flip: image size mismatch");
  for (std::size_t r = 0; r < height; ++r) {
    auto row = image.subspan(r * width, width);
    std::reverse(row.begin(), row.end());
  }
}

}  // namespace selfpaced
