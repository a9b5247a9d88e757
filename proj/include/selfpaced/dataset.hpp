#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/rng.hpp"

namespace selfpaced {

/// Immutable sample store: N x D features plus class ids in [0, class_count).
struct Dataset {
  std::string name;
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  // Generator ground truth for synthetic data; empty otherwise.
  std::vector<std::size_t> subcluster_ids;
  Matrix subcluster_centers;

  // Set for image data (IDX); enables horizontal flips at batch assembly.
  std::size_t image_height = 0;
  std::size_t image_width = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  bool is_image() const { return image_height > 0 && image_width > 0; }

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;

  /// Rows selected by `indices`, in that order. Keeps class_count and metadata.
  Dataset subset(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> class_counts() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct BlobsSpec {
  std::size_t classes = 8;
  std::size_t subclusters_per_class = 3;
  std::size_t samples_per_subcluster = 100;
  std::size_t dim = 10;
  double center_spread = 10.0;
  double cluster_std = 1.0;
};

/// Isotropic Gaussian subclusters around centres drawn uniformly from the
/// hypercube [-spread/2, spread/2]^dim. Subcluster s of class c has global id
/// c * subclusters_per_class + s; rows are grouped by subcluster.
Dataset gen_gaussian_blobs(const BlobsSpec& spec, Rng& rng);

class IdxError : public std::runtime_error {
 public:
  enum class Kind { open_failed, bad_magic, truncated, count_mismatch };
  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// MNIST-convention IDX pair: magic 0x00000803 for images (N, H, W) and
/// 0x00000801 for labels (N), all counts big-endian u32. Pixels map to [0, 1]
/// by dividing by 255.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// CSV with a header row. Every column except `label_column` must be numeric.
/// Distinct label values are mapped to contiguous ids in sorted order (numeric
/// order when all labels parse as numbers).
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Random partition of [0, N); both parts non-empty and sorted ascending.
Split split(std::size_t n, double test_fraction, Rng& rng);

/// Standardises every row with the per-column mean and population standard
/// deviation of the training rows; the deviation is floored at 1e-8.
Dataset standardize(const Dataset& ds, const Split& split);

/// Mirrors an H x W row-major image in place.
void horizontal_flip(std::span<double> image, std::size_t height, std::size_t width);

}  // namespace selfpaced
