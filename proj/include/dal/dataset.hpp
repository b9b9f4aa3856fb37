#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dal/mlp.hpp"

namespace dal {

struct Dataset {
  Matrix features;  // num_examples x dim, unit-scaled
  std::vector<ClassId> labels;
  std::size_t class_count = 0;
  std::optional<std::vector<std::size_t>> cluster_ids;  // synthetic data only

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Throws ContractViolation when the invariants do not hold.
  void validate() const;

  /// Rows `rows` of this dataset, in order (labels and cluster ids follow).
  Dataset subset(std::span<const Index> rows) const;
};

/// Partition of [0, n) into a labeled set L and an unlabeled set U, both
/// kept sorted ascending.
class Pool {
 public:
  Pool() = default;
  static Pool all_unlabeled(std::size_t n);
  Pool(std::vector<Index> labeled, std::vector<Index> unlabeled);

  const std::vector<Index>& labeled() const { return labeled_; }
  const std::vector<Index>& unlabeled() const { return unlabeled_; }
  std::size_t size() const { return labeled_.size() + unlabeled_.size(); }
  bool is_labeled(Index i) const;

  /// Moves the given indices from U to L. Every index must currently be in U
  /// and appear once.
  void label(std::span<const Index> indices);

  void check_invariants() const;
  bool operator==(const Pool&) const = default;

 private:
  std::vector<Index> labeled_;
  std::vector<Index> unlabeled_;
};

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;  // diagonal
  std::vector<ClassId> class_ids;              // one per component
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

/// Draws from the mixture without normalization.
Dataset sample_gaussian_mixture(const MixtureSpec& spec);

/// Draws from the mixture and unit-interval normalizes each column.
Dataset synth_gaussian_mixture(const MixtureSpec& spec);

/// Per-column affine map sending min to 0 and max to 1; constant columns map to 0.
Matrix normalize_unit_interval(const Matrix& features);

/// Moves `size` uniformly chosen indices from U to L.
Pool draw_initial_batch(const Pool& pool, std::size_t size, std::uint64_t seed);

// ---------------------------------------------------------------------------
// IDX files (big-endian; magic 2051 for images, 2049 for labels)

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// Flattened images, one row per image, byte b scaled to b/255.
Matrix parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<ClassId> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Inverse of parse_idx_images; `item_dims` are the per-image dimensions
/// (e.g. {28, 28}) and their product must equal the column count.
std::vector<std::uint8_t> encode_idx_images(const Matrix& images,
                                            std::span<const std::uint32_t> item_dims);
std::vector<std::uint8_t> encode_idx_labels(std::span<const ClassId> labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Loads an image/label file pair; class_count is max label + 1 (at least 2).
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace dal
