#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uap/tensor.hpp"

namespace uap {

/// Labelled feature vectors: images [N x d], labels in [0, C), C class names.
class Dataset {
 public:
  Dataset(Tensor images, std::vector<std::uint32_t> labels,
          std::vector<std::string> class_names);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return images_.shape()[1]; }
  std::size_t num_classes() const noexcept { return class_names_.size(); }

  const Tensor& images() const noexcept { return images_; }
  std::span<const float> image(std::size_t i) const { return images_.row(i); }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  /// Rows selected by `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Per-class example counts.
  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Tensor images_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::string> class_names_;
};

struct BlobConfig {
  std::size_t num_classes = 10;
  std::size_t per_class = 100;
  std::size_t dim = 32;
  /// Minimum pairwise center distance in units of noise_sigma.
  double margin = 3.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
};

/// Center draws attempted per class before generate_blobs gives up.
inline constexpr int kMaxCenterAttempts = 10000;

/// Gaussian clusters standing in for an image distribution.
///
/// Centers are drawn uniformly from the non-negative cube
/// [0, 2 * margin * sigma]^d (pixel-like: every class shares a positive
/// offset from the origin) and rejection-sampled until every pair is at
/// least margin * sigma apart. Points are center + sigma * N(0, I).
/// Examples are emitted class by class.
Dataset generate_blobs(const BlobConfig& config);

/// The center-placement step of generate_blobs; consumes from `rng` exactly
/// as generate_blobs does before drawing points.
std::vector<std::vector<double>> generate_blob_centers(const BlobConfig& config, Rng& rng);

/// Indices of a class-balanced sample: exactly `per_class` rows of every
/// class, in an order shuffled by `seed`.
std::vector<std::size_t> sample_attack_indices(const Dataset& dataset,
                                               std::size_t per_class,
                                               std::uint64_t seed);
Dataset sample_attack_set(const Dataset& dataset, std::size_t per_class,
                          std::uint64_t seed);
/// Indices in [0, n) not present in `taken`, ascending.
std::vector<std::size_t> complement_indices(std::size_t n,
                                            std::span<const std::size_t> taken);

/// Median Euclidean norm of the rows.
double median_norm(const Dataset& dataset);
/// Smallest and largest value over all images.
std::pair<float, float> value_range(const Dataset& dataset);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::vector<unsigned char> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::vector<unsigned char> bytes);

}  // namespace uap
