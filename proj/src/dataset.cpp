#include "uap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "uap/error.hpp"

namespace uap {

namespace {
constexpr std::string_view kMagic = "UAPD";
constexpr std::uint8_t kVersion = 1;
}  // namespace

Dataset::Dataset(Tensor images, std::vector<std::uint32_t> labels,
                 std::vector<std::string> class_names)
    : images_(std::move(images)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)) {
  if (images_.ndim() != 2) throw std::invalid_argument("dataset images must be [N x d]");
  if (labels_.empty()) throw std::invalid_argument("dataset must not be empty");
  if (images_.shape()[0] != labels_.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(labels_.size()) +
                                " labels for " + std::to_string(images_.shape()[0]) +
                                " images");
  }
  if (class_names_.empty()) throw std::invalid_argument("dataset needs at least one class");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= class_names_.size()) {
      throw std::invalid_argument("label " + std::to_string(labels_[i]) + " of row " +
                                  std::to_string(i) + " is out of range for " +
                                  std::to_string(class_names_.size()) + " classes");
    }
  }
  if (!images_.all_finite()) throw std::invalid_argument("dataset images must be finite");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("subset must not be empty");
  const std::size_t d = dim();
  std::vector<float> data;
  data.reserve(indices.size() * d);
  std::vector<std::uint32_t> labels;
  labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw std::out_of_range("subset index out of range");
    auto row = image(i);
    data.insert(data.end(), row.begin(), row.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(Tensor({indices.size(), d}, std::move(data)), std::move(labels),
                 class_names_);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (auto l : labels_) ++counts[l];
  return counts;
}

std::vector<std::vector<double>> generate_blob_centers(const BlobConfig& config, Rng& rng) {
  if (config.num_classes < 2) throw std::invalid_argument("generate_blobs: need at least 2 classes");
  if (config.per_class < 1) throw std::invalid_argument("generate_blobs: per_class must be >= 1");
  if (config.dim < 2) throw std::invalid_argument("generate_blobs: dim must be >= 2");
  if (!(config.margin > 0.0)) throw std::invalid_argument("generate_blobs: margin must be > 0");
  if (!(config.noise_sigma > 0.0)) {
    throw std::invalid_argument("generate_blobs: noise_sigma must be > 0");
  }

  const std::size_t c = config.num_classes;
  const std::size_t d = config.dim;
  const double min_dist = config.margin * config.noise_sigma;
  const double side = 2.0 * min_dist;

  std::vector<std::vector<double>> centers;
  centers.reserve(c);
  while (centers.size() < c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxCenterAttempts && !placed; ++attempt) {
      std::vector<double> candidate(d);
      for (auto& v : candidate) v = rng.uniform(0.0, side);
      placed = std::all_of(centers.begin(), centers.end(), [&](const auto& other) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          sq += (candidate[j] - other[j]) * (candidate[j] - other[j]);
        }
        return std::sqrt(sq) >= min_dist;
      });
      if (placed) centers.push_back(std::move(candidate));
    }
    if (!placed) {
      throw Error("generate_blobs: could not place class " +
                  std::to_string(centers.size()) + " after " +
                  std::to_string(kMaxCenterAttempts) +
                  " attempts; use a larger dim or a smaller margin");
    }
  }
  return centers;
}

Dataset generate_blobs(const BlobConfig& config) {
  Rng rng(config.seed);
  const auto centers = generate_blob_centers(config, rng);
  const std::size_t c = config.num_classes;
  const std::size_t d = config.dim;

  const std::size_t n = c * config.per_class;
  std::vector<float> data;
  data.reserve(n * d);
  std::vector<std::uint32_t> labels;
  labels.reserve(n);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < config.per_class; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        data.push_back(
            static_cast<float>(centers[k][j] + config.noise_sigma * rng.normal()));
      }
      labels.push_back(static_cast<std::uint32_t>(k));
    }
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < c; ++k) names.push_back("class_" + std::to_string(k));
  return Dataset(Tensor({n, d}, std::move(data)), std::move(labels), std::move(names));
}

std::vector<std::size_t> sample_attack_indices(const Dataset& dataset,
                                               std::size_t per_class,
                                               std::uint64_t seed) {
  if (per_class == 0) throw std::invalid_argument("sample_attack_set: per_class must be >= 1");
  const auto counts = dataset.class_counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] < per_class) {
      throw Error("sample_attack_set: class '" + dataset.class_names()[k] + "' has " +
                  std::to_string(counts[k]) + " examples, need " +
                  std::to_string(per_class));
    }
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::size_t> taken(dataset.num_classes(), 0);
  std::vector<std::size_t> picked;
  picked.reserve(per_class * dataset.num_classes());
  for (auto i : order) {
    auto& t = taken[dataset.label(i)];
    if (t < per_class) {
      ++t;
      picked.push_back(i);
    }
  }
  return picked;
}

Dataset sample_attack_set(const Dataset& dataset, std::size_t per_class,
                          std::uint64_t seed) {
  const auto idx = sample_attack_indices(dataset, per_class, seed);
  return dataset.subset(idx);
}

std::vector<std::size_t> complement_indices(std::size_t n,
                                            std::span<const std::size_t> taken) {
  std::vector<bool> used(n, false);
  for (auto i : taken) {
    if (i < n) used[i] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!used[i]) rest.push_back(i);
  }
  return rest;
}

double median_norm(const Dataset& dataset) {
  std::vector<double> norms(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    norms[i] = lp_norm(dataset.image(i), NormOrder::L2);
  }
  std::sort(norms.begin(), norms.end());
  const std::size_t n = norms.size();
  return n % 2 ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
}

std::pair<float, float> value_range(const Dataset& dataset) {
  auto data = dataset.images().data();
  auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  return {*lo, *hi};
}

std::vector<unsigned char> encode_dataset(const Dataset& dataset) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint8_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.num_classes()));
  for (const auto& name : dataset.class_names()) w.put_string(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.dim()));
  for (float v : dataset.images().data()) w.put<float>(v);
  for (auto l : dataset.labels()) w.put<std::uint32_t>(l);
  return w.bytes();
}

Dataset decode_dataset(std::vector<unsigned char> bytes) {
  const std::size_t total = bytes.size();
  detail::ByteReader r(std::move(bytes));
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  const auto num_classes = r.get<std::uint32_t>("num_classes");
  if (num_classes == 0) r.fail("num_classes", "dataset must have at least one class");
  std::vector<std::string> names;
  for (std::uint32_t k = 0; k < num_classes; ++k) {
    names.push_back(r.get_string("class_name"));
  }
  const auto n = r.get<std::uint32_t>("num_images");
  if (n == 0) r.fail("num_images", "dataset must not be empty");
  const auto d = r.get<std::uint32_t>("dim");
  if (d == 0) r.fail("dim", "dimension must be positive");
  const std::uint64_t expected = (std::uint64_t{n} * d + n) * 4;
  if (total - r.offset() < expected) r.fail("images", "truncated file");

  std::vector<float> data(std::size_t{n} * d);
  const std::size_t data_start = r.offset();
  for (auto& v : data) v = r.get<float>("images");
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw FormatError("images", data_start, "non-finite pixel value");
  }
  std::vector<std::uint32_t> labels(n);
  for (auto& l : labels) {
    const std::size_t at = r.offset();
    l = r.get<std::uint32_t>("labels");
    if (l >= num_classes) {
      throw FormatError("labels", at,
                        "label " + std::to_string(l) + " >= num_classes " +
                            std::to_string(num_classes));
    }
  }
  r.expect_end();
  return Dataset(Tensor({n, d}, std::move(data)), std::move(labels), std::move(names));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  detail::write_file(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(detail::read_file(path));
}

}  // namespace uap
