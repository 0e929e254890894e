#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "uap/dataset.hpp"
#include "uap/tensor.hpp"

namespace uap {

/// weights [out x in], bias [out].
struct AffineLayer {
  Tensor weights;
  Tensor bias;

  std::size_t in_dim() const { return weights.shape()[1]; }
  std::size_t out_dim() const { return weights.shape()[0]; }
  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

/// max(0, x). The subgradient at exactly 0 is taken as 0.
struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

using Layer = std::variant<AffineLayer, ReluLayer>;

/// Per-feature (x - mean) / std applied before the first layer.
struct Normalization {
  Tensor mean;
  Tensor std;

  static Normalization identity(std::size_t dim);
  /// Feature-wise mean and population std; std below 1e-6 is replaced by 1.
  static Normalization from_data(const Dataset& dataset);
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Feedforward classifier: normalization, then affine/ReLU stack ending in
/// an affine layer that emits raw class scores.
class Model {
 public:
  Model(std::vector<Layer> layers, Normalization normalization);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Normalization& normalization() const noexcept { return normalization_; }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  std::vector<Layer> layers_;
  Normalization normalization_;
  std::size_t input_dim_ = 0;
  std::size_t num_classes_ = 0;
};

/// Class scores at `x`.
Tensor forward(const Model& model, std::span<const float> x);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax(std::span<const float> scores);
std::size_t predict(const Model& model, std::span<const float> x);
std::vector<std::size_t> predict_all(const Model& model, const Dataset& dataset);

/// Gradient of score_k with respect to the raw (unnormalized) input.
Tensor input_gradient(const Model& model, std::span<const float> x,
                      std::size_t k);

struct ScoresAndJacobian {
  Tensor scores;    ///< [C]
  Tensor jacobian;  ///< [C x d], row k = d score_k / d x
};

/// Scores and the full input Jacobian from one forward pass.
ScoresAndJacobian scores_and_jacobian(const Model& model,
                                      std::span<const float> x);

/// Fraction of rows whose prediction equals the stored label.
double accuracy(const Model& model, const Dataset& dataset);

/// Affine/ReLU stack with the given hidden widths. Weights are uniform in
/// [-s, s] with s = init_scale / sqrt(fan_in); biases start at zero.
Model make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
               std::size_t num_classes, Normalization normalization,
               double init_scale, Rng& rng);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  double weight_init_scale = 2.45;  // ~sqrt(6): He-uniform bound
  std::vector<std::size_t> hidden = {64};
  /// Computed from the training data when unset.
  std::optional<Normalization> normalization;
};

struct TrainResult {
  Model model;
  double train_accuracy = 0.0;
  double final_loss = 0.0;  ///< mean cross-entropy over the last epoch
};

/// Mini-batch SGD on softmax cross-entropy. Deterministic for a fixed seed.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::vector<unsigned char> encode_model(const Model& model);
Model decode_model(std::vector<unsigned char> bytes);

}  // namespace uap
