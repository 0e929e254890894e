#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uap/classifier.hpp"
#include "uap/tensor.hpp"

namespace uap {

struct DeepFoolConfig {
  double overshoot = 0.02;
  std::size_t max_iterations = 50;
  /// Classes considered, ranked by clean score (the original class counts
  /// as one). 0 means every class.
  std::size_t num_candidate_classes = 0;
};

struct DeepFoolResult {
  Tensor r;  ///< Perturbation including the (1 + overshoot) factor.
  std::size_t iterations = 0;
  bool success = false;
  /// Two candidate classes had (numerically) identical gradients.
  bool degenerate = false;
  std::size_t original_label = 0;
  std::size_t new_label = 0;
  /// ||r_total||_2 (before overshoot) after each iteration.
  std::vector<double> norm_history;
};

/// Multiclass DeepFool: repeatedly linearize score_k - score_k0 around the
/// current point and step to the nearest linearized boundary until the
/// predicted label of x + (1 + overshoot) * r_total leaves k0.
DeepFoolResult deepfool(std::span<const float> x, const Model& model,
                        const DeepFoolConfig& config = {});

}  // namespace uap
