#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uap/classifier.hpp"
#include "uap/dataset.hpp"
#include "uap/tensor.hpp"

namespace uap {

struct Transition {
  std::size_t original = 0;
  std::size_t perturbed = 0;
  std::size_t count = 0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

struct FoolingReport {
  std::size_t total = 0;
  std::size_t fooled = 0;
  double rate = 0.0;
  /// Every observed (clean prediction, perturbed prediction) pair, diagonal
  /// included, sorted by (original, perturbed).
  std::vector<Transition> transitions;
  bool clamp_applied = false;
};

/// Counts images whose prediction changes when v is added. The reference
/// is the model's own clean prediction, not the stored label. With
/// `clamp`, x + v is clipped to the [min, max] value range of X first.
FoolingReport fooling_rate(const Dataset& X, std::span<const float> v,
                           const Model& model, bool clamp = false);

/// Random direction with lp norm exactly xi. L2: Gaussian direction
/// rescaled (uniform on the sphere). Linf: i.i.d. random signs times xi.
Tensor random_perturbation(std::size_t dim, NormOrder p, double xi, Rng& rng);

/// v * (target_norm / ||v||_p). Throws for a zero vector.
Tensor scale_to_norm(const Tensor& v, NormOrder p, double target_norm);

struct SweepCurve {
  std::vector<double> norms;
  std::vector<double> rates;
  std::string perturbation_id;
};

/// Fooling rate of v rescaled to each norm in turn. `norms` must be
/// positive and strictly increasing.
SweepCurve norm_sweep(const Dataset& X, const Tensor& v, const Model& model,
                      std::span<const double> norms, NormOrder p, bool clamp,
                      std::string perturbation_id);

/// `norm,<id1>,<id2>,...` then one row per norm, values as %.6g. Every
/// curve must share the same norm grid.
std::string format_curve_csv(std::span<const SweepCurve> curves);
void write_curve_csv(std::span<const SweepCurve> curves,
                     const std::filesystem::path& path);

/// Mean of several curves on a shared grid.
SweepCurve mean_curve(std::span<const SweepCurve> curves, std::string id);

}  // namespace uap
