#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uap/classifier.hpp"
#include "uap/dataset.hpp"
#include "uap/deepfool.hpp"
#include "uap/tensor.hpp"

namespace uap {

/// A universal perturbation and how it was obtained.
struct Perturbation {
  Tensor v;
  NormOrder p = NormOrder::L2;
  double xi = 0.0;
  std::size_t passes_used = 0;
  double achieved_fooling_rate = 0.0;
  /// "cold-start", "warm-start", "random" or "loaded".
  std::string source;

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

struct AttackConfig {
  NormOrder p = NormOrder::L2;
  double xi = 1.0;
  /// Stop once the fooling rate on X reaches this value.
  double target_fooling_rate = 0.8;
  std::size_t max_passes = 10;
  DeepFoolConfig deepfool;
  bool shuffle_each_pass = true;
  std::uint64_t shuffle_seed = 0;
};

/// Closest point to v (in L2) inside the lp ball of radius xi around 0:
/// rescaling for L2, coordinate clamping for Linf.
Tensor project_lp_ball(const Tensor& v, NormOrder p, double xi);

/// Reported after every accepted update of v.
struct UpdateEvent {
  std::size_t pass = 0;
  std::size_t index = 0;  ///< row of X whose DeepFool step was applied
  double norm = 0.0;      ///< ||v||_p after projection
};
using UpdateObserver = std::function<void(const UpdateEvent&)>;

struct UapResult {
  Perturbation perturbation;
  /// Fooling rate on X after each completed pass.
  std::vector<double> pass_rates;
  /// A full pass ran DeepFool on at least one point and none succeeded.
  bool stalled = false;
  std::size_t updates = 0;
  std::size_t deepfool_failures = 0;
};

/// Accumulates per-point DeepFool steps into a single perturbation:
///
///   v <- project(v0) or 0
///   repeat passes over X (optionally reshuffled):
///     for each x_i with predict(x_i + v) == predict(x_i):
///       r <- deepfool(x_i + v);  if it flips: v <- project(v + r)
///   until fooling_rate(X, v) >= target or max_passes passes are done.
///
/// The budget ||v||_p <= xi (1 + 1e-6) is checked after every update and a
/// violation throws std::logic_error.
UapResult compute_uap(const Dataset& X, const Model& model, const AttackConfig& config,
                      const std::optional<Tensor>& v0 = std::nullopt,
                      const UpdateObserver& observer = {});

void save_perturbation(const Perturbation& pert, const std::filesystem::path& path);
Perturbation load_perturbation(const std::filesystem::path& path);

std::vector<unsigned char> encode_perturbation(const Perturbation& pert);
Perturbation decode_perturbation(std::vector<unsigned char> bytes);

}  // namespace uap
