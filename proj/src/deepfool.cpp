#include "uap/deepfool.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace uap {

namespace {

constexpr double kDegenerateNorm = 1e-12;

std::vector<std::size_t> candidate_classes(std::span<const float> scores,
                                           std::size_t original, std::size_t limit) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (limit > 0 && limit < order.size()) order.resize(limit);
  std::erase(order, original);
  return order;
}

}  // namespace

DeepFoolResult deepfool(std::span<const float> x, const Model& model,
                        const DeepFoolConfig& config) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("deepfool: input dimension mismatch");
  }
  if (!(config.overshoot >= 0.0 && config.overshoot < 1.0)) {
    throw std::invalid_argument("deepfool: overshoot must be in [0, 1)");
  }
  if (config.num_candidate_classes == 1) {
    throw std::invalid_argument("deepfool: need at least 2 candidate classes");
  }
  const std::size_t d = x.size();
  const double boost = 1.0 + config.overshoot;

  const Tensor clean_scores = forward(model, x);
  const std::size_t k0 = argmax(clean_scores.data());
  const auto candidates =
      candidate_classes(clean_scores.data(), k0, config.num_candidate_classes);

  DeepFoolResult result;
  result.original_label = k0;
  result.new_label = k0;

  // The linearization is taken at the iterate x + r_total; the label test
  // and the returned perturbation use the boosted x + (1 + overshoot) r_total.
  std::vector<double> r_total(d, 0.0);
  std::vector<float> r(d, 0.0f);
  std::vector<float> iterate(x.begin(), x.end());
  std::vector<float> point(x.begin(), x.end());
  std::size_t label = k0;

  while (label == k0 && result.iterations < config.max_iterations) {
    const auto sj = scores_and_jacobian(model, iterate);
    auto scores = sj.scores.data();
    auto g0 = sj.jacobian.row(k0);

    double best_ratio = std::numeric_limits<double>::infinity();
    double best_f = 0.0;
    double best_wnorm = 0.0;
    std::vector<double> best_w;
    std::vector<double> w(d);
    for (auto k : candidates) {
      auto gk = sj.jacobian.row(k);
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        w[j] = static_cast<double>(gk[j]) - g0[j];
        sq += w[j] * w[j];
      }
      const double wnorm = std::sqrt(sq);
      if (wnorm < kDegenerateNorm) continue;
      const double f = static_cast<double>(scores[k]) - scores[k0];
      const double ratio = std::abs(f) / wnorm;
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best_f = f;
        best_wnorm = wnorm;
        best_w = w;
      }
    }
    if (best_w.empty()) {
      result.degenerate = true;
      break;
    }

    const double step = std::abs(best_f) / (best_wnorm * best_wnorm);
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      r_total[j] += step * best_w[j];
      sq += r_total[j] * r_total[j];
    }
    result.norm_history.push_back(std::sqrt(sq));
    // point is built from exactly the floats that are returned, so success
    // implies predict(x + r) != k0 for callers too.
    for (std::size_t j = 0; j < d; ++j) {
      iterate[j] = static_cast<float>(x[j] + r_total[j]);
      r[j] = static_cast<float>(boost * r_total[j]);
      point[j] = x[j] + r[j];
    }
    ++result.iterations;
    label = predict(model, point);
  }

  result.r = Tensor({d}, std::move(r));
  result.new_label = label;
  result.success = label != k0;
  return result;
}

}  // namespace uap
