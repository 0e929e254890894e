#include "uap/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "uap/error.hpp"

namespace uap {

FoolingReport fooling_rate(const Dataset& X, std::span<const float> v,
                           const Model& model, bool clamp) {
  if (v.size() != X.dim()) {
    throw std::invalid_argument("fooling_rate: perturbation has dimension " +
                                std::to_string(v.size()) + ", data has " +
                                std::to_string(X.dim()));
  }
  const auto [lo, hi] = value_range(X);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  std::vector<float> perturbed(X.dim());
  FoolingReport report;
  report.total = X.size();
  report.clamp_applied = clamp;
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto x = X.image(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      float value = x[j] + v[j];
      if (clamp) value = std::clamp(value, lo, hi);
      perturbed[j] = value;
    }
    const auto clean = predict(model, x);
    const auto after = predict(model, perturbed);
    ++counts[{clean, after}];
    if (clean != after) ++report.fooled;
  }
  for (const auto& [key, count] : counts) {
    report.transitions.push_back({key.first, key.second, count});
  }
  report.rate = static_cast<double>(report.fooled) / static_cast<double>(report.total);
  return report;
}

Tensor random_perturbation(std::size_t dim, NormOrder p, double xi, Rng& rng) {
  if (!(xi > 0.0)) throw std::invalid_argument("random_perturbation: xi must be positive");
  if (dim == 0) throw std::invalid_argument("random_perturbation: dim must be positive");
  if (p == NormOrder::Linf) {
    Tensor t(Shape{dim});
    for (float& v : t.data()) {
      v = static_cast<float>(rng.next_u64() >> 63 ? xi : -xi);
    }
    return t;
  }
  Tensor g = gaussian_tensor({dim}, rng);
  while (lp_norm(g, NormOrder::L2) == 0.0) g = gaussian_tensor({dim}, rng);
  return scale_to_norm(g, p, xi);
}

Tensor scale_to_norm(const Tensor& v, NormOrder p, double target_norm) {
  const double n = lp_norm(v, p);
  if (n == 0.0) throw std::invalid_argument("scale_to_norm: zero vector");
  Tensor out = v;
  const double factor = target_norm / n;
  for (float& x : out.data()) x = static_cast<float>(x * factor);
  return out;
}

SweepCurve norm_sweep(const Dataset& X, const Tensor& v, const Model& model,
                      std::span<const double> norms, NormOrder p, bool clamp,
                      std::string perturbation_id) {
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (!(norms[i] > 0.0)) throw std::invalid_argument("norm_sweep: norms must be positive");
    if (i > 0 && !(norms[i] > norms[i - 1])) {
      throw std::invalid_argument("norm_sweep: norms must be strictly increasing");
    }
  }
  SweepCurve curve;
  curve.perturbation_id = std::move(perturbation_id);
  for (double n : norms) {
    const Tensor scaled = scale_to_norm(v, p, n);
    curve.norms.push_back(n);
    curve.rates.push_back(fooling_rate(X, scaled.data(), model, clamp).rate);
  }
  return curve;
}

SweepCurve mean_curve(std::span<const SweepCurve> curves, std::string id) {
  if (curves.empty()) throw std::invalid_argument("mean_curve: no curves");
  SweepCurve out{curves[0].norms, std::vector<double>(curves[0].norms.size(), 0.0),
                 std::move(id)};
  for (const auto& c : curves) {
    if (c.norms != out.norms) throw std::invalid_argument("mean_curve: norm grids differ");
    for (std::size_t i = 0; i < c.rates.size(); ++i) out.rates[i] += c.rates[i];
  }
  for (auto& r : out.rates) r /= static_cast<double>(curves.size());
  return out;
}

namespace {
std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace

std::string format_curve_csv(std::span<const SweepCurve> curves) {
  std::string out = "norm";
  for (const auto& c : curves) out += "," + c.perturbation_id;
  out += "\n";
  if (curves.empty()) return out;
  const auto& grid = curves[0].norms;
  for (const auto& c : curves) {
    if (c.norms != grid || c.rates.size() != grid.size()) {
      throw std::invalid_argument("write_curve_csv: curves use different norm grids");
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += fmt6(grid[i]);
    for (const auto& c : curves) out += "," + fmt6(c.rates[i]);
    out += "\n";
  }
  return out;
}

void write_curve_csv(std::span<const SweepCurve> curves, const std::filesystem::path& path) {
  const std::string text = format_curve_csv(curves);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace uap
