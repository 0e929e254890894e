#include "uap/universal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "binary_io.hpp"
#include "uap/error.hpp"
#include "uap/evaluation.hpp"

namespace uap {

namespace {
constexpr std::string_view kMagic = "UAPP";
constexpr std::uint8_t kVersion = 1;
constexpr double kFeasibilityTolerance = 1e-6;

// Largest float not above xi.
float float_bound(double xi) {
  float f = static_cast<float>(xi);
  while (static_cast<double>(f) > xi) f = std::nextafter(f, 0.0f);
  return f;
}
}  // namespace

Tensor project_lp_ball(const Tensor& v, NormOrder p, double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw std::invalid_argument("project_lp_ball: xi must be positive and finite");
  }
  if (!v.all_finite()) throw std::invalid_argument("project_lp_ball: non-finite input");
  if (p == NormOrder::Linf) {
    const float bound = float_bound(xi);
    Tensor out = v;
    for (float& x : out.data()) x = std::clamp(x, -bound, bound);
    return out;
  }
  const double n = lp_norm(v, NormOrder::L2);
  if (n <= xi) return v;
  // Rounding the rescaled floats can land a hair outside the ball; shrink
  // until the float result is feasible.
  double factor = xi / n;
  Tensor out = v;
  for (;;) {
    auto src = v.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(src[i] * factor);
    if (lp_norm(out, NormOrder::L2) <= xi) return out;
    factor *= 1.0 - 1e-7;
  }
}

UapResult compute_uap(const Dataset& X, const Model& model, const AttackConfig& config,
                      const std::optional<Tensor>& v0, const UpdateObserver& observer) {
  const std::size_t d = X.dim();
  if (d != model.input_dim()) {
    throw std::invalid_argument("compute_uap: data dimension " + std::to_string(d) +
                                " does not match model input " +
                                std::to_string(model.input_dim()));
  }
  if (!(config.target_fooling_rate > 0.0 && config.target_fooling_rate <= 1.0)) {
    throw std::invalid_argument("compute_uap: target_fooling_rate must be in (0, 1]");
  }
  if (v0 && v0->size() != d) {
    throw std::invalid_argument("compute_uap: warm-start vector has dimension " +
                                std::to_string(v0->size()) + ", expected " +
                                std::to_string(d));
  }

  UapResult result;
  Tensor v = v0 ? project_lp_ball(v0->reshaped({d}), config.p, config.xi) : Tensor::zeros({d});
  const auto clean = predict_all(model, X);

  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.shuffle_seed);
  std::vector<float> point(d);

  double rate = fooling_rate(X, v.data(), model).rate;
  std::size_t passes = 0;
  while (passes < config.max_passes && rate < config.target_fooling_rate) {
    if (config.shuffle_each_pass) rng.shuffle(order);
    std::size_t attempted = 0;
    std::size_t succeeded = 0;
    for (auto i : order) {
      auto x = X.image(i);
      for (std::size_t j = 0; j < d; ++j) point[j] = x[j] + v[j];
      if (predict(model, point) != clean[i]) continue;
      ++attempted;
      const auto step = deepfool(point, model, config.deepfool);
      if (!step.success) {
        ++result.deepfool_failures;
        continue;
      }
      ++succeeded;
      v = project_lp_ball(add(v, step.r), config.p, config.xi);
      const double norm = lp_norm(v, config.p);
      if (norm > config.xi * (1.0 + kFeasibilityTolerance)) {
        throw std::logic_error("compute_uap: perturbation left the lp ball (norm " +
                               std::to_string(norm) + ", budget " +
                               std::to_string(config.xi) + ")");
      }
      ++result.updates;
      if (observer) observer({passes, i, norm});
    }
    ++passes;
    rate = fooling_rate(X, v.data(), model).rate;
    result.pass_rates.push_back(rate);
    if (attempted > 0 && succeeded == 0) {
      result.stalled = true;
      break;
    }
  }

  result.perturbation = Perturbation{std::move(v), config.p,  config.xi, passes, rate,
                                     v0 ? "warm-start" : "cold-start"};
  return result;
}

std::vector<unsigned char> encode_perturbation(const Perturbation& pert) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint8_t>(kVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(pert.p));
  w.put<double>(pert.xi);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pert.v.size()));
  for (float x : pert.v.data()) w.put<float>(x);
  w.put<double>(pert.achieved_fooling_rate);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pert.passes_used));
  w.put_string(pert.source);
  return w.bytes();
}

Perturbation decode_perturbation(std::vector<unsigned char> bytes) {
  const std::size_t total = bytes.size();
  detail::ByteReader r(std::move(bytes));
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  Perturbation pert;
  const std::size_t p_at = r.offset();
  const auto p = r.get<std::uint8_t>("p");
  if (p == 2) {
    pert.p = NormOrder::L2;
  } else if (p == 255) {
    pert.p = NormOrder::Linf;
  } else {
    throw FormatError("p", p_at, "norm order must be 2 or 255, got " + std::to_string(p));
  }
  const std::size_t xi_at = r.offset();
  pert.xi = r.get<double>("xi");
  if (!(pert.xi > 0.0) || !std::isfinite(pert.xi)) {
    throw FormatError("xi", xi_at, "budget must be positive and finite");
  }
  const std::size_t d_at = r.offset();
  const auto d = r.get<std::uint32_t>("d");
  if (d == 0) throw FormatError("d", d_at, "dimension must be positive");
  if ((total - r.offset()) / 4 < d) throw FormatError("d", d_at, "length exceeds file size");
  std::vector<float> data(d);
  const std::size_t v_at = r.offset();
  for (auto& x : data) x = r.get<float>("v");
  for (float x : data) {
    if (!std::isfinite(x)) throw FormatError("v", v_at, "non-finite value");
  }
  pert.v = Tensor({d}, std::move(data));
  const std::size_t rate_at = r.offset();
  pert.achieved_fooling_rate = r.get<double>("achieved_rate");
  if (!(pert.achieved_fooling_rate >= 0.0 && pert.achieved_fooling_rate <= 1.0)) {
    throw FormatError("achieved_rate", rate_at, "rate must be in [0, 1]");
  }
  pert.passes_used = r.get<std::uint32_t>("passes");
  pert.source = r.get_string("source");
  r.expect_end();
  return pert;
}

void save_perturbation(const Perturbation& pert, const std::filesystem::path& path) {
  detail::write_file(path, encode_perturbation(pert));
}

Perturbation load_perturbation(const std::filesystem::path& path) {
  return decode_perturbation(detail::read_file(path));
}

}  // namespace uap
