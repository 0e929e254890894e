#include "uap/classifier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "uap/error.hpp"

namespace uap {

namespace {

// Activations of one forward pass; acts[0] is the normalized input and
// acts[i + 1] the output of layer i.
using Trace = std::vector<std::vector<float>>;

void check_input(const Model& model, std::span<const float> x) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(model.input_dim()));
  }
}

std::vector<float> normalize(const Normalization& norm, std::span<const float> x) {
  std::vector<float> out(x.size());
  auto mean = norm.mean.data();
  auto sd = norm.std.data();
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / sd[j];
  return out;
}

void affine_forward(const AffineLayer& layer, std::span<const float> in,
                    std::vector<float>& out) {
  const std::size_t rows = layer.out_dim();
  out.resize(rows);
  auto b = layer.bias.data();
  for (std::size_t i = 0; i < rows; ++i) {
    out[i] = static_cast<float>(dot(layer.weights.row(i), in) + b[i]);
  }
}

Trace run(const std::vector<Layer>& layers, std::vector<float> input) {
  Trace acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(std::move(input));
  for (const auto& layer : layers) {
    std::vector<float> out;
    if (const auto* affine = std::get_if<AffineLayer>(&layer)) {
      affine_forward(*affine, acts.back(), out);
    } else {
      out = acts.back();
      for (float& v : out) v = v > 0.0f ? v : 0.0f;
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

Normalization Normalization::identity(std::size_t dim) {
  return {Tensor::zeros({dim}), Tensor::filled({dim}, 1.0f)};
}

Normalization Normalization::from_data(const Dataset& dataset) {
  const std::size_t d = dataset.dim();
  const std::size_t n = dataset.size();
  std::vector<double> sum(d, 0.0);
  std::vector<double> sq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = dataset.image(i);
    for (std::size_t j = 0; j < d; ++j) sum[j] += row[j];
  }
  std::vector<float> mean(d);
  for (std::size_t j = 0; j < d; ++j) mean[j] = static_cast<float>(sum[j] / n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = dataset.image(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - static_cast<double>(mean[j]);
      sq[j] += dev * dev;
    }
  }
  std::vector<float> sd(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double s = std::sqrt(sq[j] / n);
    sd[j] = s < 1e-6 ? 1.0f : static_cast<float>(s);
  }
  return {Tensor({d}, std::move(mean)), Tensor({d}, std::move(sd))};
}

Model::Model(std::vector<Layer> layers, Normalization normalization)
    : layers_(std::move(layers)), normalization_(std::move(normalization)) {
  if (layers_.empty()) throw std::invalid_argument("model needs at least one layer");
  if (!std::holds_alternative<AffineLayer>(layers_.back())) {
    throw std::invalid_argument("last model layer must be affine");
  }
  std::optional<std::size_t> width;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto* affine = std::get_if<AffineLayer>(&layers_[i]);
    if (!affine) continue;
    if (affine->weights.ndim() != 2 || affine->bias.ndim() != 1 ||
        affine->bias.size() != affine->out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) +
                                  ": affine weights must be [out x in] and bias [out]");
    }
    if (width && *width != affine->in_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": expects input width " +
                                  std::to_string(affine->in_dim()) + ", previous layer emits " +
                                  std::to_string(*width));
    }
    if (!width) input_dim_ = affine->in_dim();
    width = affine->out_dim();
  }
  num_classes_ = *width;
  if (num_classes_ < 2) throw std::invalid_argument("model needs at least 2 classes");
  const auto& mean = normalization_.mean;
  const auto& sd = normalization_.std;
  if (mean.shape() != Shape{input_dim_} || sd.shape() != Shape{input_dim_}) {
    throw std::invalid_argument("normalization must have shape [" +
                                std::to_string(input_dim_) + "]");
  }
  for (float s : sd.data()) {
    if (!(s > 0.0f)) throw std::invalid_argument("normalization std must be strictly positive");
  }
}

Tensor forward(const Model& model, std::span<const float> x) {
  check_input(model, x);
  auto acts = run(model.layers(), normalize(model.normalization(), x));
  const std::size_t c = acts.back().size();
  return Tensor({c}, std::move(acts.back()));
}

std::size_t argmax(std::span<const float> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax of empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t predict(const Model& model, std::span<const float> x) {
  return argmax(forward(model, x).data());
}

std::vector<std::size_t> predict_all(const Model& model, const Dataset& dataset) {
  std::vector<std::size_t> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) out[i] = predict(model, dataset.image(i));
  return out;
}

ScoresAndJacobian scores_and_jacobian(const Model& model, std::span<const float> x) {
  check_input(model, x);
  const auto& layers = model.layers();
  const auto acts = run(layers, normalize(model.normalization(), x));
  const std::size_t c = model.num_classes();

  // grad holds d score_k / d act for every class k, row-major [c x width].
  std::size_t width = c;
  std::vector<double> grad(c * c, 0.0);
  for (std::size_t k = 0; k < c; ++k) grad[k * c + k] = 1.0;

  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& in = acts[li];
    if (const auto* affine = std::get_if<AffineLayer>(&layers[li])) {
      const std::size_t in_w = affine->in_dim();
      std::vector<double> next(c * in_w, 0.0);
      for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < width; ++i) {
          const double g = grad[k * width + i];
          if (g == 0.0) continue;
          auto w = affine->weights.row(i);
          double* dst = next.data() + k * in_w;
          for (std::size_t j = 0; j < in_w; ++j) dst[j] += g * w[j];
        }
      }
      grad = std::move(next);
      width = in_w;
    } else {
      for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t j = 0; j < width; ++j) {
          if (!(in[j] > 0.0f)) grad[k * width + j] = 0.0;
        }
      }
    }
  }

  auto sd = model.normalization().std.data();
  std::vector<float> jac(c * width);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < width; ++j) {
      jac[k * width + j] = static_cast<float>(grad[k * width + j] / sd[j]);
    }
  }
  return {Tensor({c}, acts.back()), Tensor({c, width}, std::move(jac))};
}

Tensor input_gradient(const Model& model, std::span<const float> x, std::size_t k) {
  if (k >= model.num_classes()) {
    throw std::invalid_argument("class index " + std::to_string(k) + " out of range");
  }
  auto sj = scores_and_jacobian(model, x);
  auto row = sj.jacobian.row(k);
  return Tensor({row.size()}, std::vector<float>(row.begin(), row.end()));
}

double accuracy(const Model& model, const Dataset& dataset) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (predict(model, dataset.image(i)) == dataset.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Model make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
               std::size_t num_classes, Normalization normalization,
               double init_scale, Rng& rng) {
  if (!(init_scale > 0.0)) throw std::invalid_argument("weight_init_scale must be positive");
  std::vector<Layer> layers;
  std::size_t in = input_dim;
  auto add_affine = [&](std::size_t out) {
    const float bound = static_cast<float>(init_scale / std::sqrt(static_cast<double>(in)));
    layers.emplace_back(AffineLayer{uniform_tensor({out, in}, -bound, bound, rng),
                                    Tensor::zeros({out})});
    in = out;
  };
  for (auto width : hidden) {
    if (width == 0) throw std::invalid_argument("hidden layer width must be positive");
    add_affine(width);
    layers.emplace_back(ReluLayer{});
  }
  add_affine(num_classes);
  return Model(std::move(layers), std::move(normalization));
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  const std::size_t n = dataset.size();
  const std::size_t c = dataset.num_classes();
  if (c < 2) throw std::invalid_argument("training needs at least 2 classes");

  Rng rng(config.seed);
  Normalization norm = config.normalization ? *config.normalization
                                            : Normalization::from_data(dataset);
  Model initial = make_mlp(dataset.dim(), config.hidden, c, norm,
                           config.weight_init_scale, rng);
  std::vector<Layer> layers = initial.layers();

  // Gradient buffers mirror the affine layers.
  std::vector<std::vector<double>> grad_w(layers.size());
  std::vector<std::vector<double>> grad_b(layers.size());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    if (const auto* a = std::get_if<AffineLayer>(&layers[li])) {
      grad_w[li].assign(a->weights.size(), 0.0);
      grad_b[li].assign(a->bias.size(), 0.0);
    }
  }

  std::vector<std::vector<float>> normalized(n);
  for (std::size_t i = 0; i < n; ++i) normalized[i] = normalize(norm, dataset.image(i));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      for (auto& g : grad_w) std::fill(g.begin(), g.end(), 0.0);
      for (auto& g : grad_b) std::fill(g.begin(), g.end(), 0.0);

      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t idx = order[bi];
        const auto acts = run(layers, normalized[idx]);
        const auto& scores = acts.back();
        const std::size_t target = dataset.label(idx);

        double max_score = scores[0];
        for (float s : scores) max_score = std::max(max_score, static_cast<double>(s));
        double z = 0.0;
        std::vector<double> delta(c);
        for (std::size_t k = 0; k < c; ++k) {
          delta[k] = std::exp(scores[k] - max_score);
          z += delta[k];
        }
        loss_sum += std::log(z) - (scores[target] - max_score);
        for (std::size_t k = 0; k < c; ++k) delta[k] /= z;
        delta[target] -= 1.0;

        for (std::size_t li = layers.size(); li-- > 0;) {
          const auto& in = acts[li];
          if (const auto* a = std::get_if<AffineLayer>(&layers[li])) {
            const std::size_t in_w = a->in_dim();
            auto& gw = grad_w[li];
            auto& gb = grad_b[li];
            std::vector<double> back(li > 0 ? in_w : 0, 0.0);
            for (std::size_t i = 0; i < delta.size(); ++i) {
              const double g = delta[i];
              gb[i] += g;
              if (g == 0.0) continue;
              auto w = a->weights.row(i);
              double* gwr = gw.data() + i * in_w;
              for (std::size_t j = 0; j < in_w; ++j) gwr[j] += g * in[j];
              for (std::size_t j = 0; j < back.size(); ++j) back[j] += g * w[j];
            }
            delta = std::move(back);
          } else {
            for (std::size_t j = 0; j < delta.size(); ++j) {
              if (!(in[j] > 0.0f)) delta[j] = 0.0;
            }
          }
        }
      }

      const double step = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t li = 0; li < layers.size(); ++li) {
        auto* a = std::get_if<AffineLayer>(&layers[li]);
        if (!a) continue;
        auto w = a->weights.data();
        for (std::size_t j = 0; j < w.size(); ++j) {
          w[j] = static_cast<float>(w[j] - step * grad_w[li][j]);
        }
        auto b = a->bias.data();
        for (std::size_t j = 0; j < b.size(); ++j) {
          b[j] = static_cast<float>(b[j] - step * grad_b[li][j]);
        }
      }
    }
    epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1));
    }
  }

  for (const auto& layer : layers) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      if (!a->weights.all_finite() || !a->bias.all_finite()) {
        throw Error("training diverged: non-finite weights");
      }
    }
  }

  TrainResult result{Model(std::move(layers), std::move(norm)), 0.0, epoch_loss};
  result.train_accuracy = accuracy(result.model, dataset);
  return result;
}

}  // namespace uap
