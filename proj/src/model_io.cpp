#include <limits>

#include "binary_io.hpp"
#include "uap/classifier.hpp"

namespace uap {

namespace {
constexpr std::string_view kMagic = "UAPM";
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kAffine = 0;
constexpr std::uint8_t kRelu = 1;
}  // namespace

std::vector<unsigned char> encode_model(const Model& model) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint8_t>(kVersion);
  if (model.layers().size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error("too many layers to serialize");
  }
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      w.put<std::uint8_t>(kAffine);
      w.put_tensor(a->weights);
      w.put_tensor(a->bias);
    } else {
      w.put<std::uint8_t>(kRelu);
    }
  }
  w.put_tensor(model.normalization().mean);
  w.put_tensor(model.normalization().std);
  return w.bytes();
}

Model decode_model(std::vector<unsigned char> bytes) {
  detail::ByteReader r(std::move(bytes));
  r.expect_magic(kMagic);
  r.expect_version(kVersion);
  const auto num_layers = r.get<std::uint16_t>("num_layers");
  if (num_layers == 0) r.fail("num_layers", "model has no layers");
  std::vector<Layer> layers;
  for (std::uint16_t i = 0; i < num_layers; ++i) {
    const std::size_t at = r.offset();
    const auto kind = r.get<std::uint8_t>("layer.kind");
    if (kind == kAffine) {
      Tensor weights = r.get_tensor("layer.weights");
      Tensor bias = r.get_tensor("layer.bias");
      layers.emplace_back(AffineLayer{std::move(weights), std::move(bias)});
    } else if (kind == kRelu) {
      layers.emplace_back(ReluLayer{});
    } else {
      throw FormatError("layer.kind", at, "unknown layer kind " + std::to_string(kind));
    }
  }
  Tensor mean = r.get_tensor("normalization.mean");
  Tensor sd = r.get_tensor("normalization.std");
  const std::size_t end = r.offset();
  r.expect_end();
  try {
    return Model(std::move(layers), Normalization{std::move(mean), std::move(sd)});
  } catch (const std::invalid_argument& e) {
    throw FormatError("model", end, std::string("invalid model structure: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(model));
}

Model load_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path));
}

}  // namespace uap
