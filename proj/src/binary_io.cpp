#include "binary_io.hpp"

#include <fstream>
#include <iterator>
#include <cmath>
#include <limits>

namespace uap::detail {

void ByteWriter::put_string(const std::string& text) {
  if (text.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error("string too long for u16 length prefix");
  }
  put<std::uint16_t>(static_cast<std::uint16_t>(text.size()));
  put_bytes(text);
}

void ByteWriter::put_tensor(const Tensor& t) {
  if (t.ndim() > std::numeric_limits<std::uint8_t>::max()) {
    throw Error("tensor has too many dimensions to serialize");
  }
  put<std::uint8_t>(static_cast<std::uint8_t>(t.ndim()));
  for (auto dim : t.shape()) {
    if (dim > std::numeric_limits<std::uint32_t>::max()) {
      throw Error("tensor dimension exceeds u32");
    }
    put<std::uint32_t>(static_cast<std::uint32_t>(dim));
  }
  for (float v : t.data()) put<float>(v);
}

void ByteReader::expect_magic(std::string_view magic) {
  require(magic.size(), "magic");
  if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) {
    fail("magic", "bad magic, expected \"" + std::string(magic) + "\"");
  }
  pos_ += magic.size();
}

void ByteReader::expect_version(std::uint8_t version) {
  const std::size_t at = pos_;
  const auto v = get<std::uint8_t>("version");
  if (v != version) {
    throw FormatError("version", at,
                      "unsupported version " + std::to_string(v));
  }
}

std::string ByteReader::get_string(const char* field) {
  const auto len = get<std::uint16_t>(field);
  require(len, field);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
  pos_ += len;
  return s;
}

Tensor ByteReader::get_tensor(const char* field) {
  const std::string f(field);
  const auto ndim = get<std::uint8_t>((f + ".ndim").c_str());
  Shape shape;
  std::size_t count = 1;
  for (std::uint8_t i = 0; i < ndim; ++i) {
    const std::size_t at = pos_;
    const auto dim = get<std::uint32_t>((f + ".dims").c_str());
    if (dim == 0) throw FormatError(f + ".dims", at, "zero tensor dimension");
    shape.push_back(dim);
    count *= dim;
    if (count > (bytes_.size() - pos_) / sizeof(float) + 1) {
      // Early out before allocating: the data cannot possibly fit.
      throw FormatError(f + ".dims", at, "tensor larger than remaining file");
    }
  }
  require(count * sizeof(float), (f + ".data").c_str());
  std::vector<float> data(count);
  const std::size_t start = pos_;
  for (auto& v : data) v = get<float>((f + ".data").c_str());
  for (const float v : data) {
    if (!std::isfinite(v)) throw FormatError(f + ".data", start, "non-finite value");
  }
  return Tensor(std::move(shape), std::move(data));
}

void ByteReader::expect_end() {
  if (!at_end()) fail("eof", "trailing bytes after end of record");
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path,
                const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace uap::detail
