#pragma once

// Little-endian encoding shared by the model, dataset and perturbation
// file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "uap/error.hpp"
#include "uap/tensor.hpp"

namespace uap::detail {

template <typename T>
T to_little_endian(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    value = to_little_endian(value);
    const auto* p = reinterpret_cast<const unsigned char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void put_bytes(std::string_view text) {
    bytes_.insert(bytes_.end(), text.begin(), text.end());
  }

  /// u16 length followed by the raw UTF-8 bytes.
  void put_string(const std::string& text);

  /// ndim u8, dims u32 each, then f32 data.
  void put_tensor(const Tensor& t);

  const std::vector<unsigned char>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get(const char* field) {
    require(sizeof(T), field);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little_endian(value);
  }

  void expect_magic(std::string_view magic);
  void expect_version(std::uint8_t version);
  std::string get_string(const char* field);
  Tensor get_tensor(const char* field);

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  /// Throws if unread bytes remain.
  void expect_end();

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw FormatError(field, pos_, what);
  }

 private:
  void require(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n) fail(field, "truncated file");
  }

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<unsigned char>& bytes);

}  // namespace uap::detail
