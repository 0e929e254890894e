#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uap {

/// Base class for every runtime failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A binary file could not be decoded. Carries the byte offset and the
/// name of the field that was being read when decoding failed.
class FormatError : public Error {
 public:
  FormatError(std::string field, std::size_t offset, const std::string& what)
      : Error(what + " (field '" + field + "' at offset " +
              std::to_string(offset) + ")"),
        field_(std::move(field)),
        offset_(offset) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string field_;
  std::size_t offset_;
};

}  // namespace uap
