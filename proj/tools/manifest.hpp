#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace CLI {
class App;
}

namespace uap::cli {

/// Flat `key=value` record written next to every output file. Keys may
/// repeat (repeatable options keep their order).
class Manifest {
 public:
  void set(std::string key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  /// First value for key, or empty.
  std::string get(const std::string& key) const;

  std::string to_string() const;
  static Manifest parse(const std::string& text);

  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);

  /// Arguments (subcommand first) that re-run the recorded invocation.
  std::vector<std::string> replay_args() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Captures the subcommand name and every resolved option value (given on
/// the command line or defaulted) of a parsed subcommand.
Manifest manifest_for(const CLI::App& sub);

/// Path of the manifest that accompanies `output`.
std::filesystem::path manifest_path(const std::filesystem::path& output);

}  // namespace uap::cli
