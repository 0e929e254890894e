#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "uap/error.hpp"

namespace uap::cli {

void Manifest::set(std::string key, std::string value) {
  if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
      value.find('\n') != std::string::npos) {
    throw Error("manifest entries must not contain '=' in keys or newlines: " + key);
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::string Manifest::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return {};
}

std::string Manifest::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error("manifest line " + std::to_string(lineno) + " is not key=value");
    }
    m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << to_string();
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::string> Manifest::replay_args() const {
  const std::string sub = get("subcommand");
  if (sub.empty()) throw Error("manifest has no subcommand entry");
  std::vector<std::string> args{sub};
  for (const auto& [k, v] : entries_) {
    if (k.rfind("opt.", 0) == 0) {
      args.push_back("--" + k.substr(4));
      args.push_back(v);
    } else if (k.rfind("flag.", 0) == 0 && v == "true") {
      args.push_back("--" + k.substr(5));
    }
  }
  return args;
}

Manifest manifest_for(const CLI::App& sub) {
  Manifest m;
  m.set("subcommand", sub.get_name());
  m.set("tool_version", UAP_VERSION);
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || opt->get_lnames().empty()) continue;
    if (opt->get_expected_min() == 0) {
      m.set("flag." + name, opt->count() > 0 ? "true" : "false");
      continue;
    }
    if (opt->count() > 0) {
      for (const auto& value : opt->results()) m.set("opt." + name, value);
    } else if (!opt->get_default_str().empty()) {
      m.set("opt." + name, opt->get_default_str());
    }
  }
  return m;
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return output.string() + ".manifest";
}

}  // namespace uap::cli
