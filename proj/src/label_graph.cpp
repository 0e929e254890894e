#include "uap/label_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "uap/error.hpp"

namespace uap {

LabelGraph::LabelGraph(std::vector<std::string> class_names)
    : class_names_(std::move(class_names)) {}

void LabelGraph::add(std::size_t from, std::size_t to, std::size_t weight) {
  if (from >= num_labels() || to >= num_labels()) {
    throw std::invalid_argument("label graph edge out of range");
  }
  if (from == to) throw std::invalid_argument("label graph has no self-edges");
  if (weight == 0) throw std::invalid_argument("label graph edge weight must be positive");
  edges_[{from, to}] += weight;
}

std::vector<std::size_t> LabelGraph::indegree() const {
  std::vector<std::size_t> deg(num_labels(), 0);
  for (const auto& [e, w] : edges_) deg[e.second] += w;
  return deg;
}

std::vector<std::size_t> LabelGraph::outdegree() const {
  std::vector<std::size_t> deg(num_labels(), 0);
  for (const auto& [e, w] : edges_) deg[e.first] += w;
  return deg;
}

std::size_t LabelGraph::total_weight() const {
  std::size_t total = 0;
  for (const auto& [e, w] : edges_) total += w;
  return total;
}

LabelGraph label_graph_from_report(const FoolingReport& report,
                                   std::vector<std::string> class_names) {
  LabelGraph g(std::move(class_names));
  for (const auto& t : report.transitions) {
    if (t.original != t.perturbed && t.count > 0) g.add(t.original, t.perturbed, t.count);
  }
  if (g.total_weight() != report.fooled) {
    throw Error("label graph conservation violated: edge weight " +
                std::to_string(g.total_weight()) + " != fooled " +
                std::to_string(report.fooled));
  }
  return g;
}

LabelGraph build_label_graph(const Dataset& X, std::span<const float> v,
                             const Model& model, bool clamp) {
  const auto report = fooling_rate(X, v, model, clamp);
  std::vector<std::string> names = X.class_names();
  // Models may know more classes than the dataset names.
  for (std::size_t k = names.size(); k < model.num_classes(); ++k) {
    names.push_back("class_" + std::to_string(k));
  }
  return label_graph_from_report(report, std::move(names));
}

std::vector<std::pair<std::size_t, std::size_t>> dominant_labels(const LabelGraph& g,
                                                                 std::size_t top_k) {
  if (top_k == 0) throw std::invalid_argument("dominant_labels: top_k must be >= 1");
  const auto deg = g.indegree();
  std::vector<std::pair<std::size_t, std::size_t>> ranked;
  for (std::size_t k = 0; k < deg.size(); ++k) {
    if (deg[k] > 0) ranked.emplace_back(k, deg[k]);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

namespace {

std::string escape_dot(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

std::string format_dot(const LabelGraph& g) {
  std::ostringstream os;
  const auto in = g.indegree();
  os << "digraph label_transitions {\n";
  for (std::size_t k = 0; k < g.num_labels(); ++k) {
    os << "  " << k << " [label=\"" << escape_dot(g.class_names()[k])
       << "\", indegree=" << in[k] << "];\n";
  }
  for (const auto& [e, w] : g.edges()) {
    os << "  " << e.first << " -> " << e.second << " [weight=" << w << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string format_edges_csv(const LabelGraph& g) {
  std::ostringstream os;
  os << "source,target,weight\n";
  for (const auto& [e, w] : g.edges()) os << e.first << ',' << e.second << ',' << w << '\n';
  return os.str();
}

void export_dot(const LabelGraph& g, const std::filesystem::path& path) {
  write_text(path, format_dot(g));
}

void export_edges_csv(const LabelGraph& g, const std::filesystem::path& path) {
  write_text(path, format_edges_csv(g));
}

LabelGraph parse_edges_csv(const std::string& text, std::vector<std::string> class_names) {
  LabelGraph g(std::move(class_names));
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "source,target,weight") {
    throw Error("edges csv: missing header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t from = 0, to = 0, weight = 0;
    char c1 = 0, c2 = 0;
    if (!(row >> from >> c1 >> to >> c2 >> weight) || c1 != ',' || c2 != ',' ||
        !(row >> std::ws).eof()) {
      throw Error("edges csv: malformed line " + std::to_string(lineno));
    }
    g.add(from, to, weight);
  }
  return g;
}

}  // namespace uap
