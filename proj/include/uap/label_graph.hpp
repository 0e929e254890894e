#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uap/classifier.hpp"
#include "uap/dataset.hpp"
#include "uap/evaluation.hpp"

namespace uap {

/// Weighted digraph of label transitions: edge (i, j) with weight w means
/// w images predicted as i were pushed to j.
class LabelGraph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  explicit LabelGraph(std::vector<std::string> class_names);

  /// Adds `weight` to edge (from, to). Self-edges and zero weights are rejected.
  void add(std::size_t from, std::size_t to, std::size_t weight = 1);

  std::size_t num_labels() const noexcept { return class_names_.size(); }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  const std::map<Edge, std::size_t>& edges() const noexcept { return edges_; }

  /// Weighted in/out degree of every label.
  std::vector<std::size_t> indegree() const;
  std::vector<std::size_t> outdegree() const;
  std::size_t total_weight() const;

 private:
  std::vector<std::string> class_names_;
  std::map<Edge, std::size_t> edges_;
};

/// Graph from the off-diagonal transitions of a fooling report.
LabelGraph label_graph_from_report(const FoolingReport& report,
                                   std::vector<std::string> class_names);

/// One edge per fooled image, from clean to perturbed prediction. Throws
/// if the total weight disagrees with the fooled count.
LabelGraph build_label_graph(const Dataset& X, std::span<const float> v,
                             const Model& model, bool clamp = false);

/// Labels by weighted indegree, descending; ties by label ascending.
/// Labels with zero indegree are omitted.
std::vector<std::pair<std::size_t, std::size_t>> dominant_labels(const LabelGraph& g,
                                                                 std::size_t top_k);

std::string format_dot(const LabelGraph& g);
/// `source,target,weight` with one row per edge, sorted by (source, target).
std::string format_edges_csv(const LabelGraph& g);
void export_dot(const LabelGraph& g, const std::filesystem::path& path);
void export_edges_csv(const LabelGraph& g, const std::filesystem::path& path);

/// Parses the output of format_edges_csv back into a graph.
LabelGraph parse_edges_csv(const std::string& text, std::vector<std::string> class_names);

}  // namespace uap
