#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gspn/common.hpp"

namespace gspn {

struct AttributeKind {
  enum class Tag { Categorical, Continuous };
  Tag tag = Tag::Continuous;
  int arity = 0;  // categorical only, >= 2

  static AttributeKind categorical(int arity) { return {Tag::Categorical, arity}; }
  static AttributeKind continuous() { return {Tag::Continuous, 0}; }
  bool is_categorical() const { return tag == Tag::Categorical; }
  bool operator==(const AttributeKind&) const = default;
};

struct AttributeSchema {
  std::vector<AttributeKind> attributes;

  int num_attributes() const { return static_cast<int>(attributes.size()); }
  // throws ValidationError on empty schema or arity < 2
  void validate() const;
  bool operator==(const AttributeSchema&) const = default;
};

// Directed attributed graph. `attributes` stores categorical values as the
// category index and continuous values as reals; `mask(v, a)` is true when
// the entry is observed. Masked entries may still hold a value (e.g. the
// held-out truth after masking) but it carries no semantic weight, and
// equality ignores it. Immutable by convention once built.
struct Graph {
  int num_vertices = 0;
  std::vector<std::pair<int, int>> edges;  // (u, v) means u -> v
  Eigen::MatrixXd attributes;              // N x d
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // N x d, true = observed
  std::optional<int> label;

  // checks edge endpoints, self loops, duplicates, value ranges
  void validate(const AttributeSchema& schema, const std::string& context = "") const;
};

bool semantically_equal(const Graph& a, const Graph& b);

struct Dataset {
  AttributeSchema schema;
  std::vector<Graph> graphs;
  std::optional<int> num_classes;

  std::size_t size() const { return graphs.size(); }
  void validate() const;
};

bool semantically_equal(const Dataset& a, const Dataset& b);

// All u with an edge (u, v), ascending. Throws on out-of-range v.
std::vector<int> in_neighbors(const Graph& g, int v);

// CSR view of incoming edges, neighbor lists ascending. Built once per
// graph wherever the same adjacency is walked repeatedly.
struct InNeighborIndex {
  std::vector<int> offsets;    // size N+1
  std::vector<int> neighbors;  // size |E|

  explicit InNeighborIndex(const Graph& g);
  int degree(int v) const { return offsets[v + 1] - offsets[v]; }
  const int* begin(int v) const { return neighbors.data() + offsets[v]; }
  const int* end(int v) const { return neighbors.data() + offsets[v + 1]; }
};

// Shortest directed path lengths source -> v, -1 when unreachable.
std::vector<int> directed_distances(const Graph& g, int source);

}  // namespace gspn
