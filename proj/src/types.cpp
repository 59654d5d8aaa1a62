#include "gspn/types.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace gspn {

void AttributeSchema::validate() const {
  if (attributes.empty()) {
    throw ValidationError("schema: at least one attribute required");
  }
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    if (attributes[a].is_categorical() && attributes[a].arity < 2) {
      throw ValidationError("schema: attribute " + std::to_string(a) +
                            ": categorical arity must be >= 2");
    }
  }
}

void Graph::validate(const AttributeSchema& schema, const std::string& context) const {
  const auto fail = [&](const std::string& msg) {
    throw ValidationError(context.empty() ? msg : context + ": " + msg);
  };
  if (num_vertices < 0) fail("negative vertex count");
  const int d = schema.num_attributes();
  if (attributes.rows() != num_vertices || attributes.cols() != d) {
    fail("attribute matrix must be " + std::to_string(num_vertices) + "x" + std::to_string(d));
  }
  if (mask.rows() != num_vertices || mask.cols() != d) {
    fail("mask matrix must be " + std::to_string(num_vertices) + "x" + std::to_string(d));
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= num_vertices || v < 0 || v >= num_vertices) {
      fail("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    }
    if (u == v) fail("self-loop at vertex " + std::to_string(u));
    if (!seen.insert({u, v}).second) {
      fail("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
  }
  for (int v = 0; v < num_vertices; ++v) {
    for (int a = 0; a < d; ++a) {
      if (!mask(v, a)) continue;
      const double x = attributes(v, a);
      if (!std::isfinite(x)) {
        fail("vertex " + std::to_string(v) + " attribute " + std::to_string(a) +
             ": non-finite value");
      }
      if (schema.attributes[a].is_categorical()) {
        const int k = schema.attributes[a].arity;
        if (x != std::floor(x) || x < 0 || x >= k) {
          fail("vertex " + std::to_string(v) + " attribute " + std::to_string(a) +
               ": categorical value " + std::to_string(x) + " outside [0, " +
               std::to_string(k) + ")");
        }
      }
    }
  }
}

void Dataset::validate() const {
  schema.validate();
  if (num_classes && *num_classes <= 0) {
    throw ValidationError("dataset: num_classes must be positive");
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    graphs[i].validate(schema, "graph " + std::to_string(i));
    if (graphs[i].label) {
      if (!num_classes) {
        throw ValidationError("graph " + std::to_string(i) +
                              ": has a label but the dataset declares no num_classes");
      }
      if (*graphs[i].label < 0 || *graphs[i].label >= *num_classes) {
        throw ValidationError("graph " + std::to_string(i) + ": label " +
                              std::to_string(*graphs[i].label) + " outside [0, " +
                              std::to_string(*num_classes) + ")");
      }
    }
  }
}

bool semantically_equal(const Graph& a, const Graph& b) {
  if (a.num_vertices != b.num_vertices || a.label != b.label) return false;
  if (a.edges != b.edges) return false;
  if (a.mask.rows() != b.mask.rows() || a.mask.cols() != b.mask.cols()) return false;
  for (Eigen::Index v = 0; v < a.mask.rows(); ++v) {
    for (Eigen::Index c = 0; c < a.mask.cols(); ++c) {
      if (a.mask(v, c) != b.mask(v, c)) return false;
      if (a.mask(v, c) && a.attributes(v, c) != b.attributes(v, c)) return false;
    }
  }
  return true;
}

bool semantically_equal(const Dataset& a, const Dataset& b) {
  if (!(a.schema == b.schema) || a.num_classes != b.num_classes) return false;
  if (a.graphs.size() != b.graphs.size()) return false;
  for (std::size_t i = 0; i < a.graphs.size(); ++i) {
    if (!semantically_equal(a.graphs[i], b.graphs[i])) return false;
  }
  return true;
}

std::vector<int> in_neighbors(const Graph& g, int v) {
  if (v < 0 || v >= g.num_vertices) {
    throw std::out_of_range("in_neighbors: vertex " + std::to_string(v) + " outside [0, " +
                            std::to_string(g.num_vertices) + ")");
  }
  std::vector<int> result;
  for (const auto& [u, w] : g.edges) {
    if (w == v) result.push_back(u);
  }
  std::sort(result.begin(), result.end());
  return result;
}

InNeighborIndex::InNeighborIndex(const Graph& g) {
  offsets.assign(g.num_vertices + 1, 0);
  for (const auto& [u, v] : g.edges) offsets[v + 1]++;
  for (int v = 0; v < g.num_vertices; ++v) offsets[v + 1] += offsets[v];
  neighbors.resize(g.edges.size());
  std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& [u, v] : g.edges) neighbors[cursor[v]++] = u;
  for (int v = 0; v < g.num_vertices; ++v) {
    std::sort(neighbors.begin() + offsets[v], neighbors.begin() + offsets[v + 1]);
  }
}

std::vector<int> directed_distances(const Graph& g, int source) {
  std::vector<std::vector<int>> out(g.num_vertices);
  for (const auto& [u, v] : g.edges) out[u].push_back(v);
  std::vector<int> dist(g.num_vertices, -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : out[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace gspn
