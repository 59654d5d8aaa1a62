#include "gspn/synthetic.hpp"

#include <algorithm>
#include <set>

#include "gspn/rng.hpp"

namespace gspn {

namespace {
constexpr double kDominantShare = 0.7;  // fraction of vertices in the dominant community
constexpr double kIntraEdgeProb = 0.97;
constexpr int kInDegree = 3;
}  // namespace

Dataset synth_community_graphs(int num_graphs, int vertices_per_graph, int num_communities,
                               double noise, std::uint64_t seed) {
  if (num_graphs <= 0 || vertices_per_graph <= 0 || num_communities <= 0) {
    throw std::invalid_argument("synth_community_graphs: counts must be positive");
  }
  if (noise < 0.0) throw std::invalid_argument("synth_community_graphs: noise must be >= 0");

  Rng rng(seed);
  Dataset ds;
  ds.schema.attributes = {AttributeKind::continuous()};
  ds.num_classes = num_communities;

  const int n = vertices_per_graph;
  for (int gi = 0; gi < num_graphs; ++gi) {
    Graph g;
    g.num_vertices = n;
    g.attributes = Eigen::MatrixXd::Zero(n, 1);
    g.mask.setConstant(n, 1, true);

    const int dominant = static_cast<int>(rng.uniform_below(num_communities));
    std::vector<int> community(n);
    std::vector<std::vector<int>> members(num_communities);
    for (int v = 0; v < n; ++v) {
      int c = dominant;
      if (num_communities > 1 && rng.uniform() >= kDominantShare) {
        c = static_cast<int>(rng.uniform_below(num_communities));
      }
      community[v] = c;
      members[c].push_back(v);
    }

    std::set<std::pair<int, int>> edge_set;
    for (int v = 0; v < n && n > 1; ++v) {
      const int want = std::min(kInDegree, n - 1);
      for (int k = 0; k < want; ++k) {
        int u = -1;
        for (int attempt = 0; attempt < 32 && u < 0; ++attempt) {
          const bool intra = rng.uniform() < kIntraEdgeProb;
          const auto& pool = members[community[v]];
          int candidate;
          if (intra && pool.size() > 1) {
            candidate = pool[rng.uniform_below(pool.size())];
          } else {
            candidate = static_cast<int>(rng.uniform_below(n));
          }
          if (candidate != v && !edge_set.count({candidate, v})) u = candidate;
        }
        if (u >= 0) edge_set.insert({u, v});
      }
    }
    g.edges.assign(edge_set.begin(), edge_set.end());

    InNeighborIndex idx(g);
    int majority = 0;
    std::vector<int> counts(num_communities, 0);
    for (int v = 0; v < n; ++v) {
      counts[community[v]]++;
      double mean = community[v];
      if (idx.degree(v) > 0) {
        double acc = 0.0;
        for (const int* u = idx.begin(v); u != idx.end(v); ++u) acc += community[*u];
        mean = acc / idx.degree(v);
      }
      g.attributes(v, 0) = mean + noise * rng.normal();
    }
    for (int c = 1; c < num_communities; ++c) {
      if (counts[c] > counts[majority]) majority = c;
    }
    g.label = majority;
    ds.graphs.push_back(std::move(g));
  }
  ds.validate();
  return ds;
}

}  // namespace gspn
