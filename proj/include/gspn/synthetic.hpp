#pragma once

#include "gspn/types.hpp"

namespace gspn {

// Random community graphs whose single continuous attribute depends on the
// surrounding structure: each vertex draws its value from a Gaussian whose
// mean is the average community id of its in-neighbors (its own community
// when it has none) and whose std is `noise`. Edges are mostly
// intra-community, every vertex gets up to three incoming edges, and each
// graph is labeled with its majority community. Deterministic given seed.
Dataset synth_community_graphs(int num_graphs, int vertices_per_graph, int num_communities,
                               double noise, std::uint64_t seed);

}  // namespace gspn
