#pragma once

#include <Eigen/Dense>

#include "gspn/rng.hpp"

namespace gspn {

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x dims
  Eigen::MatrixXd stddev;     // k x dims, per-cluster per-coordinate
  std::vector<int> assignment;
};

// Lloyd iterations with k-means++ seeding. Rows with fewer points than
// clusters are tolerated: empty clusters keep a sampled row as centroid and
// fall back to the global std. Deterministic given the Rng state.
KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, Rng& rng, int max_iters = 50);

}  // namespace gspn
