#include "gspn/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gspn {

KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, Rng& rng, int max_iters) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  if (n == 0 || k < 1) throw std::invalid_argument("kmeans: need data and k >= 1");

  Eigen::MatrixXd centroids(k, d);
  // k-means++ seeding
  centroids.row(0) = rows.row(rng.uniform_below(n));
  Eigen::VectorXd dist2 = (rows.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double target = rng.uniform() * total, acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (acc >= target) { pick = i; break; }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_below(n));
    }
    centroids.row(c) = rows.row(pick);
    dist2 = dist2.cwiseMin((rows.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dd = (rows.row(i) - centroids.row(c)).squaredNorm();
        if (dd < best_d) { best_d = dd; best = c; }
      }
      if (assign[i] != best) { assign[i] = best; changed = true; }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += rows.row(i);
      counts(assign[i]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0) centroids.row(c) = sums.row(c) / counts(c);
    }
    if (!changed && iter > 0) break;
  }

  Eigen::MatrixXd global_centered = rows.rowwise() - rows.colwise().mean();
  Eigen::RowVectorXd global_std =
      (global_centered.array().square().colwise().sum() / n).sqrt();
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(k, d);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    var.row(assign[i]) += (rows.row(i) - centroids.row(assign[i])).array().square().matrix();
    counts(assign[i]) += 1.0;
  }
  Eigen::MatrixXd stddev(k, d);
  for (int c = 0; c < k; ++c) {
    if (counts(c) > 1) {
      stddev.row(c) = (var.row(c) / counts(c)).array().sqrt();
    } else {
      stddev.row(c) = global_std;
    }
  }
  return {std::move(centroids), std::move(stddev), std::move(assign)};
}

}  // namespace gspn
