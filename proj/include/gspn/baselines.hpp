#pragma once

#include "gspn/circuit.hpp"
#include "gspn/types.hpp"

namespace gspn {

// Structure-agnostic mixture over vertex attribute rows: per-state diagonal
// Gaussian / categorical emissions, matching the model's emission family
// exactly.
struct MixtureParams {
  Eigen::VectorXd weights;  // C, simplex
  EmissionParams emission;

  int num_states() const { return emission.num_states; }
};

// Maximum-likelihood single-state fit over observed entries: per-attribute
// (population) mean and std for continuous attributes, empirical
// frequencies for categorical ones. Degenerate attributes get a floored
// sigma and a warning.
MixtureParams fit_gaussian(const Dataset& ds);

struct EmTrace {
  std::vector<double> log_likelihood;  // per iteration, observed data
  int iterations = 0;
};

// EM over vertex rows, each vertex independent; missing entries contribute
// nothing to the E-step responsibilities or the M-step statistics, which is
// exact for this diagonal family. K-means initialization, deterministic
// given seed.
MixtureParams fit_gmm(const Dataset& ds, int num_states, int max_iters, double tol,
                      std::uint64_t seed, EmTrace* trace = nullptr);

// log sum_i w_i prod_{a observed} P(x_a | i)
double mixture_row_log_lik(const MixtureParams& p, const Eigen::VectorXd& x,
                           const std::vector<std::uint8_t>& observed);

// responsibilities given the observed coordinates
Eigen::VectorXd mixture_responsibilities(const MixtureParams& p, const Eigen::VectorXd& x,
                                         const std::vector<std::uint8_t>& observed);

struct MissingNll {
  double per_vertex_mean = 0.0;     // mean over vertices with missing entries
  double per_attribute_mean = 0.0;  // same mass normalized by masked entries
  Eigen::VectorXd per_vertex;       // NaN for vertices with nothing masked
  long vertices = 0;
  long entries = 0;
};

// Conditional NLL of the held-out values behind the mask: condition on the
// observed part of each row, evaluate the masked block jointly.
MissingNll baseline_missing_nll(const MixtureParams& p, const Dataset& ds);

}  // namespace gspn
