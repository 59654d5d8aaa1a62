#pragma once

#include "gspn/baselines.hpp"
#include "gspn/model.hpp"

namespace gspn {

// Conditional NLL of the held-out values behind the mask. Posteriors h^L
// come from the observed entries of the whole tree; the masked block of
// each vertex is then scored jointly under the top emission:
//   NLL_v = -log sum_i [prod_{a in mis} P(x_a | Q=i)] h^L_v(i).
// Vertices with nothing masked are excluded from the means.
MissingNll missing_nll(const Graph& g, const GspnModel& model);
MissingNll missing_nll(const Dataset& ds, const GspnModel& model);

// Conditional mean imputation: continuous entries get sum_i mu_i h^L_v(i);
// categorical entries take the argmax of the posterior-mixed probability
// vector (the categorical counterpart of the mean). The returned graph is
// fully observed.
Graph impute(const Graph& g, const GspnModel& model);
Dataset impute(const Dataset& ds, const GspnModel& model);

struct PerturbationResult {
  int vertex = 0;
  int attribute = 0;
  Eigen::VectorXd delta_pll;       // per vertex, new minus old
  std::vector<int> hop_distance;   // shortest directed distance from the
                                   // edited vertex, -1 if unreachable
};

// Re-scores every vertex after replacing one attribute value. Vertices
// beyond num_layers directed hops from the edit are bit-identical, so their
// delta is exactly zero.
PerturbationResult perturbation_query(const Graph& g, const GspnModel& model, int vertex,
                                      int attribute, double new_value);

}  // namespace gspn
