#pragma once

#include "gspn/model.hpp"

namespace gspn {

// Materialized readout parameters: one pooling matrix per level plus the
// per-state class distribution. Under mean pooling each child state's
// distribution over target states (a column of the C_g x C view) is on the
// simplex, which makes the pooled prior one automatically; sum pooling
// leaves theta free and normalizes with a softmax.
struct ReadoutParams {
  Pooling pooling = Pooling::Mean;
  std::vector<Eigen::MatrixXd> theta;  // levels 1..L, each C_g x C
  Eigen::MatrixXd target;              // C_g x num_classes, rows on the simplex
};

// pi_r = Omega(sum_u sum_{l>=1} theta_l h^l_u); vertex accumulation is
// value-ordered so relabeling leaves the result bit-identical
Eigen::VectorXd readout_prior(const LayerPosteriors& h_all, const ReadoutParams& rp);

// P(y | x_1..x_N) = sum_q P(y | Q=q) pi_r(q)
Eigen::VectorXd graph_predict(const Graph& g, const GspnModel& model);

ReadoutParams readout_params(const GspnModel& model);

enum class SupervisedMode { Joint, Frozen };

struct SupervisedHistory {
  std::vector<double> train_loglik;
  std::vector<double> val_accuracy;
  int best_epoch = -1;
};

// Maximizes sum_g log P(y_g | graph). Joint mode updates the hierarchy and
// the readout together; Frozen first fits the hierarchy unsupervised and
// then trains the readout on fixed posteriors. Early stopping on validation
// accuracy.
GspnModel train_supervised(const Dataset& ds, const GspnConfig& cfg, const ReadoutConfig& rcfg,
                           SupervisedMode mode, SupervisedHistory* history = nullptr);

}  // namespace gspn
