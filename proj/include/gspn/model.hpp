#pragma once

#include <memory>
#include <optional>

#include "gspn/circuit.hpp"
#include "gspn/param_store.hpp"
#include "gspn/rng.hpp"
#include "gspn/types.hpp"

namespace gspn {

enum class Pooling { Mean, Sum };

struct ReadoutConfig {
  int num_states = 8;  // latent states of the target mixture
  Pooling pooling = Pooling::Mean;
  double learning_rate = 0.01;
  int epochs = 200;
  int patience = 50;
};

struct GspnConfig {
  int num_layers = 2;  // height of the computational trees
  int num_states = 5;  // mixture states per sum unit
  bool shortcut = false;
  double learning_rate = 0.01;
  int batch_size = 32;
  int epochs = 200;
  int patience = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// Trained (or freshly initialized) model: schema, configuration and the
// parameter store. Parameters are shared across all vertices at the same
// height. Readout parameters live in the same store under "readout.*" once
// supervised training attaches a head.
struct GspnModel {
  AttributeSchema schema;
  GspnConfig config;
  ParamStore params;
  std::optional<ReadoutConfig> readout;
  std::optional<int> num_classes;

  int L() const { return config.num_layers; }
  int C() const { return config.num_states; }
  // heights carrying free emission parameters (shortcut derives the top one)
  int emission_heights() const { return config.shortcut ? config.num_layers : config.num_layers + 1; }

  // materialized emission at a height; height == L under shortcut returns
  // the convex combination of heights 1..L-1
  EmissionParams emission(int height) const;
  Eigen::VectorXd prior0() const;
  Eigen::MatrixXd transition(int level) const;
};

// Posteriors and priors of every vertex at every height, plus the
// per-vertex log-likelihood terms of the roots.
struct LayerPosteriors {
  std::vector<Eigen::MatrixXd> h;       // L+1 matrices, N x C
  std::vector<Eigen::MatrixXd> priors;  // L+1 matrices, N x C
  Eigen::VectorXd pll;                  // N
};

// pi(i) = (1/T) sum_t sum_k theta(k, i) h_t(k). Permutation invariant in
// the children bit-for-bit (value-ordered accumulation).
Eigen::VectorXd aggregate_prior(const Eigen::MatrixXd& theta,
                                const std::vector<Eigen::VectorXd>& child_posteriors);

// Convex combination of emissions: mean of categorical vectors, mean of
// Gaussian means, variances summed and divided by T^2.
EmissionParams shortcut_emission(const std::vector<EmissionParams>& lower);

// Bottom-up evaluation of the SPN hierarchy over all computational trees of
// a graph at once. Masked attributes are marginalized; vertices without
// incoming edges keep the leaf prior at every height.
LayerPosteriors forward_pass(const Graph& g, const GspnModel& model);

struct PseudoLogLik {
  Eigen::VectorXd per_vertex;
  double total = 0.0;
};
PseudoLogLik pseudo_log_likelihood(const Graph& g, const GspnModel& model);

// row v = concat(h^0_v, ..., h^L_v)
Eigen::MatrixXd vertex_embeddings(const Graph& g, const GspnModel& model);

struct EpochStats {
  double train_pll = 0.0;
  double val_pll = 0.0;
};
struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
};

// Adam ascent on the mean per-vertex pseudo log-likelihood over mini
// batches of graphs, hold-out validation (10% of the training graphs) with
// early stopping, k-means/frequency initialization. Deterministic given
// cfg.seed.
GspnModel train_unsupervised(const Dataset& ds, const GspnConfig& cfg,
                             TrainHistory* history = nullptr);

// ---- internals shared with the readout and query modules ----

struct CompiledGraph {
  int n = 0;
  std::shared_ptr<const AggregationTopology> topo;
  std::shared_ptr<const std::vector<std::uint8_t>> no_in_edges;
  std::vector<std::vector<int>> cat_values;          // per attribute (categorical)
  std::vector<Eigen::VectorXd> cont_values;          // per attribute (continuous)
  std::vector<std::vector<std::uint8_t>> observed;   // per attribute
  Eigen::MatrixXd observed_any;                      // N x 1, 0/1
};
CompiledGraph compile_graph(const Graph& g, const AttributeSchema& schema);

struct TapeEmissions {
  std::vector<Value> cat_log_probs;
  std::vector<Value> mu;
  std::vector<Value> sigma;
};
TapeEmissions emissions_on_tape(Tape& tape, const GspnModel& model, int height);

struct TapeForward {
  std::vector<Value> h;
  std::vector<Value> priors;
  Value pll;
};
TapeForward forward_on_tape(Tape& tape, const GspnModel& model, const CompiledGraph& cg);

// fresh parameters; init_graphs supplies the rows for k-means and the
// empirical categorical frequencies
GspnModel init_model(const AttributeSchema& schema, const GspnConfig& cfg,
                     const std::vector<const Graph*>& init_graphs,
                     std::optional<int> num_classes, Rng& rng);

}  // namespace gspn
