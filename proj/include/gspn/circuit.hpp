#pragma once

#include <vector>

#include "gspn/autodiff.hpp"
#include "gspn/types.hpp"

namespace gspn {

// Mixture emission parameters: for each of C states, one distribution per
// attribute (categorical probability vector or Gaussian mean/std).
struct AttributeEmission {
  AttributeKind kind;
  Eigen::MatrixXd cat_probs;  // C x arity, rows on the simplex
  Eigen::VectorXd mu;         // C
  Eigen::VectorXd sigma;      // C, positive
};

struct EmissionParams {
  int num_states = 0;
  std::vector<AttributeEmission> attrs;

  void validate(const AttributeSchema& schema) const;
};

// Computational unit of a probabilistic circuit. Leaves reference an
// attribute and a state (which parameter set of that attribute they use);
// sum units own a weight slot that callers bind to a simplex vector.
struct Unit {
  enum class Kind { Leaf, Product, Sum };
  Kind kind;
  int attr = -1;
  int state = -1;
  std::vector<int> children;
  int weight_slot = -1;
};

// Rooted DAG in topological order (children precede parents). Scopes are
// computed at construction.
struct Circuit {
  std::vector<Unit> units;
  int root = -1;
  int num_weight_slots = 0;
  std::vector<std::vector<int>> scopes;  // sorted attribute ids per unit

  void compute_scopes();
};

// Single root sum over C fully factorized product units, one leaf per
// attribute. Smooth and decomposable by construction; slot 0 holds the
// root mixture weights.
Circuit build_naive_bayes(const AttributeSchema& schema, int num_states);

// every sum unit's children share identical scopes
bool check_smooth(const Circuit& c);
// every product unit's children have pairwise disjoint scopes
bool check_decomposable(const Circuit& c);

// Tape-side evaluation inputs: per attribute the emission values, plus the
// log-weights for each sum slot.
struct CircuitTapeInputs {
  std::vector<Value> cat_log_probs;  // categorical attrs: C x arity
  std::vector<Value> mu;             // continuous attrs: 1 x C
  std::vector<Value> sigma;          // 1 x C
  std::vector<Value> slot_log_weights;  // per slot: 1 x (children of that slot's unit)
};

// Log evidence of one attribute row under the circuit, masked attributes
// marginalized by fixing their leaves to log 1 = 0. Differentiable through
// every input.
Value log_likelihood(Tape& tape, const Circuit& c, const CircuitTapeInputs& in,
                     const Eigen::VectorXd& x, const std::vector<std::uint8_t>& observed);

// Plain-number front ends used by queries and tests.
double log_likelihood(const Circuit& c, const EmissionParams& em, const Eigen::VectorXd& prior,
                      const Eigen::VectorXd& x, const std::vector<std::uint8_t>& observed);

// Posterior of the root sum unit's latent state given the (partial)
// evidence, obtained as the gradient of the root log-value with respect to
// the root's log-weights (single backward sweep, template agnostic).
// Throws ImpossibleEvidenceError when the evidence has zero probability.
Eigen::VectorXd sum_posteriors(const Circuit& c, const EmissionParams& em,
                               const Eigen::VectorXd& prior, const Eigen::VectorXd& x,
                               const std::vector<std::uint8_t>& observed);

}  // namespace gspn
