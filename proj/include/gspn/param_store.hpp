#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>

#include "gspn/autodiff.hpp"

namespace gspn {

// How a raw (unconstrained) tensor maps to the value the model consumes.
enum class Constraint {
  None,
  SoftmaxRows,       // each row on the simplex
  SoftmaxVector,     // single-row tensor on the simplex
  SoftplusPositive,  // softplus(raw) + sigma floor
};

constexpr double kSigmaFloor = 1e-4;

// Named unconstrained parameters plus their constraint transforms.
// Gradients are always taken with respect to the raw tensors; the
// transforms are recorded on the tape so the chain rule covers them.
class ParamStore {
public:
  void add(const std::string& name, Eigen::MatrixXd raw, Constraint c);
  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  Eigen::MatrixXd& raw(const std::string& name);
  const Eigen::MatrixXd& raw(const std::string& name) const;
  Constraint constraint(const std::string& name) const;

  // constrained view as plain data
  Eigen::MatrixXd value(const std::string& name) const;
  // constrained view on the tape (raw enters as a gradient-collecting input)
  Value on_tape(Tape& tape, const std::string& name) const;

  // reconstructs raw so that value(name) reproduces `constrained` up to
  // roundoff (log for simplexes, inverse softplus for positives)
  void set_from_constrained(const std::string& name, const Eigen::MatrixXd& constrained);

  std::map<std::string, Eigen::MatrixXd> zero_like() const;
  const std::map<std::string, std::pair<Eigen::MatrixXd, Constraint>>& entries() const {
    return entries_;
  }

private:
  std::map<std::string, std::pair<Eigen::MatrixXd, Constraint>> entries_;
};

Eigen::MatrixXd softmax_rows_plain(const Eigen::MatrixXd& m);

// d(objective)/d(raw) for every parameter in the store; parameters the
// objective never touched get zeros.
std::map<std::string, Eigen::MatrixXd> grad(Tape& tape, Value objective,
                                            const ParamStore& params);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  long step = 0;
  std::map<std::string, Eigen::MatrixXd> m;
  std::map<std::string, Eigen::MatrixXd> v;
};

// Ascent step: parameters move along +gradient.
void adam_step(ParamStore& params, const std::map<std::string, Eigen::MatrixXd>& grads,
               AdamState& state);

struct FiniteDiffReport {
  double max_rel_err = 0.0;
  std::string worst_param;
};

// Central-difference check of d(objective)/d(raw) over every coordinate of
// every parameter. `build` must construct the objective on the given tape
// from the current raw values.
FiniteDiffReport finite_diff_check(ParamStore& params,
                                   const std::function<Value(Tape&)>& build, double eps);

}  // namespace gspn
