#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gspn/common.hpp"

namespace gspn {

class Tape;

// Handle to a tape node. Values are dense double matrices; scalars are 1x1.
struct Value {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Eigen::MatrixXd& data() const;
  double scalar() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;
};

// Incoming-edge adjacency used by the structural graph ops. Neighbor
// summation is ordered by value, not by vertex id, so the result is
// bit-stable under vertex relabeling and edge shuffling.
struct AggregationTopology {
  std::vector<int> offsets;
  std::vector<int> neighbors;
  int num_vertices() const { return static_cast<int>(offsets.size()) - 1; }
};

// Reverse-mode tape over the dense ops the model needs. Forward values are
// computed eagerly as ops are recorded; creation order is the topological
// order, and backward() walks it exactly once in reverse.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value constant(Eigen::MatrixXd m);
  Value scalar_constant(double x);
  // leaf that collects gradient under `name`; repeated requests for the
  // same name return the same node
  Value input(const std::string& name, const Eigen::MatrixXd& m);

  Value add(Value a, Value b);
  Value mul(Value a, Value b);
  Value mul_const(Value a, const Eigen::MatrixXd& m);
  Value scale(Value a, double s);
  Value matmul(Value a, Value b);
  Value transpose(Value a);
  Value log(Value a);
  Value exp(Value a);
  Value sqrt(Value a);
  Value softplus(Value a, double floor = 0.0);
  // matrix plus a broadcast row vector
  Value add_rowvec(Value a, Value row);
  Value log_sum_exp_rows(Value a);  // N x C -> N x 1, max-shifted
  Value log_sum_exp(Value a);       // all entries -> 1 x 1
  Value softmax_rows(Value a);
  Value log_softmax_rows(Value a);
  Value sum(Value a);   // 1 x 1
  Value mean(Value a);  // 1 x 1
  Value index(Value a, int r, int c);
  Value concat_cols(const std::vector<Value>& parts);

  // out(v, i) = log N(x(v); mu(i), sigma(i)) for observed v, else 0
  Value gaussian_log_pdf(const Eigen::VectorXd& x, const std::vector<std::uint8_t>& observed,
                         Value mu, Value sigma);
  // out(v, i) = log_probs(i, idx(v)) for observed v, else 0
  Value gather_categorical(Value log_probs, const std::vector<int>& idx,
                           const std::vector<std::uint8_t>& observed);
  // out.row(v) = mean of a.row(u) over in-neighbors u, zero row if none
  Value neighbor_mean(Value a, std::shared_ptr<const AggregationTopology> topo);
  // out.row(v) = rows_from_b[v] ? b : a.row(v)
  Value blend_rows(Value a, Value b, std::shared_ptr<const std::vector<std::uint8_t>> rows_from_b);
  // column sums as a 1 x C row, value-ordered accumulation
  Value col_sum(Value a);

  // seeds d(root)=1 and accumulates gradients; root must be scalar
  void backward(Value root);
  const Eigen::MatrixXd& grad(Value v) const;
  // gradient of the named input, zeros(rows, cols) if it never appeared
  Eigen::MatrixXd input_grad(const std::string& name, Eigen::Index rows,
                             Eigen::Index cols) const;

  std::size_t size() const { return nodes_.size(); }
  const Eigen::MatrixXd& data(int id) const { return nodes_[id].value; }

private:
  enum class Op {
    Constant, Input, Add, Mul, MulConst, Scale, MatMul, Transpose, Log, Exp, Sqrt,
    Softplus, AddRowVec, LogSumExpRows, LogSumExpAll, SoftmaxRows, LogSoftmaxRows,
    Sum, Mean, Index, ConcatCols, GaussianLogPdf, GatherCategorical, NeighborMean,
    BlendRows, ColSum,
  };

  struct GaussPayload {
    Eigen::VectorXd x;
    std::vector<std::uint8_t> observed;
  };
  struct GatherPayload {
    std::vector<int> idx;
    std::vector<std::uint8_t> observed;
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    std::vector<int> rest;  // ConcatCols extras
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    double param = 0.0;  // Scale factor, Softplus floor
    int row = 0, col = 0;
    Eigen::MatrixXd mat;  // MulConst multiplier
    std::shared_ptr<const GaussPayload> gauss;
    std::shared_ptr<const GatherPayload> gather;
    std::shared_ptr<const AggregationTopology> topo;
    std::shared_ptr<const std::vector<std::uint8_t>> row_switch;
  };

  int push(Node n);
  Value wrap(int id) { return Value{this, id}; }
  void check(Value v) const;
  void backprop(int id);

  std::vector<Node> nodes_;
  std::map<std::string, int> inputs_;
  bool backward_done_ = false;
};

// Accumulates a span of doubles in ascending value order. Shared by the
// aggregation ops and their plain (non-tape) mirrors.
double ordered_sum(std::vector<double>& scratch);

}  // namespace gspn
