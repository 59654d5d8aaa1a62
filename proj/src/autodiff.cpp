#include "gspn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gspn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.9189385332046727417803297364056176;  // 0.5*log(2*pi)

inline double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline double sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

double ordered_sum(std::vector<double>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  double acc = 0.0;
  for (double v : scratch) acc += v;
  return acc;
}

const Eigen::MatrixXd& Value::data() const { return tape->data(id); }
double Value::scalar() const {
  const auto& m = data();
  if (m.size() != 1) throw std::logic_error("Value::scalar: value is not 1x1");
  return m(0, 0);
}
Eigen::Index Value::rows() const { return data().rows(); }
Eigen::Index Value::cols() const { return data().cols(); }

void Tape::check(Value v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::logic_error("Value does not belong to this tape");
  }
}

int Tape::push(Node n) {
  if (backward_done_) throw std::logic_error("tape reused after backward");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Value Tape::constant(Eigen::MatrixXd m) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(m);
  return wrap(push(std::move(n)));
}

Value Tape::scalar_constant(double x) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = x;
  return constant(std::move(m));
}

Value Tape::input(const std::string& name, const Eigen::MatrixXd& m) {
  auto it = inputs_.find(name);
  if (it != inputs_.end()) return wrap(it->second);
  Node n;
  n.op = Op::Input;
  n.value = m;
  const int id = push(std::move(n));
  inputs_[name] = id;
  return wrap(id);
}

Value Tape::add(Value a, Value b) {
  check(a); check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  Node n;
  n.op = Op::Add;
  n.a = a.id; n.b = b.id;
  n.value = a.data() + b.data();
  return wrap(push(std::move(n)));
}

Value Tape::mul(Value a, Value b) {
  check(a); check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("mul: shape mismatch");
  }
  Node n;
  n.op = Op::Mul;
  n.a = a.id; n.b = b.id;
  n.value = a.data().cwiseProduct(b.data());
  return wrap(push(std::move(n)));
}

Value Tape::mul_const(Value a, const Eigen::MatrixXd& m) {
  check(a);
  if (a.rows() != m.rows() || a.cols() != m.cols()) {
    throw std::invalid_argument("mul_const: shape mismatch");
  }
  Node n;
  n.op = Op::MulConst;
  n.a = a.id;
  n.mat = m;
  n.value = a.data().cwiseProduct(m);
  return wrap(push(std::move(n)));
}

Value Tape::scale(Value a, double s) {
  check(a);
  Node n;
  n.op = Op::Scale;
  n.a = a.id;
  n.param = s;
  n.value = s * a.data();
  return wrap(push(std::move(n)));
}

Value Tape::matmul(Value a, Value b) {
  check(a); check(b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Node n;
  n.op = Op::MatMul;
  n.a = a.id; n.b = b.id;
  // explicit entry loop: each output row is a pure function of the same
  // input row, so row permutations stay bit-exact (BLAS kernels round
  // packet lanes and tails differently)
  const auto& A = a.data();
  const auto& B = b.data();
  n.value.resize(A.rows(), B.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < A.cols(); ++k) acc += A(r, k) * B(k, c);
      n.value(r, c) = acc;
    }
  }
  return wrap(push(std::move(n)));
}

Value Tape::transpose(Value a) {
  check(a);
  Node n;
  n.op = Op::Transpose;
  n.a = a.id;
  n.value = a.data().transpose();
  return wrap(push(std::move(n)));
}

Value Tape::log(Value a) {
  check(a);
  Node n;
  n.op = Op::Log;
  n.a = a.id;
  // scalar libm, not Eigen packet math: packet lanes and loop tails may
  // round differently, which would break bit-stability under relabeling
  n.value = a.data().unaryExpr([](double x) { return std::log(x); });
  return wrap(push(std::move(n)));
}

Value Tape::exp(Value a) {
  check(a);
  Node n;
  n.op = Op::Exp;
  n.a = a.id;
  n.value = a.data().unaryExpr([](double x) { return std::exp(x); });
  return wrap(push(std::move(n)));
}

Value Tape::sqrt(Value a) {
  check(a);
  Node n;
  n.op = Op::Sqrt;
  n.a = a.id;
  n.value = a.data().unaryExpr([](double x) { return std::sqrt(x); });
  return wrap(push(std::move(n)));
}

Value Tape::softplus(Value a, double floor) {
  check(a);
  Node n;
  n.op = Op::Softplus;
  n.a = a.id;
  n.param = floor;
  n.value = a.data().unaryExpr([floor](double x) { return stable_softplus(x) + floor; });
  return wrap(push(std::move(n)));
}

Value Tape::add_rowvec(Value a, Value row) {
  check(a); check(row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_rowvec: row must be 1 x cols(a)");
  }
  Node n;
  n.op = Op::AddRowVec;
  n.a = a.id; n.b = row.id;
  n.value = a.data().rowwise() + row.data().row(0);
  return wrap(push(std::move(n)));
}

Value Tape::log_sum_exp_rows(Value a) {
  check(a);
  Node n;
  n.op = Op::LogSumExpRows;
  n.a = a.id;
  const auto& m = a.data();
  n.value.resize(m.rows(), 1);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    if (mx == kNegInf) {
      n.value(r, 0) = kNegInf;
      continue;
    }
    double s = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += std::exp(m(r, c) - mx);
    n.value(r, 0) = mx + std::log(s);
  }
  return wrap(push(std::move(n)));
}

Value Tape::log_sum_exp(Value a) {
  check(a);
  Node n;
  n.op = Op::LogSumExpAll;
  n.a = a.id;
  const auto& m = a.data();
  const double mx = m.maxCoeff();
  double out;
  if (mx == kNegInf) {
    out = kNegInf;
  } else {
    double s = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) s += std::exp(m(r, c) - mx);
    out = mx + std::log(s);
  }
  n.value.resize(1, 1);
  n.value(0, 0) = out;
  return wrap(push(std::move(n)));
}

Value Tape::softmax_rows(Value a) {
  check(a);
  Node n;
  n.op = Op::SoftmaxRows;
  n.a = a.id;
  const auto& m = a.data();
  n.value.resize(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double e = std::exp(m(r, c) - mx);
      n.value(r, c) = e;
      s += e;
    }
    n.value.row(r) /= s;
  }
  return wrap(push(std::move(n)));
}

Value Tape::log_softmax_rows(Value a) {
  check(a);
  Node n;
  n.op = Op::LogSoftmaxRows;
  n.a = a.id;
  const auto& m = a.data();
  n.value.resize(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += std::exp(m(r, c) - mx);
    const double lse = mx + std::log(s);
    for (Eigen::Index c = 0; c < m.cols(); ++c) n.value(r, c) = m(r, c) - lse;
  }
  return wrap(push(std::move(n)));
}

Value Tape::sum(Value a) {
  check(a);
  Node n;
  n.op = Op::Sum;
  n.a = a.id;
  n.value.resize(1, 1);
  n.value(0, 0) = a.data().sum();
  return wrap(push(std::move(n)));
}

Value Tape::mean(Value a) {
  check(a);
  Node n;
  n.op = Op::Mean;
  n.a = a.id;
  n.value.resize(1, 1);
  n.value(0, 0) = a.data().mean();
  return wrap(push(std::move(n)));
}

Value Tape::index(Value a, int r, int c) {
  check(a);
  if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols()) {
    throw std::invalid_argument("index: out of range");
  }
  Node n;
  n.op = Op::Index;
  n.a = a.id;
  n.row = r; n.col = c;
  n.value.resize(1, 1);
  n.value(0, 0) = a.data()(r, c);
  return wrap(push(std::move(n)));
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    check(p);
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Node n;
  n.op = Op::ConcatCols;
  for (const auto& p : parts) n.rest.push_back(p.id);
  n.value.resize(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    n.value.middleCols(at, p.cols()) = p.data();
    at += p.cols();
  }
  return wrap(push(std::move(n)));
}

Value Tape::gaussian_log_pdf(const Eigen::VectorXd& x, const std::vector<std::uint8_t>& observed,
                             Value mu, Value sigma) {
  check(mu); check(sigma);
  if (mu.rows() != 1 || sigma.rows() != 1 || mu.cols() != sigma.cols()) {
    throw std::invalid_argument("gaussian_log_pdf: mu and sigma must be matching row vectors");
  }
  if (static_cast<Eigen::Index>(observed.size()) != x.size()) {
    throw std::invalid_argument("gaussian_log_pdf: mask length mismatch");
  }
  if ((sigma.data().array() <= 0.0).any()) {
    throw std::invalid_argument("gaussian_log_pdf: sigma must be positive");
  }
  Node n;
  n.op = Op::GaussianLogPdf;
  n.a = mu.id; n.b = sigma.id;
  auto payload = std::make_shared<GaussPayload>();
  payload->x = x;
  payload->observed = observed;
  const Eigen::Index N = x.size(), C = mu.cols();
  n.value = Eigen::MatrixXd::Zero(N, C);
  for (Eigen::Index v = 0; v < N; ++v) {
    if (!observed[v]) continue;
    for (Eigen::Index i = 0; i < C; ++i) {
      const double s = sigma.data()(0, i);
      const double z = (x(v) - mu.data()(0, i)) / s;
      n.value(v, i) = -kHalfLog2Pi - std::log(s) - 0.5 * z * z;
    }
  }
  n.gauss = std::move(payload);
  return wrap(push(std::move(n)));
}

Value Tape::gather_categorical(Value log_probs, const std::vector<int>& idx,
                               const std::vector<std::uint8_t>& observed) {
  check(log_probs);
  if (idx.size() != observed.size()) {
    throw std::invalid_argument("gather_categorical: mask length mismatch");
  }
  Node n;
  n.op = Op::GatherCategorical;
  n.a = log_probs.id;
  auto payload = std::make_shared<GatherPayload>();
  payload->idx = idx;
  payload->observed = observed;
  const Eigen::Index N = static_cast<Eigen::Index>(idx.size());
  const Eigen::Index C = log_probs.rows();
  n.value = Eigen::MatrixXd::Zero(N, C);
  for (Eigen::Index v = 0; v < N; ++v) {
    if (!observed[v]) continue;
    if (idx[v] < 0 || idx[v] >= log_probs.cols()) {
      throw std::invalid_argument("gather_categorical: index out of range");
    }
    for (Eigen::Index i = 0; i < C; ++i) n.value(v, i) = log_probs.data()(i, idx[v]);
  }
  n.gather = std::move(payload);
  return wrap(push(std::move(n)));
}

Value Tape::neighbor_mean(Value a, std::shared_ptr<const AggregationTopology> topo) {
  check(a);
  if (a.rows() != topo->num_vertices()) {
    throw std::invalid_argument("neighbor_mean: row count does not match topology");
  }
  Node n;
  n.op = Op::NeighborMean;
  n.a = a.id;
  const auto& m = a.data();
  n.value = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  std::vector<double> scratch;
  for (int v = 0; v < topo->num_vertices(); ++v) {
    const int deg = topo->offsets[v + 1] - topo->offsets[v];
    if (deg == 0) continue;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      scratch.clear();
      for (int k = topo->offsets[v]; k < topo->offsets[v + 1]; ++k) {
        scratch.push_back(m(topo->neighbors[k], c));
      }
      n.value(v, c) = ordered_sum(scratch) / deg;
    }
  }
  n.topo = std::move(topo);
  return wrap(push(std::move(n)));
}

Value Tape::blend_rows(Value a, Value b,
                       std::shared_ptr<const std::vector<std::uint8_t>> rows_from_b) {
  check(a); check(b);
  if (b.rows() != 1 || b.cols() != a.cols()) {
    throw std::invalid_argument("blend_rows: b must be 1 x cols(a)");
  }
  if (static_cast<Eigen::Index>(rows_from_b->size()) != a.rows()) {
    throw std::invalid_argument("blend_rows: switch length mismatch");
  }
  Node n;
  n.op = Op::BlendRows;
  n.a = a.id; n.b = b.id;
  n.value = a.data();
  for (Eigen::Index v = 0; v < n.value.rows(); ++v) {
    if ((*rows_from_b)[v]) n.value.row(v) = b.data().row(0);
  }
  n.row_switch = std::move(rows_from_b);
  return wrap(push(std::move(n)));
}

Value Tape::col_sum(Value a) {
  check(a);
  Node n;
  n.op = Op::ColSum;
  n.a = a.id;
  const auto& m = a.data();
  n.value.resize(1, m.cols());
  std::vector<double> scratch;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    scratch.assign(m.col(c).data(), m.col(c).data() + m.rows());
    n.value(0, c) = ordered_sum(scratch);
  }
  return wrap(push(std::move(n)));
}

void Tape::backward(Value root) {
  check(root);
  if (root.data().size() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  backward_done_ = true;
  for (auto& n : nodes_) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  nodes_[root.id].grad(0, 0) = 1.0;
  for (int id = root.id; id >= 0; --id) backprop(id);
}

void Tape::backprop(int id) {
  Node& n = nodes_[id];
  const Eigen::MatrixXd& g = n.grad;
  if (g.size() == 0) return;
  auto A = [&]() -> Node& { return nodes_[n.a]; };
  switch (n.op) {
    case Op::Constant:
    case Op::Input:
      break;
    case Op::Add:
      nodes_[n.a].grad += g;
      nodes_[n.b].grad += g;
      break;
    case Op::Mul:
      nodes_[n.a].grad += g.cwiseProduct(nodes_[n.b].value);
      nodes_[n.b].grad += g.cwiseProduct(nodes_[n.a].value);
      break;
    case Op::MulConst:
      nodes_[n.a].grad += g.cwiseProduct(n.mat);
      break;
    case Op::Scale:
      nodes_[n.a].grad += n.param * g;
      break;
    case Op::MatMul:
      nodes_[n.a].grad += g * nodes_[n.b].value.transpose();
      nodes_[n.b].grad += nodes_[n.a].value.transpose() * g;
      break;
    case Op::Transpose:
      nodes_[n.a].grad += g.transpose();
      break;
    case Op::Log: {
      // entries that received no gradient may sit at log(0); skip them so
      // 0 * inf does not turn into NaN
      Node& src = A();
      for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c)
          if (g(r, c) != 0.0) src.grad(r, c) += g(r, c) / src.value(r, c);
      break;
    }
    case Op::Exp:
      nodes_[n.a].grad += g.cwiseProduct(n.value);
      break;
    case Op::Sqrt:
      nodes_[n.a].grad += g.cwiseQuotient(2.0 * n.value);
      break;
    case Op::Softplus:
      nodes_[n.a].grad += g.cwiseProduct(nodes_[n.a].value.unaryExpr(
          [](double x) { return sigmoid(x); }));
      break;
    case Op::AddRowVec:
      nodes_[n.a].grad += g;
      nodes_[n.b].grad.row(0) += g.colwise().sum();
      break;
    case Op::LogSumExpRows: {
      Node& src = A();
      for (Eigen::Index r = 0; r < src.value.rows(); ++r) {
        if (g(r, 0) == 0.0 || n.value(r, 0) == kNegInf) continue;
        for (Eigen::Index c = 0; c < src.value.cols(); ++c) {
          src.grad(r, c) += g(r, 0) * std::exp(src.value(r, c) - n.value(r, 0));
        }
      }
      break;
    }
    case Op::LogSumExpAll: {
      Node& src = A();
      if (g(0, 0) == 0.0 || n.value(0, 0) == kNegInf) break;
      src.grad += g(0, 0) * (src.value.array() - n.value(0, 0)).exp().matrix();
      break;
    }
    case Op::SoftmaxRows: {
      Node& src = A();
      for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
        const double dot = g.row(r).dot(n.value.row(r));
        src.grad.row(r) +=
            n.value.row(r).cwiseProduct(g.row(r) - Eigen::RowVectorXd::Constant(n.value.cols(), dot));
      }
      break;
    }
    case Op::LogSoftmaxRows: {
      Node& src = A();
      for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
        const double gsum = g.row(r).sum();
        for (Eigen::Index c = 0; c < n.value.cols(); ++c) {
          src.grad(r, c) += g(r, c) - std::exp(n.value(r, c)) * gsum;
        }
      }
      break;
    }
    case Op::Sum:
      nodes_[n.a].grad.array() += g(0, 0);
      break;
    case Op::Mean:
      nodes_[n.a].grad.array() += g(0, 0) / nodes_[n.a].value.size();
      break;
    case Op::Index:
      nodes_[n.a].grad(n.row, n.col) += g(0, 0);
      break;
    case Op::ConcatCols: {
      Eigen::Index at = 0;
      for (int part : n.rest) {
        Node& p = nodes_[part];
        p.grad += g.middleCols(at, p.value.cols());
        at += p.value.cols();
      }
      break;
    }
    case Op::GaussianLogPdf: {
      Node& mu = nodes_[n.a];
      Node& sg = nodes_[n.b];
      const auto& p = *n.gauss;
      for (Eigen::Index v = 0; v < p.x.size(); ++v) {
        if (!p.observed[v]) continue;
        for (Eigen::Index i = 0; i < mu.value.cols(); ++i) {
          const double gv = g(v, i);
          if (gv == 0.0) continue;
          const double s = sg.value(0, i);
          const double diff = p.x(v) - mu.value(0, i);
          mu.grad(0, i) += gv * diff / (s * s);
          sg.grad(0, i) += gv * (diff * diff / (s * s * s) - 1.0 / s);
        }
      }
      break;
    }
    case Op::GatherCategorical: {
      Node& src = A();
      const auto& p = *n.gather;
      for (std::size_t v = 0; v < p.idx.size(); ++v) {
        if (!p.observed[v]) continue;
        for (Eigen::Index i = 0; i < src.value.rows(); ++i) {
          src.grad(i, p.idx[v]) += g(static_cast<Eigen::Index>(v), i);
        }
      }
      break;
    }
    case Op::NeighborMean: {
      Node& src = A();
      const auto& t = *n.topo;
      for (int v = 0; v < t.num_vertices(); ++v) {
        const int deg = t.offsets[v + 1] - t.offsets[v];
        if (deg == 0) continue;
        for (int k = t.offsets[v]; k < t.offsets[v + 1]; ++k) {
          src.grad.row(t.neighbors[k]) += g.row(v) / deg;
        }
      }
      break;
    }
    case Op::BlendRows: {
      Node& a = nodes_[n.a];
      Node& b = nodes_[n.b];
      for (Eigen::Index v = 0; v < g.rows(); ++v) {
        if ((*n.row_switch)[v]) {
          b.grad.row(0) += g.row(v);
        } else {
          a.grad.row(v) += g.row(v);
        }
      }
      break;
    }
    case Op::ColSum: {
      Node& src = A();
      src.grad += g.row(0).replicate(src.value.rows(), 1);
      break;
    }
  }
}

const Eigen::MatrixXd& Tape::grad(Value v) const {
  check(v);
  if (!backward_done_) throw std::logic_error("grad requested before backward");
  return nodes_[v.id].grad;
}

Eigen::MatrixXd Tape::input_grad(const std::string& name, Eigen::Index rows,
                                 Eigen::Index cols) const {
  auto it = inputs_.find(name);
  if (it == inputs_.end()) return Eigen::MatrixXd::Zero(rows, cols);
  if (!backward_done_) throw std::logic_error("grad requested before backward");
  return nodes_[it->second].grad;
}

}  // namespace gspn
