#include "gspn/param_store.hpp"

#include <cmath>
#include <functional>

namespace gspn {

void ParamStore::add(const std::string& name, Eigen::MatrixXd raw, Constraint c) {
  if (has(name)) throw std::logic_error("parameter '" + name + "' already exists");
  if (c == Constraint::SoftmaxVector && raw.rows() != 1) {
    throw std::invalid_argument("parameter '" + name + "': softmax-vector needs a single row");
  }
  entries_[name] = {std::move(raw), c};
}

Eigen::MatrixXd& ParamStore::raw(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second.first;
}

const Eigen::MatrixXd& ParamStore::raw(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second.first;
}

Constraint ParamStore::constraint(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second.second;
}

Eigen::MatrixXd softmax_rows_plain(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out(r, c) = std::exp(m(r, c) - mx);
      s += out(r, c);
    }
    out.row(r) /= s;
  }
  return out;
}

Eigen::MatrixXd ParamStore::value(const std::string& name) const {
  const auto& [raw, c] = entries_.at(name);
  switch (c) {
    case Constraint::None:
      return raw;
    case Constraint::SoftmaxRows:
    case Constraint::SoftmaxVector:
      return softmax_rows_plain(raw);
    case Constraint::SoftplusPositive:
      return raw.unaryExpr([](double x) {
        return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) + kSigmaFloor;
      });
  }
  throw std::logic_error("unreachable");
}

Value ParamStore::on_tape(Tape& tape, const std::string& name) const {
  const auto& [raw, c] = entries_.at(name);
  Value leaf = tape.input(name, raw);
  switch (c) {
    case Constraint::None:
      return leaf;
    case Constraint::SoftmaxRows:
    case Constraint::SoftmaxVector:
      return tape.softmax_rows(leaf);
    case Constraint::SoftplusPositive:
      return tape.softplus(leaf, kSigmaFloor);
  }
  throw std::logic_error("unreachable");
}

void ParamStore::set_from_constrained(const std::string& name,
                                      const Eigen::MatrixXd& constrained) {
  auto& [raw, c] = entries_.at(name);
  switch (c) {
    case Constraint::None:
      raw = constrained;
      return;
    case Constraint::SoftmaxRows:
    case Constraint::SoftmaxVector:
      raw = constrained.array().log().matrix();
      return;
    case Constraint::SoftplusPositive:
      // inverse of softplus(x) + floor
      raw = constrained.unaryExpr([](double y) {
        const double t = y - kSigmaFloor;
        if (t <= 0.0) throw std::invalid_argument("positive parameter below the sigma floor");
        return t > 30.0 ? t : std::log(std::expm1(t));
      });
      return;
  }
}

std::map<std::string, Eigen::MatrixXd> ParamStore::zero_like() const {
  std::map<std::string, Eigen::MatrixXd> out;
  for (const auto& [name, entry] : entries_) {
    out[name] = Eigen::MatrixXd::Zero(entry.first.rows(), entry.first.cols());
  }
  return out;
}

std::map<std::string, Eigen::MatrixXd> grad(Tape& tape, Value objective,
                                            const ParamStore& params) {
  tape.backward(objective);
  std::map<std::string, Eigen::MatrixXd> out;
  for (const auto& [name, entry] : params.entries()) {
    out[name] = tape.input_grad(name, entry.first.rows(), entry.first.cols());
  }
  return out;
}

void adam_step(ParamStore& params, const std::map<std::string, Eigen::MatrixXd>& grads,
               AdamState& state) {
  const auto& cfg = state.config;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (const auto& [name, g] : grads) {
    Eigen::MatrixXd& raw = params.raw(name);
    if (g.rows() != raw.rows() || g.cols() != raw.cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for '" + name + "'");
    }
    auto m = state.m.find(name);
    if (m == state.m.end()) {
      m = state.m.emplace(name, Eigen::MatrixXd::Zero(raw.rows(), raw.cols())).first;
      state.v.emplace(name, Eigen::MatrixXd::Zero(raw.rows(), raw.cols()));
    }
    Eigen::MatrixXd& v = state.v.at(name);
    m->second = cfg.beta1 * m->second + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd mhat = m->second.array() / bc1;
    const Eigen::ArrayXXd vhat = v.array() / bc2;
    raw.array() += cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
  }
}

FiniteDiffReport finite_diff_check(ParamStore& params,
                                   const std::function<Value(Tape&)>& build, double eps) {
  if (eps <= 0.0 || eps > 1e-2) throw std::invalid_argument("finite_diff_check: bad eps");
  std::map<std::string, Eigen::MatrixXd> analytic;
  {
    Tape tape;
    Value obj = build(tape);
    analytic = grad(tape, obj, params);
  }
  auto eval = [&]() {
    Tape tape;
    return build(tape).scalar();
  };
  FiniteDiffReport report;
  for (const auto& [name, entry] : params.entries()) {
    Eigen::MatrixXd& raw = params.raw(name);
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const double keep = raw(r, c);
        raw(r, c) = keep + eps;
        const double hi = eval();
        raw(r, c) = keep - eps;
        const double lo = eval();
        raw(r, c) = keep;
        const double numeric = (hi - lo) / (2.0 * eps);
        const double err =
            std::abs(analytic.at(name)(r, c) - numeric) / (std::abs(numeric) + 1e-8);
        if (err > report.max_rel_err) {
          report.max_rel_err = err;
          report.worst_param = name;
        }
      }
    }
  }
  return report;
}

}  // namespace gspn
