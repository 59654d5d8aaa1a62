#include "gspn/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gspn {

void EmissionParams::validate(const AttributeSchema& schema) const {
  if (num_states < 1) throw ValidationError("emission: need at least one state");
  if (static_cast<int>(attrs.size()) != schema.num_attributes()) {
    throw ValidationError("emission: attribute count mismatch");
  }
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    const auto& e = attrs[a];
    if (!(e.kind == schema.attributes[a])) {
      throw ValidationError("emission: attribute " + std::to_string(a) + " kind mismatch");
    }
    if (e.kind.is_categorical()) {
      if (e.cat_probs.rows() != num_states || e.cat_probs.cols() != e.kind.arity) {
        throw ValidationError("emission: attribute " + std::to_string(a) + " wrong shape");
      }
      for (Eigen::Index i = 0; i < e.cat_probs.rows(); ++i) {
        if (std::abs(e.cat_probs.row(i).sum() - 1.0) > 1e-9 ||
            (e.cat_probs.row(i).array() < 0).any()) {
          throw ValidationError("emission: attribute " + std::to_string(a) + " state " +
                                std::to_string(i) + " not a distribution");
        }
      }
    } else {
      if (e.mu.size() != num_states || e.sigma.size() != num_states) {
        throw ValidationError("emission: attribute " + std::to_string(a) + " wrong shape");
      }
      if ((e.sigma.array() <= 0).any()) {
        throw ValidationError("emission: attribute " + std::to_string(a) + " needs sigma > 0");
      }
    }
  }
}

void Circuit::compute_scopes() {
  scopes.assign(units.size(), {});
  for (std::size_t i = 0; i < units.size(); ++i) {
    const Unit& u = units[i];
    if (u.kind == Unit::Kind::Leaf) {
      scopes[i] = {u.attr};
      continue;
    }
    std::set<int> acc;
    for (int ch : u.children) {
      if (ch < 0 || ch >= static_cast<int>(i)) {
        throw ValidationError("circuit: unit " + std::to_string(i) +
                              " child out of topological order");
      }
      acc.insert(scopes[ch].begin(), scopes[ch].end());
    }
    scopes[i].assign(acc.begin(), acc.end());
  }
}

Circuit build_naive_bayes(const AttributeSchema& schema, int num_states) {
  if (num_states < 1) throw std::invalid_argument("build_naive_bayes: num_states must be >= 1");
  schema.validate();
  Circuit c;
  const int d = schema.num_attributes();
  std::vector<int> products;
  for (int i = 0; i < num_states; ++i) {
    std::vector<int> leaves;
    for (int a = 0; a < d; ++a) {
      Unit leaf;
      leaf.kind = Unit::Kind::Leaf;
      leaf.attr = a;
      leaf.state = i;
      leaves.push_back(static_cast<int>(c.units.size()));
      c.units.push_back(leaf);
    }
    Unit prod;
    prod.kind = Unit::Kind::Product;
    prod.children = leaves;
    products.push_back(static_cast<int>(c.units.size()));
    c.units.push_back(prod);
  }
  Unit sum;
  sum.kind = Unit::Kind::Sum;
  sum.children = products;
  sum.weight_slot = 0;
  c.root = static_cast<int>(c.units.size());
  c.units.push_back(sum);
  c.num_weight_slots = 1;
  c.compute_scopes();
  if (!check_smooth(c) || !check_decomposable(c)) {
    throw std::logic_error("naive Bayes template failed validity checks");
  }
  return c;
}

bool check_smooth(const Circuit& c) {
  for (std::size_t i = 0; i < c.units.size(); ++i) {
    const Unit& u = c.units[i];
    if (u.kind != Unit::Kind::Sum || u.children.empty()) continue;
    const auto& first = c.scopes[u.children[0]];
    for (int ch : u.children) {
      if (c.scopes[ch] != first) return false;
    }
  }
  return true;
}

bool check_decomposable(const Circuit& c) {
  for (std::size_t i = 0; i < c.units.size(); ++i) {
    const Unit& u = c.units[i];
    if (u.kind != Unit::Kind::Product) continue;
    std::set<int> seen;
    for (int ch : u.children) {
      for (int attr : c.scopes[ch]) {
        if (!seen.insert(attr).second) return false;
      }
    }
  }
  return true;
}

Value log_likelihood(Tape& tape, const Circuit& c, const CircuitTapeInputs& in,
                     const Eigen::VectorXd& x, const std::vector<std::uint8_t>& observed) {
  if (!check_smooth(c) || !check_decomposable(c)) {
    throw std::invalid_argument("log_likelihood: circuit must be smooth and decomposable");
  }
  // per-attribute 1 x C rows of log densities, built once and indexed by leaves
  std::vector<Value> attr_rows(in.cat_log_probs.size());
  std::vector<bool> attr_ready(in.cat_log_probs.size(), false);
  auto attr_row = [&](int a) -> Value {
    if (!attr_ready[a]) {
      if (in.cat_log_probs[a].valid()) {
        attr_rows[a] =
            tape.gather_categorical(in.cat_log_probs[a], {static_cast<int>(x(a))}, {1});
      } else {
        attr_rows[a] = tape.gaussian_log_pdf(Eigen::VectorXd::Constant(1, x(a)), {1},
                                             in.mu[a], in.sigma[a]);
      }
      attr_ready[a] = true;
    }
    return attr_rows[a];
  };

  std::vector<Value> values(c.units.size());
  const Value zero = tape.scalar_constant(0.0);
  for (std::size_t i = 0; i < c.units.size(); ++i) {
    const Unit& u = c.units[i];
    switch (u.kind) {
      case Unit::Kind::Leaf:
        values[i] = observed[u.attr] ? tape.index(attr_row(u.attr), 0, u.state) : zero;
        break;
      case Unit::Kind::Product: {
        Value acc = values[u.children[0]];
        for (std::size_t k = 1; k < u.children.size(); ++k) {
          acc = tape.add(acc, values[u.children[k]]);
        }
        values[i] = acc;
        break;
      }
      case Unit::Kind::Sum: {
        if (u.weight_slot < 0 ||
            u.weight_slot >= static_cast<int>(in.slot_log_weights.size())) {
          throw std::invalid_argument("log_likelihood: sum unit " + std::to_string(i) +
                                      " has no bound weight slot");
        }
        std::vector<Value> kids;
        kids.reserve(u.children.size());
        for (int ch : u.children) kids.push_back(values[ch]);
        Value row = tape.concat_cols(kids);
        values[i] = tape.log_sum_exp_rows(tape.add(row, in.slot_log_weights[u.weight_slot]));
        break;
      }
    }
  }
  return values[c.root];
}

namespace {

CircuitTapeInputs inputs_from_params(Tape& tape, const Circuit& c, const EmissionParams& em,
                                     const Eigen::VectorXd& prior) {
  if (std::abs(prior.sum() - 1.0) > 1e-9 || (prior.array() < 0).any()) {
    throw std::invalid_argument("prior is not on the simplex");
  }
  CircuitTapeInputs in;
  const int d = static_cast<int>(em.attrs.size());
  in.cat_log_probs.resize(d);
  in.mu.resize(d);
  in.sigma.resize(d);
  for (int a = 0; a < d; ++a) {
    const auto& e = em.attrs[a];
    if (e.kind.is_categorical()) {
      in.cat_log_probs[a] =
          tape.input("em.cat." + std::to_string(a), e.cat_probs.array().log().matrix());
    } else {
      if ((e.sigma.array() <= 0).any()) {
        throw std::invalid_argument("sigma must be positive");
      }
      in.mu[a] = tape.input("em.mu." + std::to_string(a), e.mu.transpose());
      in.sigma[a] = tape.input("em.sigma." + std::to_string(a), e.sigma.transpose());
    }
  }
  in.slot_log_weights.resize(c.num_weight_slots);
  for (int s = 0; s < c.num_weight_slots; ++s) {
    in.slot_log_weights[s] =
        tape.input("slot." + std::to_string(s), prior.transpose().array().log().matrix());
  }
  return in;
}

void throw_impossible(const EmissionParams& em, const Eigen::VectorXd& x,
                      const std::vector<std::uint8_t>& observed) {
  for (std::size_t a = 0; a < em.attrs.size(); ++a) {
    if (!observed[a] || !em.attrs[a].kind.is_categorical()) continue;
    const int k = static_cast<int>(x(a));
    if ((em.attrs[a].cat_probs.col(k).array() == 0.0).all()) {
      throw ImpossibleEvidenceError("attribute " + std::to_string(a) + ": observed category " +
                                    std::to_string(k) + " has zero probability in every state");
    }
  }
  throw ImpossibleEvidenceError("evidence has zero probability under the circuit");
}

}  // namespace

double log_likelihood(const Circuit& c, const EmissionParams& em, const Eigen::VectorXd& prior,
                      const Eigen::VectorXd& x, const std::vector<std::uint8_t>& observed) {
  Tape tape;
  CircuitTapeInputs in = inputs_from_params(tape, c, em, prior);
  return log_likelihood(tape, c, in, x, observed).scalar();
}

Eigen::VectorXd sum_posteriors(const Circuit& c, const EmissionParams& em,
                               const Eigen::VectorXd& prior, const Eigen::VectorXd& x,
                               const std::vector<std::uint8_t>& observed) {
  Tape tape;
  CircuitTapeInputs in = inputs_from_params(tape, c, em, prior);
  Value root = log_likelihood(tape, c, in, x, observed);
  if (std::isinf(root.scalar()) || std::isnan(root.scalar())) {
    throw_impossible(em, x, observed);
  }
  const int slot = c.units[c.root].weight_slot;
  tape.backward(root);
  Eigen::MatrixXd h = tape.grad(in.slot_log_weights[slot]);
  return h.row(0).transpose();
}

}  // namespace gspn
