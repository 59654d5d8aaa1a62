#include "gspn/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gspn {

namespace {

std::string ro_theta_name(int level) { return "readout.theta." + std::to_string(level); }

Eigen::VectorXd softmax_vec(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  Eigen::VectorXd e = (v.array() - mx).exp();
  return e / e.sum();
}

// The pooling matrix is stored as C x C_g: row k is the distribution a
// child in state k spreads over the target states, mirroring the
// transition matrices. ReadoutParams exposes the transposed C_g x C view.
void add_readout_params(GspnModel& model, const ReadoutConfig& rcfg, int num_classes, Rng& rng) {
  const int C = model.C(), Cg = rcfg.num_states;
  const Constraint theta_c =
      rcfg.pooling == Pooling::Mean ? Constraint::SoftmaxRows : Constraint::None;
  for (int l = 1; l <= model.L(); ++l) {
    Eigen::MatrixXd m(C, Cg);
    for (int r = 0; r < C; ++r)
      for (int c = 0; c < Cg; ++c) m(r, c) = 0.1 * rng.normal();
    model.params.add(ro_theta_name(l), m, theta_c);
  }
  Eigen::MatrixXd t(Cg, num_classes);
  for (int r = 0; r < Cg; ++r)
    for (int c = 0; c < num_classes; ++c) t(r, c) = 0.1 * rng.normal();
  model.params.add("readout.target", t, Constraint::SoftmaxRows);
  model.readout = rcfg;
}

// pooled prior on the tape; h entries may be Values from a live forward
// pass (joint) or constants (frozen)
Value readout_prior_on_tape(Tape& tape, const GspnModel& model,
                            const std::vector<Value>& h, int n_vertices) {
  const ReadoutConfig& rcfg = *model.readout;
  Value acc;
  for (int l = 1; l <= model.L(); ++l) {
    Value theta = rcfg.pooling == Pooling::Mean
                      ? model.params.on_tape(tape, ro_theta_name(l))
                      : tape.input(ro_theta_name(l), model.params.raw(ro_theta_name(l)));
    Value term = tape.matmul(tape.col_sum(h[l]), theta);  // 1 x Cg
    acc = l == 1 ? term : tape.add(acc, term);
  }
  if (rcfg.pooling == Pooling::Mean) {
    return tape.scale(acc, 1.0 / (static_cast<double>(model.L()) * n_vertices));
  }
  return tape.softmax_rows(acc);
}

Value class_distribution_on_tape(Tape& tape, const GspnModel& model, Value pi_r) {
  Value target = model.params.on_tape(tape, "readout.target");
  return tape.matmul(pi_r, target);  // 1 x num_classes
}

}  // namespace

ReadoutParams readout_params(const GspnModel& model) {
  if (!model.readout) throw std::logic_error("model has no readout head");
  ReadoutParams rp;
  rp.pooling = model.readout->pooling;
  for (int l = 1; l <= model.L(); ++l) {
    rp.theta.push_back(model.params.value(ro_theta_name(l)).transpose());
  }
  rp.target = model.params.value("readout.target");
  return rp;
}

Eigen::VectorXd readout_prior(const LayerPosteriors& h_all, const ReadoutParams& rp) {
  if (h_all.h.empty() || h_all.h[0].rows() == 0) {
    throw std::invalid_argument("readout_prior: empty graph");
  }
  const int L = static_cast<int>(h_all.h.size()) - 1;
  if (static_cast<int>(rp.theta.size()) != L) {
    throw std::invalid_argument("readout_prior: theta count does not match layers");
  }
  const Eigen::Index n = h_all.h[0].rows();
  const Eigen::Index Cg = rp.theta[0].rows();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(Cg);
  std::vector<double> scratch;
  for (int l = 1; l <= L; ++l) {
    const Eigen::MatrixXd& h = h_all.h[l];
    Eigen::VectorXd pooled(h.cols());
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      scratch.assign(h.col(c).data(), h.col(c).data() + h.rows());
      pooled(c) = ordered_sum(scratch);
    }
    acc += rp.theta[l - 1] * pooled;
  }
  if (rp.pooling == Pooling::Mean) return acc / (static_cast<double>(L) * n);
  return softmax_vec(acc);
}

Eigen::VectorXd graph_predict(const Graph& g, const GspnModel& model) {
  if (g.num_vertices == 0) throw std::invalid_argument("graph_predict: empty graph");
  const ReadoutParams rp = readout_params(model);
  const Eigen::VectorXd pi_r = readout_prior(forward_pass(g, model), rp);
  return rp.target.transpose() * pi_r;
}

GspnModel train_supervised(const Dataset& ds, const GspnConfig& cfg, const ReadoutConfig& rcfg,
                           SupervisedMode mode, SupervisedHistory* history) {
  cfg.validate();
  if (ds.graphs.empty()) throw std::invalid_argument("train_supervised: empty dataset");
  if (!ds.num_classes) throw std::invalid_argument("train_supervised: dataset has no classes");
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    if (!ds.graphs[i].label) {
      throw std::invalid_argument("train_supervised: graph " + std::to_string(i) +
                                  " is unlabeled");
    }
    if (ds.graphs[i].num_vertices == 0) {
      throw std::invalid_argument("train_supervised: graph " + std::to_string(i) + " is empty");
    }
  }
  const int num_classes = *ds.num_classes;

  GspnModel model;
  Rng rng(cfg.seed);
  std::vector<int> order(ds.graphs.size());
  std::iota(order.begin(), order.end(), 0);

  if (mode == SupervisedMode::Frozen) {
    model = train_unsupervised(ds, cfg);
    rng.shuffle(order);  // keep the split stream aligned with Joint mode
    add_readout_params(model, rcfg, num_classes, rng);
  } else {
    rng.shuffle(order);
    const std::size_t val_count = ds.graphs.size() / 10;
    std::vector<const Graph*> first_batch;
    for (std::size_t i = val_count;
         i < ds.graphs.size() && first_batch.size() < static_cast<std::size_t>(cfg.batch_size);
         ++i) {
      first_batch.push_back(&ds.graphs[order[i]]);
    }
    model = init_model(ds.schema, cfg, first_batch, ds.num_classes, rng);
    add_readout_params(model, rcfg, num_classes, rng);
  }

  const std::size_t val_count = ds.graphs.size() / 10;
  std::vector<int> val_idx(order.begin(), order.begin() + val_count);
  std::vector<int> train_idx(order.begin() + val_count, order.end());
  if (val_idx.empty()) val_idx = train_idx;

  std::vector<CompiledGraph> compiled;
  compiled.reserve(ds.graphs.size());
  for (const auto& g : ds.graphs) compiled.push_back(compile_graph(g, ds.schema));

  // frozen mode trains against fixed posteriors
  std::vector<std::vector<Eigen::MatrixXd>> frozen_h(ds.graphs.size());
  if (mode == SupervisedMode::Frozen) {
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
      frozen_h[i] = forward_pass(ds.graphs[i], model).h;
    }
  }

  auto graph_loglik_on_tape = [&](Tape& tape, int gi) {
    std::vector<Value> h;
    if (mode == SupervisedMode::Frozen) {
      for (const auto& m : frozen_h[gi]) h.push_back(tape.constant(m));
    } else {
      TapeForward fw = forward_on_tape(tape, model, compiled[gi]);
      h = fw.h;
    }
    Value pi_r = readout_prior_on_tape(tape, model, h, compiled[gi].n);
    Value dist = class_distribution_on_tape(tape, model, pi_r);
    return tape.log(tape.index(dist, 0, *ds.graphs[gi].label));
  };

  auto accuracy = [&](const std::vector<int>& idx) {
    int hits = 0;
    for (int i : idx) {
      const Eigen::VectorXd probs = graph_predict(ds.graphs[i], model);
      Eigen::Index best;
      probs.maxCoeff(&best);
      hits += (static_cast<int>(best) == *ds.graphs[i].label) ? 1 : 0;
    }
    return static_cast<double>(hits) / idx.size();
  };

  AdamState adam;
  adam.config.learning_rate = rcfg.learning_rate;
  double best_acc = -1.0;
  std::map<std::string, Eigen::MatrixXd> best_raw;
  int best_epoch = -1, stall = 0;
  const int epochs = mode == SupervisedMode::Frozen ? rcfg.epochs : cfg.epochs;
  const int patience = mode == SupervisedMode::Frozen ? rcfg.patience : cfg.patience;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_ll = 0.0;
    for (std::size_t at = 0; at < train_idx.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(at + static_cast<std::size_t>(cfg.batch_size), train_idx.size());
      Tape tape;
      Value obj;
      for (std::size_t k = at; k < end; ++k) {
        Value ll = graph_loglik_on_tape(tape, train_idx[k]);
        obj = k == at ? ll : tape.add(obj, ll);
      }
      epoch_ll += obj.scalar();
      obj = tape.scale(obj, 1.0 / static_cast<double>(end - at));
      auto grads = grad(tape, obj, model.params);
      if (mode == SupervisedMode::Frozen) {
        for (auto it = grads.begin(); it != grads.end();) {
          it = it->first.rfind("readout.", 0) == 0 ? std::next(it) : grads.erase(it);
        }
      }
      adam_step(model.params, grads, adam);
    }
    const double val_acc = accuracy(val_idx);
    if (history) {
      history->train_loglik.push_back(epoch_ll / train_idx.size());
      history->val_accuracy.push_back(val_acc);
    }
    if (val_acc > best_acc + 1e-12) {
      best_acc = val_acc;
      best_epoch = epoch;
      best_raw.clear();
      for (const auto& [name, entry] : model.params.entries()) best_raw[name] = entry.first;
      stall = 0;
    } else if (++stall >= patience) {
      break;
    }
  }
  if (best_epoch >= 0) {
    for (auto& [name, raw] : best_raw) model.params.raw(name) = raw;
  }
  if (history) history->best_epoch = best_epoch;
  return model;
}

}  // namespace gspn
