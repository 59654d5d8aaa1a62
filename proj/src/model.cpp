#include "gspn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gspn/kmeans.hpp"

namespace gspn {

namespace {

std::string em_name(int height, const char* part, int attr) {
  return "em." + std::to_string(height) + "." + part + "." + std::to_string(attr);
}
std::string theta_name(int level) { return "theta." + std::to_string(level); }

constexpr double kMaxInitVariance = 10.0;

}  // namespace

void GspnConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("config: num_layers must be >= 1");
  if (num_states < 1) throw std::invalid_argument("config: num_states must be >= 1");
  if (shortcut && num_layers < 2) {
    throw std::invalid_argument("config: shortcut requires num_layers >= 2");
  }
  if (learning_rate <= 0) throw std::invalid_argument("config: learning_rate must be > 0");
  if (batch_size < 1 || epochs < 1 || patience < 1) {
    throw std::invalid_argument("config: batch_size, epochs, patience must be >= 1");
  }
}

EmissionParams GspnModel::emission(int height) const {
  if (height < 0 || height > L()) throw std::out_of_range("emission: bad height");
  const int d = schema.num_attributes();
  auto materialize = [&](int h) {
    EmissionParams em;
    em.num_states = C();
    em.attrs.resize(d);
    for (int a = 0; a < d; ++a) {
      em.attrs[a].kind = schema.attributes[a];
      if (schema.attributes[a].is_categorical()) {
        em.attrs[a].cat_probs = params.value(em_name(h, "cat", a));
      } else {
        em.attrs[a].mu = params.value(em_name(h, "mu", a)).row(0).transpose();
        em.attrs[a].sigma = params.value(em_name(h, "sigma", a)).row(0).transpose();
      }
    }
    return em;
  };
  if (config.shortcut && height == L()) {
    std::vector<EmissionParams> lower;
    for (int h = 1; h <= L() - 1; ++h) lower.push_back(materialize(h));
    return shortcut_emission(lower);
  }
  return materialize(height);
}

Eigen::VectorXd GspnModel::prior0() const {
  return params.value("pi0").row(0).transpose();
}

Eigen::MatrixXd GspnModel::transition(int level) const {
  if (level < 1 || level > L()) throw std::out_of_range("transition: bad level");
  return params.value(theta_name(level));
}

Eigen::VectorXd aggregate_prior(const Eigen::MatrixXd& theta,
                                const std::vector<Eigen::VectorXd>& child_posteriors) {
  const Eigen::Index C = theta.rows();
  if (theta.cols() != C) throw std::invalid_argument("aggregate_prior: theta must be square");
  for (Eigen::Index r = 0; r < C; ++r) {
    if (std::abs(theta.row(r).sum() - 1.0) > 1e-9 || (theta.row(r).array() < 0).any()) {
      throw std::invalid_argument("aggregate_prior: theta rows must be on the simplex");
    }
  }
  if (child_posteriors.empty()) {
    throw std::invalid_argument("aggregate_prior: empty child sequence");
  }
  const auto T = child_posteriors.size();
  std::vector<Eigen::VectorXd> actions;
  actions.reserve(T);
  for (const auto& h : child_posteriors) {
    if (h.size() != C || std::abs(h.sum() - 1.0) > 1e-9 || (h.array() < 0).any()) {
      throw std::invalid_argument("aggregate_prior: child posterior not on the simplex");
    }
    actions.push_back(theta.transpose() * h);
  }
  Eigen::VectorXd pi(C);
  std::vector<double> scratch(T);
  for (Eigen::Index i = 0; i < C; ++i) {
    for (std::size_t t = 0; t < T; ++t) scratch[t] = actions[t](i);
    pi(i) = ordered_sum(scratch) / static_cast<double>(T);
  }
  return pi;
}

EmissionParams shortcut_emission(const std::vector<EmissionParams>& lower) {
  if (lower.empty()) {
    throw std::invalid_argument("shortcut_emission: need at least one source emission");
  }
  const double T = static_cast<double>(lower.size());
  EmissionParams out = lower[0];
  for (std::size_t a = 0; a < out.attrs.size(); ++a) {
    auto& dst = out.attrs[a];
    if (dst.kind.is_categorical()) {
      dst.cat_probs.setZero();
      for (const auto& em : lower) dst.cat_probs += em.attrs[a].cat_probs;
      dst.cat_probs /= T;
    } else {
      dst.mu.setZero();
      Eigen::VectorXd var = Eigen::VectorXd::Zero(dst.sigma.size());
      for (const auto& em : lower) {
        dst.mu += em.attrs[a].mu;
        var += em.attrs[a].sigma.array().square().matrix();
      }
      dst.mu /= T;
      dst.sigma = (var / (T * T)).array().sqrt();
    }
  }
  return out;
}

CompiledGraph compile_graph(const Graph& g, const AttributeSchema& schema) {
  CompiledGraph cg;
  cg.n = g.num_vertices;
  InNeighborIndex idx(g);
  auto topo = std::make_shared<AggregationTopology>();
  topo->offsets = idx.offsets;
  topo->neighbors = idx.neighbors;
  cg.topo = topo;
  auto leaves = std::make_shared<std::vector<std::uint8_t>>(g.num_vertices);
  for (int v = 0; v < g.num_vertices; ++v) (*leaves)[v] = idx.degree(v) == 0 ? 1 : 0;
  cg.no_in_edges = leaves;

  const int d = schema.num_attributes();
  cg.cat_values.resize(d);
  cg.cont_values.resize(d);
  cg.observed.resize(d);
  cg.observed_any = Eigen::MatrixXd::Zero(g.num_vertices, 1);
  for (int a = 0; a < d; ++a) {
    cg.observed[a].resize(g.num_vertices);
    if (schema.attributes[a].is_categorical()) {
      cg.cat_values[a].resize(g.num_vertices);
    } else {
      cg.cont_values[a].resize(g.num_vertices);
    }
    for (int v = 0; v < g.num_vertices; ++v) {
      cg.observed[a][v] = g.mask(v, a) ? 1 : 0;
      if (g.mask(v, a)) cg.observed_any(v, 0) = 1.0;
      if (schema.attributes[a].is_categorical()) {
        cg.cat_values[a][v] = g.mask(v, a) ? static_cast<int>(g.attributes(v, a)) : 0;
      } else {
        cg.cont_values[a][v] = g.mask(v, a) ? g.attributes(v, a) : 0.0;
      }
    }
  }
  return cg;
}

TapeEmissions emissions_on_tape(Tape& tape, const GspnModel& model, int height) {
  const int d = model.schema.num_attributes();
  TapeEmissions em;
  em.cat_log_probs.resize(d);
  em.mu.resize(d);
  em.sigma.resize(d);

  const bool combined = model.config.shortcut && height == model.L();
  for (int a = 0; a < d; ++a) {
    if (!combined) {
      if (model.schema.attributes[a].is_categorical()) {
        Value raw = tape.input(em_name(height, "cat", a), model.params.raw(em_name(height, "cat", a)));
        em.cat_log_probs[a] = tape.log_softmax_rows(raw);
      } else {
        em.mu[a] = tape.input(em_name(height, "mu", a), model.params.raw(em_name(height, "mu", a)));
        Value raw = tape.input(em_name(height, "sigma", a), model.params.raw(em_name(height, "sigma", a)));
        em.sigma[a] = tape.softplus(raw, kSigmaFloor);
      }
      continue;
    }
    const int T = model.L() - 1;
    if (model.schema.attributes[a].is_categorical()) {
      Value acc;
      for (int h = 1; h <= T; ++h) {
        Value probs = tape.softmax_rows(
            tape.input(em_name(h, "cat", a), model.params.raw(em_name(h, "cat", a))));
        acc = h == 1 ? probs : tape.add(acc, probs);
      }
      em.cat_log_probs[a] = tape.log(tape.scale(acc, 1.0 / T));
    } else {
      Value mu_acc, var_acc;
      for (int h = 1; h <= T; ++h) {
        Value mu = tape.input(em_name(h, "mu", a), model.params.raw(em_name(h, "mu", a)));
        Value sg = tape.softplus(
            tape.input(em_name(h, "sigma", a), model.params.raw(em_name(h, "sigma", a))),
            kSigmaFloor);
        Value var = tape.mul(sg, sg);
        mu_acc = h == 1 ? mu : tape.add(mu_acc, mu);
        var_acc = h == 1 ? var : tape.add(var_acc, var);
      }
      em.mu[a] = tape.scale(mu_acc, 1.0 / T);
      em.sigma[a] = tape.scale(tape.sqrt(var_acc), 1.0 / T);
    }
  }
  return em;
}

namespace {

// sum of per-attribute log densities, N x C
Value emission_log_density(Tape& tape, const GspnModel& model, const CompiledGraph& cg,
                           const TapeEmissions& em) {
  Value acc;
  const int d = model.schema.num_attributes();
  for (int a = 0; a < d; ++a) {
    Value term;
    if (model.schema.attributes[a].is_categorical()) {
      term = tape.gather_categorical(em.cat_log_probs[a], cg.cat_values[a], cg.observed[a]);
    } else {
      term = tape.gaussian_log_pdf(cg.cont_values[a], cg.observed[a], em.mu[a], em.sigma[a]);
    }
    acc = a == 0 ? term : tape.add(acc, term);
  }
  return acc;
}

void check_evidence(const GspnModel& model, const CompiledGraph& cg, const Eigen::VectorXd& pll) {
  for (Eigen::Index v = 0; v < pll.size(); ++v) {
    if (std::isfinite(pll(v))) continue;
    // identify the offending attribute for the error message
    for (int h = 0; h <= model.L(); ++h) {
      const EmissionParams em = model.emission(h);
      for (std::size_t a = 0; a < em.attrs.size(); ++a) {
        if (!cg.observed[a][v] || !em.attrs[a].kind.is_categorical()) continue;
        const int k = cg.cat_values[a][v];
        if ((em.attrs[a].cat_probs.col(k).array() == 0.0).all()) {
          throw ImpossibleEvidenceError(
              "vertex " + std::to_string(v) + ", attribute " + std::to_string(a) +
              ": observed category " + std::to_string(k) + " has zero probability");
        }
      }
    }
    throw ImpossibleEvidenceError("vertex " + std::to_string(v) +
                                  ": evidence has zero probability");
  }
}

}  // namespace

TapeForward forward_on_tape(Tape& tape, const GspnModel& model, const CompiledGraph& cg) {
  const int L = model.L();
  TapeForward fw;
  fw.h.resize(L + 1);
  fw.priors.resize(L + 1);

  Value pi0_raw = tape.input("pi0", model.params.raw("pi0"));
  Value pi0 = tape.softmax_rows(pi0_raw);          // 1 x C
  Value log_pi0 = tape.log_softmax_rows(pi0_raw);  // 1 x C

  const Eigen::MatrixXd ones_col = Eigen::MatrixXd::Ones(cg.n, 1);
  auto broadcast_rows = [&](Value row) { return tape.matmul(tape.constant(ones_col), row); };

  TapeEmissions em0 = emissions_on_tape(tape, model, 0);
  Value E = emission_log_density(tape, model, cg, em0);
  fw.priors[0] = broadcast_rows(pi0);
  fw.h[0] = tape.softmax_rows(tape.add_rowvec(E, log_pi0));

  for (int l = 1; l <= L; ++l) {
    Value theta = tape.softmax_rows(tape.input(theta_name(l), model.params.raw(theta_name(l))));
    Value agg = tape.neighbor_mean(fw.h[l - 1], cg.topo);
    Value prior = tape.blend_rows(tape.matmul(agg, theta), pi0, cg.no_in_edges);
    fw.priors[l] = prior;

    TapeEmissions eml = emissions_on_tape(tape, model, l);
    E = emission_log_density(tape, model, cg, eml);
    Value joint = tape.add(tape.log(prior), E);
    fw.h[l] = tape.softmax_rows(joint);
    if (l == L) {
      fw.pll = tape.mul_const(tape.log_sum_exp_rows(joint), cg.observed_any);
    }
  }
  if (L == 0) {
    fw.pll = tape.mul_const(tape.log_sum_exp_rows(tape.add_rowvec(E, log_pi0)), cg.observed_any);
  }
  return fw;
}

LayerPosteriors forward_pass(const Graph& g, const GspnModel& model) {
  CompiledGraph cg = compile_graph(g, model.schema);
  Tape tape;
  TapeForward fw = forward_on_tape(tape, model, cg);
  LayerPosteriors out;
  for (const auto& v : fw.h) out.h.push_back(v.data());
  for (const auto& v : fw.priors) out.priors.push_back(v.data());
  out.pll = fw.pll.data().col(0);
  check_evidence(model, cg, out.pll);
  return out;
}

PseudoLogLik pseudo_log_likelihood(const Graph& g, const GspnModel& model) {
  LayerPosteriors lp = forward_pass(g, model);
  return {lp.pll, lp.pll.sum()};
}

Eigen::MatrixXd vertex_embeddings(const Graph& g, const GspnModel& model) {
  LayerPosteriors lp = forward_pass(g, model);
  const int C = model.C();
  Eigen::MatrixXd out(g.num_vertices, (model.L() + 1) * C);
  for (int l = 0; l <= model.L(); ++l) out.middleCols(l * C, C) = lp.h[l];
  return out;
}

GspnModel init_model(const AttributeSchema& schema, const GspnConfig& cfg,
                     const std::vector<const Graph*>& init_graphs,
                     std::optional<int> num_classes, Rng& rng) {
  schema.validate();
  cfg.validate();
  GspnModel model;
  model.schema = schema;
  model.config = cfg;
  model.num_classes = num_classes;
  const int C = cfg.num_states;
  const int d = schema.num_attributes();

  // gather observed continuous rows (mean-imputed) and categorical counts
  std::vector<int> cont_attrs;
  for (int a = 0; a < d; ++a) {
    if (!schema.attributes[a].is_categorical()) cont_attrs.push_back(a);
  }
  Eigen::MatrixXd cont_rows;
  if (!cont_attrs.empty()) {
    int total = 0;
    for (const Graph* g : init_graphs) total += g->num_vertices;
    cont_rows.resize(total, cont_attrs.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cont_attrs.size());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(cont_attrs.size());
    for (const Graph* g : init_graphs) {
      for (int v = 0; v < g->num_vertices; ++v) {
        for (std::size_t j = 0; j < cont_attrs.size(); ++j) {
          if (g->mask(v, cont_attrs[j])) {
            mean(j) += g->attributes(v, cont_attrs[j]);
            count(j) += 1.0;
          }
        }
      }
    }
    for (std::size_t j = 0; j < cont_attrs.size(); ++j) {
      mean(j) = count(j) > 0 ? mean(j) / count(j) : 0.0;
    }
    int row = 0;
    for (const Graph* g : init_graphs) {
      for (int v = 0; v < g->num_vertices; ++v, ++row) {
        for (std::size_t j = 0; j < cont_attrs.size(); ++j) {
          cont_rows(row, j) =
              g->mask(v, cont_attrs[j]) ? g->attributes(v, cont_attrs[j]) : mean(j);
        }
      }
    }
  }
  KMeansResult km;
  if (!cont_attrs.empty() && cont_rows.rows() > 0) {
    km = kmeans(cont_rows, C, rng);
  }

  std::vector<Eigen::VectorXd> cat_freq(d);
  for (int a = 0; a < d; ++a) {
    if (!schema.attributes[a].is_categorical()) continue;
    Eigen::VectorXd counts = Eigen::VectorXd::Ones(schema.attributes[a].arity);  // Laplace
    for (const Graph* g : init_graphs) {
      for (int v = 0; v < g->num_vertices; ++v) {
        if (g->mask(v, a)) counts(static_cast<int>(g->attributes(v, a))) += 1.0;
      }
    }
    cat_freq[a] = counts / counts.sum();
  }

  auto jitter_row = [&](int cols, double s) {
    Eigen::MatrixXd m(1, cols);
    for (int c = 0; c < cols; ++c) m(0, c) = s * rng.normal();
    return m;
  };

  ParamStore& store = model.params;
  store.add("pi0", jitter_row(C, 0.01), Constraint::SoftmaxVector);
  for (int l = 1; l <= cfg.num_layers; ++l) {
    Eigen::MatrixXd theta(C, C);
    for (int r = 0; r < C; ++r)
      for (int c = 0; c < C; ++c) theta(r, c) = 0.1 * rng.normal();
    store.add(theta_name(l), theta, Constraint::SoftmaxRows);
  }
  for (int h = 0; h < model.emission_heights(); ++h) {
    int j = 0;
    for (int a = 0; a < d; ++a) {
      if (schema.attributes[a].is_categorical()) {
        const int K = schema.attributes[a].arity;
        Eigen::MatrixXd logits(C, K);
        for (int i = 0; i < C; ++i)
          for (int k = 0; k < K; ++k) logits(i, k) = std::log(cat_freq[a](k)) + 0.1 * rng.normal();
        store.add(em_name(h, "cat", a), logits, Constraint::SoftmaxRows);
      } else {
        Eigen::MatrixXd mu(1, C), sigma(1, C);
        for (int i = 0; i < C; ++i) {
          double m = 0.0, s = 1.0;
          if (km.centroids.size() > 0) {
            m = km.centroids(i, j);
            s = km.stddev(i, j);
          }
          mu(0, i) = m + 0.01 * rng.normal();
          sigma(0, i) = std::clamp(s, 0.05, std::sqrt(kMaxInitVariance));
        }
        store.add(em_name(h, "mu", a), mu, Constraint::None);
        store.add(em_name(h, "sigma", a), sigma, Constraint::SoftplusPositive);
        store.set_from_constrained(em_name(h, "sigma", a), sigma);
        ++j;
      }
    }
  }
  return model;
}

GspnModel train_unsupervised(const Dataset& ds, const GspnConfig& cfg, TrainHistory* history) {
  cfg.validate();
  if (ds.graphs.empty()) throw std::invalid_argument("train_unsupervised: empty dataset");
  bool any_observed = false;
  for (const auto& g : ds.graphs) {
    if (g.mask.any()) { any_observed = true; break; }
  }
  if (!any_observed) {
    throw std::invalid_argument("train_unsupervised: every attribute is masked, nothing to fit");
  }

  Rng rng(cfg.seed);
  std::vector<int> order(ds.graphs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  const std::size_t val_count = ds.graphs.size() / 10;
  std::vector<int> val_idx(order.begin(), order.begin() + val_count);
  std::vector<int> train_idx(order.begin() + val_count, order.end());
  if (val_idx.empty()) val_idx = train_idx;  // tiny datasets validate on train

  std::vector<const Graph*> first_batch;
  for (std::size_t i = 0; i < train_idx.size() && i < static_cast<std::size_t>(cfg.batch_size); ++i) {
    first_batch.push_back(&ds.graphs[train_idx[i]]);
  }
  GspnModel model = init_model(ds.schema, cfg, first_batch, ds.num_classes, rng);

  std::vector<CompiledGraph> compiled;
  compiled.reserve(ds.graphs.size());
  for (const auto& g : ds.graphs) compiled.push_back(compile_graph(g, ds.schema));

  auto mean_pll = [&](const std::vector<int>& idx) {
    double total = 0.0;
    long vertices = 0;
    for (int i : idx) {
      Tape tape;
      TapeForward fw = forward_on_tape(tape, model, compiled[i]);
      total += fw.pll.data().sum();
      vertices += compiled[i].n;
    }
    return vertices > 0 ? total / vertices : 0.0;
  };

  AdamState adam;
  adam.config.learning_rate = cfg.learning_rate;
  double best_val = -std::numeric_limits<double>::infinity();
  std::map<std::string, Eigen::MatrixXd> best_raw;
  int best_epoch = -1, stall = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_pll = 0.0;
    long epoch_vertices = 0;
    for (std::size_t at = 0; at < train_idx.size(); at += cfg.batch_size) {
      const std::size_t end = std::min(at + cfg.batch_size, train_idx.size());
      Tape tape;
      Value obj;
      long vertices = 0;
      for (std::size_t k = at; k < end; ++k) {
        TapeForward fw = forward_on_tape(tape, model, compiled[train_idx[k]]);
        Value s = tape.sum(fw.pll);
        obj = k == at ? s : tape.add(obj, s);
        vertices += compiled[train_idx[k]].n;
      }
      if (vertices == 0) continue;
      epoch_pll += obj.scalar();
      epoch_vertices += vertices;
      obj = tape.scale(obj, 1.0 / vertices);
      auto grads = grad(tape, obj, model.params);
      adam_step(model.params, grads, adam);
    }
    EpochStats stats;
    stats.train_pll = epoch_vertices > 0 ? epoch_pll / epoch_vertices : 0.0;
    stats.val_pll = mean_pll(val_idx);
    if (history) history->epochs.push_back(stats);

    if (stats.val_pll > best_val + 1e-9) {
      best_val = stats.val_pll;
      best_epoch = epoch;
      best_raw.clear();
      for (const auto& [name, entry] : model.params.entries()) best_raw[name] = entry.first;
      stall = 0;
    } else if (++stall >= cfg.patience) {
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
