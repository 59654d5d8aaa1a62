// Acceptance suite: every criterion prints one PASS/FAIL line; the process
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "gspn/checkpoint.hpp"
#include "gspn/cli.hpp"
#include "gspn/dataset_io.hpp"
#include "gspn/masking.hpp"
#include "gspn/queries.hpp"
#include "gspn/readout.hpp"
#include "gspn/synthetic.hpp"
#include "test_helpers.hpp"

using namespace gspn;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// iid mixture rows packed into edgeless graphs
Dataset mixture_rows_dataset(Rng& rng, int num_graphs, int rows_per_graph,
                             const std::vector<double>& means,
                             const std::vector<double>& sigmas) {
  Dataset ds;
  ds.schema.attributes = {AttributeKind::continuous()};
  for (int gi = 0; gi < num_graphs; ++gi) {
    Graph g;
    g.num_vertices = rows_per_graph;
    g.attributes.resize(rows_per_graph, 1);
    g.mask.setConstant(rows_per_graph, 1, true);
    for (int v = 0; v < rows_per_graph; ++v) {
      const auto k = rng.uniform_below(means.size());
      g.attributes(v, 0) = means[k] + sigmas[k] * rng.normal();
    }
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

GspnModel gspn_from_mixture(const MixtureParams& gmm, const AttributeSchema& schema,
                            const Graph& init_graph) {
  GspnConfig cfg;
  cfg.num_layers = 1;
  cfg.num_states = gmm.num_states();
  Rng rng(0);
  GspnModel model = init_model(schema, cfg, {&init_graph}, std::nullopt, rng);
  model.params.set_from_constrained("pi0", gmm.weights.transpose());
  for (int h = 0; h <= 1; ++h) {
    for (std::size_t a = 0; a < gmm.emission.attrs.size(); ++a) {
      const auto& e = gmm.emission.attrs[a];
      const std::string base = "em." + std::to_string(h) + ".";
      if (e.kind.is_categorical()) {
        model.params.set_from_constrained(base + "cat." + std::to_string(a), e.cat_probs);
      } else {
        model.params.set_from_constrained(base + "mu." + std::to_string(a), e.mu.transpose());
        model.params.set_from_constrained(base + "sigma." + std::to_string(a),
                                          e.sigma.transpose());
      }
    }
  }
  return model;
}

// ---- criteria ----

void criterion_gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  const AttributeSchema schema = testing::mixed_schema();
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_below(5));
    const int C = 2 + static_cast<int>(rng.uniform_below(2));
    const int L = 1 + static_cast<int>(rng.uniform_below(3));
    GspnModel model = testing::well_conditioned_model(rng, schema, L, C);
    Graph g = testing::random_graph(rng, schema, n, 0.35, 0.3);
    const CompiledGraph cg = compile_graph(g, schema);
    auto build = [&](Tape& tape) { return tape.sum(forward_on_tape(tape, model, cg).pll); };
    const auto report = finite_diff_check(model.params, build, 1e-4);
    worst = std::max(worst, report.max_rel_err);
  }
  require(worst < 1e-4, "max rel err " + std::to_string(worst));
  require(seconds_since(t0) < 30.0, "took too long");
}

void criterion_normalization() {
  Rng rng(202);
  const AttributeSchema schema = testing::mixed_schema();
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 1 + static_cast<int>(rng.uniform_below(3));
    const int C = 2 + static_cast<int>(rng.uniform_below(3));
    GspnModel model = testing::random_model(rng, schema, L, C);
    const Pooling pooling = trial % 2 == 0 ? Pooling::Mean : Pooling::Sum;
    ReadoutConfig rcfg;
    rcfg.num_states = 4;
    rcfg.pooling = pooling;
    const Constraint tc =
        pooling == Pooling::Mean ? Constraint::SoftmaxRows : Constraint::None;
    for (int l = 1; l <= L; ++l) {
      Eigen::MatrixXd m(C, 4);
      for (int r = 0; r < C; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = rng.normal();
      model.params.add("readout.theta." + std::to_string(l), m, tc);
    }
    Eigen::MatrixXd t(4, 2);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) t(r, c) = rng.normal();
    model.params.add("readout.target", t, Constraint::SoftmaxRows);
    model.readout = rcfg;
    model.num_classes = 2;

    Graph g = testing::random_graph(rng, schema, 1 + static_cast<int>(rng.uniform_below(7)),
                                    0.3, 0.3);
    const LayerPosteriors lp = forward_pass(g, model);
    for (int l = 0; l <= L; ++l) {
      for (int v = 0; v < g.num_vertices; ++v) {
        require(std::abs(lp.h[l].row(v).sum() - 1.0) < 1e-9, "posterior off the simplex");
        require(std::abs(lp.priors[l].row(v).sum() - 1.0) < 1e-9, "prior off the simplex");
        require(lp.h[l].row(v).minCoeff() >= 0 && lp.priors[l].row(v).minCoeff() >= 0,
                "negative probability");
      }
    }
    const Eigen::VectorXd pi_r = readout_prior(lp, readout_params(model));
    require(std::abs(pi_r.sum() - 1.0) < 1e-9, "readout prior off the simplex");
    require(pi_r.minCoeff() >= 0, "negative readout prior");
  }
}

void criterion_marginalization() {
  Rng rng(303);
  const AttributeSchema schema = testing::mixed_schema();  // cat(3) + cont
  for (int trial = 0; trial < 25; ++trial) {
    const int L = 1 + static_cast<int>(rng.uniform_below(2));
    GspnModel model = testing::random_model(rng, schema, L, 3);
    Graph g = testing::random_graph(rng, schema, 5, 0.4, 0.2, /*acyclic=*/true);
    const int v = static_cast<int>(rng.uniform_below(5));
    Graph masked = g;
    masked.mask(v, 0) = false;
    const double marginal = std::exp(pseudo_log_likelihood(masked, model).per_vertex(v));
    double summed = 0.0;
    for (int k = 0; k < 3; ++k) {
      Graph obs = masked;
      obs.mask(v, 0) = true;
      obs.attributes(v, 0) = k;
      summed += std::exp(pseudo_log_likelihood(obs, model).per_vertex(v));
    }
    require(std::abs(summed - marginal) < 1e-9,
            "sum over category values " + std::to_string(summed) + " vs marginal " +
                std::to_string(marginal));
  }
  // fully masked graphs: total is exactly zero
  for (int trial = 0; trial < 10; ++trial) {
    GspnModel model = testing::random_model(rng, schema, 2, 3);
    Graph g = testing::random_graph(rng, schema, 6, 0.4, 0.0);
    g.mask.setConstant(6, 2, false);
    require(pseudo_log_likelihood(g, model).total == 0.0, "all-masked total not exactly 0");
  }
}

void criterion_gmm_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(404);

  // evaluation equivalence at copied parameters
  Dataset rows = mixture_rows_dataset(rng, 10, 60, {-2.0, 0.5, 3.0}, {0.5, 0.7, 0.4});
  Dataset masked = apply_missing_mask(rows, 1.5, 0.8, 7);
  MixtureParams gmm = fit_gmm(masked, 3, 100, 1e-9, 11);
  GspnModel copied = gspn_from_mixture(gmm, rows.schema, masked.graphs[0]);

  for (const auto& g : masked.graphs) {
    const PseudoLogLik pll = pseudo_log_likelihood(g, copied);
    for (int v = 0; v < g.num_vertices; ++v) {
      const auto obs = testing::observed_row(g, v);
      bool any = false;
      for (auto o : obs) any = any || o;
      if (!any) continue;
      const double ref = mixture_row_log_lik(gmm, g.attributes.row(v).transpose(), obs);
      require(std::abs(pll.per_vertex(v) - ref) < 1e-10, "per-row log-lik mismatch");
    }
  }
  const MissingNll ours = missing_nll(masked, copied);
  const MissingNll theirs = baseline_missing_nll(gmm, masked);
  require(std::abs(ours.per_vertex_mean - theirs.per_vertex_mean) < 1e-10,
          "conditional NLL mismatch");

  // training equivalence on 5000 iid rows
  Rng data_rng(55);
  Dataset train = mixture_rows_dataset(data_rng, 100, 50, {-2.0, 1.0, 3.5}, {0.5, 0.6, 0.5});
  Dataset held = mixture_rows_dataset(data_rng, 20, 50, {-2.0, 1.0, 3.5}, {0.5, 0.6, 0.5});

  MixtureParams em_fit = fit_gmm(train, 3, 200, 1e-8, 1);
  double em_nll = 0.0;
  long n_rows = 0;
  for (const auto& g : held.graphs) {
    for (int v = 0; v < g.num_vertices; ++v) {
      em_nll -= mixture_row_log_lik(em_fit, g.attributes.row(v).transpose(), {1});
      ++n_rows;
    }
  }
  em_nll /= n_rows;

  GspnConfig cfg;
  cfg.num_layers = 1;
  cfg.num_states = 3;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.epochs = 80;
  cfg.patience = 15;
  cfg.seed = 2;
  GspnModel trained = train_unsupervised(train, cfg);
  double gspn_nll = 0.0;
  for (const auto& g : held.graphs) gspn_nll -= pseudo_log_likelihood(g, trained).total;
  gspn_nll /= n_rows;

  require(std::abs(gspn_nll - em_nll) < 0.05,
          "held-out NLL: gradient " + std::to_string(gspn_nll) + " vs EM " +
              std::to_string(em_nll));
  require(seconds_since(t0) < 120.0, "took too long");
}

void criterion_structure_awareness() {
  const auto t0 = std::chrono::steady_clock::now();
  double margin_sum = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    Dataset train = synth_community_graphs(500, 16, 2, 0.1, 1000 + seed);
    Dataset test = synth_community_graphs(100, 16, 2, 0.1, 2000 + seed);
    Dataset train_masked = apply_missing_mask(train, 1.5, 0.5, 3000 + seed);
    Dataset test_masked = apply_missing_mask(test, 1.5, 0.5, 4000 + seed);

    GspnConfig cfg;
    cfg.num_layers = 2;
    cfg.num_states = 5;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 32;
    cfg.epochs = 40;
    cfg.patience = 10;
    cfg.seed = seed;
    GspnModel model = train_unsupervised(train_masked, cfg);
    MixtureParams gmm = fit_gmm(train_masked, 5, 150, 1e-8, seed);

    const double gspn = missing_nll(test_masked, model).per_vertex_mean;
    const double base = baseline_missing_nll(gmm, test_masked).per_vertex_mean;
    margin_sum += base - gspn;
  }
  const double margin = margin_sum / 5.0;
  require(margin >= 0.05, "mean margin " + std::to_string(margin) + " nats");
  require(seconds_since(t0) < 600.0, "took too long");
}

void criterion_perturbation_locality() {
  Rng rng(505);
  const AttributeSchema schema = testing::mixed_schema();
  int checked = 0;
  for (int edit = 0; edit < 50; ++edit) {
    const int L = 1 + static_cast<int>(rng.uniform_below(2));
    GspnModel model = testing::random_model(rng, schema, L, 2);
    Graph g = testing::random_graph(rng, schema, 8, 0.2, 0.1);
    const int vertex = static_cast<int>(rng.uniform_below(8));
    const int attr = static_cast<int>(rng.uniform_below(2));
    const double value = attr == 0 ? static_cast<double>(rng.uniform_below(3)) : rng.normal();
    const PerturbationResult res = perturbation_query(g, model, vertex, attr, value);
    for (int v = 0; v < 8; ++v) {
      if (v == vertex) continue;
      if (res.hop_distance[v] < 0 || res.hop_distance[v] > L) {
        require(res.delta_pll(v) == 0.0, "nonzero delta outside the receptive field");
        ++checked;
      }
    }
  }
  require(checked > 100, "fixture produced too few out-of-range vertices");
}

void criterion_permutation_invariance() {
  Rng rng(606);
  const AttributeSchema schema = testing::mixed_schema();
  for (int trial = 0; trial < 10; ++trial) {
    GspnModel model = testing::random_model(rng, schema, 2, 3);
    ReadoutConfig rcfg;
    rcfg.num_states = 4;
    rcfg.pooling = trial % 2 == 0 ? Pooling::Mean : Pooling::Sum;
    const Constraint tc =
        rcfg.pooling == Pooling::Mean ? Constraint::SoftmaxRows : Constraint::None;
    for (int l = 1; l <= 2; ++l) {
      Eigen::MatrixXd m(3, 4);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = rng.normal();
      model.params.add("readout.theta." + std::to_string(l), m, tc);
    }
    Eigen::MatrixXd t(4, 2);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) t(r, c) = rng.normal();
    model.params.add("readout.target", t, Constraint::SoftmaxRows);
    model.readout = rcfg;
    model.num_classes = 2;

    Graph g = testing::random_graph(rng, schema, 7, 0.4, 0.2);

    Graph shuffled = g;
    rng.shuffle(shuffled.edges);
    std::vector<int> perm(g.num_vertices);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Graph relabeled;
    relabeled.num_vertices = g.num_vertices;
    relabeled.attributes.resize(g.num_vertices, 2);
    relabeled.mask.resize(g.num_vertices, 2);
    for (const auto& [u, v] : g.edges) relabeled.edges.emplace_back(perm[u], perm[v]);
    for (int v = 0; v < g.num_vertices; ++v) {
      relabeled.attributes.row(perm[v]) = g.attributes.row(v);
      relabeled.mask.row(perm[v]) = g.mask.row(v);
    }

    const LayerPosteriors base = forward_pass(g, model);
    const LayerPosteriors shuf = forward_pass(shuffled, model);
    const Eigen::MatrixXd be = vertex_embeddings(g, model);
    const Eigen::MatrixXd re = vertex_embeddings(relabeled, model);
    for (int l = 0; l <= 2; ++l) {
      require(base.h[l] == shuf.h[l], "edge shuffle changed posteriors");
    }
    require(base.pll == shuf.pll, "edge shuffle changed the pseudo log-likelihood");
    for (int v = 0; v < g.num_vertices; ++v) {
      require(be.row(v) == re.row(perm[v]), "relabeling changed embeddings");
    }
    require(graph_predict(g, model) == graph_predict(relabeled, model),
            "relabeling changed graph_predict");
    require(graph_predict(g, model) == graph_predict(shuffled, model),
            "edge shuffle changed graph_predict");
  }
}

void criterion_validity_checks() {
  const AttributeSchema schema = testing::mixed_schema();
  for (int C : {1, 2, 4}) {
    Circuit nb = build_naive_bayes(schema, C);
    require(check_smooth(nb), "NB template must be smooth");
    require(check_decomposable(nb), "NB template must be decomposable");
  }
  {
    // product over two leaves of the same attribute
    Circuit c;
    c.units = {Unit{Unit::Kind::Leaf, 0, 0, {}, -1}, Unit{Unit::Kind::Leaf, 0, 1, {}, -1},
               Unit{Unit::Kind::Product, -1, -1, {0, 1}, -1}};
    c.root = 2;
    c.compute_scopes();
    require(!check_decomposable(c), "shared-scope product must fail decomposability");
    require(check_smooth(c), "shared-scope product must not fail smoothness");
  }
  {
    // sum over leaves of different attributes
    Circuit c;
    c.units = {Unit{Unit::Kind::Leaf, 0, 0, {}, -1}, Unit{Unit::Kind::Leaf, 1, 0, {}, -1},
               Unit{Unit::Kind::Sum, -1, -1, {0, 1}, 0}};
    c.root = 2;
    c.num_weight_slots = 1;
    c.compute_scopes();
    require(!check_smooth(c), "mixed-scope sum must fail smoothness");
    require(check_decomposable(c), "mixed-scope sum must not fail decomposability");
  }
}

void criterion_shortcut_formulas() {
  Rng rng(707);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + static_cast<int>(rng.uniform_below(4));
    const int C = 1 + static_cast<int>(rng.uniform_below(3));
    std::vector<EmissionParams> lower(T);
    for (auto& em : lower) {
      em.num_states = C;
      em.attrs.resize(2);
      em.attrs[0].kind = AttributeKind::categorical(4);
      Eigen::MatrixXd logits(C, 4);
      for (int i = 0; i < C; ++i)
        for (int k = 0; k < 4; ++k) logits(i, k) = rng.normal();
      em.attrs[0].cat_probs = softmax_rows_plain(logits);
      em.attrs[1].kind = AttributeKind::continuous();
      em.attrs[1].mu.resize(C);
      em.attrs[1].sigma.resize(C);
      for (int i = 0; i < C; ++i) {
        em.attrs[1].mu(i) = 3.0 * rng.normal();
        em.attrs[1].sigma(i) = 0.2 + 2.0 * rng.uniform();
      }
    }
    const EmissionParams out = shortcut_emission(lower);
    for (int i = 0; i < C; ++i) {
      double mu = 0.0, var = 0.0;
      Eigen::VectorXd cat = Eigen::VectorXd::Zero(4);
      for (const auto& em : lower) {
        mu += em.attrs[1].mu(i);
        var += em.attrs[1].sigma(i) * em.attrs[1].sigma(i);
        cat += em.attrs[0].cat_probs.row(i).transpose();
      }
      mu /= T;
      var /= static_cast<double>(T) * T;
      cat /= T;
      require(std::abs(out.attrs[1].mu(i) - mu) < 1e-12, "combined mean off");
      require(std::abs(out.attrs[1].sigma(i) * out.attrs[1].sigma(i) - var) < 1e-12,
              "combined variance off");
      require((out.attrs[0].cat_probs.row(i).transpose() - cat).cwiseAbs().maxCoeff() < 1e-12,
              "combined categorical off");
      require(std::abs(out.attrs[0].cat_probs.row(i).sum() - 1.0) < 1e-12,
              "combined categorical not a distribution");
    }
  }
}

void criterion_supervised_readout() {
  Dataset train = synth_community_graphs(250, 16, 2, 0.1, 51);
  Dataset test = synth_community_graphs(80, 16, 2, 0.1, 52);
  GspnConfig cfg;
  cfg.num_layers = 2;
  cfg.num_states = 5;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 32;
  cfg.epochs = 200;
  cfg.patience = 30;
  cfg.seed = 7;
  ReadoutConfig rcfg;
  rcfg.num_states = 8;
  rcfg.pooling = Pooling::Mean;
  GspnModel model = train_supervised(train, cfg, rcfg, SupervisedMode::Joint);

  int hits = 0;
  for (const auto& g : test.graphs) {
    const Eigen::VectorXd probs = graph_predict(g, model);
    require(std::abs(probs.sum() - 1.0) < 1e-9, "class distribution off the simplex");
    Eigen::Index best;
    probs.maxCoeff(&best);
    hits += static_cast<int>(best) == *g.label ? 1 : 0;
  }
  const double acc = static_cast<double>(hits) / test.graphs.size();
  require(acc > 0.9, "held-out accuracy " + std::to_string(acc));

  // both pooling modes emit simplex outputs
  Rng rng(53);
  for (const Pooling pooling : {Pooling::Mean, Pooling::Sum}) {
    GspnModel m2 = testing::random_model(rng, train.schema, 2, 3);
    ReadoutConfig r2;
    r2.num_states = 4;
    r2.pooling = pooling;
    const Constraint tc = pooling == Pooling::Mean ? Constraint::SoftmaxRows : Constraint::None;
    for (int l = 1; l <= 2; ++l) {
      Eigen::MatrixXd m(3, 4);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = rng.normal();
      m2.params.add("readout.theta." + std::to_string(l), m, tc);
    }
    Eigen::MatrixXd t(4, 2);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) t(r, c) = rng.normal();
    m2.params.add("readout.target", t, Constraint::SoftmaxRows);
    m2.readout = r2;
    m2.num_classes = 2;
    const Eigen::VectorXd probs = graph_predict(test.graphs[0], m2);
    require(std::abs(probs.sum() - 1.0) < 1e-9, "pooling output off the simplex");
    require(probs.minCoeff() >= 0, "negative class probability");
  }
}

void criterion_complexity() {
  Rng rng(808);
  AttributeSchema schema;
  schema.attributes = {AttributeKind::continuous()};
  GspnModel model = testing::random_model(rng, schema, 2, 4);

  auto make_graph = [&](int n, int edges, std::uint64_t seed) {
    Graph g;
    g.num_vertices = n;
    Rng local(seed);
    std::set<std::pair<int, int>> used;
    while (static_cast<int>(used.size()) < edges) {
      const int u = static_cast<int>(local.uniform_below(n));
      const int v = static_cast<int>(local.uniform_below(n));
      if (u != v) used.insert({u, v});
    }
    g.edges.assign(used.begin(), used.end());
    g.attributes.resize(n, 1);
    for (int v = 0; v < n; ++v) g.attributes(v, 0) = local.normal();
    g.mask.setConstant(n, 1, true);
    return g;
  };
  auto median_time = [&](const Graph& g) {
    const CompiledGraph cg = compile_graph(g, schema);
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      Tape tape;
      Value obj = tape.sum(forward_on_tape(tape, model, cg).pll);
      tape.backward(obj);
      times.push_back(seconds_since(start));
    }
    std::sort(times.begin(), times.end());
    return times[2];
  };
  const int n = 800;
  const Graph sparse = make_graph(n, 4000, 1);
  const Graph dense = make_graph(n, 8000, 2);
  median_time(sparse);  // warm up allocators
  const double t1 = median_time(sparse);
  const double t2 = median_time(dense);
  require(t2 / t1 <= 2.5, "doubling edges scaled time by " + std::to_string(t2 / t1));
}

void criterion_reproducibility() {
  const fs::path root = fs::temp_directory_path() / "gspn_acceptance_repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto p = [&](const std::string& name) { return (root / name).string(); };

  Dataset ds = synth_community_graphs(16, 8, 2, 0.1, 77);
  save_dataset(ds, p("ds.json"));
  std::ofstream(p("cfg.json")) << R"({"model": {"num_layers": 2, "num_states": 3,
    "learning_rate": 0.05, "batch_size": 8, "epochs": 5, "patience": 5, "seed": 6},
    "readout": {"num_states": 4, "pooling": "mean", "mode": "joint"}})";

  const std::vector<std::vector<std::string>> commands = {
      {"mask", "--data", p("ds.json"), "--out", p("R.masked.json"), "--concentration", "1.5",
       "--rate", "0.5", "--seed", "3", "--metrics-out", p("R.mask_metrics.json")},
      {"train-unsup", "--config", p("cfg.json"), "--data", p("ds.json"), "--out",
       p("R.unsup.ckpt"), "--seed", "6", "--metrics-out", p("R.unsup_metrics.json")},
      {"train-sup", "--config", p("cfg.json"), "--data", p("ds.json"), "--out",
       p("R.sup.ckpt"), "--seed", "6", "--metrics-out", p("R.sup_metrics.json")},
      {"baseline", "gaussian", "--data", p("ds.json"), "--out", p("R.gauss.ckpt"),
       "--metrics-out", p("R.gauss_metrics.json")},
      {"baseline", "gmm", "--data", p("ds.json"), "--out", p("R.gmm.ckpt"), "--components",
       "3", "--seed", "5", "--metrics-out", p("R.gmm_metrics.json")},
      {"eval-pll", "--model", p("R.unsup.ckpt"), "--data", p("ds.json"), "--workers", "1",
       "--metrics-out", p("R.pll.json")},
      {"eval-missing-nll", "--model", p("R.unsup.ckpt"), "--data", p("R.masked.json"),
       "--truth", p("ds.json"), "--workers", "1", "--metrics-out", p("R.nll.json")},
      {"impute", "--model", p("R.unsup.ckpt"), "--data", p("R.masked.json"), "--out",
       p("R.filled.json"), "--csv-out", p("R.filled.csv"), "--workers", "1"},
      {"embed", "--model", p("R.unsup.ckpt"), "--data", p("ds.json"), "--out", p("R.emb.csv"),
       "--workers", "1"},
      {"query-perturb", "--model", p("R.unsup.ckpt"), "--data", p("ds.json"), "--graph", "0",
       "--vertex", "1", "--attr", "0", "--value", "0.5", "--out", p("R.q.csv"),
       "--metrics-out", p("R.q_metrics.json")},
      {"classify", "--model", p("R.sup.ckpt"), "--data", p("ds.json"), "--workers", "1",
       "--metrics-out", p("R.acc.json")},
  };

  std::map<std::string, std::string> first_pass;
  for (int round = 0; round < 2; ++round) {
    for (const auto& cmd : commands) {
      require(cli::run(cmd) == 0, "command failed: " + cmd[0]);
    }
    std::map<std::string, std::string> outputs;
    for (const auto& entry : fs::directory_iterator(root)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("R.", 0) == 0) outputs[name] = slurp(entry.path().string());
    }
    if (round == 0) {
      first_pass = std::move(outputs);
    } else {
      require(outputs.size() == first_pass.size(), "output file sets differ");
      for (const auto& [name, content] : outputs) {
        require(first_pass.at(name) == content, "output differs across runs: " + name);
      }
    }
  }

  // checkpoints round-trip exactly
  for (const std::string name : {"R.unsup.ckpt", "R.sup.ckpt", "R.gmm.ckpt"}) {
    LoadedCheckpoint ck = load_checkpoint(p(name));
    const std::string again = p("roundtrip.ckpt");
    if (ck.model) {
      save_checkpoint(*ck.model, again);
    } else {
      save_baseline_checkpoint(*ck.baseline, ck.schema, ck.kind, again);
    }
    require(slurp(p(name)) == slurp(again), "checkpoint round trip not byte exact: " + name);
  }
  fs::remove_all(root);
}

struct Criterion {
  int id;
  const char* name;
  std::function<void()> body;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "gradient-fidelity", criterion_gradient_fidelity},
      {2, "normalization-suite", criterion_normalization},
      {3, "marginalization-exactness", criterion_marginalization},
      {4, "gmm-equivalence", criterion_gmm_equivalence},
      {5, "structure-awareness", criterion_structure_awareness},
      {6, "perturbation-locality", criterion_perturbation_locality},
      {7, "permutation-invariance", criterion_permutation_invariance},
      {8, "validity-checks", criterion_validity_checks},
      {9, "shortcut-formulas", criterion_shortcut_formulas},
      {10, "supervised-readout", criterion_supervised_readout},
      {11, "edge-linear-complexity", criterion_complexity},
      {12, "cli-reproducibility", criterion_reproducibility},
  };

  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string message;
    bool ok = true;
    try {
      c.body();
    } catch (const std::exception& e) {
      ok = false;
      message = e.what();
    }
    std::printf("[%2d] %-28s %s (%.1fs)%s%s\n", c.id, c.name, ok ? "PASS" : "FAIL",
                seconds_since(t0), message.empty() ? "" : " -- ", message.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
