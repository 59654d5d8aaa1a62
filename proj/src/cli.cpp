#include "gspn/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "gspn/checkpoint.hpp"
#include "gspn/dataset_io.hpp"
#include "gspn/masking.hpp"
#include "gspn/queries.hpp"
#include "gspn/readout.hpp"
#include "gspn/synthetic.hpp"

namespace gspn::cli {

using nlohmann::json;

namespace {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int count = std::min<std::size_t>(workers, n);
  for (int t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// {"metric": ..., "mean": ..., "std": ..., "per_graph": [...]} with nulls
// for graphs the metric does not apply to
json metrics_json(const std::string& metric, const std::vector<double>& per_graph,
                  std::optional<double> mean_override = std::nullopt) {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  json values = json::array();
  for (double v : per_graph) {
    if (std::isnan(v)) {
      values.push_back(nullptr);
      continue;
    }
    values.push_back(v);
    sum += v;
    sq += v * v;
    ++n;
  }
  const double mean = n > 0 ? sum / n : 0.0;
  const double var = n > 0 ? std::max(0.0, sq / n - mean * mean) : 0.0;
  json j;
  j["metric"] = metric;
  j["mean"] = mean_override ? *mean_override : mean;
  j["std"] = std::sqrt(var);
  j["per_graph"] = std::move(values);
  return j;
}

void emit_metrics(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write metrics file '" + path + "'");
  out << j.dump(2) << "\n";
}

struct CommonOpts {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::string model_path;
  std::string metrics_path;
  int workers = 1;
  std::optional<std::uint64_t> seed;
};

struct ConfigFile {
  GspnConfig model;
  ReadoutConfig readout;
  std::string mode = "joint";
  std::string data;
  std::string out;
};

ConfigFile load_config(const std::string& path) {
  ConfigFile cf;
  if (path.empty()) return cf;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("num_layers")) cf.model.num_layers = m.at("num_layers").get<int>();
    if (m.contains("num_states")) cf.model.num_states = m.at("num_states").get<int>();
    if (m.contains("shortcut")) cf.model.shortcut = m.at("shortcut").get<bool>();
    if (m.contains("learning_rate")) cf.model.learning_rate = m.at("learning_rate").get<double>();
    if (m.contains("batch_size")) cf.model.batch_size = m.at("batch_size").get<int>();
    if (m.contains("epochs")) cf.model.epochs = m.at("epochs").get<int>();
    if (m.contains("patience")) cf.model.patience = m.at("patience").get<int>();
    if (m.contains("seed")) cf.model.seed = m.at("seed").get<std::uint64_t>();
  }
  if (j.contains("readout")) {
    const auto& r = j.at("readout");
    if (r.contains("num_states")) cf.readout.num_states = r.at("num_states").get<int>();
    if (r.contains("pooling")) {
      cf.readout.pooling = r.at("pooling") == "sum" ? Pooling::Sum : Pooling::Mean;
    }
    if (r.contains("learning_rate")) cf.readout.learning_rate = r.at("learning_rate").get<double>();
    if (r.contains("epochs")) cf.readout.epochs = r.at("epochs").get<int>();
    if (r.contains("patience")) cf.readout.patience = r.at("patience").get<int>();
    if (r.contains("mode")) cf.mode = r.at("mode").get<std::string>();
  }
  if (j.contains("data")) cf.data = j.at("data").get<std::string>();
  if (j.contains("out")) cf.out = j.at("out").get<std::string>();
  return cf;
}

std::string resolve(const std::string& flag_value, const std::string& config_value,
                    const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw ValidationError(std::string("missing required ") + what +
                        " (flag or config entry)");
}

std::vector<double> per_graph_mean_pll(const Dataset& ds, const LoadedCheckpoint& ck,
                                       int workers) {
  std::vector<double> out(ds.graphs.size());
  parallel_for(ds.graphs.size(), workers, [&](std::size_t i) {
    const Graph& g = ds.graphs[i];
    if (g.num_vertices == 0) {
      out[i] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    if (ck.model) {
      out[i] = pseudo_log_likelihood(g, *ck.model).total / g.num_vertices;
    } else {
      double acc = 0.0;
      for (int v = 0; v < g.num_vertices; ++v) {
        std::vector<std::uint8_t> obs(ds.schema.num_attributes());
        for (int a = 0; a < ds.schema.num_attributes(); ++a) obs[a] = g.mask(v, a) ? 1 : 0;
        acc += mixture_row_log_lik(*ck.baseline, g.attributes.row(v).transpose(), obs);
      }
      out[i] = acc / g.num_vertices;
    }
  });
  return out;
}

void check_schema_match(const AttributeSchema& model_schema, const Dataset& ds) {
  if (!(model_schema == ds.schema)) {
    throw ValidationError("checkpoint schema does not match the dataset schema");
  }
}

// ---- subcommand bodies ----

int cmd_mask(const CommonOpts& opts, double concentration, double rate, std::uint64_t seed) {
  Dataset ds = load_dataset(opts.data_path);
  Dataset masked = apply_missing_mask(ds, concentration, rate, seed);
  save_dataset(masked, opts.out_path);
  long total = 0;
  std::vector<double> frac(masked.graphs.size());
  for (std::size_t i = 0; i < masked.graphs.size(); ++i) {
    const auto& g = masked.graphs[i];
    long hidden = 0;
    for (int v = 0; v < g.num_vertices; ++v)
      for (int a = 0; a < ds.schema.num_attributes(); ++a) hidden += g.mask(v, a) ? 0 : 1;
    total += hidden;
    frac[i] = g.num_vertices > 0
                  ? static_cast<double>(hidden) / (g.num_vertices * ds.schema.num_attributes())
                  : std::numeric_limits<double>::quiet_NaN();
  }
  log_msg(LogLevel::Info, "masked " + std::to_string(total) + " entries");
  if (!opts.metrics_path.empty()) {
    emit_metrics(metrics_json("masked_fraction", frac), opts.metrics_path);
  }
  return 0;
}

int cmd_train_unsup(const CommonOpts& opts, GspnConfig cfg) {
  if (opts.seed) cfg.seed = *opts.seed;
  Dataset ds = load_dataset(opts.data_path);
  TrainHistory history;
  GspnModel model = train_unsupervised(ds, cfg, &history);
  save_checkpoint(model, opts.out_path);
  if (!opts.metrics_path.empty()) {
    std::vector<double> pll;
    for (const auto& e : history.epochs) pll.push_back(e.val_pll);
    json j = metrics_json("validation_pseudo_log_likelihood_per_epoch", pll);
    j["best_epoch"] = history.best_epoch;
    emit_metrics(j, opts.metrics_path);
  }
  return 0;
}

int cmd_train_sup(const CommonOpts& opts, GspnConfig cfg, ReadoutConfig rcfg,
                  const std::string& mode) {
  if (opts.seed) cfg.seed = *opts.seed;
  Dataset ds = load_dataset(opts.data_path);
  const SupervisedMode m = mode == "frozen" ? SupervisedMode::Frozen : SupervisedMode::Joint;
  SupervisedHistory history;
  GspnModel model = train_supervised(ds, cfg, rcfg, m, &history);
  save_checkpoint(model, opts.out_path);
  if (!opts.metrics_path.empty()) {
    json j = metrics_json("validation_accuracy_per_epoch", history.val_accuracy);
    j["best_epoch"] = history.best_epoch;
    emit_metrics(j, opts.metrics_path);
  }
  return 0;
}

int cmd_eval_pll(const CommonOpts& opts) {
  LoadedCheckpoint ck = load_checkpoint(opts.model_path);
  Dataset ds = load_dataset(opts.data_path);
  check_schema_match(ck.schema, ds);
  emit_metrics(metrics_json("pseudo_log_likelihood", per_graph_mean_pll(ds, ck, opts.workers)),
               opts.metrics_path);
  return 0;
}

int cmd_eval_missing_nll(const CommonOpts& opts, const std::string& truth_path,
                         std::optional<double> concentration, std::optional<double> rate,
                         std::optional<std::uint64_t> mask_seed) {
  LoadedCheckpoint ck = load_checkpoint(opts.model_path);
  Dataset ds = load_dataset(opts.data_path);
  check_schema_match(ck.schema, ds);

  if (!truth_path.empty()) {
    // opts.data_path holds the masked dataset; pull the held-out values in
    const Dataset truth = load_dataset(truth_path);
    if (truth.graphs.size() != ds.graphs.size()) {
      throw ValidationError("truth dataset has a different number of graphs");
    }
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
      Graph& g = ds.graphs[i];
      const Graph& t = truth.graphs[i];
      if (t.num_vertices != g.num_vertices) {
        throw ValidationError("truth graph " + std::to_string(i) + " has different size");
      }
      for (int v = 0; v < g.num_vertices; ++v) {
        for (int a = 0; a < ds.schema.num_attributes(); ++a) {
          if (!g.mask(v, a)) {
            if (!t.mask(v, a)) {
              throw ValidationError("graph " + std::to_string(i) + " vertex " +
                                    std::to_string(v) + ": truth is missing a masked value");
            }
            g.attributes(v, a) = t.attributes(v, a);
          }
        }
      }
    }
  } else if (concentration && rate) {
    ds = apply_missing_mask(ds, *concentration, *rate, mask_seed.value_or(0));
  } else {
    // the dataset itself must carry a mask with in-place held-out values
    bool any = false;
    for (const auto& g : ds.graphs) any = any || !g.mask.all();
    if (!any) {
      throw ValidationError(
          "no masked entries: pass --concentration/--rate to mask here, or --truth with a "
          "masked dataset");
    }
  }

  std::vector<double> per_graph(ds.graphs.size());
  std::vector<double> mass(ds.graphs.size(), 0.0);
  std::vector<long> vtx(ds.graphs.size(), 0), ent(ds.graphs.size(), 0);
  parallel_for(ds.graphs.size(), opts.workers, [&](std::size_t i) {
    const Graph& g = ds.graphs[i];
    bool any = g.num_vertices > 0 && !g.mask.all();
    if (!any) {
      per_graph[i] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    MissingNll nll;
    if (ck.model) {
      nll = missing_nll(g, *ck.model);
    } else {
      Dataset one;
      one.schema = ds.schema;
      one.graphs.push_back(g);
      nll = baseline_missing_nll(*ck.baseline, one);
    }
    per_graph[i] = nll.per_vertex_mean;
    for (Eigen::Index v = 0; v < nll.per_vertex.size(); ++v) {
      if (!std::isnan(nll.per_vertex(v))) mass[i] += nll.per_vertex(v);
    }
    vtx[i] = nll.vertices;
    ent[i] = nll.entries;
  });
  double total_mass = 0.0;
  long total_vtx = 0, total_ent = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    total_mass += mass[i];
    total_vtx += vtx[i];
    total_ent += ent[i];
  }
  if (total_vtx == 0) throw ValidationError("no masked entries in the dataset");
  json j = metrics_json("missing_nll", per_graph, total_mass / total_vtx);
  j["per_attribute_mean"] = total_mass / total_ent;
  j["masked_vertices"] = total_vtx;
  j["masked_entries"] = total_ent;
  emit_metrics(j, opts.metrics_path);
  return 0;
}

int cmd_impute(const CommonOpts& opts, const std::string& csv_path) {
  GspnModel model = load_gspn_checkpoint(opts.model_path);
  Dataset ds = load_dataset(opts.data_path);
  check_schema_match(model.schema, ds);
  Dataset filled = ds;
  std::vector<double> counts(ds.graphs.size());
  parallel_for(ds.graphs.size(), opts.workers, [&](std::size_t i) {
    filled.graphs[i] = impute(ds.graphs[i], model);
    counts[i] = static_cast<double>((ds.graphs[i].mask.array() == false).count());
  });
  save_dataset(filled, opts.out_path);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw ValidationError("cannot write '" + csv_path + "'");
    csv << "graph_id,vertex_id,attribute,value\n";
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
      for (int v = 0; v < ds.graphs[i].num_vertices; ++v) {
        for (int a = 0; a < ds.schema.num_attributes(); ++a) {
          if (!ds.graphs[i].mask(v, a)) {
            csv << i << "," << v << "," << a << ","
                << format_double(filled.graphs[i].attributes(v, a)) << "\n";
          }
        }
      }
    }
  }
  if (!opts.metrics_path.empty()) {
    emit_metrics(metrics_json("imputed_entries", counts), opts.metrics_path);
  }
  return 0;
}

int cmd_embed(const CommonOpts& opts) {
  GspnModel model = load_gspn_checkpoint(opts.model_path);
  Dataset ds = load_dataset(opts.data_path);
  check_schema_match(model.schema, ds);
  std::vector<Eigen::MatrixXd> embeddings(ds.graphs.size());
  parallel_for(ds.graphs.size(), opts.workers, [&](std::size_t i) {
    embeddings[i] = vertex_embeddings(ds.graphs[i], model);
  });
  std::ofstream csv(opts.out_path, std::ios::binary);
  if (!csv) throw ValidationError("cannot write '" + opts.out_path + "'");
  const int dim = (model.L() + 1) * model.C();
  csv << "graph_id,vertex_id";
  for (int c = 0; c < dim; ++c) csv << ",e" << c;
  csv << "\n";
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (Eigen::Index v = 0; v < embeddings[i].rows(); ++v) {
      csv << i << "," << v;
      for (int c = 0; c < dim; ++c) csv << "," << format_double(embeddings[i](v, c));
      csv << "\n";
    }
  }
  if (!opts.metrics_path.empty()) {
    std::vector<double> sizes(ds.graphs.size());
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) sizes[i] = ds.graphs[i].num_vertices;
    emit_metrics(metrics_json("embedded_vertices", sizes), opts.metrics_path);
  }
  return 0;
}

int cmd_query_perturb(const CommonOpts& opts, int graph_index, int vertex, int attribute,
                      double value) {
  GspnModel model = load_gspn_checkpoint(opts.model_path);
  Dataset ds = load_dataset(opts.data_path);
  check_schema_match(model.schema, ds);
  if (graph_index < 0 || graph_index >= static_cast<int>(ds.graphs.size())) {
    throw ValidationError("graph index out of range");
  }
  PerturbationResult res = perturbation_query(ds.graphs[graph_index], model, vertex, attribute,
                                              value);
  std::ofstream csv(opts.out_path, std::ios::binary);
  if (!csv) throw ValidationError("cannot write '" + opts.out_path + "'");
  csv << "vertex_id,hop_distance,delta_pll\n";
  for (Eigen::Index v = 0; v < res.delta_pll.size(); ++v) {
    csv << v << "," << res.hop_distance[v] << "," << format_double(res.delta_pll(v)) << "\n";
  }
  if (!opts.metrics_path.empty()) {
    json j = metrics_json("delta_pll_abs_mean",
                          {res.delta_pll.size() > 0 ? res.delta_pll.cwiseAbs().mean() : 0.0});
    j["edited_vertex"] = res.vertex;
    j["edited_attribute"] = res.attribute;
    emit_metrics(j, opts.metrics_path);
  }
  return 0;
}

int cmd_classify(const CommonOpts& opts) {
  GspnModel model = load_gspn_checkpoint(opts.model_path);
  if (!model.readout) throw ValidationError("checkpoint has no readout head");
  Dataset ds = load_dataset(opts.data_path);
  check_schema_match(model.schema, ds);
  std::vector<double> correct(ds.graphs.size());
  std::vector<int> predicted(ds.graphs.size());
  parallel_for(ds.graphs.size(), opts.workers, [&](std::size_t i) {
    const Eigen::VectorXd probs = graph_predict(ds.graphs[i], model);
    Eigen::Index best;
    probs.maxCoeff(&best);
    predicted[i] = static_cast<int>(best);
    correct[i] = ds.graphs[i].label
                     ? (predicted[i] == *ds.graphs[i].label ? 1.0 : 0.0)
                     : std::numeric_limits<double>::quiet_NaN();
  });
  json j = metrics_json("accuracy", correct);
  j["predictions"] = predicted;
  emit_metrics(j, opts.metrics_path);
  return 0;
}

int cmd_baseline(const CommonOpts& opts, const std::string& kind, int components, int max_iters,
                 double tol, std::uint64_t seed) {
  Dataset ds = load_dataset(opts.data_path);
  MixtureParams p;
  if (kind == "gaussian") {
    p = fit_gaussian(ds);
  } else {
    p = fit_gmm(ds, components, max_iters, tol, opts.seed.value_or(seed));
  }
  save_baseline_checkpoint(p, ds.schema, kind, opts.out_path);
  if (!opts.metrics_path.empty()) {
    LoadedCheckpoint ck;
    ck.kind = kind;
    ck.baseline = p;
    ck.schema = ds.schema;
    emit_metrics(metrics_json("row_log_likelihood", per_graph_mean_pll(ds, ck, opts.workers)),
                 opts.metrics_path);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Graph-structured sum-product network toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd, bool needs_data, bool needs_out, bool needs_model) {
    cmd->add_option("--config", config_path, "JSON config file")->envname("GSPN_CONFIG");
    cmd->add_option("--data", opts.data_path, "dataset JSON file");
    if (needs_out) cmd->add_option("--out", opts.out_path, "output path");
    if (needs_model) cmd->add_option("--model", opts.model_path, "model checkpoint")->required();
    cmd->add_option("--metrics-out", opts.metrics_path, "metrics JSON path");
    cmd->add_option("--workers", opts.workers, "parallel workers for per-graph evaluation");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&opts](std::uint64_t s) { opts.seed = s; }, "random seed");
    (void)needs_data;
  };

  // mask
  double concentration = 1.5, rate = 0.5;
  std::uint64_t mask_seed = 0;
  auto* mask = app.add_subcommand("mask", "hide attributes with Gamma-distributed proportions");
  add_common(mask, true, true, false);
  mask->add_option("--concentration", concentration, "Gamma concentration")->required();
  mask->add_option("--rate", rate, "Gamma rate")->required();

  // train-unsup
  auto* tu = app.add_subcommand("train-unsup", "fit the hierarchy on unlabeled graphs");
  add_common(tu, true, true, false);

  // train-sup
  std::string sup_mode;
  auto* ts = app.add_subcommand("train-sup", "fit hierarchy plus graph-level readout");
  add_common(ts, true, true, false);
  ts->add_option("--mode", sup_mode, "joint or frozen");

  // eval-pll
  auto* ep = app.add_subcommand("eval-pll", "mean per-vertex pseudo log-likelihood");
  add_common(ep, true, false, true);

  // eval-missing-nll
  std::string truth_path;
  std::optional<double> nll_conc, nll_rate;
  std::optional<std::uint64_t> nll_seed;
  auto* en = app.add_subcommand("eval-missing-nll", "conditional NLL of held-out attributes");
  add_common(en, true, false, true);
  en->add_option("--truth", truth_path, "fully observed dataset with the held-out values");
  en->add_option_function<double>("--concentration",
                                  [&](double v) { nll_conc = v; }, "mask here: concentration");
  en->add_option_function<double>("--rate", [&](double v) { nll_rate = v; },
                                  "mask here: rate");
  en->add_option_function<std::uint64_t>("--mask-seed", [&](std::uint64_t v) { nll_seed = v; },
                                         "mask here: seed");

  // impute
  std::string impute_csv;
  auto* im = app.add_subcommand("impute", "fill missing attributes by conditional means");
  add_common(im, true, true, true);
  im->add_option("--csv-out", impute_csv, "CSV of imputed entries");

  // embed
  auto* em = app.add_subcommand("embed", "write per-vertex posteriors concatenated across layers");
  add_common(em, true, true, true);

  // query-perturb
  int q_graph = 0, q_vertex = 0, q_attr = 0;
  double q_value = 0.0;
  auto* qp = app.add_subcommand("query-perturb", "per-vertex likelihood change after an edit");
  add_common(qp, true, true, true);
  qp->add_option("--graph", q_graph, "graph index");
  qp->add_option("--vertex", q_vertex, "vertex to edit")->required();
  qp->add_option("--attr", q_attr, "attribute to edit")->required();
  qp->add_option("--value", q_value, "replacement value")->required();

  // classify
  auto* cl = app.add_subcommand("classify", "predict graph labels with the readout");
  add_common(cl, true, false, true);

  // baseline
  auto* bl = app.add_subcommand("baseline", "structure-agnostic density baselines");
  std::string bl_kind;
  int bl_components = 5, bl_iters = 200;
  double bl_tol = 1e-7;
  bl->add_option("kind", bl_kind, "gaussian or gmm")
      ->required()
      ->check(CLI::IsMember({"gaussian", "gmm"}));
  add_common(bl, true, true, false);
  bl->add_option("--components", bl_components, "mixture states (gmm)");
  bl->add_option("--max-iters", bl_iters, "EM iteration cap (gmm)");
  bl->add_option("--tol", bl_tol, "EM convergence tolerance (gmm)");

  std::vector<const char*> argv;
  argv.push_back("gspn");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const ConfigFile cf = load_config(config_path);
    if (opts.data_path.empty()) opts.data_path = cf.data;
    if (opts.out_path.empty()) opts.out_path = cf.out;
    GspnConfig mcfg = cf.model;
    ReadoutConfig rcfg = cf.readout;
    if (sup_mode.empty()) sup_mode = cf.mode;

    if (mask->parsed()) {
      if (opts.seed) mask_seed = *opts.seed;
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      return cmd_mask(opts, concentration, rate, mask_seed);
    }
    if (tu->parsed()) {
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      return cmd_train_unsup(opts, mcfg);
    }
    if (ts->parsed()) {
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      if (sup_mode != "joint" && sup_mode != "frozen") {
        throw ValidationError("--mode must be joint or frozen");
      }
      return cmd_train_sup(opts, mcfg, rcfg, sup_mode);
    }
    if (ep->parsed()) {
      resolve(opts.data_path, "", "--data");
      return cmd_eval_pll(opts);
    }
    if (en->parsed()) {
      resolve(opts.data_path, "", "--data");
      if (opts.seed && !nll_seed) nll_seed = opts.seed;
      return cmd_eval_missing_nll(opts, truth_path, nll_conc, nll_rate, nll_seed);
    }
    if (im->parsed()) {
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      return cmd_impute(opts, impute_csv);
    }
    if (em->parsed()) {
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      return cmd_embed(opts);
    }
    if (qp->parsed()) {
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      return cmd_query_perturb(opts, q_graph, q_vertex, q_attr, q_value);
    }
    if (cl->parsed()) {
      resolve(opts.data_path, "", "--data");
      return cmd_classify(opts);
    }
    if (bl->parsed()) {
      resolve(opts.data_path, "", "--data");
      resolve(opts.out_path, "", "--out");
      return cmd_baseline(opts, bl_kind, bl_components, bl_iters, bl_tol, 0);
    }
    throw ValidationError("no subcommand given");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace gspn::cli
