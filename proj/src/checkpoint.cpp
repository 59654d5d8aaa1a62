#include "gspn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gspn {

using nlohmann::json;

namespace {

json schema_to_json(const AttributeSchema& schema) {
  json out = json::array();
  for (const auto& a : schema.attributes) {
    if (a.is_categorical()) {
      out.push_back({{"kind", "categorical"}, {"arity", a.arity}});
    } else {
      out.push_back({{"kind", "continuous"}});
    }
  }
  return out;
}

AttributeSchema schema_from_json(const json& j) {
  AttributeSchema schema;
  for (const auto& e : j) {
    if (e.at("kind") == "categorical") {
      schema.attributes.push_back(AttributeKind::categorical(e.at("arity").get<int>()));
    } else {
      schema.attributes.push_back(AttributeKind::continuous());
    }
  }
  schema.validate();
  return schema;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw ValidationError("checkpoint: refusing to serialize non-finite parameter");
      }
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

const char* constraint_name(Constraint c) {
  switch (c) {
    case Constraint::None: return "none";
    case Constraint::SoftmaxRows: return "softmax-rows";
    case Constraint::SoftmaxVector: return "softmax-vector";
    case Constraint::SoftplusPositive: return "softplus-positive";
  }
  return "none";
}

Constraint constraint_from_name(const std::string& s) {
  if (s == "none") return Constraint::None;
  if (s == "softmax-rows") return Constraint::SoftmaxRows;
  if (s == "softmax-vector") return Constraint::SoftmaxVector;
  if (s == "softplus-positive") return Constraint::SoftplusPositive;
  throw ValidationError("checkpoint: unknown constraint '" + s + "'");
}

json config_to_json(const GspnConfig& cfg) {
  return {{"num_layers", cfg.num_layers},       {"num_states", cfg.num_states},
          {"shortcut", cfg.shortcut},           {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},       {"epochs", cfg.epochs},
          {"patience", cfg.patience},           {"seed", cfg.seed}};
}

GspnConfig config_from_json(const json& j) {
  GspnConfig cfg;
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.num_states = j.at("num_states").get<int>();
  cfg.shortcut = j.at("shortcut").get<bool>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

json emission_to_json(const EmissionParams& em) {
  json attrs = json::array();
  for (const auto& e : em.attrs) {
    json a;
    if (e.kind.is_categorical()) {
      a["kind"] = "categorical";
      a["probs"] = matrix_to_json(e.cat_probs);
    } else {
      a["kind"] = "continuous";
      a["mu"] = matrix_to_json(e.mu.transpose());
      a["sigma"] = matrix_to_json(e.sigma.transpose());
    }
    attrs.push_back(std::move(a));
  }
  return {{"num_states", em.num_states}, {"attrs", std::move(attrs)}};
}

EmissionParams emission_from_json(const json& j, const AttributeSchema& schema) {
  EmissionParams em;
  em.num_states = j.at("num_states").get<int>();
  const auto& attrs = j.at("attrs");
  em.attrs.resize(attrs.size());
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    em.attrs[a].kind = schema.attributes[a];
    if (schema.attributes[a].is_categorical()) {
      em.attrs[a].cat_probs = matrix_from_json(attrs.at(a).at("probs"));
    } else {
      em.attrs[a].mu = matrix_from_json(attrs.at(a).at("mu")).row(0).transpose();
      em.attrs[a].sigma = matrix_from_json(attrs.at(a).at("sigma")).row(0).transpose();
    }
  }
  em.validate(schema);
  return em;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (!j.contains("format") || j.at("format") != "gspn-checkpoint") {
    throw ValidationError(path + ": not a gspn checkpoint");
  }
  if (j.at("version").get<int>() != 1) {
    throw ValidationError(path + ": unsupported checkpoint version");
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint '" + path + "'");
  out << j.dump(2) << "\n";
}

void check_param(const GspnModel& model, const std::string& name, Eigen::Index rows,
                 Eigen::Index cols) {
  if (!model.params.has(name)) {
    throw ValidationError("checkpoint: missing parameter '" + name + "'");
  }
  const auto& raw = model.params.raw(name);
  if (raw.rows() != rows || raw.cols() != cols) {
    throw ValidationError("checkpoint: parameter '" + name + "' has shape " +
                          std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()) +
                          ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void validate_model_params(const GspnModel& model) {
  const int C = model.C();
  check_param(model, "pi0", 1, C);
  for (int l = 1; l <= model.L(); ++l) check_param(model, "theta." + std::to_string(l), C, C);
  for (int h = 0; h < model.emission_heights(); ++h) {
    for (int a = 0; a < model.schema.num_attributes(); ++a) {
      const std::string base = "em." + std::to_string(h) + ".";
      if (model.schema.attributes[a].is_categorical()) {
        check_param(model, base + "cat." + std::to_string(a), C,
                    model.schema.attributes[a].arity);
      } else {
        check_param(model, base + "mu." + std::to_string(a), 1, C);
        check_param(model, base + "sigma." + std::to_string(a), 1, C);
      }
    }
  }
  if (model.readout) {
    if (!model.num_classes) {
      throw ValidationError("checkpoint: readout head without num_classes");
    }
    for (int l = 1; l <= model.L(); ++l) {
      check_param(model, "readout.theta." + std::to_string(l), C, model.readout->num_states);
    }
    check_param(model, "readout.target", model.readout->num_states, *model.num_classes);
  }
}

}  // namespace

void save_checkpoint(const GspnModel& model, const std::string& path) {
  json j;
  j["format"] = "gspn-checkpoint";
  j["version"] = 1;
  j["kind"] = "gspn";
  j["schema"] = schema_to_json(model.schema);
  if (model.num_classes) j["num_classes"] = *model.num_classes;
  j["config"] = config_to_json(model.config);
  if (model.readout) {
    j["readout"] = {{"num_states", model.readout->num_states},
                    {"pooling", model.readout->pooling == Pooling::Mean ? "mean" : "sum"},
                    {"learning_rate", model.readout->learning_rate},
                    {"epochs", model.readout->epochs},
                    {"patience", model.readout->patience}};
  }
  json params;
  for (const auto& [name, entry] : model.params.entries()) {
    params[name] = {{"constraint", constraint_name(entry.second)},
                    {"raw", matrix_to_json(entry.first)},
                    {"value", matrix_to_json(model.params.value(name))}};
  }
  j["params"] = std::move(params);
  write_json_file(j, path);
}

void save_baseline_checkpoint(const MixtureParams& params, const AttributeSchema& schema,
                              const std::string& kind, const std::string& path) {
  if (kind != "gaussian" && kind != "gmm") {
    throw std::invalid_argument("save_baseline_checkpoint: kind must be gaussian or gmm");
  }
  json j;
  j["format"] = "gspn-checkpoint";
  j["version"] = 1;
  j["kind"] = kind;
  j["schema"] = schema_to_json(schema);
  j["weights"] = matrix_to_json(params.weights.transpose());
  j["emission"] = emission_to_json(params.emission);
  write_json_file(j, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const json j = load_json_file(path);
  LoadedCheckpoint out;
  out.kind = j.at("kind").get<std::string>();
  out.schema = schema_from_json(j.at("schema"));
  if (out.kind == "gspn") {
    GspnModel model;
    model.schema = out.schema;
    model.config = config_from_json(j.at("config"));
    model.config.validate();
    if (j.contains("num_classes")) model.num_classes = j.at("num_classes").get<int>();
    if (j.contains("readout")) {
      ReadoutConfig r;
      r.num_states = j.at("readout").at("num_states").get<int>();
      r.pooling = j.at("readout").at("pooling") == "mean" ? Pooling::Mean : Pooling::Sum;
      r.learning_rate = j.at("readout").at("learning_rate").get<double>();
      r.epochs = j.at("readout").at("epochs").get<int>();
      r.patience = j.at("readout").at("patience").get<int>();
      model.readout = r;
    }
    for (const auto& [name, entry] : j.at("params").items()) {
      model.params.add(name, matrix_from_json(entry.at("raw")),
                       constraint_from_name(entry.at("constraint").get<std::string>()));
    }
    validate_model_params(model);
    out.model = std::move(model);
  } else if (out.kind == "gaussian" || out.kind == "gmm") {
    MixtureParams p;
    p.weights = matrix_from_json(j.at("weights")).row(0).transpose();
    p.emission = emission_from_json(j.at("emission"), out.schema);
    out.baseline = std::move(p);
  } else {
    throw ValidationError(path + ": unknown checkpoint kind '" + out.kind + "'");
  }
  return out;
}

GspnModel load_gspn_checkpoint(const std::string& path) {
  LoadedCheckpoint ck = load_checkpoint(path);
  if (!ck.model) {
    throw ValidationError(path + ": expected a gspn checkpoint, found kind '" + ck.kind + "'");
  }
  return std::move(*ck.model);
}

}  // namespace gspn
