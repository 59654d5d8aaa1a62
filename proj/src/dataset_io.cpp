#include "gspn/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gspn {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

AttributeSchema parse_schema(const json& j) {
  if (!j.is_array()) throw ValidationError("schema must be an array");
  AttributeSchema schema;
  for (const auto& entry : j) {
    const std::string kind = entry.at("kind").get<std::string>();
    if (kind == "categorical") {
      schema.attributes.push_back(AttributeKind::categorical(entry.at("arity").get<int>()));
    } else if (kind == "continuous") {
      schema.attributes.push_back(AttributeKind::continuous());
    } else {
      throw ValidationError("unknown attribute kind '" + kind + "'");
    }
  }
  schema.validate();
  return schema;
}

Graph parse_graph(const json& j, const AttributeSchema& schema, std::size_t index) {
  const std::string ctx = "graph " + std::to_string(index);
  Graph g;
  g.num_vertices = j.at("n").get<int>();
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
  }
  if (j.contains("undirected_edges")) {
    for (const auto& e : j.at("undirected_edges")) {
      const int u = e.at(0).get<int>();
      const int v = e.at(1).get<int>();
      g.edges.emplace_back(u, v);
      g.edges.emplace_back(v, u);
    }
  }
  const int d = schema.num_attributes();
  g.attributes = Eigen::MatrixXd::Zero(g.num_vertices, d);
  g.mask.setConstant(g.num_vertices, d, true);
  const auto& x = j.at("x");
  if (static_cast<int>(x.size()) != g.num_vertices) {
    throw ValidationError(ctx + ": x has " + std::to_string(x.size()) + " rows, expected " +
                          std::to_string(g.num_vertices));
  }
  for (int v = 0; v < g.num_vertices; ++v) {
    const auto& row = x.at(v);
    if (static_cast<int>(row.size()) != d) {
      throw ValidationError(ctx + ": vertex " + std::to_string(v) + " has " +
                            std::to_string(row.size()) + " attributes, expected " +
                            std::to_string(d));
    }
    for (int a = 0; a < d; ++a) {
      if (row.at(a).is_null()) {
        g.mask(v, a) = false;
      } else {
        g.attributes(v, a) = row.at(a).get<double>();
      }
    }
  }
  if (j.contains("y") && !j.at("y").is_null()) g.label = j.at("y").get<int>();
  g.validate(schema, ctx);
  return g;
}

}  // namespace

Dataset parse_dataset(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ":" + std::to_string(line_of_offset(text, e.byte)) +
                          ": " + e.what());
  }
  try {
    Dataset ds;
    ds.schema = parse_schema(j.at("schema"));
    if (j.contains("num_classes") && !j.at("num_classes").is_null()) {
      ds.num_classes = j.at("num_classes").get<int>();
    }
    for (std::size_t i = 0; i < j.at("graphs").size(); ++i) {
      ds.graphs.push_back(parse_graph(j.at("graphs").at(i), ds.schema, i));
    }
    ds.validate();

    std::size_t fully_masked = 0, vertices = 0;
    for (const auto& g : ds.graphs) {
      vertices += g.num_vertices;
      for (int v = 0; v < g.num_vertices; ++v) {
        if (!g.mask.row(v).any()) ++fully_masked;
      }
    }
    log_msg(LogLevel::Info, origin + ": " + std::to_string(ds.graphs.size()) + " graphs, " +
                                std::to_string(vertices) + " vertices, " +
                                std::to_string(fully_masked) + " with all attributes missing");
    return ds;
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path);
}

std::string serialize_dataset(const Dataset& ds) {
  json j;
  j["schema"] = json::array();
  for (const auto& attr : ds.schema.attributes) {
    if (attr.is_categorical()) {
      j["schema"].push_back({{"kind", "categorical"}, {"arity", attr.arity}});
    } else {
      j["schema"].push_back({{"kind", "continuous"}});
    }
  }
  if (ds.num_classes) j["num_classes"] = *ds.num_classes;
  j["graphs"] = json::array();
  for (const auto& g : ds.graphs) {
    json jg;
    jg["n"] = g.num_vertices;
    jg["edges"] = json::array();
    for (const auto& [u, v] : g.edges) jg["edges"].push_back({u, v});
    json x = json::array();
    for (int v = 0; v < g.num_vertices; ++v) {
      json row = json::array();
      for (int a = 0; a < ds.schema.num_attributes(); ++a) {
        if (!g.mask(v, a)) {
          row.push_back(nullptr);
        } else if (ds.schema.attributes[a].is_categorical()) {
          row.push_back(static_cast<long long>(std::llround(g.attributes(v, a))));
        } else {
          row.push_back(g.attributes(v, a));
        }
      }
      x.push_back(std::move(row));
    }
    jg["x"] = std::move(x);
    if (g.label) jg["y"] = *g.label;
    j["graphs"].push_back(std::move(jg));
  }
  return j.dump();
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write dataset file '" + path + "'");
  out << serialize_dataset(ds) << "\n";
}

}  // namespace gspn
