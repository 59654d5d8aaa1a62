#include "gspn/queries.hpp"

#include <cmath>
#include <limits>

namespace gspn {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727417803297364056176;

double masked_block_nll(const EmissionParams& em, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& x, const std::vector<std::uint8_t>& missing) {
  const int C = em.num_states;
  Eigen::VectorXd terms(C);
  for (int i = 0; i < C; ++i) {
    double acc = std::log(h(i));
    for (std::size_t a = 0; a < em.attrs.size(); ++a) {
      if (!missing[a]) continue;
      const auto& e = em.attrs[a];
      if (e.kind.is_categorical()) {
        acc += std::log(e.cat_probs(i, static_cast<int>(x(a))));
      } else {
        const double z = (x(a) - e.mu(i)) / e.sigma(i);
        acc += -kHalfLog2Pi - std::log(e.sigma(i)) - 0.5 * z * z;
      }
    }
    terms(i) = acc;
  }
  const double mx = terms.maxCoeff();
  if (!std::isfinite(mx)) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (int i = 0; i < C; ++i) s += std::exp(terms(i) - mx);
  return -(mx + std::log(s));
}

MissingNll accumulate_missing_nll(const std::vector<const Graph*>& graphs,
                                  const GspnModel& model) {
  const int d = model.schema.num_attributes();
  const EmissionParams top = model.emission(model.L());
  MissingNll out;
  long total_vertices = 0;
  for (const Graph* g : graphs) total_vertices += g->num_vertices;
  out.per_vertex =
      Eigen::VectorXd::Constant(total_vertices, std::numeric_limits<double>::quiet_NaN());
  double mass = 0.0;
  long row = 0;
  for (const Graph* g : graphs) {
    LayerPosteriors lp = forward_pass(*g, model);
    for (int v = 0; v < g->num_vertices; ++v, ++row) {
      std::vector<std::uint8_t> missing(d);
      int n_missing = 0;
      for (int a = 0; a < d; ++a) {
        missing[a] = g->mask(v, a) ? 0 : 1;
        n_missing += missing[a];
      }
      if (n_missing == 0) continue;
      const Eigen::VectorXd h = lp.h[model.L()].row(v).transpose();
      const Eigen::VectorXd x = g->attributes.row(v).transpose();
      const double nll = masked_block_nll(top, h, x, missing);
      out.per_vertex(row) = nll;
      mass += nll;
      out.vertices += 1;
      out.entries += n_missing;
    }
  }
  if (out.vertices == 0) throw std::invalid_argument("missing_nll: no masked entries");
  out.per_vertex_mean = mass / out.vertices;
  out.per_attribute_mean = mass / out.entries;
  return out;
}

}  // namespace

MissingNll missing_nll(const Graph& g, const GspnModel& model) {
  return accumulate_missing_nll({&g}, model);
}

MissingNll missing_nll(const Dataset& ds, const GspnModel& model) {
  std::vector<const Graph*> graphs;
  graphs.reserve(ds.graphs.size());
  for (const auto& g : ds.graphs) graphs.push_back(&g);
  return accumulate_missing_nll(graphs, model);
}

Graph impute(const Graph& g, const GspnModel& model) {
  Graph out = g;
  bool any_missing = false;
  for (int v = 0; v < g.num_vertices && !any_missing; ++v) {
    if (!g.mask.row(v).all()) any_missing = true;
  }
  if (!any_missing) return out;

  const EmissionParams top = model.emission(model.L());
  LayerPosteriors lp = forward_pass(g, model);
  for (int v = 0; v < g.num_vertices; ++v) {
    for (int a = 0; a < model.schema.num_attributes(); ++a) {
      if (g.mask(v, a)) continue;
      const Eigen::VectorXd h = lp.h[model.L()].row(v).transpose();
      const auto& e = top.attrs[a];
      if (e.kind.is_categorical()) {
        const Eigen::VectorXd mixed = e.cat_probs.transpose() * h;
        Eigen::Index best;
        mixed.maxCoeff(&best);
        out.attributes(v, a) = static_cast<double>(best);
      } else {
        out.attributes(v, a) = e.mu.dot(h);
      }
      out.mask(v, a) = true;
    }
  }
  return out;
}

Dataset impute(const Dataset& ds, const GspnModel& model) {
  Dataset out = ds;
  for (auto& g : out.graphs) g = impute(g, model);
  return out;
}

PerturbationResult perturbation_query(const Graph& g, const GspnModel& model, int vertex,
                                      int attribute, double new_value) {
  if (vertex < 0 || vertex >= g.num_vertices) {
    throw std::out_of_range("perturbation_query: vertex out of range");
  }
  if (attribute < 0 || attribute >= model.schema.num_attributes()) {
    throw std::out_of_range("perturbation_query: attribute out of range");
  }
  const auto& kind = model.schema.attributes[attribute];
  if (kind.is_categorical()) {
    if (new_value != std::floor(new_value) || new_value < 0 || new_value >= kind.arity) {
      throw ValidationError("perturbation_query: value " + std::to_string(new_value) +
                            " outside [0, " + std::to_string(kind.arity) + ")");
    }
  } else if (!std::isfinite(new_value)) {
    throw ValidationError("perturbation_query: value must be finite");
  }

  Graph edited = g;
  edited.attributes(vertex, attribute) = new_value;
  edited.mask(vertex, attribute) = true;

  const Eigen::VectorXd before = pseudo_log_likelihood(g, model).per_vertex;
  const Eigen::VectorXd after = pseudo_log_likelihood(edited, model).per_vertex;

  PerturbationResult res;
  res.vertex = vertex;
  res.attribute = attribute;
  res.delta_pll = after - before;
  res.hop_distance = directed_distances(g, vertex);
  return res;
}

}  // namespace gspn
