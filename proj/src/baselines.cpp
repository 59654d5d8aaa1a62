#include "gspn/baselines.hpp"

#include <cmath>
#include <limits>

#include "gspn/kmeans.hpp"

namespace gspn {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727417803297364056176;
constexpr double kBaselineSigmaFloor = 1e-4;

double gaussian_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
}

// log density of state i restricted to the entries selected by `take`
template <typename Vec>
double state_log_density(const EmissionParams& em, int i, const Vec& x,
                         const std::vector<std::uint8_t>& take) {
  double acc = 0.0;
  for (std::size_t a = 0; a < em.attrs.size(); ++a) {
    if (!take[a]) continue;
    const auto& e = em.attrs[a];
    if (e.kind.is_categorical()) {
      acc += std::log(e.cat_probs(i, static_cast<int>(x(a))));
    } else {
      acc += gaussian_logpdf(x(a), e.mu(i), e.sigma(i));
    }
  }
  return acc;
}

double log_sum_exp_vec(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v(i) - mx);
  return mx + std::log(s);
}

}  // namespace

MixtureParams fit_gaussian(const Dataset& ds) {
  ds.validate();
  const int d = ds.schema.num_attributes();
  MixtureParams p;
  p.weights = Eigen::VectorXd::Ones(1);
  p.emission.num_states = 1;
  p.emission.attrs.resize(d);
  for (int a = 0; a < d; ++a) {
    auto& e = p.emission.attrs[a];
    e.kind = ds.schema.attributes[a];
    if (e.kind.is_categorical()) {
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(e.kind.arity);
      for (const auto& g : ds.graphs) {
        for (int v = 0; v < g.num_vertices; ++v) {
          if (g.mask(v, a)) counts(static_cast<int>(g.attributes(v, a))) += 1.0;
        }
      }
      if (counts.sum() == 0) {
        throw ValidationError("fit_gaussian: attribute " + std::to_string(a) +
                              " has no observed values");
      }
      e.cat_probs = (counts / counts.sum()).transpose();
    } else {
      double sum = 0.0, sq = 0.0;
      long n = 0;
      for (const auto& g : ds.graphs) {
        for (int v = 0; v < g.num_vertices; ++v) {
          if (!g.mask(v, a)) continue;
          sum += g.attributes(v, a);
          sq += g.attributes(v, a) * g.attributes(v, a);
          ++n;
        }
      }
      if (n < 2) {
        throw ValidationError("fit_gaussian: attribute " + std::to_string(a) +
                              " needs at least two observed values");
      }
      const double mu = sum / n;
      double var = sq / n - mu * mu;
      if (var < kBaselineSigmaFloor * kBaselineSigmaFloor) {
        log_msg(LogLevel::Warn, "fit_gaussian: attribute " + std::to_string(a) +
                                    " is degenerate, flooring sigma");
        var = kBaselineSigmaFloor * kBaselineSigmaFloor;
      }
      e.mu = Eigen::VectorXd::Constant(1, mu);
      e.sigma = Eigen::VectorXd::Constant(1, std::sqrt(var));
    }
  }
  return p;
}

double mixture_row_log_lik(const MixtureParams& p, const Eigen::VectorXd& x,
                           const std::vector<std::uint8_t>& observed) {
  const int C = p.num_states();
  Eigen::VectorXd terms(C);
  for (int i = 0; i < C; ++i) {
    terms(i) = std::log(p.weights(i)) + state_log_density(p.emission, i, x, observed);
  }
  return log_sum_exp_vec(terms);
}

Eigen::VectorXd mixture_responsibilities(const MixtureParams& p, const Eigen::VectorXd& x,
                                         const std::vector<std::uint8_t>& observed) {
  const int C = p.num_states();
  Eigen::VectorXd terms(C);
  for (int i = 0; i < C; ++i) {
    terms(i) = std::log(p.weights(i)) + state_log_density(p.emission, i, x, observed);
  }
  const double lse = log_sum_exp_vec(terms);
  if (!std::isfinite(lse)) {
    throw ImpossibleEvidenceError("mixture: observed row has zero probability");
  }
  return (terms.array() - lse).exp();
}

MixtureParams fit_gmm(const Dataset& ds, int num_states, int max_iters, double tol,
                      std::uint64_t seed, EmTrace* trace) {
  ds.validate();
  if (num_states < 1) throw std::invalid_argument("fit_gmm: num_states must be >= 1");
  const int d = ds.schema.num_attributes();
  long rows = 0;
  for (const auto& g : ds.graphs) rows += g.num_vertices;
  if (rows == 0) throw std::invalid_argument("fit_gmm: no data");

  Eigen::MatrixXd X(rows, d);
  std::vector<std::vector<std::uint8_t>> obs(rows, std::vector<std::uint8_t>(d));
  long r = 0;
  for (const auto& g : ds.graphs) {
    for (int v = 0; v < g.num_vertices; ++v, ++r) {
      for (int a = 0; a < d; ++a) {
        obs[r][a] = g.mask(v, a) ? 1 : 0;
        X(r, a) = g.mask(v, a) ? g.attributes(v, a) : 0.0;
      }
    }
  }

  // init: k-means on mean-imputed continuous coordinates, frequencies for
  // categorical ones
  Rng rng(seed);
  MixtureParams p;
  p.weights = Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
  p.emission.num_states = num_states;
  p.emission.attrs.resize(d);
  std::vector<int> cont;
  for (int a = 0; a < d; ++a) {
    if (!ds.schema.attributes[a].is_categorical()) cont.push_back(a);
  }
  KMeansResult km;
  if (!cont.empty()) {
    Eigen::MatrixXd rows_c(rows, cont.size());
    for (std::size_t j = 0; j < cont.size(); ++j) {
      double mean = 0.0;
      long n = 0;
      for (long i = 0; i < rows; ++i) {
        if (obs[i][cont[j]]) { mean += X(i, cont[j]); ++n; }
      }
      mean = n > 0 ? mean / n : 0.0;
      for (long i = 0; i < rows; ++i) rows_c(i, j) = obs[i][cont[j]] ? X(i, cont[j]) : mean;
    }
    km = kmeans(rows_c, num_states, rng);
  }
  for (int a = 0; a < d; ++a) {
    auto& e = p.emission.attrs[a];
    e.kind = ds.schema.attributes[a];
    if (e.kind.is_categorical()) {
      Eigen::VectorXd counts = Eigen::VectorXd::Ones(e.kind.arity);
      for (long i = 0; i < rows; ++i) {
        if (obs[i][a]) counts(static_cast<int>(X(i, a))) += 1.0;
      }
      const Eigen::VectorXd base = counts / counts.sum();
      e.cat_probs.resize(num_states, e.kind.arity);
      for (int i = 0; i < num_states; ++i) {
        Eigen::VectorXd perturbed = base;
        for (int k = 0; k < e.kind.arity; ++k) perturbed(k) *= 1.0 + 0.1 * rng.uniform();
        e.cat_probs.row(i) = (perturbed / perturbed.sum()).transpose();
      }
    } else {
      const auto j = static_cast<std::size_t>(
          std::find(cont.begin(), cont.end(), a) - cont.begin());
      e.mu.resize(num_states);
      e.sigma.resize(num_states);
      for (int i = 0; i < num_states; ++i) {
        e.mu(i) = km.centroids(i, j);
        e.sigma(i) = std::clamp(km.stddev(i, j), 0.05, std::sqrt(10.0));
      }
    }
  }

  Eigen::MatrixXd resp(rows, num_states);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    // E-step
    double ll = 0.0;
    for (long i = 0; i < rows; ++i) {
      Eigen::VectorXd terms(num_states);
      for (int c = 0; c < num_states; ++c) {
        terms(c) = std::log(p.weights(c)) + state_log_density(p.emission, c, X.row(i), obs[i]);
      }
      const double lse = log_sum_exp_vec(terms);
      ll += lse;
      resp.row(i) = (terms.array() - lse).exp();
    }
    if (trace) {
      trace->log_likelihood.push_back(ll);
      trace->iterations = iter + 1;
    }
    // M-step
    const Eigen::VectorXd nk = resp.colwise().sum();
    p.weights = nk / static_cast<double>(rows);
    for (int a = 0; a < d; ++a) {
      auto& e = p.emission.attrs[a];
      if (e.kind.is_categorical()) {
        for (int c = 0; c < num_states; ++c) {
          Eigen::VectorXd counts = Eigen::VectorXd::Constant(e.kind.arity, 1e-9);
          for (long i = 0; i < rows; ++i) {
            if (obs[i][a]) counts(static_cast<int>(X(i, a))) += resp(i, c);
          }
          e.cat_probs.row(c) = (counts / counts.sum()).transpose();
        }
      } else {
        for (int c = 0; c < num_states; ++c) {
          double w = 0.0, s = 0.0;
          for (long i = 0; i < rows; ++i) {
            if (!obs[i][a]) continue;
            w += resp(i, c);
            s += resp(i, c) * X(i, a);
          }
          if (w < 1e-12) continue;  // state sees no data for this attribute
          const double mu = s / w;
          double sq = 0.0;
          for (long i = 0; i < rows; ++i) {
            if (!obs[i][a]) continue;
            sq += resp(i, c) * (X(i, a) - mu) * (X(i, a) - mu);
          }
          e.mu(c) = mu;
          e.sigma(c) = std::sqrt(std::max(sq / w, kBaselineSigmaFloor * kBaselineSigmaFloor));
        }
      }
    }
    if (std::isfinite(prev_ll) && std::abs(ll - prev_ll) < tol) break;
    prev_ll = ll;
  }
  return p;
}

MissingNll baseline_missing_nll(const MixtureParams& p, const Dataset& ds) {
  const int d = ds.schema.num_attributes();
  MissingNll out;
  long total_vertices = 0;
  for (const auto& g : ds.graphs) total_vertices += g.num_vertices;
  out.per_vertex = Eigen::VectorXd::Constant(total_vertices,
                                             std::numeric_limits<double>::quiet_NaN());
  double mass = 0.0;
  long row = 0;
  for (const auto& g : ds.graphs) {
    for (int v = 0; v < g.num_vertices; ++v, ++row) {
      std::vector<std::uint8_t> observed(d), missing(d);
      int n_missing = 0;
      for (int a = 0; a < d; ++a) {
        observed[a] = g.mask(v, a) ? 1 : 0;
        missing[a] = g.mask(v, a) ? 0 : 1;
        n_missing += missing[a];
      }
      if (n_missing == 0) continue;
      const Eigen::VectorXd xrow = g.attributes.row(v).transpose();
      const Eigen::VectorXd h = mixture_responsibilities(p, xrow, observed);
      Eigen::VectorXd terms(p.num_states());
      for (int i = 0; i < p.num_states(); ++i) {
        terms(i) = std::log(h(i)) + state_log_density(p.emission, i, xrow, missing);
      }
      const double nll = -log_sum_exp_vec(terms);
      out.per_vertex(row) = nll;
      mass += nll;
      out.vertices += 1;
      out.entries += n_missing;
    }
  }
  if (out.vertices == 0) {
    throw std::invalid_argument("baseline_missing_nll: no masked entries");
  }
  out.per_vertex_mean = mass / out.vertices;
  out.per_attribute_mean = mass / out.entries;
  return out;
}

}  // namespace gspn
