#include "gspn/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gspn/rng.hpp"

namespace gspn {

Dataset apply_missing_mask(const Dataset& ds, double concentration, double rate,
                           std::uint64_t seed) {
  if (concentration <= 0.0 || rate <= 0.0) {
    throw std::invalid_argument("apply_missing_mask: concentration and rate must be positive");
  }
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    if (!ds.graphs[i].mask.all()) {
      throw std::invalid_argument("apply_missing_mask: graph " + std::to_string(i) +
                                  " already has masked entries");
    }
  }
  Rng rng(seed);
  Dataset out = ds;
  const int d = ds.schema.num_attributes();
  std::vector<int> attrs(d);
  for (auto& g : out.graphs) {
    for (int v = 0; v < g.num_vertices; ++v) {
      const double p = std::clamp(rng.gamma(concentration, rate), 0.0, 1.0);
      const int hide = static_cast<int>(std::floor(p * d));
      std::iota(attrs.begin(), attrs.end(), 0);
      // partial Fisher-Yates: the first `hide` entries are a uniform draw
      for (int k = 0; k < hide; ++k) {
        const int j = k + static_cast<int>(rng.uniform_below(d - k));
        std::swap(attrs[k], attrs[j]);
        g.mask(v, attrs[k]) = false;
      }
    }
  }
  return out;
}

}  // namespace gspn
