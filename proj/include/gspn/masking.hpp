#pragma once

#include "gspn/types.hpp"

namespace gspn {

// Hides attributes at random. For each vertex a masking proportion p is
// drawn from Gamma(concentration, rate), clamped to [0, 1], and
// floor(p * d) attributes chosen uniformly without replacement are marked
// missing. Values stay in place behind the mask so they can serve as
// held-out truth. The input must be fully observed; it is not modified.
Dataset apply_missing_mask(const Dataset& ds, double concentration, double rate,
                           std::uint64_t seed);

}  // namespace gspn
