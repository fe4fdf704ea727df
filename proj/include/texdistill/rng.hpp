#pragma once

#include <cstdint>
#include <random>

#include "texdistill/image.hpp"

namespace texdistill {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream). Used so that iteration i of a run
// draws from the same generator whether or not the run was resumed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
double standard_normal(Rng& rng);

// H x W x C image of i.i.d. N(0, 1) samples.
Image gaussian_image(Rng& rng, int h, int w, int c);

}  // namespace texdistill
