#pragma once

#include "dnlslab/common.hpp"

namespace dnls::fft {

// In-place complex DFT on a row-major n0 (x n1) array, x-fastest.
// forward: sum over x of u(x) e^{-i k x} (unnormalized);
// inverse: normalized by 1/(n0*n1) so inverse(forward(u)) == u.
void forward(std::vector<cd>& data, int dim, int n_per_axis);
void inverse(std::vector<cd>& data, int dim, int n_per_axis);

// 1-d transforms of arbitrary pow2 length (used for time-axis filtering).
void forward_1d(std::vector<cd>& data);
void inverse_1d(std::vector<cd>& data);

} // namespace dnls::fft
