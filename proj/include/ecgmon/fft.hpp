#pragma once

#include <complex>
#include <vector>

namespace ecgmon {

// Forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N), any N >= 1.
// Power-of-two sizes use an iterative radix-2 transform; other sizes go
// through Bluestein's chirp-z algorithm. O(N log N) for every N.
std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& input);

// Forward DFT of a real signal (convenience wrapper over fft()).
std::vector<std::complex<double>> fft_real(const std::vector<double>& input);

}  // namespace ecgmon
