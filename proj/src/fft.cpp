#include "ecgmon/fft.hpp"

#include <cmath>
#include <numbers>

#include "ecgmon/error.hpp"

namespace ecgmon {
namespace {

using Complex = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey. n must be a power of two.
// `invert` selects the inverse transform (without the 1/n scale).
void fft_pow2(std::vector<Complex>& a, bool invert) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (invert ? 1.0 : -1.0);
        const Complex wlen{std::cos(ang), std::sin(ang)};
        for (std::size_t i = 0; i < n; i += len) {
            Complex w{1.0, 0.0};
            for (std::size_t j = 0; j < len / 2; ++j) {
                const Complex u = a[i + j];
                const Complex v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein's algorithm: expresses an arbitrary-size DFT as a convolution,
// evaluated with power-of-two FFTs.
std::vector<Complex> fft_bluestein(const std::vector<Complex>& x) {
    const std::size_t n = x.size();
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    // Chirp factors exp(-i pi k^2 / n); k^2 taken mod 2n keeps the angle
    // argument small for long inputs.
    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = Complex{std::cos(ang), -std::sin(ang)};
    }

    std::vector<Complex> a(m, Complex{0.0, 0.0});
    std::vector<Complex> b(m, Complex{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);

    fft_pow2(a, false);
    fft_pow2(b, false);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_pow2(a, true);
    const double inv_m = 1.0 / static_cast<double>(m);

    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
    return out;
}

}  // namespace

std::vector<Complex> fft(const std::vector<Complex>& input) {
    if (input.empty()) raise("invalid-input", "empty FFT input");
    if (is_pow2(input.size())) {
        std::vector<Complex> a = input;
        fft_pow2(a, false);
        return a;
    }
    return fft_bluestein(input);
}

std::vector<Complex> fft_real(const std::vector<double>& input) {
    std::vector<Complex> x(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) x[i] = Complex{input[i], 0.0};
    return fft(x);
}

}  // namespace ecgmon
