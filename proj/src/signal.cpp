#include "ecgmon/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ecgmon/error.hpp"

namespace ecgmon {
namespace {

using Complex = std::complex<double>;

// Multiplies an accumulating real-coefficient polynomial (low-to-high powers
// of z^-1) by the factor (1 - p z^-1) where p may be complex; used on
// conjugate-closed products so the imaginary parts cancel.
void poly_mul_factor(std::vector<Complex>& poly, Complex p) {
    std::vector<Complex> out(poly.size() + 1, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < poly.size(); ++i) {
        out[i] += poly[i];
        out[i + 1] -= p * poly[i];
    }
    poly = std::move(out);
}

// Durand-Kerner root finder for a real-coefficient polynomial given
// low-to-high. Degree >= 1, leading coefficient nonzero. Deterministic.
std::vector<Complex> find_roots(const std::vector<double>& coeffs) {
    const std::size_t degree = coeffs.size() - 1;
    std::vector<Complex> monic(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) monic[i] = coeffs[i] / coeffs[degree];

    auto eval = [&](Complex x) {
        Complex acc{0.0, 0.0};
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + monic[i];
        return acc;
    };

    // Initial guesses on a spiral inside/around the Cauchy root bound.
    double bound = 0.0;
    for (std::size_t i = 0; i < degree; ++i) bound = std::max(bound, std::abs(monic[i]));
    bound = 1.0 + bound;
    std::vector<Complex> roots(degree);
    const Complex seed{0.4, 0.9};
    Complex point = seed;
    for (std::size_t i = 0; i < degree; ++i) {
        roots[i] = bound * point;
        point *= seed;
    }

    for (int iter = 0; iter < 1000; ++iter) {
        double max_step = 0.0;
        for (std::size_t i = 0; i < degree; ++i) {
            Complex denom{1.0, 0.0};
            for (std::size_t j = 0; j < degree; ++j) {
                if (j != i) denom *= roots[i] - roots[j];
            }
            const Complex step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(roots[i])));
        }
        if (max_step < 1e-14) break;
    }
    return roots;
}

struct QuadFactor {
    // b0 + b1 u + b2 u^2 where u = z^-1.
    double b0, b1, b2;
};

// Groups the (conjugate-symmetric) root set of a real polynomial into real
// quadratic factors. Degree must be even.
std::vector<QuadFactor> pair_roots(std::vector<Complex> roots) {
    std::vector<QuadFactor> quads;
    std::vector<double> reals;
    std::vector<Complex> uppers;
    for (const Complex& r : roots) {
        const double tol = 1e-8 * (1.0 + std::abs(r));
        if (std::abs(r.imag()) <= tol) {
            reals.push_back(r.real());
        } else if (r.imag() > 0.0) {
            uppers.push_back(r);
        }
        // lower-half roots are implied by their upper-half conjugates
    }
    std::sort(reals.begin(), reals.end());
    std::sort(uppers.begin(), uppers.end(), [](const Complex& a, const Complex& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    if ((reals.size() % 2) != 0) {
        raise("internal", "root pairing failed: odd real root count");
    }
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
        const double r1 = reals[i], r2 = reals[i + 1];
        quads.push_back({r1 * r2, -(r1 + r2), 1.0});
    }
    for (const Complex& r : uppers) {
        quads.push_back({std::norm(r), -2.0 * r.real(), 1.0});
    }
    return quads;
}

}  // namespace

void EcgRecord::validate() const {
    if (sample_rate_hz <= 0) {
        raise("invalid-input", "record '" + record_id + "': sample rate must be positive");
    }
    if (samples.empty()) {
        raise("invalid-input", "record '" + record_id + "': no samples");
    }
    for (const double v : samples) {
        if (!std::isfinite(v)) {
            raise("invalid-input", "record '" + record_id + "': non-finite sample");
        }
    }
}

double BiquadCascade::magnitude_at(double freq_hz) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    const Complex zinv = std::exp(Complex{0.0, -omega});
    double mag = 1.0;
    for (const BiquadSection& s : sections) {
        const Complex num = s.b0 + zinv * (s.b1 + zinv * s.b2);
        const Complex den = 1.0 + zinv * (s.a1 + zinv * s.a2);
        mag *= std::abs(num) / std::abs(den);
    }
    return mag;
}

BiquadCascade design_butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz) {
    if (order < 2 || order > 16 || (order % 2) != 0) {
        raise("invalid-parameter", "order must be even and within [2, 16]");
    }
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        raise("invalid-parameter", "sample rate must be positive and finite");
    }
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0)) {
        raise("invalid-parameter", "cutoff must lie strictly between 0 and the Nyquist frequency");
    }

    const int n = order;
    const double T = 1.0 / sample_rate_hz;
    const double wc = 2.0 * std::numbers::pi * cutoff_hz;

    // Analog Butterworth poles on the left-half-plane circle of radius wc.
    std::vector<Complex> s_poles(n);
    for (int k = 0; k < n; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n);
        s_poles[k] = wc * std::exp(Complex{0.0, theta});
    }

    // Partial-fraction residues of wc^n / prod(s - s_k).
    std::vector<Complex> residues(n);
    for (int k = 0; k < n; ++k) {
        Complex denom{1.0, 0.0};
        for (int j = 0; j < n; ++j) {
            if (j != k) denom *= s_poles[k] - s_poles[j];
        }
        residues[k] = std::pow(Complex{wc, 0.0}, n) / denom;
    }

    // Impulse-invariant map: H(z) = sum_k T r_k / (1 - exp(s_k T) z^-1).
    std::vector<Complex> z_poles(n);
    for (int k = 0; k < n; ++k) z_poles[k] = std::exp(s_poles[k] * T);

    // Numerator over the common denominator:
    //   N(u) = sum_k T r_k prod_{j != k} (1 - p_j u),  u = z^-1.
    std::vector<Complex> num(static_cast<std::size_t>(n), Complex{0.0, 0.0});
    double term_scale = 0.0;  // largest single contribution, sets the cancellation floor
    for (int k = 0; k < n; ++k) {
        std::vector<Complex> term{Complex{1.0, 0.0}};
        for (int j = 0; j < n; ++j) {
            if (j != k) poly_mul_factor(term, z_poles[j]);
        }
        for (std::size_t i = 0; i < term.size(); ++i) {
            const Complex contrib = T * residues[k] * term[i];
            term_scale = std::max(term_scale, std::abs(contrib));
            num[i] += contrib;
        }
    }
    std::vector<double> num_real(num.size());
    for (std::size_t i = 0; i < num.size(); ++i) num_real[i] = num[i].real();
    // For order >= 2 the impulse response starts at zero, so the z^0
    // coefficient vanishes analytically; the numerator is z^-1 * Q(z^-1).
    // The residual is pure cancellation noise, bounded by roundoff on the
    // largest summed term rather than by the (much smaller) summed result.
    if (std::abs(num_real[0]) > 1e-12 * term_scale) {
        raise("internal", "unexpected nonzero leading numerator coefficient");
    }

    // Numerator quadratic factors from the roots of Q (degree n - 2).
    std::vector<QuadFactor> num_quads;
    if (n > 2) {
        std::vector<double> q(num_real.begin() + 1, num_real.end());
        num_quads = pair_roots(find_roots(q));
        if (num_quads.size() != static_cast<std::size_t>(n / 2 - 1)) {
            raise("internal", "numerator factoring produced the wrong section count");
        }
    }

    // Denominator sections from conjugate pole pairs (k, n-1-k).
    struct SectionParts {
        double a1, a2;
        QuadFactor num{0.0, 1.0, 0.0};  // defaults to the pure-delay numerator
    };
    std::vector<SectionParts> parts;
    for (int k = 0; k < n / 2; ++k) {
        const Complex p = z_poles[k];
        parts.push_back({-2.0 * p.real(), std::norm(p)});
    }
    std::sort(parts.begin(), parts.end(), [](const SectionParts& x, const SectionParts& y) {
        return x.a2 != y.a2 ? x.a2 < y.a2 : x.a1 < y.a1;
    });
    std::sort(num_quads.begin(), num_quads.end(), [](const QuadFactor& x, const QuadFactor& y) {
        return x.b1 != y.b1 ? x.b1 < y.b1 : x.b0 < y.b0;
    });
    // Pure delay rides on the last (most resonant) section; the quadratic
    // numerator factors fill the others in sorted order.
    for (std::size_t i = 0; i < num_quads.size(); ++i) parts[i].num = num_quads[i];

    BiquadCascade cascade;
    cascade.sample_rate_hz = sample_rate_hz;
    cascade.cutoff_hz = cutoff_hz;
    cascade.order = order;
    for (const SectionParts& sp : parts) {
        BiquadSection section;
        section.a1 = sp.a1;
        section.a2 = sp.a2;
        const double num_dc = sp.num.b0 + sp.num.b1 + sp.num.b2;
        const double den_dc = 1.0 + sp.a1 + sp.a2;
        if (num_dc == 0.0) raise("internal", "section numerator has zero DC gain");
        const double scale = den_dc / num_dc;
        section.b0 = sp.num.b0 * scale;
        section.b1 = sp.num.b1 * scale;
        section.b2 = sp.num.b2 * scale;
        if (!(section.a2 < 1.0) || !(std::abs(section.a1) < 1.0 + section.a2)) {
            raise("internal", "designed section is not strictly stable");
        }
        cascade.sections.push_back(section);
    }
    return cascade;
}

namespace {

void run_cascade(const BiquadCascade& filter, std::vector<double>& x) {
    for (const BiquadSection& s : filter.sections) {
        double s1 = 0.0, s2 = 0.0;
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

void check_apply_args(const BiquadCascade& filter, const std::vector<double>& samples) {
    if (filter.sections.empty()) raise("invalid-parameter", "empty filter cascade");
    for (const double v : samples) {
        if (!std::isfinite(v)) raise("invalid-input", "non-finite sample");
    }
}

}  // namespace

std::vector<double> apply_filter(const BiquadCascade& filter, const std::vector<double>& samples) {
    check_apply_args(filter, samples);
    std::vector<double> out = samples;
    run_cascade(filter, out);
    return out;
}

std::vector<double> apply_zero_phase(const BiquadCascade& filter, const std::vector<double>& samples) {
    check_apply_args(filter, samples);
    std::vector<double> out = samples;
    run_cascade(filter, out);
    std::reverse(out.begin(), out.end());
    run_cascade(filter, out);
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace ecgmon
