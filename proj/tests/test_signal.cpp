#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "ecgmon/error.hpp"
#include "ecgmon/fft.hpp"
#include "ecgmon/signal.hpp"

using namespace ecgmon;

namespace {

// Analytic squared-magnitude of an order-n analog Butterworth lowpass.
double analog_gain(double f, double cutoff, int order) {
    return 1.0 / std::sqrt(1.0 + std::pow(f / cutoff, 2.0 * order));
}

// Steady-state gain of the cascade for a pure sinusoid, via the RMS ratio
// over the second half of a 20 s tone (transients long gone).
double sinusoid_gain(const BiquadCascade& filter, double freq) {
    const int fs = static_cast<int>(filter.sample_rate_hz);
    const int n = fs * 20;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * freq * i / fs);
    const std::vector<double> y = apply_filter(filter, x);
    double sx = 0.0, sy = 0.0;
    for (int i = n / 2; i < n; ++i) {
        sx += x[i] * x[i];
        sy += y[i] * y[i];
    }
    return std::sqrt(sy / sx);
}

}  // namespace

TEST_CASE("design rejects invalid parameters") {
    CHECK_THROWS_AS(design_butterworth_lowpass(3, 40.0, 360), Error);   // odd order
    CHECK_THROWS_AS(design_butterworth_lowpass(0, 40.0, 360), Error);
    CHECK_THROWS_AS(design_butterworth_lowpass(-2, 40.0, 360), Error);
    CHECK_THROWS_AS(design_butterworth_lowpass(18, 40.0, 360), Error);  // > 16
    CHECK_THROWS_AS(design_butterworth_lowpass(4, 0.0, 360), Error);
    CHECK_THROWS_AS(design_butterworth_lowpass(4, -5.0, 360), Error);
    CHECK_THROWS_AS(design_butterworth_lowpass(4, 180.0, 360), Error);  // >= Nyquist
    CHECK_THROWS_AS(design_butterworth_lowpass(4, 40.0, 0), Error);
    try {
        design_butterworth_lowpass(3, 40.0, 360);
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "invalid-parameter");
    }
}

TEST_CASE("order-2 coefficients match the independent reference design") {
    // Reference values computed from the analog pole/residue form of an
    // order-2 Butterworth at 40 Hz, fs 360, discretized by impulse
    // invariance and DC-normalized (external numerical derivation).
    const BiquadCascade f = design_butterworth_lowpass(2, 40.0, 360);
    REQUIRE(f.sections.size() == 1);
    const BiquadSection& s = f.sections[0];
    CHECK(s.b0 == 0.0);  // pure-delay numerator: exactly zero by construction
    CHECK(s.b1 == doctest::Approx(0.2975468075233404).epsilon(1e-12));
    CHECK(s.b2 == 0.0);
    CHECK(s.a1 == doctest::Approx(-1.0750317690486015).epsilon(1e-12));
    CHECK(s.a2 == doctest::Approx(0.37257857657194193).epsilon(1e-12));
}

TEST_CASE("order-4 coefficients match the independent reference design") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    REQUIRE(f.sections.size() == 2);
    // Sections sorted by ascending a2; the wider pair carries the quadratic
    // numerator factor, the narrower one the pure delay.
    const BiquadSection& s0 = f.sections[0];
    CHECK(s0.b0 == doctest::Approx(0.06768257289883349).epsilon(1e-12));
    CHECK(s0.b1 == doctest::Approx(0.16823987930212653).epsilon(1e-12));
    CHECK(s0.b2 == doctest::Approx(0.02724469807784152).epsilon(1e-12));
    CHECK(s0.a1 == doctest::Approx(-1.012109364358293).epsilon(1e-12));
    CHECK(s0.a2 == doctest::Approx(0.27527651463709452).epsilon(1e-12));
    const BiquadSection& s1 = f.sections[1];
    CHECK(s1.b0 == 0.0);  // pure-delay numerator: exactly zero by construction
    CHECK(s1.b1 == doctest::Approx(0.36255570448098795).epsilon(1e-12));
    CHECK(s1.b2 == 0.0);
    CHECK(s1.a1 == doctest::Approx(-1.2235079493564729).epsilon(1e-12));
    CHECK(s1.a2 == doctest::Approx(0.58606365383746084).epsilon(1e-12));
}

TEST_CASE("unity DC gain and stable sections across the supported range") {
    for (int order = 2; order <= 16; order += 2) {
        for (double cutoff : {10.0, 40.0, 80.0}) {
            const BiquadCascade f = design_butterworth_lowpass(order, cutoff, 360);
            CHECK(f.sections.size() == static_cast<std::size_t>(order / 2));
            CHECK(f.magnitude_at(0.0) == doctest::Approx(1.0).epsilon(1e-9));
            for (const BiquadSection& s : f.sections) {
                // Real-coefficient stability triangle.
                CHECK(s.a2 < 1.0);
                CHECK(std::abs(s.a1) < 1.0 + s.a2);
            }
        }
    }
}

TEST_CASE("magnitude approximates the analog prototype inside the band") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    for (double freq : {20.0, 80.0, 120.0}) {
        const double analog = analog_gain(freq, 40.0, 4);
        const double digital = f.magnitude_at(freq);
        CHECK(std::abs(digital - analog) / analog < 0.05);
    }
    // -3 dB point lands on the cutoff.
    CHECK(f.magnitude_at(40.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("measured sinusoid gain equals the closed-form magnitude") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    for (double freq : {20.0, 40.0, 80.0}) {
        CHECK(sinusoid_gain(f, freq) ==
              doctest::Approx(f.magnitude_at(freq)).epsilon(1e-6));
    }
}

TEST_CASE("magnitude is monotone non-increasing up to Nyquist") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    double prev = f.magnitude_at(0.0);
    for (int k = 1; k <= 64; ++k) {
        const double freq = k * 179.0 / 64.0;
        const double mag = f.magnitude_at(freq);
        CHECK(mag <= prev + 1e-12);
        prev = mag;
    }
}

TEST_CASE("impulse-response spectrum agrees with magnitude_at") {
    // Two independent paths through the code: the time-domain difference
    // equations versus the closed-form response product.
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    const std::size_t n = 4096;
    std::vector<double> impulse(n, 0.0);
    impulse[0] = 1.0;
    const std::vector<double> h = apply_filter(f, impulse);
    const std::vector<std::complex<double>> spectrum = fft_real(h);
    for (std::size_t k : {100UL, 400UL, 800UL, 1400UL}) {
        const double freq = static_cast<double>(k) * 360.0 / static_cast<double>(n);
        CHECK(std::abs(spectrum[k]) == doctest::Approx(f.magnitude_at(freq)).epsilon(1e-9));
    }
}

TEST_CASE("apply_filter is linear and shift-invariant") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    std::vector<double> x(512);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(0.07 * static_cast<double>(i)) + 0.3 * std::cos(0.31 * static_cast<double>(i));

    SUBCASE("scaling") {
        const std::vector<double> y = apply_filter(f, x);
        std::vector<double> x3(x);
        for (double& v : x3) v *= 3.0;
        const std::vector<double> y3 = apply_filter(f, x3);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(y3[i] == doctest::Approx(3.0 * y[i]).epsilon(1e-12));
    }
    SUBCASE("delay") {
        const std::vector<double> y = apply_filter(f, x);
        std::vector<double> xd(x.size() + 16, 0.0);
        std::copy(x.begin(), x.end(), xd.begin() + 16);
        const std::vector<double> yd = apply_filter(f, xd);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(yd[i + 16] == doctest::Approx(y[i]).epsilon(1e-12));
    }
}

TEST_CASE("apply_filter argument validation") {
    const BiquadCascade f = design_butterworth_lowpass(2, 40.0, 360);
    CHECK(apply_filter(f, {}).empty());
    CHECK_THROWS_AS(apply_filter(BiquadCascade{}, std::vector<double>{1.0}), Error);
    std::vector<double> bad{1.0, std::nan(""), 2.0};
    CHECK_THROWS_AS(apply_filter(f, bad), Error);
    try {
        apply_filter(f, bad);
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "invalid-input");
    }
}

TEST_CASE("zero-phase filtering keeps a symmetric pulse centered") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    const std::size_t n = 720;
    const double center = 360.0;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (static_cast<double>(i) - center) / 12.0;
        x[i] = std::exp(-0.5 * d * d);
    }
    const std::vector<double> causal = apply_filter(f, x);
    const std::vector<double> zero = apply_zero_phase(f, x);

    auto argmax = [](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    };
    CHECK(argmax(zero) == 360);      // no group delay
    CHECK(argmax(causal) > 360);     // the causal pass does delay
    // Symmetry about the center is preserved.
    for (std::size_t off = 1; off < 200; ++off)
        CHECK(zero[360 - off] == doctest::Approx(zero[360 + off]).epsilon(1e-6));
}

TEST_CASE("zero-phase gain is the squared single-pass gain") {
    const BiquadCascade f = design_butterworth_lowpass(4, 40.0, 360);
    const int fs = 360, n = fs * 20;
    for (double freq : {20.0, 60.0}) {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * freq * i / fs);
        const std::vector<double> y = apply_zero_phase(f, x);
        double sx = 0.0, sy = 0.0;
        for (int i = n / 4; i < 3 * n / 4; ++i) {
            sx += x[i] * x[i];
            sy += y[i] * y[i];
        }
        const double expected = f.magnitude_at(freq) * f.magnitude_at(freq);
        CHECK(std::sqrt(sy / sx) == doctest::Approx(expected).epsilon(1e-3));
    }
}

TEST_CASE("EcgRecord validation") {
    EcgRecord rec;
    rec.record_id = "r1";
    rec.sample_rate_hz = 360;
    rec.samples = {0.0, 0.1, 0.2};
    CHECK_NOTHROW(rec.validate());
    CHECK(rec.duration_s() == doctest::Approx(3.0 / 360.0));

    EcgRecord bad_rate = rec;
    bad_rate.sample_rate_hz = 0;
    CHECK_THROWS_AS(bad_rate.validate(), Error);

    EcgRecord bad_sample = rec;
    bad_sample.samples[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(bad_sample.validate(), Error);

    EcgRecord empty = rec;
    empty.samples.clear();
    CHECK_THROWS_AS(empty.validate(), Error);
}
