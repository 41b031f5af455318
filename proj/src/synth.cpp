#include "ecgmon/synth.hpp"

#include <cmath>
#include <numbers>

#include "ecgmon/error.hpp"
#include "ecgmon/rng.hpp"

namespace ecgmon {
namespace {

// Adds a Gaussian bump of the given amplitude/width centered at `center`
// (sample units), truncated at 4 sigma.
void add_bump(std::vector<double>& x, double center, double amp, double sigma_samples) {
    const double reach = 4.0 * sigma_samples;
    const std::size_t lo = static_cast<std::size_t>(std::max(0.0, std::ceil(center - reach)));
    const std::size_t hi = static_cast<std::size_t>(
        std::min(static_cast<double>(x.size()) - 1.0, std::floor(center + reach)));
    for (std::size_t i = lo; i <= hi && i < x.size(); ++i) {
        const double d = (static_cast<double>(i) - center) / sigma_samples;
        x[i] += amp * std::exp(-0.5 * d * d);
    }
}

}  // namespace

SynthEcg synth_ecg(const SynthEcgOptions& opt) {
    if (opt.sample_rate_hz <= 0 || opt.seconds <= 0.0 || opt.mean_bpm <= 0.0) {
        raise("invalid-parameter", "synthetic ECG needs positive rate, duration, and bpm");
    }
    const double fs = static_cast<double>(opt.sample_rate_hz);
    const std::size_t n = static_cast<std::size_t>(std::llround(opt.seconds * fs));
    Rng rng(derive_seed(opt.seed, "synth-ecg"));

    SynthEcg out;
    out.record.sample_rate_hz = opt.sample_rate_hz;
    out.record.samples.assign(n, 0.0);
    auto& x = out.record.samples;

    const double qrs_sigma = opt.qrs_sigma_ms * 1e-3 * fs;
    const double margin_s = 0.5;  // keep beats clear of the record edges
    double t = margin_s;
    while (true) {
        // Rate at the current time: base +/- sinusoidal sweep over the record.
        const double phase = 2.0 * std::numbers::pi * t / std::max(opt.seconds, 1e-9);
        const double bpm = opt.mean_bpm + opt.bpm_sweep * std::sin(phase);
        double rr = 60.0 / bpm;
        if (opt.rr_jitter_frac > 0.0) {
            rr *= 1.0 + opt.rr_jitter_frac * (2.0 * rng.next_double() - 1.0);
        }
        const double next_t = t + rr;
        if (next_t > opt.seconds - margin_s) break;

        // Beat centers land on exact samples so identical beats are
        // sample-identical.
        const std::size_t center = static_cast<std::size_t>(std::llround(t * fs));
        if (center < n) {
            add_bump(x, static_cast<double>(center), opt.qrs_amp_mv, qrs_sigma);
            add_bump(x, static_cast<double>(center) - 0.180 * fs, 0.12 * opt.qrs_amp_mv, 0.025 * fs);
            add_bump(x, static_cast<double>(center) + 0.250 * fs, 0.25 * opt.qrs_amp_mv, 0.060 * fs);
            out.r_peaks.push_back(center);
        }
        t = next_t;
    }

    if (opt.baseline_wander_mv > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double tt = static_cast<double>(i) / fs;
            x[i] += opt.baseline_wander_mv * std::sin(2.0 * std::numbers::pi * 0.25 * tt);
        }
    }

    if (opt.noise_snr_db > 0.0) {
        double power = 0.0;
        for (const double v : x) power += v * v;
        power /= static_cast<double>(n);
        const double noise_sigma = std::sqrt(power / std::pow(10.0, opt.noise_snr_db / 10.0));
        for (double& v : x) v += noise_sigma * rng.normal();
    }

    return out;
}

}  // namespace ecgmon
