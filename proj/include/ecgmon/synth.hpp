#pragma once

#include <cstdint>
#include <vector>

#include "ecgmon/signal.hpp"

namespace ecgmon {

// Synthetic ECG generation used for demos and self-tests. One beat is a
// positive Gaussian QRS complex flanked by smaller P and T waves; beats are
// laid out at (optionally drifting, optionally jittered) RR intervals on
// exact sample boundaries so noise-free beats are sample-identical.
struct SynthEcgOptions {
    int sample_rate_hz = 360;
    double seconds = 10.0;
    double mean_bpm = 72.0;       // base heart rate
    double bpm_sweep = 0.0;       // sinusoidal rate sweep amplitude (+/- bpm)
    double rr_jitter_frac = 0.0;  // relative uniform jitter on each RR interval
    double qrs_sigma_ms = 12.0;   // QRS width parameter
    double qrs_amp_mv = 1.1;
    double noise_snr_db = 0.0;    // 0 disables noise; else white noise at this SNR
    double baseline_wander_mv = 0.0;
    std::uint64_t seed = 0;
};

struct SynthEcg {
    EcgRecord record;
    std::vector<std::size_t> r_peaks;  // ground-truth QRS center indices
};

SynthEcg synth_ecg(const SynthEcgOptions& options);

}  // namespace ecgmon
