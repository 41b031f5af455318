#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ecgmon/signal.hpp"

namespace ecgmon {

// Detected R-peak sample indices, strictly increasing.
struct RPeakList {
    std::vector<std::size_t> indices;
    int sample_rate_hz = 0;
};

struct RrStats {
    double sdnn_ms = 0.0;     // population std of successive RR intervals
    double mean_rr_ms = 0.0;  // mean RR interval
};

struct QrsStats {
    double mean_ms = 0.0;
    double std_ms = 0.0;  // population std across beats
};

struct SpectralStats {
    double sum = 0.0;
    double max = 0.0;
    double max_freq_hz = 0.0;  // lowest frequency on ties
    double mean = 0.0;
    double std = 0.0;  // population std across bins
};

struct MomentStats {
    double skewness = 0.0;         // g1 = m3 / m2^(3/2)
    double kurtosis_excess = 0.0;  // g2 = m4 / m2^2 - 3
};

// The per-record feature vector. `extras` holds any additional named values
// (appended after the ten core features in alphabetical order).
struct FeatureVector {
    double hr_variability_ms = 0.0;
    double qrs_duration_mean_ms = 0.0;
    double qrs_duration_std_ms = 0.0;
    double spectral_sum = 0.0;
    double spectral_max = 0.0;
    double spectral_max_freq_hz = 0.0;
    double spectral_mean = 0.0;
    double spectral_std = 0.0;
    double skewness = 0.0;
    double kurtosis_excess = 0.0;
    std::vector<std::pair<std::string, double>> extras;

    // The ten core column names in canonical order.
    static const std::vector<std::string>& core_names();

    // Core features followed by extras (extras sorted by name).
    std::vector<std::pair<std::string, double>> items() const;
};

// Pan-Tompkins style QRS detection: zero-phase 5-15 Hz band-pass, derivative,
// squaring, 150 ms moving-window integration, adaptive dual thresholds with a
// 200 ms refractory period and search-back, then peak refinement against the
// band-passed signal. Scale-invariant: detect(k*x) == detect(x) for k > 0.
// Requires at least 2 s of signal ("insufficient-data" otherwise). An input
// with no QRS energy (e.g. all zeros) yields an empty list.
RPeakList detect_r_peaks(const EcgRecord& record);

// RR statistics. Requires >= 3 peaks ("insufficient-beats" otherwise).
RrStats rr_features(const RPeakList& peaks);

// QRS onset/offset by slope threshold (5% of the beat's max |slope|) within
// +/-100 ms of each R peak. Requires >= 1 peak ("insufficient-beats").
QrsStats qrs_durations(const EcgRecord& record, const RPeakList& peaks);

// One-sided periodogram statistics, P[k] = |DFT(x)[k]|^2 / (N * fs) for
// k = 0..floor(N/2). Requires N >= 64 ("insufficient-data").
SpectralStats spectral_stats(const EcgRecord& record);

// Sample skewness g1 and excess kurtosis g2 from central moments. Requires
// n >= 4 and nonzero variance ("degenerate-input").
MomentStats moment_stats(const std::vector<double>& samples);

// Full pipeline for one record: causal low-pass with `filter`, peak
// detection, then all feature families. Sub-operation errors propagate with
// the feature family name prefixed to the message (codes preserved).
FeatureVector extract_features(const EcgRecord& record, const BiquadCascade& filter);

}  // namespace ecgmon
