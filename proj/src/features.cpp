#include "ecgmon/features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "ecgmon/error.hpp"
#include "ecgmon/fft.hpp"

namespace ecgmon {
namespace {

double population_std(const std::vector<double>& values, double mean) {
    double acc = 0.0;
    for (const double v : values) acc += (v - mean) * (v - mean);
    return values.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(values.size()));
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

const std::vector<std::string>& FeatureVector::core_names() {
    static const std::vector<std::string> names = {
        "hr_variability_ms",
        "qrs_duration_mean_ms",
        "qrs_duration_std_ms",
        "spectral_sum",
        "spectral_max",
        "spectral_max_freq_hz",
        "spectral_mean",
        "spectral_std",
        "skewness",
        "kurtosis_excess",
    };
    return names;
}

std::vector<std::pair<std::string, double>> FeatureVector::items() const {
    std::vector<std::pair<std::string, double>> out = {
        {"hr_variability_ms", hr_variability_ms},
        {"qrs_duration_mean_ms", qrs_duration_mean_ms},
        {"qrs_duration_std_ms", qrs_duration_std_ms},
        {"spectral_sum", spectral_sum},
        {"spectral_max", spectral_max},
        {"spectral_max_freq_hz", spectral_max_freq_hz},
        {"spectral_mean", spectral_mean},
        {"spectral_std", spectral_std},
        {"skewness", skewness},
        {"kurtosis_excess", kurtosis_excess},
    };
    std::vector<std::pair<std::string, double>> sorted_extras = extras;
    std::sort(sorted_extras.begin(), sorted_extras.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    out.insert(out.end(), sorted_extras.begin(), sorted_extras.end());
    return out;
}

RPeakList detect_r_peaks(const EcgRecord& record) {
    record.validate();
    const double fs = static_cast<double>(record.sample_rate_hz);
    const std::size_t n = record.samples.size();
    if (record.duration_s() < 2.0) {
        raise("insufficient-data", "record '" + record.record_id +
                                       "': need at least 2 s of signal for peak detection");
    }

    // 5-15 Hz band-pass built from two zero-phase low-passes. Cutoffs shrink
    // proportionally when the sample rate cannot support 15 Hz.
    const double hi_cut = std::min(15.0, 0.45 * fs);
    const double lo_cut = std::min(5.0, hi_cut / 3.0);
    const BiquadCascade lp_hi = design_butterworth_lowpass(4, hi_cut, fs);
    const BiquadCascade lp_lo = design_butterworth_lowpass(4, lo_cut, fs);
    const std::vector<double> smooth_hi = apply_zero_phase(lp_hi, record.samples);
    const std::vector<double> smooth_lo = apply_zero_phase(lp_lo, record.samples);
    std::vector<double> bp(n);
    for (std::size_t i = 0; i < n; ++i) bp[i] = smooth_hi[i] - smooth_lo[i];

    // Derivative, squaring, and a centered 150 ms moving-window integral.
    std::vector<double> sq(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = bp[i == 0 ? 0 : i - 1];
        const double next = bp[i + 1 >= n ? n - 1 : i + 1];
        const double d = (next - prev) * 0.5 * fs;
        sq[i] = d * d;
    }
    const std::size_t win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.150 * fs)));
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sq[i];
    std::vector<double> mwi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= win / 2 ? i - win / 2 : 0;
        const std::size_t hi = std::min(n, i + win - win / 2);
        mwi[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }

    // Candidate peaks: strict rise on the left, non-rise on the right.
    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) cand.push_back(i);
    }

    const std::size_t refractory = static_cast<std::size_t>(std::lround(0.200 * fs));
    const std::size_t init_len = std::min(n, static_cast<std::size_t>(std::lround(2.0 * fs)));
    double init_max = 0.0, init_sum = 0.0;
    for (std::size_t i = 0; i < init_len; ++i) {
        init_max = std::max(init_max, mwi[i]);
        init_sum += mwi[i];
    }
    double spki = 0.5 * init_max;
    double npki = 0.5 * (init_sum / static_cast<double>(std::max<std::size_t>(1, init_len)));

    std::vector<std::size_t> accepted;
    std::deque<double> rr_history;
    std::vector<std::pair<std::size_t, double>> noise_peaks;  // for search-back

    auto accept = [&](std::size_t idx, double value, bool searchback) {
        if (!accepted.empty()) {
            rr_history.push_back(static_cast<double>(idx - accepted.back()));
            if (rr_history.size() > 8) rr_history.pop_front();
        }
        accepted.push_back(idx);
        if (searchback) {
            spki = 0.25 * value + 0.75 * spki;
        } else {
            spki = 0.125 * value + 0.875 * spki;
        }
    };

    for (const std::size_t i : cand) {
        const double v = mwi[i];
        const double threshold = npki + 0.25 * (spki - npki);

        // Search-back: if the expected beat is overdue, rescue the strongest
        // sub-threshold candidate in the gap at half threshold.
        if (!accepted.empty() && !rr_history.empty()) {
            const double rr_avg =
                std::accumulate(rr_history.begin(), rr_history.end(), 0.0) /
                static_cast<double>(rr_history.size());
            if (static_cast<double>(i - accepted.back()) > 1.66 * rr_avg) {
                std::pair<std::size_t, double> best{0, 0.0};
                for (const auto& [idx, val] : noise_peaks) {
                    if (idx > accepted.back() + refractory && idx + refractory <= i &&
                        val >= 0.5 * threshold && val > best.second) {
                        best = {idx, val};
                    }
                }
                if (best.second > 0.0) accept(best.first, best.second, true);
            }
        }

        if (v >= threshold) {
            if (accepted.empty() || i - accepted.back() >= refractory) {
                accept(i, v, false);
            }
            // Super-threshold peaks inside the refractory window are QRS
            // remnants; they update neither estimate.
        } else {
            npki = 0.125 * v + 0.875 * npki;
            noise_peaks.emplace_back(i, v);
            if (noise_peaks.size() > 64) noise_peaks.erase(noise_peaks.begin());
        }
    }

    // Refine each detection to the largest band-passed deflection nearby.
    const std::size_t refine_w = static_cast<std::size_t>(std::lround(0.075 * fs));
    std::vector<std::size_t> refined;
    for (const std::size_t idx : accepted) {
        const std::size_t lo = idx >= refine_w ? idx - refine_w : 0;
        const std::size_t hi = std::min(n - 1, idx + refine_w);
        std::size_t best = lo;
        for (std::size_t j = lo; j <= hi; ++j) {
            if (std::abs(bp[j]) > std::abs(bp[best])) best = j;
        }
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());

    // Enforce the refractory period on the refined indices.
    RPeakList out;
    out.sample_rate_hz = record.sample_rate_hz;
    for (const std::size_t idx : refined) {
        if (!out.indices.empty() && idx - out.indices.back() < refractory) {
            if (std::abs(bp[idx]) > std::abs(bp[out.indices.back()])) out.indices.back() = idx;
        } else if (out.indices.empty() || idx != out.indices.back()) {
            out.indices.push_back(idx);
        }
    }
    return out;
}

RrStats rr_features(const RPeakList& peaks) {
    if (peaks.sample_rate_hz <= 0) raise("invalid-input", "peak list has no sample rate");
    if (peaks.indices.size() < 3) {
        raise("insufficient-beats", "need at least 3 R peaks for RR statistics");
    }
    const double ms_per_sample = 1000.0 / static_cast<double>(peaks.sample_rate_hz);
    std::vector<double> rr;
    for (std::size_t i = 1; i < peaks.indices.size(); ++i) {
        rr.push_back(static_cast<double>(peaks.indices[i] - peaks.indices[i - 1]) * ms_per_sample);
    }
    RrStats stats;
    stats.mean_rr_ms = mean_of(rr);
    stats.sdnn_ms = population_std(rr, stats.mean_rr_ms);
    return stats;
}

QrsStats qrs_durations(const EcgRecord& record, const RPeakList& peaks) {
    record.validate();
    if (peaks.indices.empty()) raise("insufficient-beats", "need at least 1 R peak for QRS durations");
    const double fs = static_cast<double>(record.sample_rate_hz);
    const std::size_t n = record.samples.size();
    const auto& x = record.samples;
    const std::size_t window = static_cast<std::size_t>(std::lround(0.100 * fs));

    auto slope_at = [&](std::size_t i) {
        const double prev = x[i == 0 ? 0 : i - 1];
        const double next = x[i + 1 >= n ? n - 1 : i + 1];
        return (next - prev) * 0.5;
    };

    std::vector<double> durations;
    for (const std::size_t r : peaks.indices) {
        if (r >= n) raise("invalid-input", "R peak index outside the record");
        const std::size_t lo = r >= window ? r - window : 0;
        const std::size_t hi = std::min(n - 1, r + window);
        double max_slope = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) max_slope = std::max(max_slope, std::abs(slope_at(i)));
        if (max_slope == 0.0) {
            durations.push_back(0.0);
            continue;
        }
        const double theta = 0.05 * max_slope;

        // Walk outward from the apex: skip the near-zero slope at the peak,
        // cross the steep flank, stop where |slope| falls below threshold.
        std::size_t onset = lo;
        {
            std::size_t i = r;
            while (i > lo && std::abs(slope_at(i)) < theta) --i;
            while (i > lo && std::abs(slope_at(i)) >= theta) --i;
            onset = i;
        }
        std::size_t offset = hi;
        {
            std::size_t i = r;
            while (i < hi && std::abs(slope_at(i)) < theta) ++i;
            while (i < hi && std::abs(slope_at(i)) >= theta) ++i;
            offset = i;
        }
        durations.push_back(static_cast<double>(offset - onset) * 1000.0 / fs);
    }

    QrsStats stats;
    stats.mean_ms = mean_of(durations);
    stats.std_ms = population_std(durations, stats.mean_ms);
    return stats;
}

SpectralStats spectral_stats(const EcgRecord& record) {
    record.validate();
    const std::size_t n = record.samples.size();
    if (n < 64) raise("insufficient-data", "need at least 64 samples for spectral statistics");
    const double fs = static_cast<double>(record.sample_rate_hz);

    const auto spectrum = fft_real(record.samples);
    const std::size_t bins = n / 2 + 1;
    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        power[k] = std::norm(spectrum[k]) / (static_cast<double>(n) * fs);
    }

    SpectralStats stats;
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < bins; ++k) {
        stats.sum += power[k];
        if (power[k] > power[argmax]) argmax = k;  // ties keep the lowest bin
    }
    stats.max = power[argmax];
    stats.max_freq_hz = static_cast<double>(argmax) * fs / static_cast<double>(n);
    stats.mean = stats.sum / static_cast<double>(bins);
    stats.std = population_std(power, stats.mean);
    return stats;
}

MomentStats moment_stats(const std::vector<double>& samples) {
    if (samples.size() < 4) {
        raise("degenerate-input", "need at least 4 samples for moment statistics");
    }
    for (const double v : samples) {
        if (!std::isfinite(v)) raise("invalid-input", "non-finite sample");
    }
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (const double v : samples) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 == 0.0) raise("degenerate-input", "zero variance");
    MomentStats stats;
    stats.skewness = m3 / std::pow(m2, 1.5);
    stats.kurtosis_excess = m4 / (m2 * m2) - 3.0;
    return stats;
}

FeatureVector extract_features(const EcgRecord& record, const BiquadCascade& filter) {
    record.validate();
    EcgRecord work = record;
    work.samples = apply_filter(filter, record.samples);

    auto tagged = [](const char* family, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            raise(e.code(), std::string(family) + ": " + e.message());
        }
    };

    const RPeakList peaks = tagged("r_peaks", [&] { return detect_r_peaks(work); });
    const RrStats rr = tagged("hr_variability_ms", [&] { return rr_features(peaks); });
    const QrsStats qrs = tagged("qrs_duration", [&] { return qrs_durations(work, peaks); });
    const SpectralStats spectral = tagged("spectral", [&] { return spectral_stats(work); });
    const MomentStats moments = tagged("moments", [&] { return moment_stats(work.samples); });

    FeatureVector fv;
    fv.hr_variability_ms = rr.sdnn_ms;
    fv.qrs_duration_mean_ms = qrs.mean_ms;
    fv.qrs_duration_std_ms = qrs.std_ms;
    fv.spectral_sum = spectral.sum;
    fv.spectral_max = spectral.max;
    fv.spectral_max_freq_hz = spectral.max_freq_hz;
    fv.spectral_mean = spectral.mean;
    fv.spectral_std = spectral.std;
    fv.skewness = moments.skewness;
    fv.kurtosis_excess = moments.kurtosis_excess;
    fv.extras = {
        {"heart_rate_bpm", 60000.0 / rr.mean_rr_ms},
        {"mean_rr_ms", rr.mean_rr_ms},
    };
    return fv;
}

}  // namespace ecgmon
