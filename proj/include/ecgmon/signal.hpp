#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ecgmon {

enum class ClassLabel : int { Normal = 0, Abnormal = 1 };

// One ECG trace in millivolts at a fixed sample rate.
struct EcgRecord {
    std::string record_id;
    std::string patient_ref;     // empty when not yet paired to a patient
    int sample_rate_hz = 0;
    std::vector<double> samples; // millivolts
    std::optional<ClassLabel> label;

    double duration_s() const {
        return sample_rate_hz > 0
                   ? static_cast<double>(samples.size()) / sample_rate_hz
                   : 0.0;
    }

    // Raises "invalid-input" if the record violates its invariants
    // (positive sample rate, finite samples).
    void validate() const;
};

// Second-order section, direct form II transposed coefficients. The transfer
// function of one section is (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct BiquadSection {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

struct BiquadCascade {
    std::vector<BiquadSection> sections;
    double sample_rate_hz = 0.0;
    double cutoff_hz = 0.0;
    int order = 0;

    // |H(e^{j 2 pi f / fs})| of the whole cascade.
    double magnitude_at(double freq_hz) const;
};

// Designs an even-order Butterworth low-pass filter discretized by impulse
// invariance and factored into stable second-order sections, each normalized
// to unit DC gain. Requirements: order even and in [2, 16]; 0 < cutoff_hz <
// sample_rate_hz / 2. Violations raise "invalid-parameter".
BiquadCascade design_butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz);

// Single causal pass through the cascade (direct form II transposed, zero
// initial state). Raises "invalid-input" on non-finite samples and
// "invalid-parameter" on an empty cascade.
std::vector<double> apply_filter(const BiquadCascade& filter, const std::vector<double>& samples);

// Zero-phase filtering: forward pass, reverse, forward pass, reverse. No
// padding and zero initial state, which makes the operator commute with time
// reversal exactly.
std::vector<double> apply_zero_phase(const BiquadCascade& filter, const std::vector<double>& samples);

}  // namespace ecgmon
