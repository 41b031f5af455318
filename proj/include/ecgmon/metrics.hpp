#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ecgmon {

// Binary confusion matrix; counts[t][p] = number of samples whose true class
// index is t and predicted class index is p.
struct ConfusionMatrix2 {
    std::array<std::array<long long, 2>, 2> counts{{{0, 0}, {0, 0}}};
    std::array<std::string, 2> class_names{"0", "1"};

    long long total() const {
        return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
};

struct AverageMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassificationReport {
    std::array<std::string, 2> class_names{"0", "1"};
    std::array<ClassMetrics, 2> per_class{};
    double accuracy = 0.0;
    AverageMetrics macro_avg{};
    AverageMetrics weighted_avg{};
    long long total = 0;
    // Human-readable notes for zero-denominator cells (defined as 0).
    std::vector<std::string> flags;
};

// Builds the confusion matrix from parallel label vectors (values 0/1).
// Raises "class-mismatch" on any other value or on length disagreement.
ConfusionMatrix2 confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                  const std::array<std::string, 2>& class_names = {"0", "1"});

// Precision/recall/F1 per class plus accuracy and macro / support-weighted
// averages. Zero-denominator cells are defined as 0 and flagged.
ClassificationReport classification_report(const ConfusionMatrix2& matrix);

// Area under the ROC curve by the rank statistic (tie-aware midranks).
// Requires both classes present ("invalid-input" otherwise). All-equal
// scores give exactly 0.5.
double auc_score(const std::vector<int>& y_true, const std::vector<double>& scores);

// Fixed-width text table with values rounded half-up to 2 decimals.
std::string render_text(const ClassificationReport& report);
std::string render_text(const ConfusionMatrix2& matrix);

// Full-precision JSON form; parse back with report_from_json. A report
// round-trips exactly.
nlohmann::json render_json(const ClassificationReport& report);
nlohmann::json render_json(const ConfusionMatrix2& matrix);
ClassificationReport report_from_json(const nlohmann::json& j);

// Rounding rule used by the text renderer: half-up at 2 decimals.
double round2_half_up(double value);

}  // namespace ecgmon
