#include "ecgmon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ecgmon/error.hpp"

namespace ecgmon {

double round2_half_up(double value) {
    return std::floor(value * 100.0 + 0.5) / 100.0;
}

ConfusionMatrix2 confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                  const std::array<std::string, 2>& class_names) {
    if (y_true.size() != y_pred.size()) {
        raise("class-mismatch", "label vectors differ in length");
    }
    ConfusionMatrix2 m;
    m.class_names = class_names;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
            raise("class-mismatch", "labels must be 0 or 1");
        }
        ++m.counts[t][p];
    }
    return m;
}

ClassificationReport classification_report(const ConfusionMatrix2& matrix) {
    ClassificationReport r;
    r.class_names = matrix.class_names;
    r.total = matrix.total();

    auto guarded = [&r](long long num, long long den, const std::string& what) {
        if (den == 0) {
            r.flags.push_back(what + ": zero denominator, defined as 0");
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };

    for (int c = 0; c < 2; ++c) {
        const long long tp = matrix.counts[c][c];
        const long long fp = matrix.counts[1 - c][c];
        const long long fn = matrix.counts[c][1 - c];
        ClassMetrics& cm = r.per_class[c];
        cm.support = matrix.counts[c][0] + matrix.counts[c][1];
        cm.precision = guarded(tp, tp + fp, "precision[" + matrix.class_names[c] + "]");
        cm.recall = guarded(tp, tp + fn, "recall[" + matrix.class_names[c] + "]");
        const double pr = cm.precision + cm.recall;
        if (pr == 0.0) {
            r.flags.push_back("f1[" + matrix.class_names[c] + "]: zero denominator, defined as 0");
            cm.f1 = 0.0;
        } else {
            cm.f1 = 2.0 * cm.precision * cm.recall / pr;
        }
    }

    r.accuracy = guarded(matrix.counts[0][0] + matrix.counts[1][1], r.total, "accuracy");
    r.macro_avg.precision = 0.5 * (r.per_class[0].precision + r.per_class[1].precision);
    r.macro_avg.recall = 0.5 * (r.per_class[0].recall + r.per_class[1].recall);
    r.macro_avg.f1 = 0.5 * (r.per_class[0].f1 + r.per_class[1].f1);
    if (r.total == 0) {
        r.flags.push_back("weighted averages: zero denominator, defined as 0");
    } else {
        const double w0 = static_cast<double>(r.per_class[0].support) / static_cast<double>(r.total);
        const double w1 = static_cast<double>(r.per_class[1].support) / static_cast<double>(r.total);
        r.weighted_avg.precision = w0 * r.per_class[0].precision + w1 * r.per_class[1].precision;
        r.weighted_avg.recall = w0 * r.per_class[0].recall + w1 * r.per_class[1].recall;
        r.weighted_avg.f1 = w0 * r.per_class[0].f1 + w1 * r.per_class[1].f1;
    }
    return r;
}

double auc_score(const std::vector<int>& y_true, const std::vector<double>& scores) {
    if (y_true.size() != scores.size()) raise("class-mismatch", "label and score vectors differ in length");
    const std::size_t n = y_true.size();
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(scores[i])) raise("invalid-input", "non-finite score");
        if (y_true[i] == 1) ++n_pos;
        else if (y_true[i] == 0) ++n_neg;
        else raise("class-mismatch", "labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0) raise("invalid-input", "AUC needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based average rank
        for (std::size_t k = i; k < j; ++k) {
            if (y_true[order[k]] == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", round2_half_up(v));
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string render_text(const ClassificationReport& report) {
    const std::size_t name_w = std::max<std::size_t>(
        {report.class_names[0].size(), report.class_names[1].size(), 12}) + 2;
    const std::size_t col_w = 11;
    std::string out;
    out += pad_left("", name_w) + pad_left("precision", col_w) + pad_left("recall", col_w) +
           pad_left("f1-score", col_w) + pad_left("support", col_w) + "\n\n";
    for (int c = 0; c < 2; ++c) {
        const ClassMetrics& cm = report.per_class[c];
        out += pad_left(report.class_names[c], name_w) + pad_left(fmt2(cm.precision), col_w) +
               pad_left(fmt2(cm.recall), col_w) + pad_left(fmt2(cm.f1), col_w) +
               pad_left(std::to_string(cm.support), col_w) + "\n";
    }
    out += "\n";
    out += pad_left("accuracy", name_w) + pad_left("", col_w) + pad_left("", col_w) +
           pad_left(fmt2(report.accuracy), col_w) + pad_left(std::to_string(report.total), col_w) + "\n";
    out += pad_left("macro avg", name_w) + pad_left(fmt2(report.macro_avg.precision), col_w) +
           pad_left(fmt2(report.macro_avg.recall), col_w) + pad_left(fmt2(report.macro_avg.f1), col_w) +
           pad_left(std::to_string(report.total), col_w) + "\n";
    out += pad_left("weighted avg", name_w) + pad_left(fmt2(report.weighted_avg.precision), col_w) +
           pad_left(fmt2(report.weighted_avg.recall), col_w) +
           pad_left(fmt2(report.weighted_avg.f1), col_w) +
           pad_left(std::to_string(report.total), col_w) + "\n";
    for (const std::string& flag : report.flags) {
        out += "note: " + flag + "\n";
    }
    return out;
}

std::string render_text(const ConfusionMatrix2& matrix) {
    const std::size_t name_w = std::max<std::size_t>(
        {matrix.class_names[0].size(), matrix.class_names[1].size(), 11}) + 2;
    const std::size_t col_w = std::max<std::size_t>(
        {matrix.class_names[0].size(), matrix.class_names[1].size(), 8}) + 2;
    std::string out;
    out += pad_left("true \\ pred", name_w) + pad_left(matrix.class_names[0], col_w) +
           pad_left(matrix.class_names[1], col_w) + "\n";
    for (int t = 0; t < 2; ++t) {
        out += pad_left(matrix.class_names[t], name_w) +
               pad_left(std::to_string(matrix.counts[t][0]), col_w) +
               pad_left(std::to_string(matrix.counts[t][1]), col_w) + "\n";
    }
    return out;
}

nlohmann::json render_json(const ClassificationReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (int c = 0; c < 2; ++c) {
        per_class.push_back({
            {"name", report.class_names[c]},
            {"precision", report.per_class[c].precision},
            {"recall", report.per_class[c].recall},
            {"f1", report.per_class[c].f1},
            {"support", report.per_class[c].support},
        });
    }
    return {
        {"per_class", per_class},
        {"accuracy", report.accuracy},
        {"macro_avg",
         {{"precision", report.macro_avg.precision},
          {"recall", report.macro_avg.recall},
          {"f1", report.macro_avg.f1}}},
        {"weighted_avg",
         {{"precision", report.weighted_avg.precision},
          {"recall", report.weighted_avg.recall},
          {"f1", report.weighted_avg.f1}}},
        {"total", report.total},
        {"flags", report.flags},
    };
}

nlohmann::json render_json(const ConfusionMatrix2& matrix) {
    return {
        {"class_names", {matrix.class_names[0], matrix.class_names[1]}},
        {"counts",
         {{matrix.counts[0][0], matrix.counts[0][1]}, {matrix.counts[1][0], matrix.counts[1][1]}}},
    };
}

ClassificationReport report_from_json(const nlohmann::json& j) {
    try {
        ClassificationReport r;
        const auto& per_class = j.at("per_class");
        for (int c = 0; c < 2; ++c) {
            const auto& pc = per_class.at(c);
            r.class_names[c] = pc.at("name").get<std::string>();
            r.per_class[c].precision = pc.at("precision").get<double>();
            r.per_class[c].recall = pc.at("recall").get<double>();
            r.per_class[c].f1 = pc.at("f1").get<double>();
            r.per_class[c].support = pc.at("support").get<long long>();
        }
        r.accuracy = j.at("accuracy").get<double>();
        r.macro_avg = {j.at("macro_avg").at("precision").get<double>(),
                       j.at("macro_avg").at("recall").get<double>(),
                       j.at("macro_avg").at("f1").get<double>()};
        r.weighted_avg = {j.at("weighted_avg").at("precision").get<double>(),
                          j.at("weighted_avg").at("recall").get<double>(),
                          j.at("weighted_avg").at("f1").get<double>()};
        r.total = j.at("total").get<long long>();
        r.flags = j.at("flags").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        raise("schema-error", std::string("report JSON: ") + e.what());
    }
}

}  // namespace ecgmon
