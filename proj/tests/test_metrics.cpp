#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ecgmon/error.hpp"
#include "ecgmon/metrics.hpp"

using namespace ecgmon;

namespace {

// Published reference results for a binary heart-disease screen: three
// splits, each given as the raw confusion counts (rows = true class, class 0
// first) plus every report cell at two decimals.
struct ReferenceCase {
    const char* name;
    long long c00, c01, c10, c11;
    double p0, r0, f0;
    double p1, r1, f1;
    long long support0, support1;
    double accuracy;
    double macro_p, macro_r, macro_f;
    double weighted_p, weighted_r, weighted_f;
};

constexpr ReferenceCase kReferenceCases[] = {
    // train split
    {"train", 5562, 1031, 519, 6117,
     0.91, 0.84, 0.88, 0.86, 0.92, 0.89, 6593, 6636,
     0.88, 0.89, 0.88, 0.88, 0.89, 0.88, 0.88},
    // test split
    {"test", 2659, 492, 261, 2889,
     0.91, 0.84, 0.88, 0.85, 0.92, 0.88, 3151, 3150,
     0.88, 0.88, 0.88, 0.88, 0.88, 0.88, 0.88},
    // validation split
    {"validation", 633, 123, 57, 657,
     0.92, 0.84, 0.88, 0.84, 0.92, 0.88, 756, 714,
     0.88, 0.88, 0.88, 0.88, 0.88, 0.88, 0.88},
};

ConfusionMatrix2 matrix_of(const ReferenceCase& rc) {
    ConfusionMatrix2 m;
    m.class_names = {"Heart Disease", "Not Heart Disease"};
    m.counts = {{{rc.c00, rc.c01}, {rc.c10, rc.c11}}};
    return m;
}

double r2(double v) { return round2_half_up(v); }

}  // namespace

TEST_CASE("classification reports reproduce the reference tables exactly") {
    for (const ReferenceCase& rc : kReferenceCases) {
        INFO(rc.name);
        const ClassificationReport rep = classification_report(matrix_of(rc));
        CHECK(r2(rep.per_class[0].precision) == rc.p0);
        CHECK(r2(rep.per_class[0].recall) == rc.r0);
        CHECK(r2(rep.per_class[0].f1) == rc.f0);
        CHECK(rep.per_class[0].support == rc.support0);
        CHECK(r2(rep.per_class[1].precision) == rc.p1);
        CHECK(r2(rep.per_class[1].recall) == rc.r1);
        CHECK(r2(rep.per_class[1].f1) == rc.f1);
        CHECK(rep.per_class[1].support == rc.support1);
        CHECK(r2(rep.accuracy) == rc.accuracy);
        CHECK(r2(rep.macro_avg.precision) == rc.macro_p);
        CHECK(r2(rep.macro_avg.recall) == rc.macro_r);
        CHECK(r2(rep.macro_avg.f1) == rc.macro_f);
        CHECK(r2(rep.weighted_avg.precision) == rc.weighted_p);
        CHECK(r2(rep.weighted_avg.recall) == rc.weighted_r);
        CHECK(r2(rep.weighted_avg.f1) == rc.weighted_f);
        CHECK(rep.total == rc.support0 + rc.support1);
        CHECK(rep.flags.empty());
    }
}

TEST_CASE("confusion matrix builder counts and validates") {
    const std::vector<int> y_true{0, 0, 1, 1, 1, 0};
    const std::vector<int> y_pred{0, 1, 1, 1, 0, 0};
    const ConfusionMatrix2 m = confusion_matrix(y_true, y_pred, {"neg", "pos"});
    CHECK(m.counts[0][0] == 2);
    CHECK(m.counts[0][1] == 1);
    CHECK(m.counts[1][0] == 1);
    CHECK(m.counts[1][1] == 2);
    CHECK(m.total() == 6);

    CHECK_THROWS_AS(confusion_matrix({0, 1}, {0}), Error);
    CHECK_THROWS_AS(confusion_matrix({0, 2}, {0, 1}), Error);
    CHECK_THROWS_AS(confusion_matrix({0, 1}, {0, -1}), Error);
    try {
        confusion_matrix({0, 2}, {0, 1});
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "class-mismatch");
    }
}

TEST_CASE("zero-denominator cells are defined as zero and flagged") {
    // No true class-1 samples and no class-1 predictions.
    ConfusionMatrix2 m;
    m.counts = {{{5, 0}, {0, 0}}};
    const ClassificationReport rep = classification_report(m);
    CHECK(rep.per_class[1].precision == 0.0);
    CHECK(rep.per_class[1].recall == 0.0);
    CHECK(rep.per_class[1].f1 == 0.0);
    CHECK(rep.per_class[1].support == 0);
    CHECK(rep.accuracy == 1.0);
    CHECK(!rep.flags.empty());
}

TEST_CASE("auc matches the pairwise reference values") {
    // Hand-counted concordant pairs.
    CHECK(auc_score({0, 0, 1, 1}, {0.1, 0.4, 0.35, 0.8}) == doctest::Approx(0.75).epsilon(1e-12));
    // One tie contributes half.
    CHECK(auc_score({0, 1, 0, 1}, {0.5, 0.5, 0.2, 0.9}) == doctest::Approx(0.875).epsilon(1e-12));
    // All-equal scores are exactly chance.
    CHECK(auc_score({0, 1, 0, 1}, {0.7, 0.7, 0.7, 0.7}) == 0.5);
    // Perfect and inverted rankings.
    CHECK(auc_score({0, 0, 1, 1}, {0.1, 0.2, 0.8, 0.9}) == 1.0);
    CHECK(auc_score({0, 0, 1, 1}, {0.9, 0.8, 0.2, 0.1}) == 0.0);
}

TEST_CASE("auc requires both classes and finite scores") {
    try {
        auc_score({1, 1, 1}, {0.2, 0.3, 0.4});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "invalid-input");
    }
    CHECK_THROWS_AS(auc_score({0, 1}, {0.2, std::nan("")}), Error);
    CHECK_THROWS_AS(auc_score({0, 1}, {0.2}), Error);
}

TEST_CASE("half-up rounding at two decimals") {
    CHECK(round2_half_up(0.875) == 0.88);
    CHECK(round2_half_up(0.885) == 0.89);
    CHECK(round2_half_up(0.005) == 0.01);
    CHECK(round2_half_up(0.884999) == 0.88);
    CHECK(round2_half_up(1.0) == 1.0);
    CHECK(round2_half_up(0.0) == 0.0);
}

TEST_CASE("text rendering matches the golden layout byte for byte") {
    const ConfusionMatrix2 m = matrix_of(kReferenceCases[1]);  // test split
    const ClassificationReport rep = classification_report(m);

    const std::string kMatrixGolden =
        "        true \\ pred      Heart Disease  Not Heart Disease\n"
        "      Heart Disease               2659                492\n"
        "  Not Heart Disease                261               2889\n";
    CHECK(render_text(m) == kMatrixGolden);

    const std::string kReportGolden =
        "                     precision     recall   f1-score    support\n"
        "\n"
        "      Heart Disease       0.91       0.84       0.88       3151\n"
        "  Not Heart Disease       0.85       0.92       0.88       3150\n"
        "\n"
        "           accuracy                             0.88       6301\n"
        "          macro avg       0.88       0.88       0.88       6301\n"
        "       weighted avg       0.88       0.88       0.88       6301\n";
    CHECK(render_text(rep) == kReportGolden);
}

TEST_CASE("json serialization round-trips a report exactly") {
    const ClassificationReport rep = classification_report(matrix_of(kReferenceCases[0]));
    const ClassificationReport back = report_from_json(render_json(rep));
    CHECK(back.class_names == rep.class_names);
    for (int c = 0; c < 2; ++c) {
        CHECK(back.per_class[c].precision == rep.per_class[c].precision);
        CHECK(back.per_class[c].recall == rep.per_class[c].recall);
        CHECK(back.per_class[c].f1 == rep.per_class[c].f1);
        CHECK(back.per_class[c].support == rep.per_class[c].support);
    }
    CHECK(back.accuracy == rep.accuracy);
    CHECK(back.macro_avg.precision == rep.macro_avg.precision);
    CHECK(back.macro_avg.recall == rep.macro_avg.recall);
    CHECK(back.macro_avg.f1 == rep.macro_avg.f1);
    CHECK(back.weighted_avg.precision == rep.weighted_avg.precision);
    CHECK(back.weighted_avg.recall == rep.weighted_avg.recall);
    CHECK(back.weighted_avg.f1 == rep.weighted_avg.f1);
    CHECK(back.total == rep.total);
    CHECK(back.flags == rep.flags);
    // And the JSON itself is stable across a second round.
    CHECK(render_json(back) == render_json(rep));
}

TEST_CASE("confusion matrix json carries counts and names") {
    const ConfusionMatrix2 m = matrix_of(kReferenceCases[2]);
    const nlohmann::json j = render_json(m);
    CHECK(j["counts"][0][0] == 633);
    CHECK(j["counts"][0][1] == 123);
    CHECK(j["counts"][1][0] == 57);
    CHECK(j["counts"][1][1] == 657);
    CHECK(j["class_names"][0] == "Heart Disease");
}
