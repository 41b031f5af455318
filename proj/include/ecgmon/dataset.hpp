#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgmon/features.hpp"
#include "ecgmon/signal.hpp"

namespace ecgmon {

// One demographics row. `history` preserves CSV column order; values stay raw
// strings until encoding decides numeric vs categorical per column.
struct PatientRecord {
    std::string patient_id;
    double age = 0.0;
    std::string sex;
    std::vector<std::pair<std::string, std::string>> history;
    std::optional<ClassLabel> label;
};

// Feature row awaiting merge: extracted trace features plus the trace label.
struct FeatureRow {
    std::string record_id;
    FeatureVector features;
    ClassLabel label = ClassLabel::Normal;
};

struct ColumnInfo {
    std::string name;
    bool onehot = false;
    std::string source_field;  // for one-hot columns: the categorical field
    std::string category;      // for one-hot columns: the encoded category
};

// Fully numeric design matrix with labels (0 = Normal, 1 = Abnormal).
struct MergedDataset {
    std::vector<ColumnInfo> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    std::size_t size() const { return rows.size(); }
};

struct LoadResult {
    std::vector<PatientRecord> patients;
    std::vector<EcgRecord> records;
    std::vector<std::string> warnings;  // skipped rows / rejected traces
};

struct CleanReport {
    std::size_t dropped_missing = 0;
    std::size_t dropped_duplicate = 0;
    std::size_t dropped_outlier = 0;
    std::vector<std::string> skipped_columns;  // zero-MAD columns
};

struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;          // as applied (1.0 for constant columns)
    std::vector<bool> constant_columns;  // flagged zero-variance columns
};

struct SplitConfig {
    double train_fraction = 0.70;
    double test_fraction = 0.30;
    double validation_fraction_of_train = 0.10;
    std::uint64_t seed = 0;
};

struct SplitResult {
    MergedDataset train;
    MergedDataset validation;
    MergedDataset test;
};

struct ColumnSummary {
    std::string name;
    double min = 0.0, max = 0.0, mean = 0.0, stddev = 0.0;
    bool onehot = false;
    long long count_ones = 0;  // for one-hot columns: category frequency
};

struct DatasetSummary {
    std::size_t rows = 0;
    std::array<long long, 2> label_counts{0, 0};  // [Normal, Abnormal]
    std::vector<ColumnSummary> columns;
};

// --- operations ---------------------------------------------------------

// Loads demographics.csv (first header cell must be "patient_id"; "age" and
// "sex" columns required; optional "label"; remaining columns become
// history). Loads traces from <ecg_root>/normal and <ecg_root>/abnormal,
// each holding `index,millivolts` CSV files plus a meta.json with
// {"sample_rate_hz": N}. Per-row/per-file parse failures are collected as
// warnings, not errors; structural problems (missing directories, bad
// meta.json, wrong header) raise "io-error"/"schema-error".
LoadResult load_sources(const std::filesystem::path& demographics_csv,
                        const std::filesystem::path& ecg_root);

// Pairs feature rows with patients within each class (seeded shuffles on
// both sides, then cyclic assignment), one-hot encodes categorical
// demographics, appends feature columns, globally shuffles, and reindexes.
// Patients with a label restrict to rows of the same class; unlabeled
// patients are eligible for both classes. Raises "class-mismatch" when a
// class has rows but no eligible patients, "empty-dataset" when there are no
// rows.
MergedDataset merge_and_label(const std::vector<PatientRecord>& patients,
                              const std::vector<FeatureRow>& rows, std::uint64_t seed);

// Drops rows with missing/non-finite cells, then exact duplicates (first
// occurrence kept), then modified z-score outliers (|0.6745 (x - median) /
// MAD| > 3.5 in any column; zero-MAD columns are skipped and flagged).
// Raises "empty-dataset" if nothing survives.
MergedDataset clean(const MergedDataset& data, CleanReport* report = nullptr);

// Per-column standardization statistics fitted on (and only on) the training
// split. Zero-variance columns get stddev 1 and a flag.
NormalizationStats normalize_fit(const MergedDataset& train);

// Applies fitted statistics: (x - mean) / stddev. Raises "shape-error" on a
// column-count mismatch.
MergedDataset normalize_apply(const NormalizationStats& stats, const MergedDataset& data);

// Balances classes by seeded random duplication of minority rows.
// A balanced input is returned unchanged.
MergedDataset oversample_minority(const MergedDataset& data, std::uint64_t seed);

// Seeded stratified split: per class floor(train_fraction * n) rows to
// train, the rest to test; then floor(validation_fraction_of_train * n_train)
// per class moves from train to validation. Raises "stratification-error"
// when a class is absent, "invalid-parameter" for bad fractions.
SplitResult stratified_split(const MergedDataset& data, const SplitConfig& config);

// Column-wise summary plus label histogram. An empty dataset summarizes to
// zero rows (no error).
DatasetSummary summarize(const MergedDataset& data);

// --- persistence ---------------------------------------------------------

// Writes one split as CSV: feature columns in order, then "label".
void write_split_csv(const std::filesystem::path& path, const MergedDataset& data);

// Reads a split CSV written by write_split_csv.
MergedDataset read_split_csv(const std::filesystem::path& path);

nlohmann::json summary_to_json(const DatasetSummary& summary);

}  // namespace ecgmon
