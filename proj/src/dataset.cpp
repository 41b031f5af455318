#include "ecgmon/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "ecgmon/csv.hpp"
#include "ecgmon/error.hpp"
#include "ecgmon/rng.hpp"

namespace ecgmon {
namespace {

constexpr double kModifiedZThreshold = 3.5;
constexpr double kModifiedZScale = 0.6745;

double median_of_sorted(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return median_of_sorted(values);
}

std::optional<ClassLabel> parse_label(const std::string& raw) {
    std::string v = trim(raw);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "normal" || v == "0") return ClassLabel::Normal;
    if (v == "abnormal" || v == "1") return ClassLabel::Abnormal;
    return std::nullopt;
}

}  // namespace

LoadResult load_sources(const std::filesystem::path& demographics_csv,
                        const std::filesystem::path& ecg_root) {
    LoadResult result;

    const CsvTable table = read_csv(demographics_csv, /*has_header=*/true);
    if (table.header.empty() || trim(table.header[0]) != "patient_id") {
        raise("schema-error", "demographics header must start with 'patient_id'");
    }
    std::size_t age_col = 0, sex_col = 0, label_col = 0;
    bool has_age = false, has_sex = false, has_label = false;
    std::vector<std::pair<std::size_t, std::string>> history_cols;
    for (std::size_t i = 1; i < table.header.size(); ++i) {
        const std::string name = trim(table.header[i]);
        if (name == "age") {
            age_col = i;
            has_age = true;
        } else if (name == "sex") {
            sex_col = i;
            has_sex = true;
        } else if (name == "label") {
            label_col = i;
            has_label = true;
        } else {
            history_cols.emplace_back(i, name);
        }
    }
    if (!has_age || !has_sex) {
        raise("schema-error", "demographics requires 'age' and 'sex' columns");
    }

    std::set<std::string> seen_ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = "demographics row " + std::to_string(r + 2);
        if (row.size() != table.header.size()) {
            result.warnings.push_back(where + ": field count mismatch, skipped");
            continue;
        }
        PatientRecord p;
        p.patient_id = trim(row[0]);
        if (p.patient_id.empty()) {
            result.warnings.push_back(where + ": empty patient_id, skipped");
            continue;
        }
        if (!seen_ids.insert(p.patient_id).second) {
            result.warnings.push_back(where + ": duplicate patient_id '" + p.patient_id +
                                      "', skipped");
            continue;
        }
        const auto age = parse_double(row[age_col]);
        if (!age || !(*age > 0.0 && *age < 130.0)) {
            result.warnings.push_back(where + ": age must be a number in (0, 130), skipped");
            continue;
        }
        p.age = *age;
        p.sex = trim(row[sex_col]);
        if (has_label) {
            const std::string raw = trim(row[label_col]);
            if (!raw.empty()) {
                p.label = parse_label(raw);
                if (!p.label) {
                    result.warnings.push_back(where + ": unknown label '" + raw + "', skipped");
                    continue;
                }
            }
        }
        for (const auto& [col, name] : history_cols) {
            p.history.emplace_back(name, trim(row[col]));
        }
        result.patients.push_back(std::move(p));
    }

    for (const auto& [dirname, label] :
         {std::pair{"normal", ClassLabel::Normal}, std::pair{"abnormal", ClassLabel::Abnormal}}) {
        const std::filesystem::path dir = ecg_root / dirname;
        if (!std::filesystem::is_directory(dir)) {
            raise("io-error", "missing class directory " + dir.string());
        }
        int sample_rate = 0;
        {
            std::ifstream meta_in(dir / "meta.json");
            if (!meta_in) raise("schema-error", "missing " + (dir / "meta.json").string());
            nlohmann::json meta;
            try {
                meta_in >> meta;
                sample_rate = meta.at("sample_rate_hz").get<int>();
            } catch (const nlohmann::json::exception& e) {
                raise("schema-error", (dir / "meta.json").string() + ": " + e.what());
            }
            if (sample_rate <= 0) {
                raise("schema-error", (dir / "meta.json").string() + ": sample_rate_hz must be positive");
            }
        }

        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            result.warnings.push_back(std::string(dirname) + "/ contains no trace files");
        }

        for (const auto& file : files) {
            const std::string rec_id = std::string(dirname) + "/" + file.stem().string();
            EcgRecord rec;
            rec.record_id = rec_id;
            rec.sample_rate_hz = sample_rate;
            rec.label = label;
            bool ok = true;
            const CsvTable trace = read_csv(file, /*has_header=*/false);
            for (std::size_t i = 0; i < trace.rows.size(); ++i) {
                const auto& row = trace.rows[i];
                if (i == 0 && !row.empty() && !parse_double(row[0])) {
                    continue;  // optional "index,millivolts" header line
                }
                if (row.size() < 2) {
                    result.warnings.push_back(rec_id + ": short row, record rejected");
                    ok = false;
                    break;
                }
                const auto mv = parse_double(row[1]);
                if (!mv || !std::isfinite(*mv)) {
                    result.warnings.push_back(rec_id + ": malformed sample value, record rejected");
                    ok = false;
                    break;
                }
                rec.samples.push_back(*mv);
            }
            if (ok && rec.samples.empty()) {
                result.warnings.push_back(rec_id + ": no samples, record rejected");
                ok = false;
            }
            if (ok) result.records.push_back(std::move(rec));
        }
    }
    return result;
}

MergedDataset merge_and_label(const std::vector<PatientRecord>& patients,
                              const std::vector<FeatureRow>& rows, std::uint64_t seed) {
    if (rows.empty()) raise("empty-dataset", "no feature rows to merge");
    if (patients.empty()) raise("class-mismatch", "no patients to pair with");

    // All patients must share one history schema (they come from one CSV).
    for (const PatientRecord& p : patients) {
        if (p.history.size() != patients.front().history.size()) {
            raise("schema-error", "inconsistent demographics schema");
        }
        for (std::size_t i = 0; i < p.history.size(); ++i) {
            if (p.history[i].first != patients.front().history[i].first) {
                raise("schema-error", "inconsistent demographics schema");
            }
        }
    }
    // All feature rows must share one extras schema.
    const auto first_items = rows.front().features.items();
    for (const FeatureRow& fr : rows) {
        const auto items = fr.features.items();
        if (items.size() != first_items.size()) raise("schema-error", "inconsistent feature extras");
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].first != first_items[i].first) {
                raise("schema-error", "inconsistent feature extras");
            }
        }
    }

    // Decide numeric vs categorical per history field: numeric iff every
    // non-empty value parses as a number.
    const std::size_t n_hist = patients.front().history.size();
    std::vector<bool> numeric_field(n_hist, true);
    for (std::size_t f = 0; f < n_hist; ++f) {
        for (const PatientRecord& p : patients) {
            const std::string& v = p.history[f].second;
            if (!v.empty() && !parse_double(v)) {
                numeric_field[f] = false;
                break;
            }
        }
    }
    auto categories_of = [&patients](auto&& getter) {
        std::set<std::string> cats;
        for (const PatientRecord& p : patients) {
            const std::string v = getter(p);
            if (!v.empty()) cats.insert(v);
        }
        return std::vector<std::string>(cats.begin(), cats.end());
    };
    const std::vector<std::string> sex_cats =
        categories_of([](const PatientRecord& p) { return p.sex; });
    std::vector<std::vector<std::string>> hist_cats(n_hist);
    for (std::size_t f = 0; f < n_hist; ++f) {
        if (!numeric_field[f]) {
            hist_cats[f] = categories_of(
                [f](const PatientRecord& p) { return p.history[f].second; });
        }
    }

    MergedDataset out;
    out.columns.push_back({"age", false, "", ""});
    for (std::size_t f = 0; f < n_hist; ++f) {
        if (numeric_field[f]) {
            out.columns.push_back({patients.front().history[f].first, false, "", ""});
        }
    }
    for (const std::string& cat : sex_cats) {
        out.columns.push_back({"sex=" + cat, true, "sex", cat});
    }
    for (std::size_t f = 0; f < n_hist; ++f) {
        if (!numeric_field[f]) {
            const std::string& field = patients.front().history[f].first;
            for (const std::string& cat : hist_cats[f]) {
                out.columns.push_back({field + "=" + cat, true, field, cat});
            }
        }
    }
    for (const auto& [name, value] : first_items) {
        out.columns.push_back({name, false, "", ""});
    }

    auto encode = [&](const PatientRecord& p, const FeatureRow& fr) {
        std::vector<double> row;
        row.reserve(out.columns.size());
        row.push_back(p.age);
        for (std::size_t f = 0; f < n_hist; ++f) {
            if (!numeric_field[f]) continue;
            const std::string& v = p.history[f].second;
            if (v.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                row.push_back(*parse_double(v));
            }
        }
        auto encode_cats = [&row](const std::string& value, const std::vector<std::string>& cats) {
            for (const std::string& cat : cats) {
                if (value.empty()) {
                    row.push_back(std::numeric_limits<double>::quiet_NaN());
                } else {
                    row.push_back(value == cat ? 1.0 : 0.0);
                }
            }
        };
        encode_cats(p.sex, sex_cats);
        for (std::size_t f = 0; f < n_hist; ++f) {
            if (!numeric_field[f]) encode_cats(p.history[f].second, hist_cats[f]);
        }
        for (const auto& [name, value] : fr.features.items()) row.push_back(value);
        return row;
    };

    for (const ClassLabel cls : {ClassLabel::Normal, ClassLabel::Abnormal}) {
        std::vector<std::size_t> row_idx;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].label == cls) row_idx.push_back(i);
        }
        if (row_idx.empty()) continue;
        std::vector<std::size_t> pat_idx;
        for (std::size_t i = 0; i < patients.size(); ++i) {
            if (!patients[i].label || *patients[i].label == cls) pat_idx.push_back(i);
        }
        const char* cls_name = cls == ClassLabel::Normal ? "normal" : "abnormal";
        if (pat_idx.empty()) {
            raise("class-mismatch",
                  std::string("no eligible patients for class '") + cls_name + "'");
        }
        Rng row_rng(derive_seed(seed, std::string("merge-rows-") + cls_name));
        Rng pat_rng(derive_seed(seed, std::string("merge-patients-") + cls_name));
        row_rng.shuffle(row_idx);
        pat_rng.shuffle(pat_idx);
        for (std::size_t i = 0; i < row_idx.size(); ++i) {
            const PatientRecord& p = patients[pat_idx[i % pat_idx.size()]];
            out.rows.push_back(encode(p, rows[row_idx[i]]));
            out.labels.push_back(static_cast<int>(cls));
        }
    }

    // Global shuffle and reindex.
    std::vector<std::size_t> perm(out.rows.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng global_rng(derive_seed(seed, "merge-global"));
    global_rng.shuffle(perm);
    MergedDataset shuffled;
    shuffled.columns = out.columns;
    shuffled.rows.reserve(out.rows.size());
    shuffled.labels.reserve(out.labels.size());
    for (const std::size_t i : perm) {
        shuffled.rows.push_back(std::move(out.rows[i]));
        shuffled.labels.push_back(out.labels[i]);
    }
    return shuffled;
}

MergedDataset clean(const MergedDataset& data, CleanReport* report) {
    CleanReport local;
    CleanReport& rep = report ? *report : local;
    rep = CleanReport{};

    MergedDataset out;
    out.columns = data.columns;

    // Stage 1: rows with missing / non-finite cells.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        bool finite = true;
        for (const double v : data.rows[i]) {
            if (!std::isfinite(v)) {
                finite = false;
                break;
            }
        }
        if (finite) keep.push_back(i);
        else ++rep.dropped_missing;
    }

    // Stage 2: exact duplicates (row plus label), first occurrence kept.
    std::set<std::pair<std::vector<double>, int>> seen;
    std::vector<std::size_t> unique_rows;
    for (const std::size_t i : keep) {
        if (seen.emplace(data.rows[i], data.labels[i]).second) {
            unique_rows.push_back(i);
        } else {
            ++rep.dropped_duplicate;
        }
    }

    // Stage 3: modified z-score outliers over the surviving rows.
    const std::size_t n_cols = data.columns.size();
    std::vector<bool> drop(unique_rows.size(), false);
    for (std::size_t c = 0; c < n_cols; ++c) {
        std::vector<double> values;
        values.reserve(unique_rows.size());
        for (const std::size_t i : unique_rows) values.push_back(data.rows[i][c]);
        if (values.empty()) continue;
        const double med = median_of(values);
        std::vector<double> dev(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) dev[k] = std::abs(values[k] - med);
        const double mad = median_of(dev);
        if (mad == 0.0) {
            rep.skipped_columns.push_back(data.columns[c].name);
            continue;
        }
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (std::abs(kModifiedZScale * (values[k] - med) / mad) > kModifiedZThreshold) {
                drop[k] = true;
            }
        }
    }
    for (std::size_t k = 0; k < unique_rows.size(); ++k) {
        if (drop[k]) {
            ++rep.dropped_outlier;
        } else {
            out.rows.push_back(data.rows[unique_rows[k]]);
            out.labels.push_back(data.labels[unique_rows[k]]);
        }
    }

    if (out.rows.empty()) raise("empty-dataset", "no rows survived cleaning");
    return out;
}

NormalizationStats normalize_fit(const MergedDataset& train) {
    if (train.rows.empty()) raise("empty-dataset", "cannot fit normalization on an empty split");
    const std::size_t n_cols = train.columns.size();
    const double n = static_cast<double>(train.rows.size());
    NormalizationStats stats;
    stats.mean.assign(n_cols, 0.0);
    stats.stddev.assign(n_cols, 1.0);
    stats.constant_columns.assign(n_cols, false);
    for (std::size_t c = 0; c < n_cols; ++c) {
        double sum = 0.0;
        for (const auto& row : train.rows) sum += row[c];
        stats.mean[c] = sum / n;
        double var = 0.0;
        for (const auto& row : train.rows) {
            const double d = row[c] - stats.mean[c];
            var += d * d;
        }
        var /= n;
        if (var > 0.0) {
            stats.stddev[c] = std::sqrt(var);
        } else {
            stats.constant_columns[c] = true;  // stddev stays 1
        }
    }
    return stats;
}

MergedDataset normalize_apply(const NormalizationStats& stats, const MergedDataset& data) {
    if (stats.mean.size() != data.columns.size()) {
        raise("shape-error", "normalization statistics do not match the column count");
    }
    MergedDataset out;
    out.columns = data.columns;
    out.labels = data.labels;
    out.rows.reserve(data.rows.size());
    for (const auto& row : data.rows) {
        std::vector<double> t(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            t[c] = (row[c] - stats.mean[c]) / stats.stddev[c];
        }
        out.rows.push_back(std::move(t));
    }
    return out;
}

MergedDataset oversample_minority(const MergedDataset& data, std::uint64_t seed) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        const int l = data.labels[i];
        if (l != 0 && l != 1) raise("class-mismatch", "labels must be 0 or 1");
        by_class[l].push_back(i);
    }
    MergedDataset out = data;
    if (by_class[0].empty() || by_class[1].empty()) return out;  // single class: nothing to balance
    const int minority = by_class[0].size() < by_class[1].size() ? 0 : 1;
    const std::size_t need =
        by_class[1 - minority].size() > by_class[minority].size()
            ? by_class[1 - minority].size() - by_class[minority].size()
            : 0;
    Rng rng(derive_seed(seed, "oversample"));
    for (std::size_t k = 0; k < need; ++k) {
        const std::size_t pick =
            by_class[minority][rng.next_below(by_class[minority].size())];
        out.rows.push_back(data.rows[pick]);
        out.labels.push_back(minority);
    }
    return out;
}

SplitResult stratified_split(const MergedDataset& data, const SplitConfig& config) {
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0) ||
        !(config.test_fraction > 0.0 && config.test_fraction < 1.0) ||
        std::abs(config.train_fraction + config.test_fraction - 1.0) > 1e-9) {
        raise("invalid-parameter", "train and test fractions must be in (0,1) and sum to 1");
    }
    if (!(config.validation_fraction_of_train >= 0.0 &&
          config.validation_fraction_of_train < 1.0)) {
        raise("invalid-parameter", "validation fraction must be in [0,1)");
    }

    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        const int l = data.labels[i];
        if (l != 0 && l != 1) raise("class-mismatch", "labels must be 0 or 1");
        by_class[l].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty()) {
        raise("stratification-error", "both classes must be present to stratify");
    }

    SplitResult result;
    result.train.columns = data.columns;
    result.validation.columns = data.columns;
    result.test.columns = data.columns;

    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t>& idx = by_class[cls];
        Rng rng(derive_seed(config.seed, std::string("split-") + (cls == 0 ? "normal" : "abnormal")));
        rng.shuffle(idx);
        const std::size_t n = idx.size();
        const std::size_t n_train_all =
            static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(n)));
        const std::size_t n_val = static_cast<std::size_t>(
            std::floor(config.validation_fraction_of_train * static_cast<double>(n_train_all)));
        auto push = [&data](MergedDataset& split, std::size_t row) {
            split.rows.push_back(data.rows[row]);
            split.labels.push_back(data.labels[row]);
        };
        for (std::size_t i = 0; i < n_train_all - n_val; ++i) push(result.train, idx[i]);
        for (std::size_t i = n_train_all - n_val; i < n_train_all; ++i) push(result.validation, idx[i]);
        for (std::size_t i = n_train_all; i < n; ++i) push(result.test, idx[i]);
    }
    return result;
}

DatasetSummary summarize(const MergedDataset& data) {
    DatasetSummary s;
    s.rows = data.rows.size();
    for (const int l : data.labels) {
        if (l == 0 || l == 1) ++s.label_counts[l];
    }
    const double n = static_cast<double>(data.rows.size());
    for (std::size_t c = 0; c < data.columns.size(); ++c) {
        ColumnSummary cs;
        cs.name = data.columns[c].name;
        cs.onehot = data.columns[c].onehot;
        if (!data.rows.empty()) {
            double sum = 0.0;
            cs.min = data.rows[0][c];
            cs.max = data.rows[0][c];
            for (const auto& row : data.rows) {
                const double v = row[c];
                sum += v;
                cs.min = std::min(cs.min, v);
                cs.max = std::max(cs.max, v);
                if (cs.onehot && v == 1.0) ++cs.count_ones;
            }
            cs.mean = sum / n;
            double var = 0.0;
            for (const auto& row : data.rows) {
                const double d = row[c] - cs.mean;
                var += d * d;
            }
            cs.stddev = std::sqrt(var / n);
        }
        s.columns.push_back(cs);
    }
    return s;
}

void write_split_csv(const std::filesystem::path& path, const MergedDataset& data) {
    CsvTable table;
    for (const ColumnInfo& col : data.columns) table.header.push_back(col.name);
    table.header.push_back("label");
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(data.rows[i].size() + 1);
        for (const double v : data.rows[i]) row.push_back(format_double(v));
        row.push_back(std::to_string(data.labels[i]));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

MergedDataset read_split_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path, /*has_header=*/true);
    if (table.header.empty() || table.header.back() != "label") {
        raise("schema-error", path.string() + ": last column must be 'label'");
    }
    MergedDataset data;
    for (std::size_t c = 0; c + 1 < table.header.size(); ++c) {
        const std::string& name = table.header[c];
        const std::size_t eq = name.find('=');
        if (eq != std::string::npos) {
            data.columns.push_back({name, true, name.substr(0, eq), name.substr(eq + 1)});
        } else {
            data.columns.push_back({name, false, "", ""});
        }
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            raise("schema-error", path.string() + ": row " + std::to_string(r + 2) +
                                      " field count mismatch");
        }
        std::vector<double> values;
        values.reserve(row.size() - 1);
        for (std::size_t c = 0; c + 1 < row.size(); ++c) {
            const auto v = parse_double(row[c]);
            if (!v) {
                raise("schema-error",
                      path.string() + ": row " + std::to_string(r + 2) + " has a non-numeric cell");
            }
            values.push_back(*v);
        }
        const auto label = parse_double(row.back());
        if (!label || (*label != 0.0 && *label != 1.0)) {
            raise("schema-error",
                  path.string() + ": row " + std::to_string(r + 2) + " has a bad label");
        }
        data.rows.push_back(std::move(values));
        data.labels.push_back(static_cast<int>(*label));
    }
    return data;
}

nlohmann::json summary_to_json(const DatasetSummary& summary) {
    nlohmann::json cols = nlohmann::json::array();
    for (const ColumnSummary& c : summary.columns) {
        nlohmann::json j = {{"name", c.name}, {"onehot", c.onehot}};
        if (c.onehot) {
            j["count"] = c.count_ones;
        } else {
            j["min"] = c.min;
            j["max"] = c.max;
            j["mean"] = c.mean;
            j["stddev"] = c.stddev;
        }
        cols.push_back(std::move(j));
    }
    return {
        {"rows", summary.rows},
        {"label_counts", {{"normal", summary.label_counts[0]}, {"abnormal", summary.label_counts[1]}}},
        {"columns", cols},
    };
}

}  // namespace ecgmon
