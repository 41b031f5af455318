#include "ecgmon/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ecgmon/csv.hpp"
#include "ecgmon/dataset.hpp"
#include "ecgmon/error.hpp"
#include "ecgmon/features.hpp"
#include "ecgmon/metrics.hpp"
#include "ecgmon/nn.hpp"
#include "ecgmon/rng.hpp"
#include "ecgmon/signal.hpp"
#include "ecgmon/synth.hpp"
#include "ecgmon/telemetry.hpp"

namespace ecgmon {
namespace {

using nlohmann::json;

constexpr const char* kVersionString = "ecgmon 0.1.0";

// ---------------------------------------------------------------------------
// Configuration file. Every subcommand accepts --config <json>; file values
// become option defaults and explicit flags override them.

struct AppConfig {
    std::uint64_t seed = 0;
    // signal
    int sample_rate_hz = 360;
    double cutoff_hz = 40.0;
    int order = 4;
    // split
    SplitConfig split{};
    // train
    TrainConfig train{};
    std::vector<std::size_t> hidden_widths = MlpModel::default_widths();
    double dropout = 0.3;
    // service
    std::string listen_address = "127.0.0.1";
    std::uint16_t port = 7380;
    int max_sessions = 64;
    // device
    std::size_t chunk_samples = 256;
    double gain_uv_per_lsb = 4.0;
};

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(known.begin(), known.end(),
                         [&key](const char* k) { return key == k; }) == known.end()) {
            raise("schema-error", "config: unknown key '" + where + key + "'");
        }
    }
}

AppConfig load_config(const std::filesystem::path& path) {
    AppConfig cfg;
    std::ifstream in(path);
    if (!in) raise("io-error", "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise("schema-error", "config " + path.string() + ": " + e.what());
    }
    try {
        reject_unknown_keys(j, {"seed", "signal", "split", "train", "service", "device"}, "");
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("signal")) {
            const json& s = j["signal"];
            reject_unknown_keys(s, {"sample_rate_hz", "cutoff_hz", "order"}, "signal.");
            if (s.contains("sample_rate_hz")) cfg.sample_rate_hz = s["sample_rate_hz"].get<int>();
            if (s.contains("cutoff_hz")) cfg.cutoff_hz = s["cutoff_hz"].get<double>();
            if (s.contains("order")) cfg.order = s["order"].get<int>();
        }
        if (j.contains("split")) {
            const json& s = j["split"];
            reject_unknown_keys(
                s, {"train_fraction", "test_fraction", "validation_fraction_of_train"}, "split.");
            if (s.contains("train_fraction")) cfg.split.train_fraction = s["train_fraction"].get<double>();
            if (s.contains("test_fraction")) cfg.split.test_fraction = s["test_fraction"].get<double>();
            if (s.contains("validation_fraction_of_train")) {
                cfg.split.validation_fraction_of_train =
                    s["validation_fraction_of_train"].get<double>();
            }
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            reject_unknown_keys(t,
                                {"initial_lr", "batch_size", "max_epochs", "hidden_widths",
                                 "dropout", "plateau", "early_stop", "adam"},
                                "train.");
            if (t.contains("initial_lr")) cfg.train.initial_lr = t["initial_lr"].get<double>();
            if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<std::size_t>();
            if (t.contains("max_epochs")) cfg.train.max_epochs = t["max_epochs"].get<int>();
            if (t.contains("hidden_widths")) {
                cfg.hidden_widths = t["hidden_widths"].get<std::vector<std::size_t>>();
            }
            if (t.contains("dropout")) cfg.dropout = t["dropout"].get<double>();
            if (t.contains("plateau")) {
                const json& p = t["plateau"];
                reject_unknown_keys(p, {"factor", "patience", "min_lr", "min_delta"},
                                    "train.plateau.");
                if (p.contains("factor")) cfg.train.plateau.factor = p["factor"].get<double>();
                if (p.contains("patience")) cfg.train.plateau.patience = p["patience"].get<int>();
                if (p.contains("min_lr")) cfg.train.plateau.min_lr = p["min_lr"].get<double>();
                if (p.contains("min_delta")) cfg.train.plateau.min_delta = p["min_delta"].get<double>();
            }
            if (t.contains("early_stop")) {
                const json& p = t["early_stop"];
                reject_unknown_keys(p, {"patience", "restore_best", "min_delta"},
                                    "train.early_stop.");
                if (p.contains("patience")) cfg.train.early_stop.patience = p["patience"].get<int>();
                if (p.contains("restore_best")) {
                    cfg.train.early_stop.restore_best = p["restore_best"].get<bool>();
                }
                if (p.contains("min_delta")) {
                    cfg.train.early_stop.min_delta = p["min_delta"].get<double>();
                }
            }
            if (t.contains("adam")) {
                const json& p = t["adam"];
                reject_unknown_keys(p, {"beta1", "beta2", "eps"}, "train.adam.");
                if (p.contains("beta1")) cfg.train.adam.beta1 = p["beta1"].get<double>();
                if (p.contains("beta2")) cfg.train.adam.beta2 = p["beta2"].get<double>();
                if (p.contains("eps")) cfg.train.adam.eps = p["eps"].get<double>();
            }
        }
        if (j.contains("service")) {
            const json& s = j["service"];
            reject_unknown_keys(s, {"listen_address", "port", "max_sessions"}, "service.");
            if (s.contains("listen_address")) cfg.listen_address = s["listen_address"].get<std::string>();
            if (s.contains("port")) cfg.port = s["port"].get<std::uint16_t>();
            if (s.contains("max_sessions")) cfg.max_sessions = s["max_sessions"].get<int>();
        }
        if (j.contains("device")) {
            const json& d = j["device"];
            reject_unknown_keys(d, {"chunk_samples", "gain_uv_per_lsb"}, "device.");
            if (d.contains("chunk_samples")) cfg.chunk_samples = d["chunk_samples"].get<std::size_t>();
            if (d.contains("gain_uv_per_lsb")) cfg.gain_uv_per_lsb = d["gain_uv_per_lsb"].get<double>();
        }
    } catch (const json::exception& e) {
        raise("schema-error", "config " + path.string() + ": " + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Small shared helpers.

EcgRecord read_trace_csv(const std::filesystem::path& path, int sample_rate_hz) {
    if (sample_rate_hz <= 0) {
        // Fall back to a meta.json next to the trace.
        const std::filesystem::path meta = path.parent_path() / "meta.json";
        std::ifstream in(meta);
        if (!in) {
            raise("invalid-parameter",
                  "no --sample-rate given and no meta.json next to " + path.string());
        }
        json j;
        try {
            in >> j;
            sample_rate_hz = j.at("sample_rate_hz").get<int>();
        } catch (const json::exception& e) {
            raise("schema-error", meta.string() + ": " + e.what());
        }
    }
    EcgRecord rec;
    rec.record_id = path.stem().string();
    rec.sample_rate_hz = sample_rate_hz;
    const CsvTable table = read_csv(path, /*has_header=*/false);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (i == 0 && !row.empty() && !parse_double(row[0])) continue;  // header line
        if (row.size() < 2) raise("io-error", path.string() + ": short row");
        const auto mv = parse_double(row[1]);
        if (!mv) raise("io-error", path.string() + ": non-numeric sample");
        rec.samples.push_back(*mv);
    }
    if (rec.samples.empty()) raise("invalid-input", path.string() + ": no samples");
    return rec;
}

void write_trace_csv(const std::filesystem::path& path, const EcgRecord& record) {
    CsvTable table;
    table.header = {"index", "millivolts"};
    table.rows.reserve(record.samples.size());
    for (std::size_t i = 0; i < record.samples.size(); ++i) {
        table.rows.push_back({std::to_string(i), format_double(record.samples[i])});
    }
    write_csv(path, table);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) raise("io-error", "cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) raise("io-error", "failed writing " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise("io-error", "cannot open " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        raise("schema-error", path.string() + ": " + e.what());
    }
}

Tensor2 dataset_to_tensor(const MergedDataset& data) {
    Tensor2 x(data.rows.size(), data.columns.size());
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        for (std::size_t c = 0; c < data.columns.size(); ++c) x.at(r, c) = data.rows[r][c];
    }
    return x;
}

// Extracts features for every loaded record; per-record failures become
// warnings (short or degenerate traces must not sink a whole corpus).
std::vector<FeatureRow> extract_all(const std::vector<EcgRecord>& records, double cutoff_hz,
                                    int order, std::vector<std::string>& warnings) {
    std::vector<FeatureRow> rows;
    for (const EcgRecord& rec : records) {
        if (!rec.label) {
            warnings.push_back(rec.record_id + ": unlabeled record skipped");
            continue;
        }
        try {
            const BiquadCascade filter =
                design_butterworth_lowpass(order, cutoff_hz, rec.sample_rate_hz);
            FeatureRow row;
            row.record_id = rec.record_id;
            row.features = extract_features(rec, filter);
            row.label = *rec.label;
            rows.push_back(std::move(row));
        } catch (const Error& e) {
            warnings.push_back(rec.record_id + ": " + e.what() + " (record skipped)");
        }
    }
    return rows;
}

json metrics_log_to_json(const MetricsLog& log) {
    json out = json::array();
    for (const EpochMetrics& em : log) {
        json e = {
            {"epoch", em.epoch},
            {"train_loss", em.train_loss},
            {"train_accuracy", em.train_accuracy},
            {"val_loss", em.val_loss},
            {"val_accuracy", em.val_accuracy},
            {"lr", em.lr},
        };
        if (std::isfinite(em.val_auc)) {
            e["val_auc"] = em.val_auc;
        } else {
            e["val_auc"] = nullptr;
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::array<std::string, 2> class_names() { return {"Normal", "Abnormal"}; }

// ---------------------------------------------------------------------------
// Subcommand implementations. Each returns the process exit code.

int run_filter(const AppConfig& cfg, const std::string& input, const std::string& output,
               int sample_rate, bool zero_phase) {
    const EcgRecord rec = read_trace_csv(input, sample_rate > 0 ? sample_rate : 0);
    const BiquadCascade filter =
        design_butterworth_lowpass(cfg.order, cfg.cutoff_hz, rec.sample_rate_hz);
    EcgRecord out = rec;
    out.samples = zero_phase ? apply_zero_phase(filter, rec.samples)
                             : apply_filter(filter, rec.samples);
    write_trace_csv(output, out);
    std::cout << "filtered " << rec.samples.size() << " samples (order " << cfg.order
              << ", cutoff " << cfg.cutoff_hz << " Hz, "
              << (zero_phase ? "zero-phase" : "causal") << ") -> " << output << "\n";
    return 0;
}

int run_stats(const AppConfig& cfg, const std::string& demographics, const std::string& ecg_root,
              const std::string& json_out) {
    LoadResult loaded = load_sources(demographics, ecg_root);
    std::vector<std::string> warnings = loaded.warnings;
    const std::vector<FeatureRow> rows =
        extract_all(loaded.records, cfg.cutoff_hz, cfg.order, warnings);
    const MergedDataset merged = merge_and_label(loaded.patients, rows, cfg.seed);
    const DatasetSummary summary = summarize(merged);

    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "rows: " << summary.rows << "\n";
    std::cout << "labels: normal=" << summary.label_counts[0]
              << " abnormal=" << summary.label_counts[1] << "\n";
    for (const ColumnSummary& c : summary.columns) {
        if (c.onehot) {
            std::cout << c.name << ": count=" << c.count_ones << "\n";
        } else {
            std::cout << c.name << ": min=" << format_double(c.min)
                      << " max=" << format_double(c.max) << " mean=" << format_double(c.mean)
                      << " stddev=" << format_double(c.stddev) << "\n";
        }
    }
    if (!json_out.empty()) {
        json j = summary_to_json(summary);
        j["warnings"] = warnings;
        write_json_file(json_out, j);
    }
    return 0;
}

int run_dataset_build(const AppConfig& cfg, const std::string& demographics,
                      const std::string& ecg_root, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    LoadResult loaded = load_sources(demographics, ecg_root);
    std::vector<std::string> warnings = loaded.warnings;
    const std::vector<FeatureRow> rows =
        extract_all(loaded.records, cfg.cutoff_hz, cfg.order, warnings);

    const MergedDataset merged = merge_and_label(loaded.patients, rows, cfg.seed);
    CleanReport clean_report;
    const MergedDataset cleaned = clean(merged, &clean_report);
    const MergedDataset balanced = oversample_minority(cleaned, cfg.seed);
    SplitConfig split_cfg = cfg.split;
    split_cfg.seed = cfg.seed;
    const SplitResult split = stratified_split(balanced, split_cfg);
    const NormalizationStats norm = normalize_fit(split.train);

    const MergedDataset train_n = normalize_apply(norm, split.train);
    const MergedDataset val_n = normalize_apply(norm, split.validation);
    const MergedDataset test_n = normalize_apply(norm, split.test);

    const std::filesystem::path dir(out_dir);
    write_split_csv(dir / "train.csv", train_n);
    write_split_csv(dir / "validation.csv", val_n);
    write_split_csv(dir / "test.csv", test_n);

    auto count_labels = [](const MergedDataset& d) {
        std::array<long long, 2> c{0, 0};
        for (const int l : d.labels) ++c[l];
        return json{{"normal", c[0]}, {"abnormal", c[1]}};
    };
    json columns = json::array();
    for (const ColumnInfo& c : merged.columns) {
        columns.push_back({{"name", c.name},
                           {"onehot", c.onehot},
                           {"source_field", c.source_field},
                           {"category", c.category}});
    }
    const json manifest = {
        {"seed", cfg.seed},
        {"signal", {{"cutoff_hz", cfg.cutoff_hz}, {"order", cfg.order}}},
        {"columns", columns},
        {"normalization",
         {{"mean", norm.mean}, {"stddev", norm.stddev}, {"constant", norm.constant_columns}}},
        {"label_encoding", {{"normal", 0}, {"abnormal", 1}}},
        {"clean",
         {{"dropped_missing", clean_report.dropped_missing},
          {"dropped_duplicate", clean_report.dropped_duplicate},
          {"dropped_outlier", clean_report.dropped_outlier},
          {"skipped_columns", clean_report.skipped_columns}}},
        {"split",
         {{"train_fraction", cfg.split.train_fraction},
          {"test_fraction", cfg.split.test_fraction},
          {"validation_fraction_of_train", cfg.split.validation_fraction_of_train}}},
        {"counts",
         {{"train", count_labels(train_n)},
          {"validation", count_labels(val_n)},
          {"test", count_labels(test_n)}}},
        {"warnings", warnings},
    };
    write_json_file(dir / "manifest.json", manifest);

    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "dataset written to " << out_dir << ": train=" << train_n.rows.size()
              << " validation=" << val_n.rows.size() << " test=" << test_n.rows.size()
              << " columns=" << merged.columns.size() << "\n";
    return 0;
}

int run_train(const AppConfig& cfg, const std::string& data_dir, const std::string& model_path,
              const std::string& metrics_path) {
    const std::filesystem::path dir(data_dir);
    const MergedDataset train = read_split_csv(dir / "train.csv");
    const MergedDataset val = read_split_csv(dir / "validation.csv");
    if (train.columns.size() != val.columns.size()) {
        raise("schema-error", "train and validation column counts differ");
    }

    MlpModel model = MlpModel::create(train.columns.size(), cfg.hidden_widths, cfg.dropout,
                                      derive_seed(cfg.seed, "model-init"));
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const Tensor2 x_train = dataset_to_tensor(train);
    const Tensor2 x_val = dataset_to_tensor(val);
    const MetricsLog log = fit(model, x_train, train.labels, x_val, val.labels, tc);
    save_weights(model, model_path);
    if (!metrics_path.empty()) write_json_file(metrics_path, metrics_log_to_json(log));

    const EpochMetrics& last = log.back();
    double best_val = last.val_loss;
    for (const EpochMetrics& em : log) best_val = std::min(best_val, em.val_loss);
    std::cout << "trained " << log.size() << " epochs; best val_loss "
              << format_double(best_val) << "; final val_accuracy "
              << format_double(last.val_accuracy) << "; model -> " << model_path << "\n";
    return 0;
}

int run_evaluate(const std::string& model_path, const std::string& data_dir,
                 const std::string& split, const std::string& counts_csv,
                 const std::string& report_path, const std::string& table_path) {
    ConfusionMatrix2 matrix;
    json output;
    std::string table_text;

    if (!counts_csv.empty()) {
        // Report arithmetic from explicit counts: "c00,c01,c10,c11"
        // (row-major, rows = true class).
        const std::vector<std::string> parts = split_csv_line(counts_csv);
        if (parts.size() != 4) raise("invalid-parameter", "--from-counts needs 4 integers");
        long long v[4];
        for (int i = 0; i < 4; ++i) {
            const auto p = parse_double(parts[i]);
            if (!p || *p < 0 || *p != std::floor(*p)) {
                raise("invalid-parameter", "--from-counts needs 4 non-negative integers");
            }
            v[i] = static_cast<long long>(*p);
        }
        matrix.class_names = class_names();
        matrix.counts = {{{v[0], v[1]}, {v[2], v[3]}}};
        const ClassificationReport report = classification_report(matrix);
        table_text = render_text(matrix) + "\n" + render_text(report);
        output = {{"confusion", render_json(matrix)}, {"report", render_json(report)}};
    } else {
        if (model_path.empty() || data_dir.empty()) {
            raise("invalid-parameter", "--model and --data are required without --from-counts");
        }
        MlpModel model = load_weights(model_path);
        const MergedDataset data =
            read_split_csv(std::filesystem::path(data_dir) / (split + ".csv"));
        if (data.columns.size() != model.input_dim()) {
            raise("shape-error", "split width does not match model input");
        }
        const Tensor2 x = dataset_to_tensor(data);
        const std::vector<double> probs = predict_proba(model, x);
        std::vector<int> preds(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1 : 0;
        matrix = confusion_matrix(data.labels, preds, class_names());
        const ClassificationReport report = classification_report(matrix);
        table_text = render_text(matrix) + "\n" + render_text(report);
        output = {{"confusion", render_json(matrix)}, {"report", render_json(report)}};
        bool has_both = false;
        {
            bool pos = false, neg = false;
            for (const int y : data.labels) (y == 1 ? pos : neg) = true;
            has_both = pos && neg;
        }
        if (has_both) {
            const double auc = auc_score(data.labels, probs);
            output["auc"] = auc;
            table_text += "\nauc: " + format_double(auc) + "\n";
        }
    }

    std::cout << table_text;
    if (!report_path.empty()) write_json_file(report_path, output);
    if (!table_path.empty()) {
        std::ofstream out(table_path);
        if (!out) raise("io-error", "cannot write " + table_path);
        out << table_text;
    }
    return 0;
}

int run_infer(const std::string& model_path, const std::string& manifest_path,
              const std::string& trace_path, int sample_rate, double age, const std::string& sex,
              const std::vector<std::string>& fields) {
    const json manifest = read_json_file(manifest_path);
    MlpModel model = load_weights(model_path);

    std::vector<ColumnInfo> columns;
    NormalizationStats norm;
    double cutoff = 40.0;
    int order = 4;
    try {
        for (const json& c : manifest.at("columns")) {
            columns.push_back({c.at("name").get<std::string>(), c.at("onehot").get<bool>(),
                               c.at("source_field").get<std::string>(),
                               c.at("category").get<std::string>()});
        }
        norm.mean = manifest.at("normalization").at("mean").get<std::vector<double>>();
        norm.stddev = manifest.at("normalization").at("stddev").get<std::vector<double>>();
        norm.constant_columns =
            manifest.at("normalization").at("constant").get<std::vector<bool>>();
        cutoff = manifest.at("signal").at("cutoff_hz").get<double>();
        order = manifest.at("signal").at("order").get<int>();
    } catch (const json::exception& e) {
        raise("schema-error", manifest_path + ": " + e.what());
    }
    if (columns.size() != model.input_dim()) {
        raise("shape-error", "manifest columns do not match model input");
    }

    // Demographic values from flags.
    std::map<std::string, std::string> demo;
    demo["sex"] = sex;
    for (const std::string& f : fields) {
        const std::size_t eq = f.find('=');
        if (eq == std::string::npos) raise("invalid-parameter", "--field expects key=value");
        demo[f.substr(0, eq)] = f.substr(eq + 1);
    }

    const EcgRecord rec = read_trace_csv(trace_path, sample_rate);
    const BiquadCascade filter = design_butterworth_lowpass(order, cutoff, rec.sample_rate_hz);
    const FeatureVector features = extract_features(rec, filter);
    std::map<std::string, double> feature_map;
    for (const auto& [name, value] : features.items()) feature_map[name] = value;

    std::vector<double> row;
    row.reserve(columns.size());
    for (const ColumnInfo& col : columns) {
        if (col.onehot) {
            const auto it = demo.find(col.source_field);
            row.push_back(it != demo.end() && it->second == col.category ? 1.0 : 0.0);
        } else if (col.name == "age") {
            row.push_back(age);
        } else if (feature_map.count(col.name)) {
            row.push_back(feature_map[col.name]);
        } else {
            const auto it = demo.find(col.name);
            if (it == demo.end()) {
                raise("invalid-parameter", "missing demographic value for column '" + col.name +
                                               "' (use --field " + col.name + "=<value>)");
            }
            const auto v = parse_double(it->second);
            if (!v) raise("invalid-parameter", "column '" + col.name + "' needs a numeric value");
            row.push_back(*v);
        }
    }
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - norm.mean[c]) / norm.stddev[c];

    Tensor2 x(1, row.size());
    for (std::size_t c = 0; c < row.size(); ++c) x.at(0, c) = row[c];
    const double prob = predict_proba(model, x)[0];
    const int label = prob >= 0.5 ? 1 : 0;
    const json result = {
        {"probability_abnormal", prob},
        {"label", label},
        {"label_name", label == 1 ? "Abnormal" : "Normal"},
    };
    std::cout << result.dump() << "\n";
    return 0;
}

int run_simulate(const AppConfig& cfg, const std::string& trace_path, int sample_rate,
                 std::size_t chunk, double gain, const std::string& pacing, double drop_prob,
                 double corrupt_prob, const std::string& device_hex, const std::string& session_hex,
                 const std::string& out_path, const std::string& connect) {
    const EcgRecord rec = read_trace_csv(trace_path, sample_rate);

    DeviceOptions opt;
    opt.chunk_samples = chunk;
    opt.gain_uv_per_lsb = static_cast<float>(gain);
    opt.pacing = pacing == "realtime" ? Pacing::Realtime : Pacing::MaxSpeed;
    opt.faults.drop_prob = drop_prob;
    opt.faults.corrupt_prob = corrupt_prob;
    opt.faults.seed = cfg.seed;
    if (!device_hex.empty()) {
        opt.device_id = id_from_hex(device_hex);
    } else {
        Rng rng(derive_seed(cfg.seed, "device-id"));
        for (auto& b : opt.device_id) b = static_cast<std::uint8_t>(rng.next_below(256));
    }
    if (!session_hex.empty()) {
        opt.session_id = id_from_hex(session_hex);
    } else {
        Rng rng(derive_seed(cfg.seed, "session-id"));
        for (auto& b : opt.session_id) b = static_cast<std::uint8_t>(rng.next_below(256));
    }

    FaultLog log;
    if (!connect.empty()) {
        const std::size_t colon = connect.rfind(':');
        if (colon == std::string::npos) raise("invalid-parameter", "--connect expects host:port");
        const std::string host = connect.substr(0, colon);
        const auto port = parse_double(connect.substr(colon + 1));
        if (!port || *port < 1 || *port > 65535) raise("invalid-parameter", "bad port");
        TcpSink sink(host, static_cast<std::uint16_t>(*port));
        log = simulate_device(rec, opt, [&sink](std::span<const std::uint8_t> b) { sink.send(b); });
    } else if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) raise("io-error", "cannot write " + out_path);
        log = simulate_device(rec, opt, [&out](std::span<const std::uint8_t> b) {
            out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
        });
    } else {
        raise("invalid-parameter", "one of --out or --connect is required");
    }

    const json summary = {
        {"device_id", id_to_hex(opt.device_id)},
        {"session_id", id_to_hex(opt.session_id)},
        {"total_frames", log.total_frames},
        {"dropped", log.dropped},
        {"corrupted", log.corrupted},
    };
    std::cout << summary.dump() << "\n";
    return 0;
}

std::atomic<bool> g_stop_requested{false};

void handle_stop_signal(int) { g_stop_requested.store(true); }

int run_serve(const AppConfig& cfg, const std::string& storage, double duration_s) {
    ServiceConfig sc;
    sc.listen_address = cfg.listen_address;
    sc.port = cfg.port;
    sc.storage_dir = storage;
    sc.max_sessions = cfg.max_sessions;
    IngestService service(sc);
    service.start();
    std::cout << "listening on " << sc.listen_address << ":" << service.port() << "\n"
              << std::flush;

    g_stop_requested.store(false);
    std::signal(SIGINT, handle_stop_signal);
    std::signal(SIGTERM, handle_stop_signal);
    const auto start = std::chrono::steady_clock::now();
    while (!g_stop_requested.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (duration_s > 0.0) {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            if (elapsed.count() >= duration_s) break;
        }
    }
    service.stop();
    const ServiceStats stats = service.stats();
    const json j = {
        {"connections", stats.connections},   {"frames_accepted", stats.frames_accepted},
        {"frames_rejected", stats.frames_rejected}, {"bytes_skipped", stats.bytes_skipped},
        {"sessions", stats.sessions},
    };
    std::cout << j.dump() << "\n";
    return 0;
}

int run_export(const std::string& log_path, const std::string& out_path,
               const std::string& gaps_path) {
    const SessionExport session = export_session(log_path);
    write_trace_csv(out_path, session.record);
    json gaps = json::array();
    for (const SessionGap& g : session.gaps) {
        gaps.push_back({{"first_seq", g.first_seq},
                        {"last_seq", g.last_seq},
                        {"sample_offset", g.sample_offset},
                        {"nominal_samples", g.nominal_samples}});
    }
    const json report = {
        {"session_id", session.record.record_id},
        {"sample_rate_hz", session.record.sample_rate_hz},
        {"samples", session.record.samples.size()},
        {"frames", session.frames},
        {"max_seq", session.max_seq},
        {"complete", session.complete},
        {"gaps", gaps},
    };
    if (!gaps_path.empty()) write_json_file(gaps_path, report);
    std::cout << report.dump() << "\n";
    return 0;
}

int run_synth(const AppConfig& cfg, const std::string& out_dir, int patients, int traces,
              double seconds) {
    if (patients < 2 || traces < 1 || seconds < 4.0) {
        raise("invalid-parameter", "need at least 2 patients, 1 trace per class, 4 s traces");
    }
    const std::filesystem::path root(out_dir);
    std::filesystem::create_directories(root / "ecg" / "normal");
    std::filesystem::create_directories(root / "ecg" / "abnormal");

    Rng rng(derive_seed(cfg.seed, "synth-corpus"));

    CsvTable demo;
    demo.header = {"patient_id", "age", "sex", "smoker", "systolic_bp", "label"};
    for (int p = 0; p < patients; ++p) {
        char id[16];
        std::snprintf(id, sizeof(id), "P%04d", p + 1);
        const double age = 30.0 + rng.next_double() * 55.0;
        const bool abnormal = p % 2 == 1;
        demo.rows.push_back({
            id,
            format_double(std::floor(age * 10.0) / 10.0),
            rng.next_double() < 0.5 ? "F" : "M",
            rng.next_double() < 0.35 ? "yes" : "no",
            std::to_string(100 + static_cast<int>(rng.next_below(80))),
            abnormal ? "abnormal" : "normal",
        });
    }
    write_csv(root / "demographics.csv", demo);

    for (const bool abnormal : {false, true}) {
        const std::filesystem::path dir = root / "ecg" / (abnormal ? "abnormal" : "normal");
        write_json_file(dir / "meta.json", json{{"sample_rate_hz", cfg.sample_rate_hz}});
        for (int t = 0; t < traces; ++t) {
            SynthEcgOptions so;
            so.sample_rate_hz = cfg.sample_rate_hz;
            so.seconds = seconds;
            so.seed = derive_seed(cfg.seed, (abnormal ? "trace-abnormal-" : "trace-normal-") +
                                                std::to_string(t));
            so.noise_snr_db = 25.0;
            so.baseline_wander_mv = 0.05;
            if (abnormal) {
                so.mean_bpm = 55.0 + 50.0 * rng.next_double();
                so.rr_jitter_frac = 0.18;
                so.qrs_sigma_ms = 22.0 + 8.0 * rng.next_double();
                so.qrs_amp_mv = 0.8 + 0.5 * rng.next_double();
            } else {
                so.mean_bpm = 62.0 + 20.0 * rng.next_double();
                so.rr_jitter_frac = 0.03;
                so.qrs_sigma_ms = 11.0 + 2.0 * rng.next_double();
                so.qrs_amp_mv = 1.0 + 0.3 * rng.next_double();
            }
            const SynthEcg synth = synth_ecg(so);
            char name[32];
            std::snprintf(name, sizeof(name), "rec%03d.csv", t + 1);
            write_trace_csv(dir / name, synth.record);
        }
    }
    std::cout << "sample corpus written to " << out_dir << " (" << patients << " patients, "
              << traces << " traces per class)\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    try {
        // Phase 1: locate --config to seed option defaults.
        AppConfig cfg;
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                cfg = load_config(argv[i + 1]);
                break;
            }
            if (arg.rfind("--config=", 0) == 0) {
                cfg = load_config(arg.substr(9));
                break;
            }
        }

        CLI::App app{"Remote ECG monitoring toolkit", "ecgmon"};
        app.set_version_flag("--version", kVersionString);
        app.require_subcommand(1);
        std::string config_path;
        app.add_option("--config", config_path, "JSON configuration file")
            ->expected(1);

        // Options shared by several subcommands; each subcommand gets its own
        // storage bound to config defaults.
        auto add_seed = [&cfg](CLI::App* sub) {
            sub->add_option("--seed", cfg.seed, "Global random seed")->capture_default_str();
            sub->add_option("--config", "JSON configuration file (parsed before flags)")
                ->expected(1);
        };

        // --- filter ---
        auto* filter_cmd = app.add_subcommand("filter", "Low-pass filter a trace CSV");
        std::string f_input, f_output;
        int f_rate = 0;
        bool f_zero_phase = false;
        filter_cmd->add_option("--input", f_input, "Input trace CSV")->required();
        filter_cmd->add_option("--output", f_output, "Output trace CSV")->required();
        filter_cmd->add_option("--sample-rate", f_rate, "Sample rate in Hz (else meta.json)");
        filter_cmd->add_option("--cutoff", cfg.cutoff_hz, "Cutoff frequency in Hz")
            ->capture_default_str();
        filter_cmd->add_option("--order", cfg.order, "Filter order (even, 2..16)")
            ->capture_default_str();
        filter_cmd->add_flag("--zero-phase", f_zero_phase, "Forward-backward filtering");
        add_seed(filter_cmd);

        // --- stats ---
        auto* stats_cmd = app.add_subcommand("stats", "Dataset summary statistics");
        std::string s_demo, s_root, s_json;
        stats_cmd->add_option("--demographics", s_demo, "Demographics CSV")->required();
        stats_cmd->add_option("--ecg-root", s_root, "Directory with normal/ and abnormal/")
            ->required();
        stats_cmd->add_option("--json", s_json, "Also write the summary as JSON");
        stats_cmd->add_option("--cutoff", cfg.cutoff_hz, "Cutoff frequency in Hz")
            ->capture_default_str();
        stats_cmd->add_option("--order", cfg.order, "Filter order")->capture_default_str();
        add_seed(stats_cmd);

        // --- dataset build ---
        auto* dataset_cmd = app.add_subcommand("dataset", "Dataset pipeline");
        dataset_cmd->require_subcommand(1);
        auto* build_cmd = dataset_cmd->add_subcommand("build", "Build train/validation/test splits");
        std::string b_demo, b_root, b_out;
        build_cmd->add_option("--demographics", b_demo, "Demographics CSV")->required();
        build_cmd->add_option("--ecg-root", b_root, "Directory with normal/ and abnormal/")
            ->required();
        build_cmd->add_option("--out", b_out, "Output directory")->required();
        build_cmd->add_option("--cutoff", cfg.cutoff_hz, "Cutoff frequency in Hz")
            ->capture_default_str();
        build_cmd->add_option("--order", cfg.order, "Filter order")->capture_default_str();
        build_cmd->add_option("--train-fraction", cfg.split.train_fraction, "Train fraction")
            ->capture_default_str();
        build_cmd->add_option("--test-fraction", cfg.split.test_fraction, "Test fraction")
            ->capture_default_str();
        build_cmd
            ->add_option("--validation-fraction", cfg.split.validation_fraction_of_train,
                         "Validation fraction of the train split")
            ->capture_default_str();
        add_seed(build_cmd);

        // --- train ---
        auto* train_cmd = app.add_subcommand("train", "Train the classifier");
        std::string t_data, t_model, t_metrics;
        train_cmd->add_option("--data", t_data, "Directory with train/validation CSVs")->required();
        train_cmd->add_option("--model", t_model, "Output weights file")->required();
        train_cmd->add_option("--metrics", t_metrics, "Write the per-epoch metrics log JSON");
        train_cmd->add_option("--epochs", cfg.train.max_epochs, "Maximum epochs")
            ->capture_default_str();
        train_cmd->add_option("--batch-size", cfg.train.batch_size, "Mini-batch size")
            ->capture_default_str();
        train_cmd->add_option("--lr", cfg.train.initial_lr, "Initial learning rate")
            ->capture_default_str();
        train_cmd->add_option("--dropout", cfg.dropout, "Dropout rate")->capture_default_str();
        add_seed(train_cmd);

        // --- evaluate ---
        auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model or raw counts");
        std::string e_model, e_data, e_split = "test", e_counts, e_report, e_table;
        eval_cmd->add_option("--model", e_model, "Weights file");
        eval_cmd->add_option("--data", e_data, "Directory with split CSVs");
        eval_cmd->add_option("--split", e_split, "Split name (train/validation/test)")
            ->capture_default_str();
        eval_cmd->add_option("--from-counts", e_counts,
                             "Confusion counts 'c00,c01,c10,c11' (rows = true class)");
        eval_cmd->add_option("--report", e_report, "Write the JSON report here");
        eval_cmd->add_option("--table", e_table, "Write the text tables here");
        add_seed(eval_cmd);

        // --- infer ---
        auto* infer_cmd = app.add_subcommand("infer", "Classify one trace");
        std::string i_model, i_manifest, i_trace, i_sex;
        int i_rate = 0;
        double i_age = 0.0;
        std::vector<std::string> i_fields;
        infer_cmd->add_option("--model", i_model, "Weights file")->required();
        infer_cmd->add_option("--manifest", i_manifest, "manifest.json from dataset build")
            ->required();
        infer_cmd->add_option("--trace", i_trace, "Trace CSV")->required();
        infer_cmd->add_option("--sample-rate", i_rate, "Sample rate in Hz (else meta.json)");
        infer_cmd->add_option("--age", i_age, "Patient age")->required();
        infer_cmd->add_option("--sex", i_sex, "Patient sex")->required();
        infer_cmd->add_option("--field", i_fields, "Extra demographic value key=value");
        add_seed(infer_cmd);

        // --- simulate ---
        auto* sim_cmd = app.add_subcommand("simulate", "Stream a trace as telemetry frames");
        std::string m_trace, m_pacing = "max-speed", m_device, m_session, m_out, m_connect;
        int m_rate = 0;
        double m_drop = 0.0, m_corrupt = 0.0;
        sim_cmd->add_option("--trace", m_trace, "Trace CSV")->required();
        sim_cmd->add_option("--sample-rate", m_rate, "Sample rate in Hz (else meta.json)");
        sim_cmd->add_option("--chunk", cfg.chunk_samples, "Samples per frame (1..=1024)")
            ->capture_default_str();
        sim_cmd->add_option("--gain", cfg.gain_uv_per_lsb, "Microvolts per ADC count")
            ->capture_default_str();
        sim_cmd->add_option("--pacing", m_pacing, "realtime or max-speed")->capture_default_str();
        sim_cmd->add_option("--drop-prob", m_drop, "Frame drop probability");
        sim_cmd->add_option("--corrupt-prob", m_corrupt, "Frame corruption probability");
        sim_cmd->add_option("--device-id", m_device, "16 hex digits");
        sim_cmd->add_option("--session-id", m_session, "16 hex digits");
        sim_cmd->add_option("--out", m_out, "Write the byte stream to this file");
        sim_cmd->add_option("--connect", m_connect, "Stream to host:port");
        add_seed(sim_cmd);

        // --- serve ---
        auto* serve_cmd = app.add_subcommand("serve", "Run the telemetry ingestion service");
        std::string v_storage;
        double v_duration = 0.0;
        serve_cmd->add_option("--storage", v_storage, "Session log directory")->required();
        serve_cmd->add_option("--listen", cfg.listen_address, "Listen address")
            ->capture_default_str();
        serve_cmd->add_option("--port", cfg.port, "Listen port (0 = ephemeral)")
            ->capture_default_str();
        serve_cmd->add_option("--max-sessions", cfg.max_sessions, "Concurrent connection bound")
            ->capture_default_str();
        serve_cmd->add_option("--duration-s", v_duration,
                              "Stop automatically after this many seconds (0 = until SIGINT)");
        add_seed(serve_cmd);

        // --- export ---
        auto* export_cmd = app.add_subcommand("export", "Convert a session log to a trace CSV");
        std::string x_log, x_out, x_gaps;
        export_cmd->add_option("--log", x_log, "Session .eclog file")->required();
        export_cmd->add_option("--out", x_out, "Output trace CSV")->required();
        export_cmd->add_option("--gaps", x_gaps, "Write the gap report JSON here");
        add_seed(export_cmd);

        // --- synth ---
        auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic sample corpus");
        std::string y_out;
        int y_patients = 24, y_traces = 30;
        double y_seconds = 12.0;
        synth_cmd->add_option("--out", y_out, "Output directory")->required();
        synth_cmd->add_option("--patients", y_patients, "Patient count")->capture_default_str();
        synth_cmd->add_option("--traces-per-class", y_traces, "Traces per class")
            ->capture_default_str();
        synth_cmd->add_option("--seconds", y_seconds, "Trace duration in seconds")
            ->capture_default_str();
        synth_cmd->add_option("--sample-rate", cfg.sample_rate_hz, "Sample rate in Hz")
            ->capture_default_str();
        add_seed(synth_cmd);

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        if (filter_cmd->parsed()) return run_filter(cfg, f_input, f_output, f_rate, f_zero_phase);
        if (stats_cmd->parsed()) return run_stats(cfg, s_demo, s_root, s_json);
        if (dataset_cmd->parsed()) return run_dataset_build(cfg, b_demo, b_root, b_out);
        if (train_cmd->parsed()) return run_train(cfg, t_data, t_model, t_metrics);
        if (eval_cmd->parsed()) {
            return run_evaluate(e_model, e_data, e_split, e_counts, e_report, e_table);
        }
        if (infer_cmd->parsed()) {
            return run_infer(i_model, i_manifest, i_trace, i_rate, i_age, i_sex, i_fields);
        }
        if (sim_cmd->parsed()) {
            return run_simulate(cfg, m_trace, m_rate, cfg.chunk_samples, cfg.gain_uv_per_lsb,
                                m_pacing, m_drop, m_corrupt, m_device, m_session, m_out, m_connect);
        }
        if (serve_cmd->parsed()) return run_serve(cfg, v_storage, v_duration);
        if (export_cmd->parsed()) return run_export(x_log, x_out, x_gaps);
        if (synth_cmd->parsed()) return run_synth(cfg, y_out, y_patients, y_traces, y_seconds);
        return 2;
    } catch (const Error& e) {
        std::cerr << "ecgmon: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ecgmon: error: internal: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ecgmon
