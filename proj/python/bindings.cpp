// Python bindings for the ecgmon core: filtering, feature extraction,
// evaluation metrics, the classifier, and the telemetry codec.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "ecgmon/crc32.hpp"
#include "ecgmon/error.hpp"
#include "ecgmon/features.hpp"
#include "ecgmon/metrics.hpp"
#include "ecgmon/nn.hpp"
#include "ecgmon/signal.hpp"
#include "ecgmon/synth.hpp"
#include "ecgmon/telemetry.hpp"

namespace py = pybind11;
using namespace ecgmon;

namespace {

EcgRecord make_record(const std::vector<double>& samples, int sample_rate_hz) {
    EcgRecord rec;
    rec.record_id = "py";
    rec.sample_rate_hz = sample_rate_hz;
    rec.samples = samples;
    return rec;
}

std::array<std::uint8_t, 8> to_id(const py::bytes& raw, const char* what) {
    const std::string s = raw;
    if (s.size() != 8) raise("invalid-parameter", std::string(what) + " must be 8 bytes");
    std::array<std::uint8_t, 8> id{};
    std::memcpy(id.data(), s.data(), 8);
    return id;
}

Tensor2 to_tensor(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) raise("empty-dataset", "need at least one row");
    Tensor2 x(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != x.cols) raise("shape-error", "ragged feature rows");
        for (std::size_t c = 0; c < x.cols; ++c) x.at(r, c) = rows[r][c];
    }
    return x;
}

py::dict report_to_dict(const ClassificationReport& rep) {
    py::dict out;
    py::list per_class;
    for (int c = 0; c < 2; ++c) {
        py::dict cm;
        cm["name"] = rep.class_names[c];
        cm["precision"] = rep.per_class[c].precision;
        cm["recall"] = rep.per_class[c].recall;
        cm["f1"] = rep.per_class[c].f1;
        cm["support"] = rep.per_class[c].support;
        per_class.append(cm);
    }
    out["per_class"] = per_class;
    out["accuracy"] = rep.accuracy;
    out["macro_avg"] = py::dict(py::arg("precision") = rep.macro_avg.precision,
                                py::arg("recall") = rep.macro_avg.recall,
                                py::arg("f1") = rep.macro_avg.f1);
    out["weighted_avg"] = py::dict(py::arg("precision") = rep.weighted_avg.precision,
                                   py::arg("recall") = rep.weighted_avg.recall,
                                   py::arg("f1") = rep.weighted_avg.f1);
    out["total"] = rep.total;
    out["flags"] = rep.flags;
    return out;
}

}  // namespace

PYBIND11_MODULE(_ecgmon, m) {
    m.doc() = "ECG monitoring core: filters, features, metrics, classifier, telemetry";

    py::register_exception<Error>(m, "EcgmonError", PyExc_ValueError);

    // --- signal ---------------------------------------------------------
    py::class_<BiquadCascade>(m, "BiquadCascade")
        .def_readonly("sample_rate_hz", &BiquadCascade::sample_rate_hz)
        .def_readonly("cutoff_hz", &BiquadCascade::cutoff_hz)
        .def_readonly("order", &BiquadCascade::order)
        .def("magnitude_at", &BiquadCascade::magnitude_at, py::arg("freq_hz"))
        .def_property_readonly("sections",
                               [](const BiquadCascade& f) {
                                   py::list out;
                                   for (const BiquadSection& s : f.sections) {
                                       out.append(py::make_tuple(s.b0, s.b1, s.b2, s.a1, s.a2));
                                   }
                                   return out;
                               })
        .def("__repr__", [](const BiquadCascade& f) {
            return "BiquadCascade(order=" + std::to_string(f.order) +
                   ", cutoff_hz=" + std::to_string(f.cutoff_hz) + ")";
        });

    m.def("butterworth_lowpass", &design_butterworth_lowpass, py::arg("order"),
          py::arg("cutoff_hz"), py::arg("sample_rate_hz"),
          "Design an even-order Butterworth low-pass filter as biquad sections.");
    m.def(
        "apply_filter",
        [](const BiquadCascade& f, const std::vector<double>& x) { return apply_filter(f, x); },
        py::arg("filter"), py::arg("samples"), "Single causal pass through the cascade.");
    m.def(
        "apply_zero_phase",
        [](const BiquadCascade& f, const std::vector<double>& x) {
            return apply_zero_phase(f, x);
        },
        py::arg("filter"), py::arg("samples"),
        "Zero-phase (forward-backward) filtering.");

    // --- features ---------------------------------------------------------
    m.def(
        "detect_r_peaks",
        [](const std::vector<double>& samples, int sample_rate_hz) {
            return detect_r_peaks(make_record(samples, sample_rate_hz)).indices;
        },
        py::arg("samples"), py::arg("sample_rate_hz"),
        "QRS detection; returns R-peak sample indices.");
    m.def(
        "extract_features",
        [](const std::vector<double>& samples, int sample_rate_hz, double cutoff_hz, int order) {
            const BiquadCascade filt =
                design_butterworth_lowpass(order, cutoff_hz, sample_rate_hz);
            py::dict out;
            for (const auto& [name, value] :
                 extract_features(make_record(samples, sample_rate_hz), filt).items()) {
                out[py::str(name)] = value;
            }
            return out;
        },
        py::arg("samples"), py::arg("sample_rate_hz"), py::arg("cutoff_hz") = 40.0,
        py::arg("order") = 4, "Named feature vector for one trace.");
    m.def("feature_names", [] { return FeatureVector::core_names(); },
          "The ten core feature names in canonical order.");

    // --- metrics ----------------------------------------------------------
    m.def(
        "classification_report",
        [](const std::array<std::array<long long, 2>, 2>& counts,
           const std::array<std::string, 2>& class_names) {
            ConfusionMatrix2 mx;
            mx.counts = counts;
            mx.class_names = class_names;
            return report_to_dict(classification_report(mx));
        },
        py::arg("counts"), py::arg("class_names") = std::array<std::string, 2>{"0", "1"},
        "Precision/recall/F1/accuracy report from a 2x2 confusion matrix.");
    m.def(
        "confusion_matrix",
        [](const std::vector<int>& y_true, const std::vector<int>& y_pred) {
            const ConfusionMatrix2 mx = confusion_matrix(y_true, y_pred);
            return mx.counts;
        },
        py::arg("y_true"), py::arg("y_pred"));
    m.def("auc_score", &auc_score, py::arg("y_true"), py::arg("scores"),
          "Tie-aware area under the ROC curve.");
    m.def("round2_half_up", &round2_half_up, py::arg("value"));

    // --- classifier ---------------------------------------------------------
    py::class_<MlpModel>(m, "Model")
        .def_property_readonly("input_dim", &MlpModel::input_dim)
        .def_property_readonly("hidden_widths",
                               [](const MlpModel& model) {
                                   std::vector<std::size_t> widths;
                                   for (const HiddenBlock& b : model.blocks) {
                                       widths.push_back(b.dense.out);
                                   }
                                   return widths;
                               })
        .def(
            "predict_proba",
            [](MlpModel& model, const std::vector<std::vector<double>>& rows) {
                return predict_proba(model, to_tensor(rows));
            },
            py::arg("rows"))
        .def(
            "predict",
            [](MlpModel& model, const std::vector<std::vector<double>>& rows, double threshold) {
                return predict(model, to_tensor(rows), threshold);
            },
            py::arg("rows"), py::arg("threshold") = 0.5)
        .def(
            "save",
            [](const MlpModel& model, const std::filesystem::path& path) {
                save_weights(model, path);
            },
            py::arg("path"))
        .def("__repr__", [](const MlpModel& model) {
            return "Model(input_dim=" + std::to_string(model.input_dim()) + ", blocks=" +
                   std::to_string(model.blocks.size()) + ")";
        });

    m.def("load_model", &load_weights, py::arg("path"), "Load a saved weights file.");
    m.def(
        "train_model",
        [](const std::vector<std::vector<double>>& x_train, const std::vector<int>& y_train,
           const std::vector<std::vector<double>>& x_val, const std::vector<int>& y_val,
           std::vector<std::size_t> hidden_widths, double dropout, int max_epochs,
           double initial_lr, std::size_t batch_size, std::uint64_t seed) {
            if (hidden_widths.empty()) hidden_widths = MlpModel::default_widths();
            const Tensor2 xt = to_tensor(x_train);
            MlpModel model = MlpModel::create(xt.cols, hidden_widths, dropout,
                                              derive_seed(seed, "model-init"));
            TrainConfig tc;
            tc.max_epochs = max_epochs;
            tc.initial_lr = initial_lr;
            tc.batch_size = batch_size;
            tc.seed = seed;
            const MetricsLog log = fit(model, xt, y_train, to_tensor(x_val), y_val, tc);
            py::list history;
            for (const EpochMetrics& em : log) {
                py::dict e;
                e["epoch"] = em.epoch;
                e["train_loss"] = em.train_loss;
                e["train_accuracy"] = em.train_accuracy;
                e["val_loss"] = em.val_loss;
                e["val_accuracy"] = em.val_accuracy;
                e["val_auc"] = em.val_auc;
                e["lr"] = em.lr;
                history.append(e);
            }
            return py::make_tuple(std::move(model), history);
        },
        py::arg("x_train"), py::arg("y_train"), py::arg("x_val"), py::arg("y_val"),
        py::arg("hidden_widths") = std::vector<std::size_t>{}, py::arg("dropout") = 0.3,
        py::arg("max_epochs") = 200, py::arg("initial_lr") = 1e-3, py::arg("batch_size") = 32,
        py::arg("seed") = 0,
        "Train a classifier; returns (model, per-epoch metrics).");

    // --- telemetry ---------------------------------------------------------
    m.def(
        "crc32",
        [](const py::bytes& raw) {
            const std::string s = raw;
            return crc32(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
        },
        py::arg("data"), "CRC-32 (zlib-compatible).");
    m.def("quantize", &quantize_samples, py::arg("millivolts"), py::arg("gain_uv_per_lsb"),
          "Millivolts to int16 ADC counts.");
    m.def("dequantize", &dequantize_samples, py::arg("counts"), py::arg("gain_uv_per_lsb"),
          "Int16 ADC counts back to millivolts.");
    m.def(
        "encode_frame",
        [](const py::bytes& device_id, const py::bytes& session_id, std::uint32_t seq,
           std::uint16_t sample_rate_hz, float gain_uv_per_lsb,
           const std::vector<std::int16_t>& samples, bool end_of_session) {
            TelemetryFrame f;
            f.device_id = to_id(device_id, "device_id");
            f.session_id = to_id(session_id, "session_id");
            f.sequence_number = seq;
            f.sample_rate_hz = sample_rate_hz;
            f.gain_uv_per_lsb = gain_uv_per_lsb;
            f.samples = samples;
            if (end_of_session) f.flags |= TelemetryFrame::kFlagEndOfSession;
            const std::vector<std::uint8_t> wire = encode_frame(f);
            return py::bytes(reinterpret_cast<const char*>(wire.data()), wire.size());
        },
        py::arg("device_id"), py::arg("session_id"), py::arg("sequence_number"),
        py::arg("sample_rate_hz"), py::arg("gain_uv_per_lsb"), py::arg("samples"),
        py::arg("end_of_session") = false, "Serialize one telemetry frame.");
    m.def(
        "decode_frame",
        [](const py::bytes& raw) {
            const std::string s = raw;
            const TelemetryFrame f = decode_frame(std::span<const std::uint8_t>(
                reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
            py::dict out;
            out["device_id"] =
                py::bytes(reinterpret_cast<const char*>(f.device_id.data()), 8);
            out["session_id"] =
                py::bytes(reinterpret_cast<const char*>(f.session_id.data()), 8);
            out["sequence_number"] = f.sequence_number;
            out["sample_rate_hz"] = f.sample_rate_hz;
            out["gain_uv_per_lsb"] = f.gain_uv_per_lsb;
            out["samples"] = f.samples;
            out["end_of_session"] = f.end_of_session();
            return out;
        },
        py::arg("data"), "Parse and CRC-verify one telemetry frame.");

    // --- synthesis ---------------------------------------------------------
    m.def(
        "synth_ecg",
        [](double seconds, int sample_rate_hz, double mean_bpm, double bpm_sweep,
           double rr_jitter_frac, double noise_snr_db, double baseline_wander_mv,
           std::uint64_t seed) {
            SynthEcgOptions so;
            so.seconds = seconds;
            so.sample_rate_hz = sample_rate_hz;
            so.mean_bpm = mean_bpm;
            so.bpm_sweep = bpm_sweep;
            so.rr_jitter_frac = rr_jitter_frac;
            so.noise_snr_db = noise_snr_db;
            so.baseline_wander_mv = baseline_wander_mv;
            so.seed = seed;
            const SynthEcg out = synth_ecg(so);
            return py::make_tuple(out.record.samples, out.r_peaks);
        },
        py::arg("seconds") = 10.0, py::arg("sample_rate_hz") = 360,
        py::arg("mean_bpm") = 72.0, py::arg("bpm_sweep") = 0.0,
        py::arg("rr_jitter_frac") = 0.0, py::arg("noise_snr_db") = 0.0,
        py::arg("baseline_wander_mv") = 0.0, py::arg("seed") = 0,
        "Generate a synthetic ECG; returns (samples, true R-peak indices).");
}
