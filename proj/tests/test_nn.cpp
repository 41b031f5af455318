#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "ecgmon/error.hpp"
#include "ecgmon/nn.hpp"
#include "ecgmon/rng.hpp"

using namespace ecgmon;
namespace fs = std::filesystem;

namespace {

std::string code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

Tensor2 random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Tensor2 x(rows, cols);
    for (double& v : x.data) v = rng.normal();
    return x;
}

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> y(n);
    for (int& v : y) v = rng.next_double() < 0.5 ? 0 : 1;
    return y;
}

// Separable two-blob problem.
void make_blobs(std::size_t n, std::size_t d, double sep, std::uint64_t seed, Tensor2& x,
                std::vector<int>& y) {
    Rng rng(seed);
    x = Tensor2(n, d);
    y.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = r % 2 ? 1 : 0;
        const double mu = y[r] ? sep : -sep;
        for (std::size_t c = 0; c < d; ++c) x.at(r, c) = mu + rng.normal();
    }
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("model construction shapes and validation") {
    const MlpModel model = MlpModel::create(12, {32, 16, 8}, 0.3, 1);
    REQUIRE(model.blocks.size() == 3);
    CHECK(model.blocks[0].dense.in == 12);
    CHECK(model.blocks[0].dense.out == 32);
    CHECK(model.blocks[2].dense.out == 8);
    CHECK(model.output.in == 8);
    CHECK(model.output.out == 1);
    CHECK(model.input_dim() == 12);
    CHECK(model.blocks[0].norm.gamma == std::vector<double>(32, 1.0));
    CHECK(model.blocks[0].norm.running_var == std::vector<double>(32, 1.0));

    CHECK(MlpModel::default_widths() == std::vector<std::size_t>{256, 128, 64, 32, 16, 8, 4});

    CHECK(code_of([] { MlpModel::create(0, {8}, 0.3, 1); }) == "invalid-parameter");
    CHECK(code_of([] { MlpModel::create(4, {}, 0.3, 1); }) == "invalid-parameter");
    CHECK(code_of([] { MlpModel::create(4, {8, 0}, 0.3, 1); }) == "invalid-parameter");
    CHECK(code_of([] { MlpModel::create(4, {8}, 1.0, 1); }) == "invalid-parameter");
    CHECK(code_of([] { MlpModel::create(4, {8}, -0.1, 1); }) == "invalid-parameter");
}

TEST_CASE("initialization is deterministic in the seed") {
    const MlpModel a = MlpModel::create(6, {16, 8}, 0.3, 42);
    const MlpModel b = MlpModel::create(6, {16, 8}, 0.3, 42);
    const MlpModel c = MlpModel::create(6, {16, 8}, 0.3, 43);
    CHECK(a.blocks[0].dense.weights.data == b.blocks[0].dense.weights.data);
    CHECK(a.output.weights.data == b.output.weights.data);
    CHECK(a.blocks[0].dense.weights.data != c.blocks[0].dense.weights.data);
}

TEST_CASE("train-mode batchnorm standardizes each feature of the batch") {
    MlpModel model = MlpModel::create(5, {7}, 0.0, 3);
    const Tensor2 x = random_batch(64, 5, 11);
    Rng drop(1);
    const ForwardCache cache = forward(model, x, RunMode::Train, &drop);
    REQUIRE(cache.blocks.size() == 1);
    const Tensor2& bn = cache.blocks[0].bn_out;  // gamma=1, beta=0 at init
    for (std::size_t c = 0; c < bn.cols; ++c) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < bn.rows; ++r) {
            sum += bn.at(r, c);
            sq += bn.at(r, c) * bn.at(r, c);
        }
        const double mean = sum / static_cast<double>(bn.rows);
        const double var = sq / static_cast<double>(bn.rows) - mean * mean;
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps skews slightly
    }
    CHECK(cache.probabilities.size() == 64);
    for (double p : cache.probabilities) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("forward validation") {
    MlpModel model = MlpModel::create(4, {8}, 0.3, 1);
    Rng rng(1);
    CHECK(code_of([&] { forward(model, random_batch(1, 4, 2), RunMode::Train, &rng); }) ==
          "degenerate-batch");
    CHECK(code_of([&] { forward(model, random_batch(4, 3, 2), RunMode::Train, &rng); }) ==
          "shape-error");
    CHECK(code_of([&] { forward(model, random_batch(4, 4, 2), RunMode::Train, nullptr); }) ==
          "invalid-parameter");
    CHECK_NOTHROW(forward(model, random_batch(1, 4, 2), RunMode::Infer));
}

TEST_CASE("inverted dropout zeroes at the configured rate and rescales survivors") {
    MlpModel model = MlpModel::create(8, {64}, 0.5, 21);
    const Tensor2 x = random_batch(128, 8, 5);
    Rng drop(99);
    const ForwardCache cache = forward(model, x, RunMode::Train, &drop);
    const Tensor2& mask = cache.blocks[0].drop_mask;
    std::size_t zeros = 0;
    for (double m : mask.data) {
        CHECK((m == 0.0 || m == 2.0));
        zeros += m == 0.0;
    }
    const double rate = static_cast<double>(zeros) / static_cast<double>(mask.data.size());
    CHECK(rate == doctest::Approx(0.5).epsilon(0.10));

    // Infer mode: no dropout, deterministic output.
    const ForwardCache a = forward(model, x, RunMode::Infer);
    const ForwardCache b = forward(model, x, RunMode::Infer);
    CHECK(a.probabilities == b.probabilities);
}

TEST_CASE("bce loss reference values and validation") {
    CHECK(bce_loss({0.5}, {1}) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(bce_loss({0.9, 0.2}, {1, 0}) == doctest::Approx(0.164252033486018).epsilon(1e-12));
    // Clamping keeps a confident miss finite.
    CHECK(std::isfinite(bce_loss({1.0}, {0})));
    CHECK(code_of([] { bce_loss({0.5}, {1, 0}); }) == "shape-error");
    CHECK(code_of([] { bce_loss({0.5}, {2}); }) == "class-mismatch");
}

TEST_CASE("analytic gradients match central differences") {
    const Tensor2 x = random_batch(12, 6, 31);
    const std::vector<int> y = random_labels(12, 32);

    SUBCASE("dropout disabled") {
        const MlpModel model = MlpModel::create(6, {16, 8, 4}, 0.0, 123);
        CHECK(gradient_check(model, x, y, 1e-5) < 1e-6);
    }
    SUBCASE("dropout active with a frozen mask") {
        const MlpModel model = MlpModel::create(6, {16, 8, 4}, 0.3, 123);
        CHECK(gradient_check(model, x, y, 1e-5) < 1e-6);
    }
    SUBCASE("single block") {
        const MlpModel model = MlpModel::create(6, {5}, 0.0, 9);
        CHECK(gradient_check(model, x, y, 1e-5) < 1e-6);
    }
}

TEST_CASE("fit learns a separable problem and keeps the metrics log consistent") {
    Tensor2 x;
    std::vector<int> y;
    make_blobs(64, 8, 2.0, 71, x, y);
    MlpModel model = MlpModel::create(8, {32, 16}, 0.3, 7);
    TrainConfig cfg;
    cfg.max_epochs = 300;
    cfg.seed = 7;
    const MetricsLog log = fit(model, x, y, x, y, cfg);
    REQUIRE(!log.empty());

    bool hit_full_accuracy = false;
    double min_val = log[0].val_loss;
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].epoch == static_cast<int>(i) + 1);
        CHECK(std::isfinite(log[i].train_loss));
        if (i > 0) CHECK(log[i].lr <= log[i - 1].lr + 1e-15);
        hit_full_accuracy |= log[i].train_accuracy == 1.0;
        min_val = std::min(min_val, log[i].val_loss);
    }
    CHECK(hit_full_accuracy);
    // restore_best leaves the model at the logged optimum.
    const double restored = bce_loss(predict_proba(model, x), y);
    CHECK(std::abs(restored - min_val) <= 1e-12);

    // predict applies the 0.5 threshold to predict_proba.
    const std::vector<double> probs = predict_proba(model, x);
    const std::vector<int> preds = predict(model, x);
    for (std::size_t i = 0; i < preds.size(); ++i) CHECK(preds[i] == (probs[i] >= 0.5 ? 1 : 0));
}

TEST_CASE("fit is deterministic in the seed") {
    Tensor2 x;
    std::vector<int> y;
    make_blobs(40, 6, 1.0, 13, x, y);
    TrainConfig cfg;
    cfg.max_epochs = 12;
    cfg.early_stop.patience = 100;
    cfg.seed = 5;

    MlpModel m1 = MlpModel::create(6, {16, 8}, 0.3, 99);
    MlpModel m2 = MlpModel::create(6, {16, 8}, 0.3, 99);
    const MetricsLog l1 = fit(m1, x, y, x, y, cfg);
    const MetricsLog l2 = fit(m2, x, y, x, y, cfg);
    REQUIRE(l1.size() == l2.size());
    for (std::size_t i = 0; i < l1.size(); ++i) {
        CHECK(l1[i].train_loss == l2[i].train_loss);
        CHECK(l1[i].val_loss == l2[i].val_loss);
        CHECK(l1[i].lr == l2[i].lr);
    }
    CHECK(m1.blocks[0].dense.weights.data == m2.blocks[0].dense.weights.data);
    CHECK(m1.output.weights.data == m2.output.weights.data);
}

TEST_CASE("fit validation") {
    Tensor2 x;
    std::vector<int> y;
    make_blobs(10, 4, 1.0, 3, x, y);
    MlpModel model = MlpModel::create(4, {8}, 0.3, 1);
    TrainConfig cfg;
    CHECK(code_of([&] { fit(model, Tensor2(0, 4), {}, x, y, cfg); }) == "invalid-input");
    CHECK(code_of([&] { fit(model, x, std::vector<int>(9, 0), x, y, cfg); }) == "shape-error");
    TrainConfig bad = cfg;
    bad.batch_size = 0;
    CHECK(code_of([&] { fit(model, x, y, x, y, bad); }) == "invalid-parameter");
}

TEST_CASE("weights round-trip through the container bit-exactly") {
    TempDir tmp("ecgmon-test-nn");
    Tensor2 x;
    std::vector<int> y;
    make_blobs(32, 5, 1.5, 17, x, y);
    MlpModel model = MlpModel::create(5, {16, 8}, 0.25, 3);
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.early_stop.patience = 100;
    cfg.seed = 3;
    fit(model, x, y, x, y, cfg);  // give running stats non-trivial values

    const fs::path p1 = tmp.path / "model.mlpw";
    const fs::path p2 = tmp.path / "model2.mlpw";
    save_weights(model, p1);
    MlpModel loaded = load_weights(p1);
    save_weights(loaded, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));

    // Inference parity on fresh data.
    const Tensor2 probe = random_batch(16, 5, 55);
    CHECK(predict_proba(model, probe) == predict_proba(loaded, probe));

    // Structure round-trips too.
    REQUIRE(loaded.blocks.size() == model.blocks.size());
    CHECK(loaded.blocks[1].norm.running_mean == model.blocks[1].norm.running_mean);
    CHECK(loaded.blocks[1].norm.momentum == model.blocks[1].norm.momentum);
    CHECK(loaded.output.weights.data == model.output.weights.data);
}

TEST_CASE("weights container rejects damage") {
    TempDir tmp("ecgmon-test-nn-bad");
    MlpModel model = MlpModel::create(4, {8}, 0.3, 1);
    const fs::path path = tmp.path / "w.mlpw";
    save_weights(model, path);
    std::vector<std::uint8_t> bytes = read_bytes(path);

    SUBCASE("flipped payload byte fails the checksum") {
        bytes[bytes.size() / 2] ^= 0x40;
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        CHECK(code_of([&] { load_weights(path); }) == "format-error");
    }
    SUBCASE("truncation") {
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size() / 2));
        CHECK(code_of([&] { load_weights(path); }) == "format-error");
    }
    SUBCASE("wrong magic") {
        bytes[0] = 'X';
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        CHECK(code_of([&] { load_weights(path); }) == "format-error");
    }
    SUBCASE("unknown format version") {
        bytes[4] = 2;  // u16 LE version field follows the magic
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        CHECK(code_of([&] { load_weights(path); }) == "version-error");
    }
    SUBCASE("missing file") {
        CHECK(code_of([&] { load_weights(tmp.path / "nope.mlpw"); }) == "io-error");
    }
}
