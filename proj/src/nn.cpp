#include "ecgmon/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "ecgmon/crc32.hpp"
#include "ecgmon/error.hpp"
#include "ecgmon/metrics.hpp"

namespace ecgmon {
namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// Flat views over every trainable parameter, in a fixed order shared by the
// optimizer, the gradient check, and the serializer.
std::vector<std::pair<double*, std::size_t>> parameter_spans(MlpModel& model) {
    std::vector<std::pair<double*, std::size_t>> spans;
    for (HiddenBlock& b : model.blocks) {
        spans.emplace_back(b.dense.weights.data.data(), b.dense.weights.data.size());
        spans.emplace_back(b.dense.bias.data(), b.dense.bias.size());
        spans.emplace_back(b.norm.gamma.data(), b.norm.gamma.size());
        spans.emplace_back(b.norm.beta.data(), b.norm.beta.size());
    }
    spans.emplace_back(model.output.weights.data.data(), model.output.weights.data.size());
    spans.emplace_back(model.output.bias.data(), model.output.bias.size());
    return spans;
}

std::vector<std::pair<const double*, std::size_t>> grad_spans(const Gradients& grads) {
    std::vector<std::pair<const double*, std::size_t>> spans;
    for (const BlockGrads& b : grads.blocks) {
        spans.emplace_back(b.dense.weights.data.data(), b.dense.weights.data.size());
        spans.emplace_back(b.dense.bias.data(), b.dense.bias.size());
        spans.emplace_back(b.gamma.data(), b.gamma.size());
        spans.emplace_back(b.beta.data(), b.beta.size());
    }
    spans.emplace_back(grads.output.weights.data.data(), grads.output.weights.data.size());
    spans.emplace_back(grads.output.bias.data(), grads.output.bias.size());
    return spans;
}

void check_labels(const std::vector<int>& labels, std::size_t expected) {
    if (labels.size() != expected) raise("shape-error", "label count does not match batch rows");
    for (const int y : labels) {
        if (y != 0 && y != 1) raise("class-mismatch", "labels must be 0 or 1");
    }
}

}  // namespace

const std::vector<std::size_t>& MlpModel::default_widths() {
    static const std::vector<std::size_t> widths = {256, 128, 64, 32, 16, 8, 4};
    return widths;
}

MlpModel MlpModel::create(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                          double dropout_rate, std::uint64_t seed) {
    if (input_dim == 0) raise("invalid-parameter", "input dimension must be positive");
    if (hidden_widths.empty()) raise("invalid-parameter", "at least one hidden block required");
    for (const std::size_t w : hidden_widths) {
        if (w == 0) raise("invalid-parameter", "hidden widths must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        raise("invalid-parameter", "dropout rate must be in [0, 1)");
    }

    Rng rng(derive_seed(seed, "mlp-init"));
    MlpModel model;
    std::size_t fan_in = input_dim;
    for (const std::size_t width : hidden_widths) {
        HiddenBlock block;
        block.dense.in = fan_in;
        block.dense.out = width;
        block.dense.weights = Tensor2(width, fan_in);
        block.dense.bias.assign(width, 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));  // He uniform
        for (double& w : block.dense.weights.data) w = rng.uniform(-limit, limit);
        block.norm.gamma.assign(width, 1.0);
        block.norm.beta.assign(width, 0.0);
        block.norm.running_mean.assign(width, 0.0);
        block.norm.running_var.assign(width, 1.0);
        block.dropout_rate = dropout_rate;
        model.blocks.push_back(std::move(block));
        fan_in = width;
    }
    model.output.in = fan_in;
    model.output.out = 1;
    model.output.weights = Tensor2(1, fan_in);
    model.output.bias.assign(1, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + 1));  // Glorot uniform
    for (double& w : model.output.weights.data) w = rng.uniform(-limit, limit);
    return model;
}

ForwardCache forward(MlpModel& model, const Tensor2& batch, RunMode mode, Rng* dropout_rng) {
    if (model.blocks.empty()) raise("invalid-parameter", "model has no hidden blocks");
    if (batch.rows == 0) raise("invalid-input", "empty batch");
    if (batch.cols != model.input_dim()) {
        raise("shape-error", "batch width " + std::to_string(batch.cols) +
                                 " does not match model input " + std::to_string(model.input_dim()));
    }
    if (mode == RunMode::Train && batch.rows < 2) {
        raise("degenerate-batch", "train-mode batch normalization needs at least 2 samples");
    }
    if (mode == RunMode::Train && dropout_rng == nullptr) {
        raise("invalid-parameter", "train-mode forward requires a dropout RNG");
    }

    ForwardCache cache;
    cache.mode = mode;
    const std::size_t B = batch.rows;
    const Tensor2* cur = &batch;

    for (HiddenBlock& block : model.blocks) {
        BlockCache bc;
        bc.input = *cur;
        const std::size_t out = block.dense.out;
        const std::size_t in = block.dense.in;

        Tensor2 z(B, out);
        for (std::size_t r = 0; r < B; ++r) {
            const double* x = bc.input.row(r);
            double* zr = z.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                zr[o] = dot(x, block.dense.weights.row(o), in) + block.dense.bias[o];
            }
        }

        bc.xhat = Tensor2(B, out);
        if (mode == RunMode::Train) {
            bc.mean.assign(out, 0.0);
            bc.var.assign(out, 0.0);
            bc.inv_std.assign(out, 0.0);
            for (std::size_t r = 0; r < B; ++r) {
                const double* zr = z.row(r);
                for (std::size_t o = 0; o < out; ++o) bc.mean[o] += zr[o];
            }
            for (std::size_t o = 0; o < out; ++o) bc.mean[o] /= static_cast<double>(B);
            for (std::size_t r = 0; r < B; ++r) {
                const double* zr = z.row(r);
                for (std::size_t o = 0; o < out; ++o) {
                    const double d = zr[o] - bc.mean[o];
                    bc.var[o] += d * d;
                }
            }
            for (std::size_t o = 0; o < out; ++o) {
                bc.var[o] /= static_cast<double>(B);
                bc.inv_std[o] = 1.0 / std::sqrt(bc.var[o] + block.norm.eps);
                block.norm.running_mean[o] =
                    block.norm.momentum * block.norm.running_mean[o] +
                    (1.0 - block.norm.momentum) * bc.mean[o];
                block.norm.running_var[o] =
                    block.norm.momentum * block.norm.running_var[o] +
                    (1.0 - block.norm.momentum) * bc.var[o];
            }
            for (std::size_t r = 0; r < B; ++r) {
                const double* zr = z.row(r);
                double* xr = bc.xhat.row(r);
                for (std::size_t o = 0; o < out; ++o) xr[o] = (zr[o] - bc.mean[o]) * bc.inv_std[o];
            }
        } else {
            for (std::size_t r = 0; r < B; ++r) {
                const double* zr = z.row(r);
                double* xr = bc.xhat.row(r);
                for (std::size_t o = 0; o < out; ++o) {
                    xr[o] = (zr[o] - block.norm.running_mean[o]) /
                            std::sqrt(block.norm.running_var[o] + block.norm.eps);
                }
            }
        }

        bc.bn_out = Tensor2(B, out);
        for (std::size_t r = 0; r < B; ++r) {
            const double* xr = bc.xhat.row(r);
            double* br = bc.bn_out.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                br[o] = block.norm.gamma[o] * xr[o] + block.norm.beta[o];
            }
        }

        bc.out = Tensor2(B, out);
        const bool use_dropout = mode == RunMode::Train && block.dropout_rate > 0.0;
        if (use_dropout) {
            bc.drop_mask = Tensor2(B, out);
            const double keep_scale = 1.0 / (1.0 - block.dropout_rate);
            for (std::size_t r = 0; r < B; ++r) {
                const double* br = bc.bn_out.row(r);
                double* mr = bc.drop_mask.row(r);
                double* ar = bc.out.row(r);
                for (std::size_t o = 0; o < out; ++o) {
                    const double m =
                        dropout_rng->next_double() >= block.dropout_rate ? keep_scale : 0.0;
                    mr[o] = m;
                    ar[o] = br[o] > 0.0 ? br[o] * m : 0.0;
                }
            }
        } else {
            for (std::size_t r = 0; r < B; ++r) {
                const double* br = bc.bn_out.row(r);
                double* ar = bc.out.row(r);
                for (std::size_t o = 0; o < out; ++o) ar[o] = br[o] > 0.0 ? br[o] : 0.0;
            }
        }

        cache.blocks.push_back(std::move(bc));
        cur = &cache.blocks.back().out;
    }

    cache.output_input = *cur;
    cache.logits.resize(B);
    cache.probabilities.resize(B);
    for (std::size_t r = 0; r < B; ++r) {
        cache.logits[r] =
            dot(cache.output_input.row(r), model.output.weights.row(0), model.output.in) +
            model.output.bias[0];
        cache.probabilities[r] = sigmoid(cache.logits[r]);
    }
    return cache;
}

double bce_loss(const std::vector<double>& probabilities, const std::vector<int>& labels) {
    check_labels(labels, probabilities.size());
    if (probabilities.empty()) raise("invalid-input", "empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = std::clamp(probabilities[i], kProbClamp, 1.0 - kProbClamp);
        acc -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return acc / static_cast<double>(probabilities.size());
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const std::vector<int>& labels) {
    if (cache.mode != RunMode::Train) {
        raise("invalid-input", "backward requires a train-mode forward cache");
    }
    const std::size_t B = cache.probabilities.size();
    check_labels(labels, B);

    Gradients grads;
    grads.blocks.resize(model.blocks.size());
    for (std::size_t k = 0; k < model.blocks.size(); ++k) {
        const DenseLayer& d = model.blocks[k].dense;
        grads.blocks[k].dense.weights = Tensor2(d.out, d.in);
        grads.blocks[k].dense.bias.assign(d.out, 0.0);
        grads.blocks[k].gamma.assign(d.out, 0.0);
        grads.blocks[k].beta.assign(d.out, 0.0);
    }
    grads.output.weights = Tensor2(1, model.output.in);
    grads.output.bias.assign(1, 0.0);

    // Output layer: dL/dlogit. The clamp zeroes the gradient where the loss
    // is flat in p.
    std::vector<double> delta(B);
    for (std::size_t r = 0; r < B; ++r) {
        const double p = cache.probabilities[r];
        if (p < kProbClamp || p > 1.0 - kProbClamp) {
            delta[r] = 0.0;
        } else {
            delta[r] = (p - static_cast<double>(labels[r])) / static_cast<double>(B);
        }
    }
    Tensor2 dcur(B, model.output.in);
    {
        double* dw = grads.output.weights.row(0);
        const double* w = model.output.weights.row(0);
        double db = 0.0;
        for (std::size_t r = 0; r < B; ++r) {
            const double* a = cache.output_input.row(r);
            double* dr = dcur.row(r);
            for (std::size_t i = 0; i < model.output.in; ++i) {
                dw[i] += delta[r] * a[i];
                dr[i] = delta[r] * w[i];
            }
            db += delta[r];
        }
        grads.output.bias[0] = db;
    }

    for (std::size_t k = model.blocks.size(); k-- > 0;) {
        const HiddenBlock& block = model.blocks[k];
        const BlockCache& bc = cache.blocks[k];
        const std::size_t out = block.dense.out;
        const std::size_t in = block.dense.in;

        // Dropout and ReLU backward, in place on dcur.
        const bool used_dropout = bc.drop_mask.rows == B;
        for (std::size_t r = 0; r < B; ++r) {
            double* dr = dcur.row(r);
            const double* br = bc.bn_out.row(r);
            const double* mr = used_dropout ? bc.drop_mask.row(r) : nullptr;
            for (std::size_t o = 0; o < out; ++o) {
                double g = dr[o];
                if (mr) g *= mr[o];
                dr[o] = br[o] > 0.0 ? g : 0.0;
            }
        }

        // Batch-norm backward.
        std::vector<double>& dgamma = grads.blocks[k].gamma;
        std::vector<double>& dbeta = grads.blocks[k].beta;
        std::vector<double> sum_dxhat(out, 0.0), sum_dxhat_xhat(out, 0.0);
        Tensor2 dxhat(B, out);
        for (std::size_t r = 0; r < B; ++r) {
            const double* dr = dcur.row(r);
            const double* xr = bc.xhat.row(r);
            double* dxr = dxhat.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                dgamma[o] += dr[o] * xr[o];
                dbeta[o] += dr[o];
                dxr[o] = dr[o] * block.norm.gamma[o];
                sum_dxhat[o] += dxr[o];
                sum_dxhat_xhat[o] += dxr[o] * xr[o];
            }
        }
        Tensor2 dz(B, out);
        const double invB = 1.0 / static_cast<double>(B);
        for (std::size_t r = 0; r < B; ++r) {
            const double* dxr = dxhat.row(r);
            const double* xr = bc.xhat.row(r);
            double* dzr = dz.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                dzr[o] = bc.inv_std[o] * invB *
                         (static_cast<double>(B) * dxr[o] - sum_dxhat[o] -
                          xr[o] * sum_dxhat_xhat[o]);
            }
        }

        // Dense backward.
        Tensor2& dW = grads.blocks[k].dense.weights;
        std::vector<double>& db = grads.blocks[k].dense.bias;
        Tensor2 dprev(B, in);
        for (std::size_t r = 0; r < B; ++r) {
            const double* x = bc.input.row(r);
            const double* dzr = dz.row(r);
            double* dpr = dprev.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                const double g = dzr[o];
                if (g == 0.0) continue;
                double* dwr = dW.row(o);
                const double* wr = block.dense.weights.row(o);
                for (std::size_t i = 0; i < in; ++i) {
                    dwr[i] += g * x[i];
                    dpr[i] += g * wr[i];
                }
                db[o] += g;
            }
        }
        dcur = std::move(dprev);
    }
    return grads;
}

double gradient_check(MlpModel model, const Tensor2& batch, const std::vector<int>& labels,
                      double epsilon, std::uint64_t mask_seed) {
    if (!(epsilon > 0.0)) raise("invalid-parameter", "epsilon must be positive");

    // Loss with a frozen dropout mask: re-seeding before each forward makes
    // the mask (and therefore the loss surface) identical across evaluations.
    auto loss_at = [&model, &batch, &labels, mask_seed]() {
        Rng rng(mask_seed);
        const ForwardCache c = forward(model, batch, RunMode::Train, &rng);
        return bce_loss(c.probabilities, labels);
    };

    Rng rng(mask_seed);
    const ForwardCache cache = forward(model, batch, RunMode::Train, &rng);
    const Gradients grads = backward(model, cache, labels);

    auto params = parameter_spans(model);
    const auto analytic = grad_spans(grads);
    double max_rel = 0.0;
    for (std::size_t s = 0; s < params.size(); ++s) {
        double* p = params[s].first;
        const double* g = analytic[s].first;
        for (std::size_t i = 0; i < params[s].second; ++i) {
            const double original = p[i];
            p[i] = original + epsilon;
            const double loss_plus = loss_at();
            p[i] = original - epsilon;
            const double loss_minus = loss_at();
            p[i] = original;
            const double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
            const double rel = std::abs(g[i] - numeric) /
                               std::max({std::abs(g[i]), std::abs(numeric), 1e-3});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

std::vector<double> predict_proba(MlpModel& model, const Tensor2& batch) {
    return forward(model, batch, RunMode::Infer).probabilities;
}

std::vector<int> predict(MlpModel& model, const Tensor2& batch, double threshold) {
    const std::vector<double> probs = predict_proba(model, batch);
    std::vector<int> labels(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) labels[i] = probs[i] >= threshold ? 1 : 0;
    return labels;
}

namespace {

struct EvalMetrics {
    double loss = 0.0, accuracy = 0.0, auc = std::numeric_limits<double>::quiet_NaN();
};

EvalMetrics evaluate_split(MlpModel& model, const Tensor2& x, const std::vector<int>& y,
                           bool with_auc) {
    const std::vector<double> probs = predict_proba(model, x);
    EvalMetrics m;
    m.loss = bce_loss(probs, y);
    std::size_t correct = 0, pos = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const int pred = probs[i] >= 0.5 ? 1 : 0;
        if (pred == y[i]) ++correct;
        if (y[i] == 1) ++pos;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(probs.size());
    if (with_auc && pos > 0 && pos < probs.size()) {
        m.auc = auc_score(y, probs);
    }
    return m;
}

}  // namespace

MetricsLog fit(MlpModel& model, const Tensor2& x_train, const std::vector<int>& y_train,
               const Tensor2& x_val, const std::vector<int>& y_val, const TrainConfig& config) {
    if (x_train.rows < 2) raise("invalid-input", "training split needs at least 2 samples");
    check_labels(y_train, x_train.rows);
    if (x_val.rows == 0) raise("invalid-input", "validation split required");
    check_labels(y_val, x_val.rows);
    if (x_train.cols != model.input_dim() || x_val.cols != model.input_dim()) {
        raise("shape-error", "split width does not match model input");
    }
    if (!(config.initial_lr > 0.0)) raise("invalid-parameter", "learning rate must be positive");
    if (config.batch_size < 2) raise("invalid-parameter", "batch size must be at least 2");
    if (config.max_epochs < 1) raise("invalid-parameter", "max_epochs must be at least 1");

    auto spans = parameter_spans(model);
    std::size_t total_params = 0;
    for (const auto& [ptr, len] : spans) total_params += len;
    std::vector<double> m_state(total_params, 0.0), v_state(total_params, 0.0);
    long long t = 0;

    Rng shuffle_rng(derive_seed(config.seed, "fit-shuffle"));
    Rng dropout_rng(derive_seed(config.seed, "fit-dropout"));

    double lr = config.initial_lr;
    double best_plateau = std::numeric_limits<double>::infinity();
    int plateau_wait = 0;
    double best_early = std::numeric_limits<double>::infinity();
    int early_wait = 0;
    double best_snapshot = std::numeric_limits<double>::infinity();
    MlpModel snapshot;
    bool have_snapshot = false;

    std::vector<std::size_t> order(x_train.rows);
    std::iota(order.begin(), order.end(), 0);
    MetricsLog log;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            if (count < 2) continue;  // batchnorm cannot use a single sample
            Tensor2 xb(count, x_train.cols);
            std::vector<int> yb(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[start + i];
                std::memcpy(xb.row(i), x_train.row(src), x_train.cols * sizeof(double));
                yb[i] = y_train[src];
            }
            const ForwardCache cache = forward(model, xb, RunMode::Train, &dropout_rng);
            const Gradients grads = backward(model, cache, yb);

            ++t;
            const double bc1 = 1.0 - std::pow(config.adam.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(config.adam.beta2, static_cast<double>(t));
            const auto gspans = grad_spans(grads);
            std::size_t off = 0;
            for (std::size_t s = 0; s < spans.size(); ++s) {
                double* p = spans[s].first;
                const double* g = gspans[s].first;
                for (std::size_t i = 0; i < spans[s].second; ++i, ++off) {
                    m_state[off] = config.adam.beta1 * m_state[off] + (1.0 - config.adam.beta1) * g[i];
                    v_state[off] =
                        config.adam.beta2 * v_state[off] + (1.0 - config.adam.beta2) * g[i] * g[i];
                    const double mhat = m_state[off] / bc1;
                    const double vhat = v_state[off] / bc2;
                    p[i] -= lr * mhat / (std::sqrt(vhat) + config.adam.eps);
                }
            }
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.lr = lr;
        const EvalMetrics train_m = evaluate_split(model, x_train, y_train, false);
        const EvalMetrics val_m = evaluate_split(model, x_val, y_val, true);
        em.train_loss = train_m.loss;
        em.train_accuracy = train_m.accuracy;
        em.val_loss = val_m.loss;
        em.val_accuracy = val_m.accuracy;
        em.val_auc = val_m.auc;
        log.push_back(em);

        // Best-weights snapshot uses a strict minimum so the restored model
        // attains exactly the minimum logged validation loss.
        if (em.val_loss < best_snapshot) {
            best_snapshot = em.val_loss;
            snapshot = model;
            have_snapshot = true;
        }

        if (em.val_loss < best_plateau - config.plateau.min_delta) {
            best_plateau = em.val_loss;
            plateau_wait = 0;
        } else if (++plateau_wait >= config.plateau.patience) {
            lr = std::max(lr * config.plateau.factor, config.plateau.min_lr);
            plateau_wait = 0;
        }

        if (em.val_loss < best_early - config.early_stop.min_delta) {
            best_early = em.val_loss;
            early_wait = 0;
        } else if (++early_wait >= config.early_stop.patience) {
            break;
        }
    }

    if (config.early_stop.restore_best && have_snapshot) model = snapshot;
    return log;
}

// --- weights file ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'L', 'P', 'W'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<std::uint8_t>& buf, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct ByteReader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) raise("format-error", "weights file truncated");
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(buf[pos] | (buf[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    void f64_array(std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = f64();
    }
};

}  // namespace

void save_weights(const MlpModel& model, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u16(buf, kFormatVersion);
    put_u16(buf, static_cast<std::uint16_t>(model.blocks.size() + 1));
    for (const HiddenBlock& block : model.blocks) {
        put_u32(buf, static_cast<std::uint32_t>(block.dense.out));
        put_u32(buf, static_cast<std::uint32_t>(block.dense.in));
        for (const double w : block.dense.weights.data) put_f64(buf, w);
        for (const double b : block.dense.bias) put_f64(buf, b);
        for (const double g : block.norm.gamma) put_f64(buf, g);
        for (const double b : block.norm.beta) put_f64(buf, b);
        for (const double m : block.norm.running_mean) put_f64(buf, m);
        for (const double v : block.norm.running_var) put_f64(buf, v);
        put_f64(buf, block.norm.momentum);
        put_f64(buf, block.norm.eps);
    }
    put_u32(buf, static_cast<std::uint32_t>(model.output.out));
    put_u32(buf, static_cast<std::uint32_t>(model.output.in));
    for (const double w : model.output.weights.data) put_f64(buf, w);
    for (const double b : model.output.bias) put_f64(buf, b);
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) raise("io-error", "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) raise("io-error", "failed writing " + path.string());
}

MlpModel load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise("io-error", "cannot open " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 12) raise("format-error", "weights file truncated");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        raise("format-error", "bad magic: not a weights file");
    }
    ByteReader reader{buf, 4};
    const std::uint16_t version = reader.u16();
    if (version != kFormatVersion) {
        raise("version-error",
              "unsupported weights format version " + std::to_string(version));
    }
    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(buf[buf.size() - 4]) |
        (static_cast<std::uint32_t>(buf[buf.size() - 3]) << 8) |
        (static_cast<std::uint32_t>(buf[buf.size() - 2]) << 16) |
        (static_cast<std::uint32_t>(buf[buf.size() - 1]) << 24);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc) {
        raise("format-error", "weights file CRC mismatch");
    }

    const std::uint16_t layer_count = reader.u16();
    if (layer_count < 2) raise("format-error", "weights file needs at least two layers");

    MlpModel model;
    std::size_t expected_in = 0;
    for (std::uint16_t k = 0; k + 1 < layer_count; ++k) {
        HiddenBlock block;
        block.dense.out = reader.u32();
        block.dense.in = reader.u32();
        if (block.dense.out == 0 || block.dense.in == 0) {
            raise("format-error", "zero layer dimension");
        }
        if (k > 0 && block.dense.in != expected_in) {
            raise("format-error", "inconsistent layer dimensions");
        }
        block.dense.weights = Tensor2(block.dense.out, block.dense.in);
        reader.f64_array(block.dense.weights.data, block.dense.out * block.dense.in);
        reader.f64_array(block.dense.bias, block.dense.out);
        reader.f64_array(block.norm.gamma, block.dense.out);
        reader.f64_array(block.norm.beta, block.dense.out);
        reader.f64_array(block.norm.running_mean, block.dense.out);
        reader.f64_array(block.norm.running_var, block.dense.out);
        block.norm.momentum = reader.f64();
        block.norm.eps = reader.f64();
        expected_in = block.dense.out;
        model.blocks.push_back(std::move(block));
    }
    model.output.out = reader.u32();
    model.output.in = reader.u32();
    if (model.output.out != 1 || model.output.in != expected_in) {
        raise("format-error", "inconsistent output layer dimensions");
    }
    model.output.weights = Tensor2(1, model.output.in);
    reader.f64_array(model.output.weights.data, model.output.in);
    reader.f64_array(model.output.bias, 1);
    if (reader.pos != buf.size() - 4) {
        raise("format-error", "trailing bytes in weights file");
    }
    return model;
}

}  // namespace ecgmon
