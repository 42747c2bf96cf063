#include "flowpix/pixelclf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "flowpix/error.hpp"
#include "flowpix/rng.hpp"
#include "flowpix/util.hpp"

namespace flowpix {

namespace {

constexpr std::string_view kLinearMagic = "flowpix-linear v1";
constexpr double kPixelScale = 1.0 / 255.0;

void check_labels(const LinearModel& model, std::span<const Thumbnail> batch) {
    for (const auto& t : batch) {
        if (t.label >= model.n_classes) {
            throw Error(ErrorKind::invalid_argument, "thumbnail label out of range");
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw Error(ErrorKind::invalid_argument, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorKind::invalid_argument, "batch size must be >= 1");
    // Zero is accepted: it leaves the model at its initialisation.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorKind::invalid_argument, "learning rate must be finite and >= 0");
    }
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorKind::invalid_argument, "l2 must be >= 0");
}

LinearModel initial_model(std::size_t n_classes, std::vector<std::string> class_names,
                          std::uint64_t seed) {
    LinearModel model;
    model.n_classes = n_classes;
    model.class_names = std::move(class_names);
    model.weights.resize(kPixelInputs * n_classes);
    model.bias.assign(n_classes, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(kPixelInputs));
    Rng rng(derive_seed(seed, streams::pixel_init));
    for (auto& w : model.weights) w = rng.uniform(-scale, scale);
    return model;
}

std::vector<double> logits(const LinearModel& model, const PixelGrid& pixels) {
    std::vector<double> z(model.bias);
    for (std::size_t p = 0; p < kPixelInputs; ++p) {
        if (pixels[p] == 0) continue;
        const double x = pixels[p] * kPixelScale;
        const double* w = model.weights.data() + p * model.n_classes;
        for (std::size_t k = 0; k < model.n_classes; ++k) z[k] += w[k] * x;
    }
    return z;
}

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> out(z.begin(), z.end());
    if (out.empty()) return out;
    const double top = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (auto& v : out) {
        v = std::exp(v - top);
        sum += v;
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::vector<double> predict_proba(const LinearModel& model, const PixelGrid& pixels) {
    return softmax(logits(model, pixels));
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::size_t predict_class(const LinearModel& model, const PixelGrid& pixels) {
    return argmax(predict_proba(model, pixels));
}

double batch_loss(const LinearModel& model, std::span<const Thumbnail> batch, double l2) {
    check_labels(model, batch);
    double loss = 0.0;
    for (const auto& t : batch) {
        const auto z = logits(model, t.pixels);
        const double top = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (const double v : z) sum += std::exp(v - top);
        loss += std::log(sum) + top - z[t.label];
    }
    if (!batch.empty()) loss /= static_cast<double>(batch.size());
    if (l2 > 0.0) {
        double sq = 0.0;
        for (const double w : model.weights) sq += w * w;
        loss += 0.5 * l2 * sq;
    }
    return loss;
}

std::vector<double> batch_gradient(const LinearModel& model, std::span<const Thumbnail> batch,
                                   double l2) {
    check_labels(model, batch);
    const std::size_t k = model.n_classes;
    std::vector<double> grad(model.parameter_count(), 0.0);
    double* gw = grad.data();
    double* gb = grad.data() + model.weights.size();
    const double inv = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    for (const auto& t : batch) {
        auto delta = predict_proba(model, t.pixels);
        delta[t.label] -= 1.0;
        for (std::size_t c = 0; c < k; ++c) gb[c] += delta[c] * inv;
        for (std::size_t p = 0; p < kPixelInputs; ++p) {
            if (t.pixels[p] == 0) continue;
            const double x = t.pixels[p] * kPixelScale * inv;
            for (std::size_t c = 0; c < k; ++c) gw[p * k + c] += delta[c] * x;
        }
    }
    if (l2 > 0.0) {
        for (std::size_t i = 0; i < model.weights.size(); ++i) gw[i] += l2 * model.weights[i];
    }
    return grad;
}

TrainResult train_pixel_model(const std::vector<Thumbnail>& thumbnails,
                              const std::vector<std::string>& class_names, const TrainConfig& config) {
    config.validate();
    const std::size_t k = class_names.size();
    std::vector<bool> present(k, false);
    for (const auto& t : thumbnails) {
        if (t.label >= k) throw Error(ErrorKind::invalid_argument, "thumbnail label out of range");
        present[t.label] = true;
    }
    if (k < 2 || std::count(present.begin(), present.end(), true) < 2) {
        throw Error(ErrorKind::degenerate_task, "pixel classifier needs at least two classes in the data");
    }

    TrainResult result;
    result.model = initial_model(k, class_names, config.seed);
    LinearModel& model = result.model;
    result.initial_loss = batch_loss(model, thumbnails, config.l2);

    Rng order_rng(derive_seed(config.seed, streams::pixel_shuffle));
    std::vector<std::size_t> order(thumbnails.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Thumbnail> batch;
    batch.reserve(config.batch_size);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(thumbnails[order[i]]);
            epoch_loss += batch_loss(model, batch, config.l2);
            ++batches;
            if (config.learning_rate == 0.0) continue;
            const auto grad = batch_gradient(model, batch, config.l2);
            for (std::size_t i = 0; i < model.weights.size(); ++i) {
                model.weights[i] -= config.learning_rate * grad[i];
            }
            for (std::size_t c = 0; c < k; ++c) {
                model.bias[c] -= config.learning_rate * grad[model.weights.size() + c];
            }
        }
        result.epoch_loss.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
    }
    for (const double v : model.weights) {
        if (!std::isfinite(v)) throw Error(ErrorKind::degenerate_task, "training diverged");
    }
    return result;
}

double grad_check(const LinearModel& model, std::span<const Thumbnail> batch, double epsilon,
                  double l2) {
    if (batch.empty()) throw Error(ErrorKind::invalid_argument, "gradient check needs a batch");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be > 0");
    const auto analytic = batch_gradient(model, batch, l2);
    LinearModel probe = model;
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double& param = i < probe.weights.size() ? probe.weights[i] : probe.bias[i - probe.weights.size()];
        const double saved = param;
        param = saved + epsilon;
        const double up = batch_loss(probe, batch, l2);
        param = saved - epsilon;
        const double down = batch_loss(probe, batch, l2);
        param = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

std::string serialize_linear(const LinearModel& model) {
    std::ostringstream out;
    out << kLinearMagic << '\n';
    out << "classes " << model.n_classes << ' ' << join(model.class_names, "|") << '\n';
    out << "inputs " << kPixelInputs << '\n';
    for (std::size_t p = 0; p < kPixelInputs; ++p) {
        for (std::size_t k = 0; k < model.n_classes; ++k) {
            if (k) out << ' ';
            out << format_double(model.weight(p, k));
        }
        out << '\n';
    }
    out << "bias";
    for (const double b : model.bias) out << ' ' << format_double(b);
    out << '\n';
    return out.str();
}

LinearModel parse_linear(std::string_view text) {
    const auto lines = split(text, '\n');
    if (lines.size() < 4 || trim(lines[0]) != kLinearMagic) {
        throw Error(ErrorKind::format, "not a flowpix-linear v1 file");
    }
    LinearModel model;
    const auto head = split(trim(lines[1]), ' ');
    const auto n = head.size() >= 2 ? parse_uint(head[1]) : std::nullopt;
    if (head.empty() || head[0] != "classes" || !n) throw Error(ErrorKind::format, "bad classes line");
    model.n_classes = static_cast<std::size_t>(*n);
    if (head.size() > 2) {
        model.class_names = split(join(std::vector<std::string>(head.begin() + 2, head.end()), " "), '|');
    }
    if (trim(lines[2]) != "inputs " + std::to_string(kPixelInputs)) {
        throw Error(ErrorKind::format, "unexpected input dimension");
    }
    if (lines.size() < 3 + kPixelInputs + 1) throw Error(ErrorKind::format, "truncated weight matrix");
    model.weights.reserve(kPixelInputs * model.n_classes);
    for (std::size_t p = 0; p < kPixelInputs; ++p) {
        const auto values = split(trim(lines[3 + p]), ' ');
        if (values.size() != model.n_classes) throw Error(ErrorKind::format, "bad weight row");
        for (const auto& v : values) {
            const auto w = parse_double(v);
            if (!w || !std::isfinite(*w)) throw Error(ErrorKind::format, "bad weight '" + v + "'");
            model.weights.push_back(*w);
        }
    }
    const auto bias = split(trim(lines[3 + kPixelInputs]), ' ');
    if (bias.size() != model.n_classes + 1 || bias[0] != "bias") throw Error(ErrorKind::format, "bad bias line");
    for (std::size_t k = 0; k < model.n_classes; ++k) {
        const auto b = parse_double(bias[k + 1]);
        if (!b || !std::isfinite(*b)) throw Error(ErrorKind::format, "bad bias value");
        model.bias.push_back(*b);
    }
    return model;
}

void save_linear(const LinearModel& model, const std::string& path) {
    write_file(path, serialize_linear(model));
}

LinearModel load_linear(const std::string& path) { return parse_linear(read_file(path)); }

std::string linear_digest(const LinearModel& model) { return fnv1a_hex(serialize_linear(model)); }

}  // namespace flowpix
