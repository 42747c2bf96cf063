#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowpix/encode.hpp"

namespace flowpix {

inline constexpr std::size_t kPixelInputs = kCanvasCells;

// Multinomial logistic regression over the 256 pixels of a thumbnail.
struct LinearModel {
    std::size_t n_classes = 0;
    std::vector<double> weights;  // kPixelInputs x n_classes, row-major
    std::vector<double> bias;     // n_classes
    std::vector<std::string> class_names;

    double& weight(std::size_t pixel, std::size_t k) { return weights[pixel * n_classes + k]; }
    double weight(std::size_t pixel, std::size_t k) const { return weights[pixel * n_classes + k]; }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }
    bool operator==(const LinearModel&) const = default;
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    double l2 = 0.0;

    void validate() const;
};

struct TrainResult {
    LinearModel model;
    // Mean cross-entropy over the batches of each epoch, as seen during training.
    std::vector<double> epoch_loss;
    // Full-data loss of the initial model.
    double initial_loss = 0.0;
};

// Weights ~ U(-1/16, 1/16) from the seed's init stream, bias 0.
LinearModel initial_model(std::size_t n_classes, std::vector<std::string> class_names,
                          std::uint64_t seed);

// Mini-batch SGD on softmax cross-entropy; pixels are divided by 255. The
// batch gradient is the mean over the batch. Throws Error(degenerate_task)
// if fewer than two classes occur in the data.
TrainResult train_pixel_model(const std::vector<Thumbnail>& thumbnails,
                              const std::vector<std::string>& class_names, const TrainConfig& config);

std::vector<double> logits(const LinearModel& model, const PixelGrid& pixels);
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> predict_proba(const LinearModel& model, const PixelGrid& pixels);
// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);
std::size_t predict_class(const LinearModel& model, const PixelGrid& pixels);

// Mean cross-entropy plus 0.5 * l2 * |W|^2, and its analytic gradient
// (same layout as weights followed by bias).
double batch_loss(const LinearModel& model, std::span<const Thumbnail> batch, double l2 = 0.0);
std::vector<double> batch_gradient(const LinearModel& model, std::span<const Thumbnail> batch,
                                   double l2 = 0.0);

// Largest relative error between the analytic gradient and central finite
// differences over every parameter. Relative error is
// |a - n| / max(|a|, |n|, 1e-6), so near-zero gradients compare absolutely.
double grad_check(const LinearModel& model, std::span<const Thumbnail> batch, double epsilon = 1e-5,
                  double l2 = 0.0);

std::string serialize_linear(const LinearModel& model);
LinearModel parse_linear(std::string_view text);
void save_linear(const LinearModel& model, const std::string& path);
LinearModel load_linear(const std::string& path);
std::string linear_digest(const LinearModel& model);

}  // namespace flowpix
