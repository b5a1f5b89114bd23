#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edema/common.hpp"

namespace edema::baseline {

struct FeatureVector {
    std::string image_id;
    std::vector<double> values;
};

/// Linear 4-way scoring layer: logits = W x + b.
struct ModelParams {
    std::size_t dim = 0;
    std::vector<double> w;  // 4 x dim, row-major
    std::vector<double> b;  // 4

    static ModelParams zeros(std::size_t dim);
};

struct ClassWeights {
    std::array<double, 4> w{1.0, 1.0, 1.0, 1.0};
};

enum class WeightMode { uniform, inverse_frequency, explicit_weights };

/// Inverse-frequency weights w_c = N / (4 * n_c), so balanced counts give
/// unit weights. Zero counts are an error in inverse_frequency mode.
ClassWeights class_weights(const std::array<std::size_t, 4>& counts, WeightMode mode);

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 200;
    std::size_t batch = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    WeightMode weight_mode = WeightMode::inverse_frequency;
    std::optional<ClassWeights> explicit_weights;
    double l2 = 0.0;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> dw;  // same shape as ModelParams::w
    std::vector<double> db;  // same shape as ModelParams::b
};

/// Mean weighted cross entropy over the batch plus exact analytic gradients:
/// loss = (1/n) sum_i -w_{y_i} log softmax(W x_i + b)_{y_i}  (+ l2/2 ||W||^2).
/// Softmax uses max subtraction. Non-finite feature values are an error.
LossGrad weighted_ce_loss_and_grad(const ModelParams& params,
                                   const std::vector<FeatureVector>& batch,
                                   const std::vector<Severity>& labels,
                                   const ClassWeights& weights, double l2 = 0.0);

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_trace;  // full-data loss; index 0 = before training
    ClassWeights weights;
};

/// Gradient descent from zero initialization. The mini-batch order is drawn
/// from the seeded generator, so a (data, config) pair fully determines the
/// result. Divergence (non-finite loss) is an error naming the epoch.
TrainResult train(const std::vector<FeatureVector>& data, const std::vector<Severity>& labels,
                  const TrainConfig& config);

/// softmax(W x + b); output is on the probability simplex.
std::array<double, 4> predict_scores(const ModelParams& params, const FeatureVector& x);

/// Features as CSV `image_id,f0,...,f{d-1}`.
std::vector<FeatureVector> load_features_csv(const std::filesystem::path& path);
void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureVector>& features);

/// Model params as JSON {"dim":..., "W":[[...]x4], "b":[...], "config":{...}}.
void write_model_json(const std::filesystem::path& path, const ModelParams& params,
                      const TrainConfig& config, const ClassWeights& weights);
ModelParams load_model_json(const std::filesystem::path& path);

const char* weight_mode_name(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

}  // namespace edema::baseline
