#include "edema/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "edema/csv.hpp"
#include "edema/rng.hpp"

namespace edema::baseline {

ModelParams ModelParams::zeros(std::size_t dim) {
    ModelParams p;
    p.dim = dim;
    p.w.assign(4 * dim, 0.0);
    p.b.assign(4, 0.0);
    return p;
}

ClassWeights class_weights(const std::array<std::size_t, 4>& counts, WeightMode mode) {
    ClassWeights cw;
    if (mode == WeightMode::uniform) {
        return cw;
    }
    if (mode != WeightMode::inverse_frequency) {
        throw ValidationError("class_weights: explicit weights are not derived from counts");
    }
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    for (int c = 0; c < 4; ++c) {
        if (counts[c] == 0) {
            throw ValidationError("class_weights: class " + std::to_string(c) +
                                  " has zero count in inverse_frequency mode");
        }
        cw.w[c] = static_cast<double>(total) / (4.0 * static_cast<double>(counts[c]));
    }
    return cw;
}

namespace {

std::array<double, 4> softmax(const std::array<double, 4>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::array<double, 4> out{};
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) {
        out[c] = std::exp(logits[c] - mx);
        sum += out[c];
    }
    for (int c = 0; c < 4; ++c) out[c] /= sum;
    return out;
}

std::array<double, 4> logits_of(const ModelParams& params, const FeatureVector& x) {
    if (x.values.size() != params.dim) {
        throw ValidationError("feature dimension mismatch: model expects " +
                              std::to_string(params.dim) + ", sample '" + x.image_id +
                              "' has " + std::to_string(x.values.size()));
    }
    std::array<double, 4> logits{};
    for (int c = 0; c < 4; ++c) {
        double z = params.b[c];
        const double* row = params.w.data() + static_cast<std::size_t>(c) * params.dim;
        for (std::size_t j = 0; j < params.dim; ++j) z += row[j] * x.values[j];
        logits[c] = z;
    }
    return logits;
}

}  // namespace

LossGrad weighted_ce_loss_and_grad(const ModelParams& params,
                                   const std::vector<FeatureVector>& batch,
                                   const std::vector<Severity>& labels,
                                   const ClassWeights& weights, double l2) {
    if (batch.empty()) {
        throw ValidationError("weighted_ce_loss_and_grad: empty batch");
    }
    if (batch.size() != labels.size()) {
        throw ValidationError("weighted_ce_loss_and_grad: batch/label size mismatch");
    }
    LossGrad lg;
    lg.dw.assign(params.w.size(), 0.0);
    lg.db.assign(4, 0.0);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (double v : batch[i].values) {
            if (!std::isfinite(v)) {
                throw ValidationError("weighted_ce_loss_and_grad: non-finite feature in '" +
                                      batch[i].image_id + "'");
            }
        }
        const auto logits = logits_of(params, batch[i]);
        const auto probs = softmax(logits);
        const int y = severity_index(labels[i]);
        const double wy = weights.w[y];
        lg.loss += -wy * std::log(probs[y]) * inv_n;
        for (int c = 0; c < 4; ++c) {
            const double delta = wy * inv_n * (probs[c] - (c == y ? 1.0 : 0.0));
            lg.db[c] += delta;
            double* row = lg.dw.data() + static_cast<std::size_t>(c) * params.dim;
            for (std::size_t j = 0; j < params.dim; ++j) {
                row[j] += delta * batch[i].values[j];
            }
        }
    }
    if (l2 > 0.0) {
        double sq = 0.0;
        for (std::size_t j = 0; j < params.w.size(); ++j) {
            sq += params.w[j] * params.w[j];
            lg.dw[j] += l2 * params.w[j];
        }
        lg.loss += 0.5 * l2 * sq;
    }
    return lg;
}

TrainResult train(const std::vector<FeatureVector>& data, const std::vector<Severity>& labels,
                  const TrainConfig& config) {
    if (data.empty() || data.size() != labels.size()) {
        throw ValidationError("train: empty data or data/label size mismatch");
    }
    if (!(config.learning_rate > 0.0)) {
        throw ValidationError("train: learning_rate must be positive");
    }
    if (config.epochs < 1) {
        throw ValidationError("train: epochs must be >= 1");
    }
    const std::size_t dim = data[0].values.size();
    for (const auto& x : data) {
        if (x.values.size() != dim) {
            throw ValidationError("train: inconsistent feature dimensions");
        }
    }

    std::array<std::size_t, 4> counts{};
    for (Severity y : labels) counts[severity_index(y)] += 1;

    ClassWeights weights;
    switch (config.weight_mode) {
        case WeightMode::uniform:
            break;
        case WeightMode::inverse_frequency:
            // Requires every class populated so the weights are finite.
            weights = class_weights(counts, WeightMode::inverse_frequency);
            break;
        case WeightMode::explicit_weights:
            if (!config.explicit_weights) {
                throw ValidationError("train: explicit weight mode without weights");
            }
            weights = *config.explicit_weights;
            for (double w : weights.w) {
                if (!(w > 0.0)) throw ValidationError("train: class weights must be positive");
            }
            break;
    }

    TrainResult result;
    result.params = ModelParams::zeros(dim);
    result.weights = weights;

    auto full_loss = [&]() {
        return weighted_ce_loss_and_grad(result.params, data, labels, weights, config.l2).loss;
    };
    result.loss_trace.push_back(full_loss());

    rng::Rng gen(config.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t batch_size = config.batch == 0 ? data.size() : config.batch;
    std::vector<FeatureVector> batch;
    std::vector<Severity> batch_labels;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.batch != 0) gen.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            batch.clear();
            batch_labels.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(data[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            auto lg = weighted_ce_loss_and_grad(result.params, batch, batch_labels, weights,
                                                config.l2);
            for (std::size_t j = 0; j < result.params.w.size(); ++j) {
                result.params.w[j] -= config.learning_rate * lg.dw[j];
            }
            for (int c = 0; c < 4; ++c) {
                result.params.b[c] -= config.learning_rate * lg.db[c];
            }
        }
        const double loss = full_loss();
        if (!std::isfinite(loss)) {
            throw NumericError("train: loss diverged (non-finite) at epoch " +
                               std::to_string(epoch));
        }
        result.loss_trace.push_back(loss);
    }
    return result;
}

std::array<double, 4> predict_scores(const ModelParams& params, const FeatureVector& x) {
    return softmax(logits_of(params, x));
}

std::vector<FeatureVector> load_features_csv(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].fields.size() < 2 || rows[0].fields[0] != "image_id") {
        throw ValidationError("bad feature file header (expected image_id,f0,...): " +
                              path.string());
    }
    const std::size_t dim = rows[0].fields.size() - 1;
    for (std::size_t j = 0; j < dim; ++j) {
        if (rows[0].fields[j + 1] != "f" + std::to_string(j)) {
            throw ValidationError("bad feature file header column " + std::to_string(j + 1));
        }
    }
    std::vector<FeatureVector> features;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != dim + 1) {
            throw ValidationError("line " + std::to_string(row.line) + ": expected " +
                                  std::to_string(dim + 1) + " fields");
        }
        FeatureVector fv;
        fv.image_id = row.fields[0];
        fv.values.reserve(dim);
        try {
            for (std::size_t j = 0; j < dim; ++j) {
                fv.values.push_back(std::stod(row.fields[j + 1]));
            }
        } catch (const std::exception&) {
            throw ValidationError("line " + std::to_string(row.line) + ": bad feature value");
        }
        for (double v : fv.values) {
            if (!std::isfinite(v)) {
                throw ValidationError("line " + std::to_string(row.line) +
                                      ": feature values must be finite");
            }
        }
        features.push_back(std::move(fv));
    }
    return features;
}

void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureVector>& features) {
    csv::Writer w(path);
    std::vector<std::string> header = {"image_id"};
    const std::size_t dim = features.empty() ? 0 : features[0].values.size();
    for (std::size_t j = 0; j < dim; ++j) header.push_back("f" + std::to_string(j));
    w.row(header);
    for (const auto& fv : features) {
        std::vector<std::string> row = {fv.image_id};
        for (double v : fv.values) row.push_back(csv::format_double(v));
        w.row(row);
    }
}

void write_model_json(const std::filesystem::path& path, const ModelParams& params,
                      const TrainConfig& config, const ClassWeights& weights) {
    nlohmann::json j;
    j["dim"] = params.dim;
    auto w_rows = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < params.dim; ++k) {
            row.push_back(params.w[static_cast<std::size_t>(c) * params.dim + k]);
        }
        w_rows.push_back(row);
    }
    j["W"] = w_rows;
    j["b"] = params.b;
    j["config"] = {{"learning_rate", config.learning_rate},
                   {"epochs", config.epochs},
                   {"batch", config.batch},
                   {"seed", config.seed},
                   {"weight_mode", weight_mode_name(config.weight_mode)},
                   {"l2", config.l2},
                   {"class_weights", weights.w}};
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open file for writing: " + path.string());
    }
    out << j.dump(2) << '\n';
}

ModelParams load_model_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open model file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad model JSON in " + path.string() + ": " + e.what());
    }
    ModelParams p;
    try {
        p.dim = j.at("dim").get<std::size_t>();
        p.b = j.at("b").get<std::vector<double>>();
        const auto& w_rows = j.at("W");
        for (const auto& row : w_rows) {
            for (const auto& v : row) p.w.push_back(v.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad model JSON fields in " + path.string() + ": " + e.what());
    }
    if (p.b.size() != 4 || p.w.size() != 4 * p.dim) {
        throw ValidationError("model JSON shape mismatch in " + path.string());
    }
    return p;
}

const char* weight_mode_name(WeightMode mode) {
    switch (mode) {
        case WeightMode::uniform: return "uniform";
        case WeightMode::inverse_frequency: return "inverse_frequency";
        case WeightMode::explicit_weights: return "explicit";
    }
    return "?";
}

WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "uniform") return WeightMode::uniform;
    if (s == "inverse_frequency") return WeightMode::inverse_frequency;
    if (s == "explicit") return WeightMode::explicit_weights;
    throw ValidationError("unknown weight mode '" + s +
                          "' (expected uniform|inverse_frequency|explicit)");
}

}  // namespace edema::baseline
