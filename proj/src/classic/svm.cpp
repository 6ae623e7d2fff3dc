#include "opclass/classic/classifiers.hpp"

#include "opclass/error.hpp"
#include "opclass/random.hpp"

namespace opclass::classic {

std::vector<double> SvmModel::decision_values(std::span<const double> x) const {
    std::vector<double> out(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        double s = bias[c];
        const auto& w = weights[c];
        for (std::size_t j = 0; j < num_features; ++j) {
            s += w[j] * x[j];
        }
        out[c] = s;
    }
    return out;
}

SvmModel train_svm(const EncodedDesign& design, const SvmParams& params) {
    const Matrix& X = design.X;
    std::vector<bool> present(design.num_classes(), false);
    std::size_t distinct = 0;
    for (int label : design.y) {
        if (!present[static_cast<std::size_t>(label)]) {
            present[static_cast<std::size_t>(label)] = true;
            ++distinct;
        }
    }
    if (distinct < 2) {
        throw ConfigError("SVM needs at least two classes in the training set");
    }

    SvmModel model;
    model.num_classes = design.num_classes();
    model.num_features = X.cols;
    model.weights.assign(model.num_classes, std::vector<double>(X.cols));
    model.bias.assign(model.num_classes, 0.0);

    Rng rng(params.seed);
    for (auto& w : model.weights) {
        for (double& v : w) {
            v = rng.uniform(-0.01, 0.01);
        }
    }

    const double lambda = params.regularization;
    const double eta0 = params.learning_rate;
    for (std::size_t c = 0; c < model.num_classes; ++c) {
        auto& w = model.weights[c];
        double& b = model.bias[c];
        std::size_t t = 0;
        for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
            for (std::size_t i = 0; i < X.rows; ++i, ++t) {
                const double eta = eta0 / (1.0 + eta0 * lambda * static_cast<double>(t));
                const double label = design.y[i] == static_cast<int>(c) ? 1.0 : -1.0;
                const auto x = X.row(i);
                double score = b;
                for (std::size_t j = 0; j < X.cols; ++j) {
                    score += w[j] * x[j];
                }
                const double shrink = 1.0 - eta * lambda;
                if (label * score < 1.0) {
                    for (std::size_t j = 0; j < X.cols; ++j) {
                        w[j] = w[j] * shrink + eta * label * x[j];
                    }
                    b += eta * label;
                } else if (shrink != 1.0) {
                    for (double& v : w) {
                        v *= shrink;
                    }
                }
            }
        }
    }
    return model;
}

std::vector<int> predict_svm(const SvmModel& model, const Matrix& X) {
    if (X.cols != model.num_features) {
        throw ConfigError("SVM query has " + std::to_string(X.cols) + " features, model has " +
                          std::to_string(model.num_features));
    }
    std::vector<int> out(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const auto scores = model.decision_values(X.row(r));
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.size(); ++c) {
            if (scores[c] > scores[best]) {
                best = c;
            }
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

} // namespace opclass::classic
