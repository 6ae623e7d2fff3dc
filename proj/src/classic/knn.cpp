#include "opclass/classic/classifiers.hpp"

#include "opclass/error.hpp"

#include <algorithm>
#include <utility>

namespace opclass::classic {

KnnModel train_knn(const EncodedDesign& design, std::size_t k) {
    if (design.X.rows == 0) {
        throw ConfigError("KNN needs a nonempty training set");
    }
    if (k == 0 || k > design.X.rows) {
        throw ConfigError("KNN k=" + std::to_string(k) + " must lie in [1, " +
                          std::to_string(design.X.rows) + "]");
    }
    return KnnModel{design.X, design.y, design.num_classes(), k};
}

std::vector<int> predict_knn(const KnnModel& model, const Matrix& X) {
    if (X.cols != model.X.cols) {
        throw ConfigError("KNN query has " + std::to_string(X.cols) + " features, model has " +
                          std::to_string(model.X.cols));
    }
    const std::size_t n = model.X.rows;
    const std::size_t k = model.k;
    std::vector<int> out(X.rows);
    std::vector<std::pair<double, std::size_t>> dist(n);
    std::vector<std::size_t> votes(model.num_classes);

    for (std::size_t q = 0; q < X.rows; ++q) {
        const auto query = X.row(q);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = model.X.row(i);
            double d = 0.0;
            for (std::size_t c = 0; c < X.cols; ++c) {
                const double diff = row[c] - query[c];
                d += diff * diff;
            }
            dist[i] = {d, i};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

        std::fill(votes.begin(), votes.end(), 0);
        std::size_t best = 0;
        for (std::size_t j = 0; j < k; ++j) {
            best = std::max(best, ++votes[static_cast<std::size_t>(model.y[dist[j].second])]);
        }
        // dist[0..k) is ordered nearest first, so the first tied class wins.
        for (std::size_t j = 0; j < k; ++j) {
            const int cls = model.y[dist[j].second];
            if (votes[static_cast<std::size_t>(cls)] == best) {
                out[q] = cls;
                break;
            }
        }
    }
    return out;
}

} // namespace opclass::classic
