#include "opclass/cnn/train.hpp"

#include "opclass/dataset_io.hpp"
#include "opclass/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace opclass::cnn {

namespace {

struct BatchOutcome {
    double loss_sum = 0.0;
    std::size_t correct = 0;
};

std::vector<std::int32_t> gather(const SequenceDataset& ds, std::span<const std::size_t> rows) {
    std::vector<std::int32_t> out;
    out.reserve(rows.size() * ds.max_len);
    for (std::size_t r : rows) {
        const auto src = ds.row(r);
        out.insert(out.end(), src.begin(), src.end());
    }
    return out;
}

std::size_t count_correct(const ForwardCache& cache, std::span<const int> labels, std::size_t C) {
    std::size_t correct = 0;
    for (std::size_t b = 0; b < cache.batch; ++b) {
        const double* p = cache.probs.data() + b * C;
        const auto best = static_cast<int>(std::max_element(p, p + C) - p);
        correct += best == labels[b] ? 1 : 0;
    }
    return correct;
}

/// Inference-mode loss and accuracy over `rows`.
std::pair<double, double> score(const CnnModel& model, const SequenceDataset& ds,
                                std::span<const std::size_t> rows, std::size_t batch_size) {
    BatchOutcome total;
    for (std::size_t start = 0; start < rows.size(); start += batch_size) {
        const auto chunk = rows.subspan(start, std::min(batch_size, rows.size() - start));
        std::vector<int> labels;
        for (std::size_t r : chunk) {
            labels.push_back(ds.labels[r]);
        }
        const auto cache = forward(model, gather(ds, chunk), chunk.size(), false);
        const auto targets = one_hot(labels, ds.num_classes());
        total.loss_sum += cross_entropy(cache, targets, ds.num_classes()) * static_cast<double>(chunk.size());
        total.correct += count_correct(cache, labels, ds.num_classes());
    }
    const auto n = static_cast<double>(rows.size());
    return {total.loss_sum / n, static_cast<double>(total.correct) / n};
}

} // namespace

void split_validation(const SequenceDataset& dataset, double fraction, std::uint64_t seed,
                      TrainingHistory& history) {
    history.train_indices.clear();
    history.validation_indices.clear();
    const std::size_t n = dataset.rows();
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    if (fraction <= 0.0) {
        history.train_indices.resize(n);
        std::iota(history.train_indices.begin(), history.train_indices.end(), 0);
        return;
    }

    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
    for (std::size_t i = 0; i < n; ++i) {
        by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    }
    bool stratified = true;
    for (const auto& members : by_class) {
        const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        if (!members.empty() && n_val >= members.size()) {
            stratified = false;
        }
    }

    if (stratified) {
        for (auto& members : by_class) {
            rng.shuffle(std::span(members));
            const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
            history.validation_indices.insert(history.validation_indices.end(), members.begin(),
                                              members.begin() + static_cast<std::ptrdiff_t>(n_val));
            history.train_indices.insert(history.train_indices.end(),
                                         members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
        }
    } else {
        history.warnings.push_back(
            "stratified validation split would leave a class without training rows; using an "
            "unstratified split");
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span(order));
        auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
        n_val = std::min(n_val, n > 0 ? n - 1 : 0);
        history.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
        history.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    }
    std::sort(history.train_indices.begin(), history.train_indices.end());
    std::sort(history.validation_indices.begin(), history.validation_indices.end());
}

TrainingHistory train(CnnModel& model, const SequenceDataset& dataset, const CnnConfig& config) {
    config.validate();
    if (dataset.num_classes() < 2) {
        throw ConfigError("CNN training needs at least two classes");
    }
    if (dataset.max_len != model.shape.max_len || dataset.num_classes() != model.shape.num_classes ||
        dataset.vocab_size != model.shape.vocab_size) {
        throw ConfigError("sequence dataset does not match the model's shape");
    }

    TrainingHistory history;
    split_validation(dataset, config.validation_split, config.seed, history);
    if (history.train_indices.empty()) {
        throw ConfigError("no training rows remain after the validation split");
    }

    Rng rng(config.seed + 1);
    const std::size_t C = dataset.num_classes();
    std::vector<std::size_t> order = history.train_indices;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        BatchOutcome total;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto chunk = std::span<const std::size_t>(order).subspan(
                start, std::min(config.batch_size, order.size() - start));
            std::vector<int> labels;
            for (std::size_t r : chunk) {
                labels.push_back(dataset.labels[r]);
            }
            const auto targets = one_hot(labels, C);
            const auto cache = forward(model, gather(dataset, chunk), chunk.size(), true, &rng);
            total.loss_sum += cross_entropy(cache, targets, C) * static_cast<double>(chunk.size());
            total.correct += count_correct(cache, labels, C);
            apply_adam(model, backward(model, cache, targets), config.learning_rate);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = total.loss_sum / static_cast<double>(order.size());
        stats.train_accuracy = static_cast<double>(total.correct) / static_cast<double>(order.size());
        if (!history.validation_indices.empty()) {
            const auto [loss, acc] = score(model, dataset, history.validation_indices, 64);
            stats.val_loss = loss;
            stats.val_accuracy = acc;
        }
        history.epochs.push_back(stats);
    }
    return history;
}

std::vector<int> predict(const CnnModel& model, const SequenceDataset& dataset,
                         std::span<const std::size_t> rows, std::size_t batch_size) {
    std::vector<int> out;
    out.reserve(rows.size());
    const std::size_t C = model.shape.num_classes;
    for (std::size_t start = 0; start < rows.size(); start += batch_size) {
        const auto chunk = rows.subspan(start, std::min(batch_size, rows.size() - start));
        const auto cache = forward(model, gather(dataset, chunk), chunk.size(), false);
        for (std::size_t b = 0; b < chunk.size(); ++b) {
            const double* p = cache.probs.data() + b * C;
            out.push_back(static_cast<int>(std::max_element(p, p + C) - p));
        }
    }
    return out;
}

classic::ClassifierResult evaluate_cnn(const CnnModel& model, const SequenceDataset& dataset,
                                       std::span<const std::size_t> rows) {
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(dataset.rows());
        std::iota(all.begin(), all.end(), 0);
        rows = all;
    }
    const auto predicted = predict(model, dataset, rows);
    std::vector<int> truth;
    truth.reserve(rows.size());
    for (std::size_t r : rows) {
        truth.push_back(dataset.labels[r]);
    }
    const auto metrics = classic::evaluate(predicted, truth, dataset.num_classes());
    return classic::make_result("cnn", "single", std::string(classic::to_string(dataset.target)),
                                metrics, dataset.class_names, 0.0);
}

std::string history_to_csv(const TrainingHistory& history) {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_value(*v) : std::string{}; };
    for (const auto& e : history.epochs) {
        out += std::to_string(e.epoch) + ',' + format_value(e.train_loss) + ',' +
               format_value(e.train_accuracy) + ',' + opt(e.val_loss) + ',' + opt(e.val_accuracy) + '\n';
    }
    return out;
}

} // namespace opclass::cnn
