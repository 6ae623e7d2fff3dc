#pragma once

#include "opclass/classic/evaluation.hpp"
#include "opclass/cnn/dataset.hpp"
#include "opclass/cnn/model.hpp"

#include <optional>

namespace opclass::cnn {

struct EpochStats {
    std::size_t epoch = 0; ///< 1-based
    double train_loss = 0.0; ///< mean over the epoch's batches, dropout active
    double train_accuracy = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_accuracy;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> validation_indices;
    std::vector<std::string> warnings;
};

/// Seeded split holding out `fraction` of rows, stratified per class when
/// every class keeps at least one training row; otherwise it falls back to
/// an unstratified split and records a warning.
void split_validation(const SequenceDataset& dataset, double fraction, std::uint64_t seed,
                      TrainingHistory& history);

/// Mini-batch Adam on categorical cross-entropy. The training rows are
/// reshuffled every epoch with a generator seeded from config.seed.
TrainingHistory train(CnnModel& model, const SequenceDataset& dataset, const CnnConfig& config);

/// Class index with the highest probability for each listed row.
std::vector<int> predict(const CnnModel& model, const SequenceDataset& dataset,
                         std::span<const std::size_t> rows, std::size_t batch_size = 64);

/// Score rows (all rows when `rows` is empty) through classic::evaluate.
classic::ClassifierResult evaluate_cnn(const CnnModel& model, const SequenceDataset& dataset,
                                       std::span<const std::size_t> rows = {});

/// CSV with header epoch,train_loss,train_acc,val_loss,val_acc.
std::string history_to_csv(const TrainingHistory& history);

} // namespace opclass::cnn
