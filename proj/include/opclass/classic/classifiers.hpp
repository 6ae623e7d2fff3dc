#pragma once

#include "opclass/classic/design.hpp"

#include <cstdint>
#include <vector>

namespace opclass::classic {

// ---------------------------------------------------------------- KNN

struct KnnModel {
    Matrix X;
    std::vector<int> y;
    std::size_t num_classes = 0;
    std::size_t k = 3;
};

/// Throws ConfigError on an empty training set or k outside [1, n_samples].
KnnModel train_knn(const EncodedDesign& design, std::size_t k = 3);

/// Majority vote among the k rows nearest in Euclidean distance.
/// Neighbors are ordered by (squared distance, row index); a vote tie goes
/// to the class of the nearest neighbor whose class is among the tied ones.
std::vector<int> predict_knn(const KnnModel& model, const Matrix& X);

// ------------------------------------------------------ Decision tree

struct TreeNode {
    /// -1 for leaves.
    int feature = -1;
    double threshold = 0.0;
    /// Indices into DecisionTree::nodes; rows with x[feature] <= threshold go left.
    int left = -1;
    int right = -1;
    int prediction = 0;
    std::size_t samples = 0;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; ///< preorder, root first
    std::size_t num_classes = 0;
    std::size_t num_features = 0;

    std::size_t depth() const;
    std::size_t leaf_count() const;
};

struct Split {
    int feature;
    double threshold;
    bool operator==(const Split&) const = default;
};

/// Greedy CART with Gini impurity. At each node the (feature, threshold)
/// minimizing child-size-weighted Gini is chosen among midpoints of
/// consecutive distinct values; ties go to the lower feature, then the lower
/// threshold. Impurities are compared exactly in integer arithmetic. A node
/// becomes a leaf when it is pure, has fewer than 2 rows, or has no valid
/// split (all rows identical). Leaves predict the majority class, ties to
/// the lowest class index.
DecisionTree train_decision_tree(const EncodedDesign& design);

std::vector<int> predict_tree(const DecisionTree& tree, const Matrix& X);

/// Internal nodes in preorder.
std::vector<Split> split_sequence(const DecisionTree& tree);

// --------------------------------------------------------------- SVM

struct SvmParams {
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    double regularization = 1e-4;
    std::uint64_t seed = 0;
};

/// One linear hinge-loss classifier per class (one-vs-rest).
struct SvmModel {
    std::size_t num_classes = 0;
    std::size_t num_features = 0;
    std::vector<std::vector<double>> weights; ///< one per class
    std::vector<double> bias;

    std::vector<double> decision_values(std::span<const double> x) const;
};

/// Subgradient descent on lambda/2 |w|^2 + hinge, visiting rows in index order
/// each epoch with step learning_rate / (1 + learning_rate * lambda * t).
/// Weights start from a seeded uniform(-0.01, 0.01). Throws ConfigError when
/// fewer than two classes are present.
SvmModel train_svm(const EncodedDesign& design, const SvmParams& params = {});

/// argmax of the decision values, ties to the lowest class index.
std::vector<int> predict_svm(const SvmModel& model, const Matrix& X);

} // namespace opclass::classic
