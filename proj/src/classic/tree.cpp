#include "opclass/classic/classifiers.hpp"

#include "opclass/error.hpp"

#include <algorithm>
#include <numeric>

namespace opclass::classic {

namespace {

__extension__ typedef unsigned __int128 u128;

/// Weighted child Gini is n - (sqL/nL + sqR/nR) up to a factor of 1/n, where
/// sqX is the sum of squared class counts. Minimizing impurity therefore
/// means maximizing sqL/nL + sqR/nR, held here as an exact fraction.
struct SplitScore {
    u128 numerator = 0;
    u128 denominator = 1;

    static SplitScore make(std::uint64_t sq_left, std::uint64_t n_left, std::uint64_t sq_right,
                           std::uint64_t n_right) {
        return {u128(sq_left) * n_right + u128(sq_right) * n_left, u128(n_left) * n_right};
    }

    bool better_than(const SplitScore& other) const {
        // Operands stay below n^5, well inside 128 bits for any realistic row count.
        return numerator * other.denominator > other.numerator * denominator;
    }
};

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    SplitScore score;
};

int majority(std::span<const std::size_t> counts) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) {
            best = c;
        }
    }
    return static_cast<int>(best);
}

double midpoint(double a, double b) {
    const double mid = a / 2.0 + b / 2.0;
    return (mid >= a && mid < b) ? mid : a;
}

Candidate best_split(const Matrix& X, const std::vector<int>& y, std::size_t num_classes,
                     std::span<const std::size_t> rows, std::span<const std::size_t> node_counts) {
    Candidate best;
    const std::size_t n = rows.size();
    std::vector<std::pair<double, int>> column(n);
    std::vector<std::size_t> left(num_classes), right(num_classes);

    std::uint64_t total_sq = 0;
    for (std::size_t c : node_counts) {
        total_sq += std::uint64_t(c) * c;
    }

    for (std::size_t f = 0; f < X.cols; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = {X(rows[i], f), y[rows[i]]};
        }
        std::sort(column.begin(), column.end());
        if (column.front().first == column.back().first) {
            continue;
        }

        std::fill(left.begin(), left.end(), 0);
        std::copy(node_counts.begin(), node_counts.end(), right.begin());
        std::uint64_t sq_left = 0;
        std::uint64_t sq_right = total_sq;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto cls = static_cast<std::size_t>(column[i].second);
            sq_left += 2 * left[cls] + 1;
            ++left[cls];
            sq_right -= 2 * right[cls] - 1;
            --right[cls];
            if (column[i].first == column[i + 1].first) {
                continue;
            }
            const auto score = SplitScore::make(sq_left, i + 1, sq_right, n - i - 1);
            if (best.feature < 0 || score.better_than(best.score)) {
                best = {static_cast<int>(f), midpoint(column[i].first, column[i + 1].first), score};
            }
        }
    }
    return best;
}

} // namespace

DecisionTree train_decision_tree(const EncodedDesign& design) {
    const Matrix& X = design.X;
    if (X.rows == 0) {
        throw ConfigError("decision tree needs a nonempty training set");
    }
    DecisionTree tree;
    tree.num_classes = design.num_classes();
    tree.num_features = X.cols;

    struct Pending {
        std::vector<std::size_t> rows;
        int parent;
        bool is_left;
    };
    std::vector<Pending> stack;
    std::vector<std::size_t> all(X.rows);
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({std::move(all), -1, false});

    std::vector<std::size_t> counts(tree.num_classes);
    while (!stack.empty()) {
        Pending item = std::move(stack.back());
        stack.pop_back();

        const int index = static_cast<int>(tree.nodes.size());
        if (item.parent >= 0) {
            auto& parent = tree.nodes[static_cast<std::size_t>(item.parent)];
            (item.is_left ? parent.left : parent.right) = index;
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t r : item.rows) {
            ++counts[static_cast<std::size_t>(design.y[r])];
        }
        TreeNode node;
        node.prediction = majority(counts);
        node.samples = item.rows.size();

        const bool pure = counts[static_cast<std::size_t>(node.prediction)] == item.rows.size();
        Candidate split;
        if (!pure && item.rows.size() >= 2) {
            split = best_split(X, design.y, tree.num_classes, item.rows, counts);
        }
        if (split.feature < 0) {
            tree.nodes.push_back(node);
            continue;
        }

        node.feature = split.feature;
        node.threshold = split.threshold;
        tree.nodes.push_back(node);

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : item.rows) {
            (X(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left_rows
                                                                              : right_rows)
                .push_back(r);
        }
        // Right is pushed first so the left subtree is emitted next (preorder).
        stack.push_back({std::move(right_rows), index, false});
        stack.push_back({std::move(left_rows), index, true});
    }
    return tree;
}

std::vector<int> predict_tree(const DecisionTree& tree, const Matrix& X) {
    if (X.cols != tree.num_features) {
        throw ConfigError("tree query has " + std::to_string(X.cols) + " features, model has " +
                          std::to_string(tree.num_features));
    }
    std::vector<int> out(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const TreeNode* node = &tree.nodes.front();
        while (!node->is_leaf()) {
            const int next = X(r, static_cast<std::size_t>(node->feature)) <= node->threshold
                                 ? node->left
                                 : node->right;
            node = &tree.nodes[static_cast<std::size_t>(next)];
        }
        out[r] = node->prediction;
    }
    return out;
}

std::vector<Split> split_sequence(const DecisionTree& tree) {
    std::vector<Split> out;
    for (const auto& node : tree.nodes) {
        if (!node.is_leaf()) {
            out.push_back({node.feature, node.threshold});
        }
    }
    return out;
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) {
        return 0;
    }
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        const auto& node = nodes[static_cast<std::size_t>(idx)];
        best = std::max(best, d);
        if (!node.is_leaf()) {
            stack.push_back({node.left, d + 1});
            stack.push_back({node.right, d + 1});
        }
    }
    return best;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

} // namespace opclass::classic
