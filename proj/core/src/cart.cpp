#include "defersim/cart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "defersim/errors.hpp"

namespace defersim {

void DecisionTree::fit(std::span<const double* const> rows, std::span<const double> y,
                       size_t dim, const CartConfig& cfg) {
    if (rows.size() != y.size()) throw ShapeError("cart: rows/targets length mismatch");
    nodes_.clear();
    if (rows.empty()) return;
    std::vector<int> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    build(idx, 0, static_cast<int>(idx.size()), rows, y, dim, cfg, 0);
}

int DecisionTree::build(std::vector<int>& idx, int begin, int end,
                        std::span<const double* const> rows, std::span<const double> y,
                        size_t dim, const CartConfig& cfg, int depth) {
    const int n = end - begin;
    double sum = 0.0, sum2 = 0.0;
    for (int i = begin; i < end; ++i) {
        sum += y[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        sum2 += y[static_cast<size_t>(idx[static_cast<size_t>(i)])] *
                y[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    }
    const double mean = sum / n;
    const double sse = sum2 - sum * sum / n;

    Node node;
    node.value = mean;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    if (depth >= cfg.max_depth || n < 2 * cfg.min_leaf || sse <= 1e-12) return self;

    // Best split = largest SSE reduction; ties keep the first (lowest feature,
    // then lowest threshold) so refits are deterministic.
    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    std::vector<std::pair<double, double>> vals(static_cast<size_t>(n));  // (feature, target)
    for (size_t f = 0; f < dim; ++f) {
        for (int i = 0; i < n; ++i) {
            int r = idx[static_cast<size_t>(begin + i)];
            vals[static_cast<size_t>(i)] = {rows[static_cast<size_t>(r)][f],
                                            y[static_cast<size_t>(r)]};
        }
        std::sort(vals.begin(), vals.end());
        double lsum = 0.0, lsum2 = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            lsum += vals[static_cast<size_t>(i)].second;
            lsum2 += vals[static_cast<size_t>(i)].second * vals[static_cast<size_t>(i)].second;
            if (vals[static_cast<size_t>(i)].first == vals[static_cast<size_t>(i + 1)].first)
                continue;
            int nl = i + 1, nr = n - nl;
            if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
            double rsum = sum - lsum, rsum2 = sum2 - lsum2;
            double child_sse = (lsum2 - lsum * lsum / nl) + (rsum2 - rsum * rsum / nr);
            double gain = sse - child_sse;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = 0.5 * (vals[static_cast<size_t>(i)].first +
                                        vals[static_cast<size_t>(i + 1)].first);
            }
        }
    }
    if (best_feature < 0) return self;

    auto mid = std::stable_partition(
        idx.begin() + begin, idx.begin() + end, [&](int r) {
            return rows[static_cast<size_t>(r)][static_cast<size_t>(best_feature)] <=
                   best_threshold;
        });
    int split = static_cast<int>(mid - idx.begin());
    if (split == begin || split == end) return self;  // numeric edge case

    nodes_[static_cast<size_t>(self)].feature = best_feature;
    nodes_[static_cast<size_t>(self)].threshold = best_threshold;
    int left = build(idx, begin, split, rows, y, dim, cfg, depth + 1);
    nodes_[static_cast<size_t>(self)].left = left;
    int right = build(idx, split, end, rows, y, dim, cfg, depth + 1);
    nodes_[static_cast<size_t>(self)].right = right;
    return self;
}

double DecisionTree::predict(std::span<const double> x) const {
    if (nodes_.empty()) return 0.5;
    int i = 0;
    while (nodes_[static_cast<size_t>(i)].feature >= 0) {
        const Node& nd = nodes_[static_cast<size_t>(i)];
        if (static_cast<size_t>(nd.feature) >= x.size())
            throw ShapeError("cart: feature index beyond input dimension");
        i = x[static_cast<size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<size_t>(i)].value;
}

int DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    // Iterative depth over the node vector.
    std::vector<std::pair<int, int>> stack{{0, 1}};
    int best = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        const Node& nd = nodes_[static_cast<size_t>(i)];
        if (nd.feature >= 0) {
            stack.push_back({nd.left, d + 1});
            stack.push_back({nd.right, d + 1});
        }
    }
    return best - 1;  // edges, not nodes
}

void DecisionTree::save(std::ostream& out) const {
    out << "defersim-cart 1\n" << nodes_.size() << "\n";
    char buf[32];
    for (const Node& nd : nodes_) {
        std::snprintf(buf, sizeof buf, "%.17g", nd.threshold);
        out << nd.feature << ' ' << buf << ' ' << nd.left << ' ' << nd.right << ' ';
        std::snprintf(buf, sizeof buf, "%.17g", nd.value);
        out << buf << "\n";
    }
}

DecisionTree DecisionTree::load(std::istream& in) {
    std::string magic;
    int version = 0;
    size_t count = 0;
    if (!(in >> magic >> version >> count) || magic != "defersim-cart" || version != 1)
        throw ParseError("not a cart file (bad magic)", 1);
    DecisionTree t;
    t.nodes_.resize(count);
    for (Node& nd : t.nodes_)
        if (!(in >> nd.feature >> nd.threshold >> nd.left >> nd.right >> nd.value))
            throw ParseError("truncated cart node list");
    return t;
}

std::string DecisionTree::to_string() const {
    std::stringstream ss;
    save(ss);
    return ss.str();
}

}  // namespace defersim
