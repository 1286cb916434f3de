#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace defersim {

struct CartConfig {
    int max_depth = 4;
    int min_leaf = 5;  // smallest sample count allowed on either side of a split
};

// Axis-aligned regression tree fit by SSE reduction. With 0/1 targets the leaf
// value is the local label mean, i.e. a class-1 probability.
class DecisionTree {
  public:
    // rows[i] points at the i-th feature vector; y[i] is its target.
    void fit(std::span<const double* const> rows, std::span<const double> y, size_t dim,
             const CartConfig& cfg);

    // An unfitted tree predicts 0.5 everywhere.
    double predict(std::span<const double> x) const;

    bool fitted() const { return !nodes_.empty(); }
    int depth() const;
    size_t node_count() const { return nodes_.size(); }

    void save(std::ostream& out) const;
    static DecisionTree load(std::istream& in);
    std::string to_string() const;

  private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        double value = 0.5;
    };
    std::vector<Node> nodes_;

    int build(std::vector<int>& idx, int begin, int end,
              std::span<const double* const> rows, std::span<const double> y, size_t dim,
              const CartConfig& cfg, int depth);
};

}  // namespace defersim
