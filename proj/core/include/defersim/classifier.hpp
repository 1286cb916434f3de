#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "defersim/cart.hpp"
#include "defersim/nn.hpp"

namespace defersim {

// The trainable slot of the pipeline. Gradient models consume the supplied
// per-sample loss gradient; refit models consume the (input, aggregated
// label) pairs and ignore the gradients.
class Classifier {
  public:
    virtual ~Classifier() = default;

    virtual double predict_proba(std::span<const double> x) const = 0;

    // xs[i] points at the i-th feature vector; targets[i] is its aggregated
    // label; grad_out[i] is dLoss/d(output_i) for gradient-based models.
    virtual void update(std::span<const double* const> xs, std::span<const double> targets,
                        std::span<const double> grad_out, size_t dim) = 0;

    virtual std::string serialize() const = 0;
    virtual std::string kind() const = 0;
};

// Sigmoid-output network trained by the shared batch gradient.
class NetworkClassifier : public Classifier {
  public:
    NetworkClassifier(Network net, OptimizerState opt);

    double predict_proba(std::span<const double> x) const override;
    void update(std::span<const double* const> xs, std::span<const double> targets,
                std::span<const double> grad_out, size_t dim) override;
    std::string serialize() const override;
    std::string kind() const override { return "network"; }

    const Network& network() const { return net_; }

  private:
    Network net_;
    OptimizerState opt_;
};

// Decision tree refit from scratch on the accumulated (input, label) pairs at
// every update. `window` limits the memory to the most recent pairs
// (0 = keep everything).
class CartClassifier : public Classifier {
  public:
    explicit CartClassifier(CartConfig cfg, size_t window = 0);

    double predict_proba(std::span<const double> x) const override;
    void update(std::span<const double* const> xs, std::span<const double> targets,
                std::span<const double> grad_out, size_t dim) override;
    std::string serialize() const override;
    std::string kind() const override { return "cart"; }

    const DecisionTree& tree() const { return tree_; }
    size_t memory_size() const { return memory_x_.size(); }

  private:
    CartConfig cfg_;
    size_t window_;
    DecisionTree tree_;
    std::vector<std::vector<double>> memory_x_;
    std::vector<double> memory_y_;
};

}  // namespace defersim
