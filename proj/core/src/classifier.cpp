#include "defersim/classifier.hpp"

#include <sstream>

#include "defersim/errors.hpp"

namespace defersim {

NetworkClassifier::NetworkClassifier(Network net, OptimizerState opt)
    : net_(std::move(net)), opt_(opt) {
    if (net_.output_dim() != 1 || net_.head() != Head::sigmoid)
        throw ShapeError("classifier network must have a single sigmoid output");
}

double NetworkClassifier::predict_proba(std::span<const double> x) const {
    return net_.forward(x)[0];
}

void NetworkClassifier::update(std::span<const double* const> xs,
                               std::span<const double> /*targets*/,
                               std::span<const double> grad_out, size_t dim) {
    if (xs.empty()) return;
    if (xs.size() != grad_out.size()) throw ShapeError("classifier batch size mismatch");
    Gradients acc = net_.zero_like();
    Network::Trace trace;
    for (size_t i = 0; i < xs.size(); ++i) {
        net_.forward(std::span<const double>(xs[i], dim), trace);
        double g[1] = {grad_out[i]};
        acc.add(net_.backward(trace, g));
    }
    acc.scale(1.0 / static_cast<double>(xs.size()));
    apply_step(net_, acc, opt_);
}

std::string NetworkClassifier::serialize() const { return network_to_string(net_); }

CartClassifier::CartClassifier(CartConfig cfg, size_t window) : cfg_(cfg), window_(window) {}

double CartClassifier::predict_proba(std::span<const double> x) const {
    return tree_.predict(x);
}

void CartClassifier::update(std::span<const double* const> xs, std::span<const double> targets,
                            std::span<const double> /*grad_out*/, size_t dim) {
    if (xs.size() != targets.size()) throw ShapeError("classifier batch size mismatch");
    for (size_t i = 0; i < xs.size(); ++i) {
        memory_x_.emplace_back(xs[i], xs[i] + dim);
        memory_y_.push_back(targets[i]);
    }
    if (window_ > 0 && memory_x_.size() > window_) {
        size_t drop = memory_x_.size() - window_;
        memory_x_.erase(memory_x_.begin(), memory_x_.begin() + static_cast<long>(drop));
        memory_y_.erase(memory_y_.begin(), memory_y_.begin() + static_cast<long>(drop));
    }
    std::vector<const double*> rows;
    rows.reserve(memory_x_.size());
    for (const auto& v : memory_x_) rows.push_back(v.data());
    tree_.fit(rows, memory_y_, dim, cfg_);
}

std::string CartClassifier::serialize() const { return tree_.to_string(); }

}  // namespace defersim
