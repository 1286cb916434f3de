#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "defersim/rng.hpp"
#include "defersim/types.hpp"

namespace defersim {

enum class Head { sigmoid, softmax, identity };

std::string head_name(Head h);
Head head_from_name(const std::string& name);

struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;  // row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

// Parameter-shaped gradient accumulator.
struct Gradients {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> b;

    void add(const Gradients& other);
    void scale(double c);
};

// Fully connected net: ReLU hidden layers, configurable output head.
class Network {
  public:
    Network() = default;
    Network(std::vector<int> sizes, Head head);

    // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weight and bias init.
    void init_uniform(Rng& rng);

    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    size_t layer_count() const { return w_.size(); }
    Head head() const { return head_; }
    const std::vector<int>& sizes() const { return sizes_; }

    // Cached per-layer state from a forward pass, consumed by backward().
    struct Trace {
        std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
        std::vector<std::vector<double>> pre;  // pre-activation per layer
    };

    std::vector<double> forward(std::span<const double> x) const;
    std::vector<double> forward(std::span<const double> x, Trace& trace) const;

    // dl_doutput is the loss gradient w.r.t. the post-head output; the head's
    // jacobian is applied internally.
    Gradients backward(const Trace& trace, std::span<const double> dl_doutput) const;

    Gradients zero_like() const;

    // Flat parameter access (tests, bitwise comparisons).
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);

    std::vector<Matrix>& weights() { return w_; }
    std::vector<std::vector<double>>& biases() { return b_; }
    const std::vector<Matrix>& weights() const { return w_; }
    const std::vector<std::vector<double>>& biases() const { return b_; }

  private:
    std::vector<int> sizes_;
    Head head_ = Head::sigmoid;
    std::vector<Matrix> w_;
    std::vector<std::vector<double>> b_;
};

// Gradient-descent state; Adam keeps first/second moment buffers.
struct OptimizerState {
    enum class Kind { plain, adam };
    Kind kind = Kind::plain;
    double eta = 0.01;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    long t = 0;
    Gradients m, v;
    bool initialized = false;

    static OptimizerState plain(double eta);
    static OptimizerState adam(double eta);
};

// One parameter update from accumulated gradients. Throws NumericError if a
// parameter becomes non-finite.
void apply_step(Network& net, const Gradients& grads, OptimizerState& opt);

// Text serialization with exact double round-trip.
void save_network(std::ostream& out, const Network& net);
void save_network(const std::string& path, const Network& net);
Network load_network(std::istream& in);
Network load_network(const std::string& path);
std::string network_to_string(const Network& net);

}  // namespace defersim
