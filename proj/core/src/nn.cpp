#include "defersim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "defersim/errors.hpp"

namespace defersim {

std::string head_name(Head h) {
    switch (h) {
        case Head::sigmoid: return "sigmoid";
        case Head::softmax: return "softmax";
        case Head::identity: return "identity";
    }
    return "?";
}

Head head_from_name(const std::string& name) {
    if (name == "sigmoid") return Head::sigmoid;
    if (name == "softmax") return Head::softmax;
    if (name == "identity") return Head::identity;
    throw ConfigError("unknown head: " + name);
}

void Gradients::add(const Gradients& other) {
    for (size_t l = 0; l < w.size(); ++l) {
        for (size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += other.w[l].a[i];
        for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += other.b[l][i];
    }
}

void Gradients::scale(double c) {
    for (auto& m : w)
        for (double& x : m.a) x *= c;
    for (auto& v : b)
        for (double& x : v) x *= c;
}

Network::Network(std::vector<int> sizes, Head head) : sizes_(std::move(sizes)), head_(head) {
    if (sizes_.size() < 2) throw ShapeError("network needs at least input and output sizes");
    for (int n : sizes_)
        if (n <= 0) throw ShapeError("layer sizes must be positive");
    for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
        w_.emplace_back(sizes_[l + 1], sizes_[l]);
        b_.emplace_back(static_cast<size_t>(sizes_[l + 1]), 0.0);
    }
}

void Network::init_uniform(Rng& rng) {
    for (size_t l = 0; l < w_.size(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(w_[l].cols));
        for (double& x : w_[l].a) x = (2.0 * rng.uniform01() - 1.0) * bound;
        for (double& x : b_[l]) x = (2.0 * rng.uniform01() - 1.0) * bound;
    }
}

namespace {

void affine(const Matrix& w, const std::vector<double>& b, std::span<const double> in,
            std::vector<double>& out) {
    out.assign(static_cast<size_t>(w.rows), 0.0);
    for (int r = 0; r < w.rows; ++r) {
        const double* row = &w.a[static_cast<size_t>(r) * w.cols];
        double acc = b[static_cast<size_t>(r)];
        for (int c = 0; c < w.cols; ++c) acc += row[c] * in[static_cast<size_t>(c)];
        out[static_cast<size_t>(r)] = acc;
    }
}

void apply_head(Head head, const std::vector<double>& pre, std::vector<double>& out) {
    out = pre;
    switch (head) {
        case Head::identity: break;
        case Head::sigmoid:
            for (double& x : out) x = 1.0 / (1.0 + std::exp(-x));
            break;
        case Head::softmax: {
            double mx = *std::max_element(out.begin(), out.end());
            double sum = 0.0;
            for (double& x : out) {
                x = std::exp(x - mx);
                sum += x;
            }
            for (double& x : out) x /= sum;
            break;
        }
    }
}

}  // namespace

std::vector<double> Network::forward(std::span<const double> x) const {
    Trace t;
    return forward(x, t);
}

std::vector<double> Network::forward(std::span<const double> x, Trace& trace) const {
    if (static_cast<int>(x.size()) != sizes_.front())
        throw ShapeError("input size " + std::to_string(x.size()) + " != " +
                         std::to_string(sizes_.front()));
    const size_t L = w_.size();
    trace.act.assign(L + 1, {});
    trace.pre.assign(L, {});
    trace.act[0].assign(x.begin(), x.end());

    for (size_t l = 0; l < L; ++l) {
        affine(w_[l], b_[l], trace.act[l], trace.pre[l]);
        if (l + 1 < L) {
            trace.act[l + 1] = trace.pre[l];
            for (double& v : trace.act[l + 1]) v = v > 0.0 ? v : 0.0;  // ReLU
        } else {
            apply_head(head_, trace.pre[l], trace.act[l + 1]);
        }
    }
    return trace.act[L];
}

Gradients Network::backward(const Trace& trace, std::span<const double> dl_doutput) const {
    const size_t L = w_.size();
    if (trace.act.size() != L + 1) throw ShapeError("backward without a cached forward pass");
    const std::vector<double>& out = trace.act[L];
    if (dl_doutput.size() != out.size()) throw ShapeError("upstream gradient size mismatch");

    // Head jacobian: gradient w.r.t. the output-layer pre-activation.
    std::vector<double> dz(out.size());
    switch (head_) {
        case Head::identity:
            dz.assign(dl_doutput.begin(), dl_doutput.end());
            break;
        case Head::sigmoid:
            for (size_t i = 0; i < out.size(); ++i)
                dz[i] = dl_doutput[i] * out[i] * (1.0 - out[i]);
            break;
        case Head::softmax: {
            double dot = 0.0;
            for (size_t i = 0; i < out.size(); ++i) dot += dl_doutput[i] * out[i];
            for (size_t i = 0; i < out.size(); ++i) dz[i] = out[i] * (dl_doutput[i] - dot);
            break;
        }
    }

    Gradients g = zero_like();
    for (size_t l = L; l-- > 0;) {
        const std::vector<double>& a_prev = trace.act[l];
        for (int r = 0; r < w_[l].rows; ++r) {
            double d = dz[static_cast<size_t>(r)];
            g.b[l][static_cast<size_t>(r)] = d;
            double* grow = &g.w[l].a[static_cast<size_t>(r) * w_[l].cols];
            for (int c = 0; c < w_[l].cols; ++c) grow[c] = d * a_prev[static_cast<size_t>(c)];
        }
        if (l == 0) break;
        // Pull the gradient through W and the previous ReLU.
        std::vector<double> dprev(a_prev.size(), 0.0);
        for (int r = 0; r < w_[l].rows; ++r) {
            double d = dz[static_cast<size_t>(r)];
            const double* row = &w_[l].a[static_cast<size_t>(r) * w_[l].cols];
            for (int c = 0; c < w_[l].cols; ++c) dprev[static_cast<size_t>(c)] += d * row[c];
        }
        for (size_t i = 0; i < dprev.size(); ++i)
            if (trace.pre[l - 1][i] <= 0.0) dprev[i] = 0.0;
        dz = std::move(dprev);
    }
    return g;
}

Gradients Network::zero_like() const {
    Gradients g;
    for (size_t l = 0; l < w_.size(); ++l) {
        g.w.emplace_back(w_[l].rows, w_[l].cols);
        g.b.emplace_back(b_[l].size(), 0.0);
    }
    return g;
}

std::vector<double> Network::flatten() const {
    std::vector<double> flat;
    for (size_t l = 0; l < w_.size(); ++l) {
        flat.insert(flat.end(), w_[l].a.begin(), w_[l].a.end());
        flat.insert(flat.end(), b_[l].begin(), b_[l].end());
    }
    return flat;
}

void Network::unflatten(std::span<const double> flat) {
    size_t k = 0;
    for (size_t l = 0; l < w_.size(); ++l) {
        for (double& x : w_[l].a) x = flat[k++];
        for (double& x : b_[l]) x = flat[k++];
    }
    if (k != flat.size()) throw ShapeError("flat parameter size mismatch");
}

OptimizerState OptimizerState::plain(double eta) {
    OptimizerState s;
    s.kind = Kind::plain;
    s.eta = eta;
    return s;
}

OptimizerState OptimizerState::adam(double eta) {
    OptimizerState s;
    s.kind = Kind::adam;
    s.eta = eta;
    return s;
}

namespace {

void check_finite(const Network& net) {
    for (const auto& m : net.weights())
        for (double x : m.a)
            if (!std::isfinite(x)) throw NumericError("non-finite network weight after step");
    for (const auto& v : net.biases())
        for (double x : v)
            if (!std::isfinite(x)) throw NumericError("non-finite network bias after step");
}

}  // namespace

void apply_step(Network& net, const Gradients& grads, OptimizerState& opt) {
    auto& w = net.weights();
    auto& b = net.biases();
    if (grads.w.size() != w.size()) throw ShapeError("gradient/network layer mismatch");

    if (opt.kind == OptimizerState::Kind::plain) {
        for (size_t l = 0; l < w.size(); ++l) {
            for (size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] -= opt.eta * grads.w[l].a[i];
            for (size_t i = 0; i < b[l].size(); ++i) b[l][i] -= opt.eta * grads.b[l][i];
        }
        check_finite(net);
        return;
    }

    if (!opt.initialized) {
        opt.m = net.zero_like();
        opt.v = net.zero_like();
        opt.initialized = true;
    }
    opt.t += 1;
    double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
    double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
    auto adam_update = [&](double& param, double g, double& m, double& v) {
        m = opt.beta1 * m + (1.0 - opt.beta1) * g;
        v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
        double mh = m / bc1, vh = v / bc2;
        param -= opt.eta * mh / (std::sqrt(vh) + opt.eps);
    };
    for (size_t l = 0; l < w.size(); ++l) {
        for (size_t i = 0; i < w[l].a.size(); ++i)
            adam_update(w[l].a[i], grads.w[l].a[i], opt.m.w[l].a[i], opt.v.w[l].a[i]);
        for (size_t i = 0; i < b[l].size(); ++i)
            adam_update(b[l][i], grads.b[l][i], opt.m.b[l][i], opt.v.b[l][i]);
    }
    check_finite(net);
}

void save_network(std::ostream& out, const Network& net) {
    out << "defersim-net 1\n";
    out << "sizes";
    for (int n : net.sizes()) out << ' ' << n;
    out << "\nhead " << head_name(net.head()) << "\n";
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
    };
    for (size_t l = 0; l < net.layer_count(); ++l) {
        const Matrix& m = net.weights()[l];
        for (int r = 0; r < m.rows; ++r) {
            for (int c = 0; c < m.cols; ++c) {
                if (c) out << ' ';
                put(m.at(r, c));
            }
            out << "\n";
        }
        const auto& bias = net.biases()[l];
        for (size_t i = 0; i < bias.size(); ++i) {
            if (i) out << ' ';
            put(bias[i]);
        }
        out << "\n";
    }
}

void save_network(const std::string& path, const Network& net) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write network file: " + path);
    save_network(out, net);
    if (!out) throw IoError("write failure on: " + path);
}

Network load_network(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "defersim-net" || version != 1)
        throw ParseError("not a network file (bad magic)", 1);
    std::string tag;
    if (!(in >> tag) || tag != "sizes") throw ParseError("expected 'sizes'", 2);
    std::string rest;
    std::getline(in, rest);
    std::vector<int> sizes;
    {
        std::stringstream ss(rest);
        int n;
        while (ss >> n) sizes.push_back(n);
    }
    if (sizes.size() < 2) throw ParseError("network needs at least two layer sizes", 2);
    std::string head_tag, head_str;
    if (!(in >> head_tag >> head_str) || head_tag != "head")
        throw ParseError("expected 'head'", 3);

    Network net(sizes, head_from_name(head_str));
    for (size_t l = 0; l < net.layer_count(); ++l) {
        Matrix& m = net.weights()[l];
        for (double& x : m.a)
            if (!(in >> x)) throw ParseError("truncated weight block in network file");
        for (double& x : net.biases()[l])
            if (!(in >> x)) throw ParseError("truncated bias block in network file");
    }
    return net;
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file: " + path);
    return load_network(in);
}

std::string network_to_string(const Network& net) {
    std::stringstream ss;
    save_network(ss, net);
    return ss.str();
}

}  // namespace defersim
