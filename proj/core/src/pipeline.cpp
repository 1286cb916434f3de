#include "defersim/pipeline.hpp"

#include <cmath>

namespace defersim {

double shifted_sigmoid(double t) {
    // exp(t)/(exp(t)+exp(1-t)) rewritten for stability.
    return 1.0 / (1.0 + std::exp(1.0 - 2.0 * t));
}

double slot_score(const SimplexVector& d, const PredictionVector& y) {
    if (d.size() != y.size()) throw ShapeError("weight/prediction size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < d.size(); ++i) acc += d[i] * y[i];
    return acc;
}

PredictionVector prediction_vector(const ExpertPanel& panel, const Classifier& classifier,
                                   const Sample& s, std::vector<Rng>& expert_rngs) {
    if (expert_rngs.size() != panel.size())
        throw ShapeError("one rng stream per expert required");
    PredictionVector y;
    y.values.reserve(panel.slot_count());
    for (size_t j = 0; j < panel.size(); ++j)
        y.values.push_back(static_cast<double>(expert_predict(panel.experts[j], s, expert_rngs[j])));
    y.values.push_back(classifier.predict_proba(s.features));
    return y;
}

int aggregate_full(const SimplexVector& d, const PredictionVector& y) {
    return slot_score(d, y) > 0.5 ? 1 : 0;
}

int aggregate_committee(const SimplexVector& d, const PredictionVector& y, int k, Rng& rng,
                        std::vector<int>* slots_out) {
    if (k <= 0) throw ConfigError("committee size must be positive");
    if (d.size() != y.size()) throw ShapeError("weight/prediction size mismatch");
    if (slots_out) slots_out->clear();
    int ones = 0;
    const size_t classifier_slot = d.size() - 1;
    for (int i = 0; i < k; ++i) {
        size_t slot = rng.sample_index(d.span());
        if (slots_out) slots_out->push_back(static_cast<int>(slot));
        double v = y[slot];
        int vote = (slot == classifier_slot) ? (v > 0.5 ? 1 : 0) : static_cast<int>(v);
        ones += vote;
    }
    if (2 * ones == k) return rng.bernoulli(0.5) ? 1 : 0;
    return 2 * ones > k ? 1 : 0;
}

double soft_prediction(const SimplexVector& d, const PredictionVector& y) {
    return shifted_sigmoid(slot_score(d, y));
}

SimplexVector deferral_weights(const Network& deferrer, std::span<const double> x) {
    if (deferrer.head() != Head::softmax)
        throw ShapeError("deferrer network must end in a softmax");
    return SimplexVector::trusted(deferrer.forward(x));
}

std::vector<Rng> make_expert_rngs(uint64_t seed, size_t expert_count) {
    std::vector<Rng> rngs;
    rngs.reserve(expert_count);
    for (size_t j = 0; j < expert_count; ++j)
        rngs.emplace_back(derive_seed(seed, "experts", j));
    return rngs;
}

}  // namespace defersim
