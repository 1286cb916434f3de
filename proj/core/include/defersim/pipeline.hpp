#pragma once

#include <span>
#include <vector>

#include "defersim/classifier.hpp"
#include "defersim/experts.hpp"
#include "defersim/nn.hpp"
#include "defersim/rng.hpp"
#include "defersim/types.hpp"

namespace defersim {

// Shifted sigmoid exp(t) / (exp(t) + exp(1-t)); fixed point 0.5 at t = 0.5.
double shifted_sigmoid(double t);

// Weighted slot score d . y.
double slot_score(const SimplexVector& d, const PredictionVector& y);

// Queries every expert (one rng draw each from its dedicated stream) and the
// classifier; the returned vector is [e_1, .., e_{m-1}, f(x)].
PredictionVector prediction_vector(const ExpertPanel& panel, const Classifier& classifier,
                                   const Sample& s, std::vector<Rng>& expert_rngs);

// Full weighted vote: 1 only when the score strictly exceeds one half.
int aggregate_full(const SimplexVector& d, const PredictionVector& y);

// Committee of k slots drawn i.i.d. from d (with replacement); the classifier
// slot votes its probability binarized at 0.5; ties fall to a fair coin.
// `slots_out`, when given, receives the sampled slot indices.
int aggregate_committee(const SimplexVector& d, const PredictionVector& y, int k, Rng& rng,
                        std::vector<int>* slots_out = nullptr);

// Differentiable aggregate shifted_sigmoid(d . y) used by the deferral loss.
double soft_prediction(const SimplexVector& d, const PredictionVector& y);

// Softmax deferrer output for one input.
SimplexVector deferral_weights(const Network& deferrer, std::span<const double> x);

// Expert rng streams derived from one base seed; stream j belongs to expert j.
std::vector<Rng> make_expert_rngs(uint64_t seed, size_t expert_count);

}  // namespace defersim
