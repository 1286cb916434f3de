#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "defersim/classifier.hpp"
#include "defersim/dsim.hpp"
#include "defersim/experts.hpp"
#include "defersim/metrics.hpp"
#include "defersim/nn.hpp"
#include "defersim/pipeline.hpp"

namespace defersim {

enum class AggregationMode { full, committee };
enum class LabelMode { aggregated, oracle };

AggregationMode aggregation_from_name(const std::string& name);
LabelMode label_mode_from_name(const std::string& name);

struct PriorFitConfig {
    bool adam = false;     // plain gradient descent when false
    double rate = 0.001;
    int steps = 500;
    int batch = 0;         // 0 = full batch per step
};

struct TrainConfig {
    double alpha = 1.0;          // weight of the deferral loss in the joint objective
    double eta = 0.01;           // learning rate of the main phase
    bool adam_main = false;      // adaptive-moment steps for the main phase
    int batch = 100;             // samples per parameter update (B)
    double lambda_const = 0.0;   // lambda(t) = lambda_const + lambda_slope * t
    double lambda_slope = 0.01;  // t counts parameter updates
    AggregationMode train_aggregation = AggregationMode::full;
    int committee_k = 5;
    LabelMode label_mode = LabelMode::aggregated;
    int epochs = 1;         // passes over the stream; update index keeps counting
    long max_updates = -1;  // -1 = consume the whole stream; 0 = prior only
    double t_d = 10000.0;   // prior-mixing horizon (smooth variant)
    PriorFitConfig prior;
    std::vector<int> deferrer_hidden = {16, 8};
    uint64_t seed = 1;
};

double lambda_at(const TrainConfig& cfg, long update_idx);

// Binary cross-entropy with clamped arguments.
double classifier_loss(double f, int label);

// Cross-entropy of the soft aggregate shifted_sigmoid(d . y_e) against the
// label, plus the expected consultation cost lambda * (d . c).
double deferral_loss(const SimplexVector& d, const PredictionVector& y_e, int label,
                     const CostVector& costs, double lambda);

// One decision already taken by the pipeline; the training side sees the
// input, the frozen expert votes and the aggregated label - never the truth.
struct BatchItem {
    std::vector<double> x;
    PredictionVector y_e;
    CostVector costs;
    int label = 0;
};

// Mean of L_f + alpha * L_D over a batch, evaluated at the current parameters.
double combined_loss(std::span<const BatchItem> batch, const Network& deferrer,
                     const Classifier& classifier, double alpha, double lambda);

// Joint gradient step: deferrer descends the deferral loss through its
// softmax; the classifier consumes d(L_f + alpha L_D)/df (gradient models) or
// refits on the aggregated labels (tree models).
void update_model(std::span<const BatchItem> batch, Network& deferrer,
                  OptimizerState& deferrer_opt, Classifier& classifier, double alpha,
                  double lambda);

// Regresses the deferrer's softmax output onto each sample's normalized dSim
// column (mean squared error over the unlabeled prior set).
Network fit_prior_deferrer(std::span<const Sample> unlabeled, const DSimTable& table,
                           size_t input_dim, std::span<const int> hidden,
                           const PriorFitConfig& prior, uint64_t seed);

struct TrainHooks {
    // Called after every parameter update (trace evaluation lives here).
    std::function<void(long update_idx, long samples_seen, const Network& deferrer,
                       const Classifier& classifier)>
        on_update;
    // Called on the working copy of each sample after its label has been
    // aggregated; lets audits corrupt the ground truth to prove the training
    // path never reads it.
    std::function<void(Sample&)> after_aggregate;
};

struct TrainResult {
    Network deferrer;
    std::unique_ptr<Classifier> classifier;
    long updates = 0;
    long samples_seen = 0;
};

// Prior-initialized variant: fit the deferrer to the dSim prior on the
// unlabeled set, then stream; every `batch` samples take a joint update.
TrainResult strict_matching(std::span<const Sample> prior_unlabeled,
                            std::span<const Sample> stream, const ExpertPanel& panel,
                            const DSimTable& table, std::unique_ptr<Classifier> classifier,
                            const TrainConfig& cfg, const TrainHooks& hooks = {});

// Randomly initialized variant: decisions blend the dSim prior (classifier
// slot zeroed) with the learned deferrer at weight mu = T_d / (t + T_d).
TrainResult smooth_matching(std::span<const Sample> stream, const ExpertPanel& panel,
                            const DSimTable& table, std::unique_ptr<Classifier> classifier,
                            const TrainConfig& cfg, const TrainHooks& hooks = {});

// Per-category decision weights of the smooth variant at stream position t.
SimplexVector smooth_mixed_weights(const Network& deferrer, const DSimTable& table,
                                   const Sample& s, double t_d, long t);

// Context-free multiplicative-weights baseline over all slots (classifier
// vote binarized, model frozen). Wrong slots shrink by (1 - eta); weights are
// renormalized each round. Returns the weight vector after every round.
std::vector<std::vector<double>> mwu_baseline(std::span<const Sample> stream,
                                              const ExpertPanel& panel,
                                              const Classifier& classifier, double eta,
                                              uint64_t seed);

// Uniformly random committee of k experts, majority vote, scored on truth.
RunMetrics random_committee_baseline(std::span<const Sample> samples, const ExpertPanel& panel,
                                     size_t group_count, int k, uint64_t seed);

}  // namespace defersim
