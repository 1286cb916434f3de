#pragma once

// Abstract reward/penalty dynamics on bare simplex weights, plus Monte-Carlo
// probes that check the closed-form properties of those dynamics: flatness of
// the self-confirming single-expert policy, the disparity band of a
// similarity-induced starting policy, the exploitation rate of a
// well-separated top expert, and the exploration threshold for discovering a
// hidden accurate expert under committee sampling.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "defersim/rng.hpp"

namespace defersim {

// One measured quantity with its acceptance band. `lo`/`hi` already include
// any Monte-Carlo slack the probe grants itself.
struct ProbePoint {
    std::vector<std::pair<std::string, double>> params;
    double measured = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double mc_stderr = 0.0;
    bool pass = false;
};

struct ProbeReport {
    std::string probe;
    std::vector<ProbePoint> points;
    bool pass = false;
};

// In-place reward/penalty step: slots in `rewarded` gain `delta_reward`, all
// other slots lose `delta_penalty`; negatives are clipped at zero and the
// result projected back onto the simplex.
void abstract_update(std::vector<double>& w, std::span<const int> rewarded,
                     double delta_reward, double delta_penalty);

// Per-slot accuracies for the two-group biased panel: round(alpha*m) slots at
// (0.5, 1.0) across (group0, group1), the rest mirrored. Returned as
// m rows of {acc_group0, acc_group1}.
std::vector<std::array<double, 2>> biased_accuracies(double alpha, int m);

// Mean disparity trajectory (group1 accuracy minus group0 accuracy of the
// induced policy, averaged over trials) for the self-confirming k=1 dynamics
// started from uniform weights. Entry 0 is the pre-training disparity;
// entries 1..steps follow each update.
std::vector<double> simulate_claim1(double alpha, int m, int steps, int trials,
                                    double delta_penalty, uint64_t seed);

// Ordinary least-squares slope of y against its index 0..n-1.
double linear_slope(std::span<const double> y);

// Closed-form disparity band of the similarity-induced single-expert policy:
// lo = gamma/2, hi = (alpha/(1-alpha)) * gamma/2.
std::pair<double, double> disparity_bounds(double gamma, double alpha);

// Exact starting disparity of that policy (the quantity the band brackets).
double induced_policy_disparity(double gamma, double alpha);

// Threshold weight above which a perfectly accurate but poorly-ranked expert
// gains weight in expectation under committee sampling of size k.
double theorem2_threshold(int k, int m);

// Analytic expected one-step weight change of the hidden expert at weight
// eps, with the reward/penalty ratio fixed at (2m/k - 1).
double theorem2_expected_change(double eps, int k, int m, double delta_penalty);

// Probe drivers. Each returns one report with per-point pass flags.
ProbeReport claim1_check(double alpha, int m, int steps, int trials,
                         double delta_penalty, uint64_t seed);
ProbeReport remark2_check(int trials_per_group, uint64_t seed);
ProbeReport theorem1_check(std::span<const double> betas, std::span<const double> deltas,
                           std::span<const int> ms, int trials, uint64_t seed);
ProbeReport theorem2_check(std::span<const std::pair<int, int>> km_pairs, int trials,
                           double delta_penalty, uint64_t seed);

}  // namespace defersim
