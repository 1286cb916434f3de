#pragma once

#include <functional>
#include <vector>

#include "defersim/rng.hpp"
#include "defersim/types.hpp"

namespace defersim {

// A simulated fallible labeler: per-group probability of reporting the true
// label, plus a consultation cost (constant by default, but the hook is
// sample-dependent for cost models that care about the input).
struct ExpertModel {
    int id = 0;
    std::vector<double> accuracy_by_group;  // indexed by GroupId
    std::function<double(const Sample&)> cost = [](const Sample&) { return 1.0; };

    double accuracy(GroupId g) const {
        if (g < 0 || static_cast<size_t>(g) >= accuracy_by_group.size())
            throw ShapeError("expert has no accuracy for group " + std::to_string(g));
        return accuracy_by_group[static_cast<size_t>(g)];
    }
};

struct ExpertPanel {
    std::vector<ExpertModel> experts;

    size_t size() const { return experts.size(); }         // number of experts (m - 1)
    size_t slot_count() const { return experts.size() + 1; }  // + classifier slot
};

// One binary opinion; consumes exactly one rng draw so expert streams advance
// identically regardless of what the deferral policy does with the answer.
int expert_predict(const ExpertModel& expert, const Sample& s, Rng& rng);

// Per-slot costs for one sample; the classifier slot (last) is free.
CostVector panel_costs(const ExpertPanel& panel, const Sample& s);

// Two specialists: e1 is always right on orange and 20% on blue, e2 mirrors.
ExpertPanel make_cluster_experts(const GroupMap& groups);

// Forty dialect specialists: experts 1..30 favor non-AAE posts with accuracy
// p_j = 0.6 + 0.4*j/30 (and p_j - 0.3 on AAE); experts 31..40 favor AAE with
// p_j = 0.6 + 0.4*(j-30)/10 (and p_j - 0.3 on non-AAE).
ExpertPanel make_cm_experts(const GroupMap& groups);

// Panel for the two-group theory probes: round(alpha*m) experts are biased
// against group z0 (coin flips there, perfect on z1); the rest mirror.
ExpertPanel biased_panel(int m_experts, double alpha, const GroupMap& groups);

}  // namespace defersim
