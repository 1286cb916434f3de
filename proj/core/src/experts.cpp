#include "defersim/experts.hpp"

#include <cmath>

namespace defersim {

int expert_predict(const ExpertModel& expert, const Sample& s, Rng& rng) {
    double acc = expert.accuracy(s.group);
    bool correct = rng.bernoulli(acc);
    return correct ? s.true_label : 1 - s.true_label;
}

CostVector panel_costs(const ExpertPanel& panel, const Sample& s) {
    CostVector c;
    c.values.reserve(panel.slot_count());
    for (const auto& e : panel.experts) c.values.push_back(e.cost(s));
    c.values.push_back(0.0);
    return c;
}

ExpertPanel make_cluster_experts(const GroupMap& groups) {
    GroupId orange = groups.id_of("orange");
    GroupId blue = groups.id_of("blue");
    auto make = [&](int id, double acc_orange, double acc_blue) {
        ExpertModel e;
        e.id = id;
        e.accuracy_by_group.assign(groups.size(), 0.0);
        e.accuracy_by_group[static_cast<size_t>(orange)] = acc_orange;
        e.accuracy_by_group[static_cast<size_t>(blue)] = acc_blue;
        return e;
    };
    ExpertPanel p;
    p.experts.push_back(make(1, 1.0, 0.2));
    p.experts.push_back(make(2, 0.2, 1.0));
    return p;
}

ExpertPanel make_cm_experts(const GroupMap& groups) {
    GroupId aae = groups.id_of("aae");
    GroupId non_aae = groups.id_of("non_aae");
    ExpertPanel p;
    for (int j = 1; j <= 40; ++j) {
        ExpertModel e;
        e.id = j;
        e.accuracy_by_group.assign(groups.size(), 0.0);
        if (j <= 30) {
            double pj = 0.6 + 0.4 * j / 30.0;
            e.accuracy_by_group[static_cast<size_t>(non_aae)] = pj;
            e.accuracy_by_group[static_cast<size_t>(aae)] = pj - 0.3;
        } else {
            double pj = 0.6 + 0.4 * (j - 30) / 10.0;
            e.accuracy_by_group[static_cast<size_t>(aae)] = pj;
            e.accuracy_by_group[static_cast<size_t>(non_aae)] = pj - 0.3;
        }
        p.experts.push_back(std::move(e));
    }
    return p;
}

ExpertPanel biased_panel(int m_experts, double alpha, const GroupMap& groups) {
    if (m_experts <= 0) throw ConfigError("panel needs at least one expert");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
    GroupId z0 = groups.id_of("z0");
    GroupId z1 = groups.id_of("z1");
    int biased_against_z0 = static_cast<int>(std::lround(alpha * m_experts));
    ExpertPanel p;
    for (int j = 0; j < m_experts; ++j) {
        ExpertModel e;
        e.id = j + 1;
        e.accuracy_by_group.assign(groups.size(), 0.0);
        bool against_z0 = j < biased_against_z0;
        e.accuracy_by_group[static_cast<size_t>(z0)] = against_z0 ? 0.5 : 1.0;
        e.accuracy_by_group[static_cast<size_t>(z1)] = against_z0 ? 1.0 : 0.5;
        p.experts.push_back(std::move(e));
    }
    return p;
}

}  // namespace defersim
