#pragma once

#include <vector>

namespace defersim {

// One evaluation snapshot taken during training.
struct TraceRow {
    long iter = 0;
    double overall = 0.0;
    double acc_g0 = 0.0, acc_g1 = 0.0;
    double disparity = 0.0;
    double mean_cost = 0.0;
};

struct RunMetrics {
    double overall = 0.0;
    std::vector<double> acc_by_group;
    double disparity = 0.0;             // |acc(group 0) - acc(group 1)| for two groups
    std::vector<double> deferral_rate;  // mean weight (full) or draw frequency (committee)
    double mean_cost = 0.0;             // mean per-sample cost of consulted experts
    std::vector<TraceRow> trace;
};

}  // namespace defersim
