#pragma once

#include <functional>
#include <string>
#include <vector>

#include "defersim/experts.hpp"
#include "defersim/rng.hpp"
#include "defersim/types.hpp"

namespace defersim {

// Prior similarity between each deferral slot and each input category. Slots
// are the experts in panel order plus the classifier as the final slot.
class DSimTable {
  public:
    DSimTable() = default;
    DSimTable(size_t slots, const GroupMap& groups);

    size_t slots() const { return slots_; }
    size_t categories() const { return groups_.size(); }
    const GroupMap& groups() const { return groups_; }

    double at(size_t slot, GroupId g) const;
    void set(size_t slot, GroupId g, double value);

    // All slot entries for one category.
    std::vector<double> column(GroupId g) const;

    // Column scaled to unit mass. When every expert entry is zero (an empty
    // prior) the experts fall back to uniform weight before normalizing, so
    // the classifier's small entry cannot swallow the whole simplex.
    SimplexVector normalized_column(GroupId g) const;

  private:
    size_t slots_ = 0;
    GroupMap groups_;
    std::vector<double> vals_;  // slot-major
};

// Cluster prior: e1 gets 1-s on orange and s on blue, e2 mirrors, and the
// classifier keeps a small 0.1 foothold on both.
DSimTable make_cluster_dsim(double s, const GroupMap& groups);

// Surrogate-task prior: n_s experts drawn (without replacement) from each
// group's specialist block get similarity 1 on that group; everyone else 0;
// the classifier row is `classifier_entry` everywhere. Block membership comes
// from each expert's best group.
DSimTable make_cm_dsim(const ExpertPanel& panel, int n_s, const GroupMap& groups, Rng& rng,
                       double classifier_entry = 0.1);

// Text format: header "slot,<group>,<group>,..", then one row per slot.
DSimTable load_dsim(const std::string& path, const GroupMap& groups);
void save_dsim(const std::string& path, const DSimTable& table);

// Anchor-based similarity for corpora without category labels: a kernel
// average of each expert's historical correctness around the query point.
using Kernel = std::function<double(std::span<const double>, std::span<const double>)>;

struct AnchorPoint {
    std::vector<double> features;
    std::vector<uint8_t> correct;  // per expert, 1 = expert was right here
};

class AnchorDsim {
  public:
    AnchorDsim(std::vector<AnchorPoint> anchors, Kernel kernel);

    // dSim(expert, x) in [0,1]: kernel-weighted mean of correctness bits.
    double operator()(size_t expert, std::span<const double> x) const;

    size_t expert_count() const;

  private:
    std::vector<AnchorPoint> anchors_;
    Kernel kernel_;
};

// Gaussian kernel with bandwidth set by the median pairwise anchor distance.
Kernel median_bandwidth_rbf(const std::vector<AnchorPoint>& anchors);

}  // namespace defersim
