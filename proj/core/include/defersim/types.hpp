#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "defersim/errors.hpp"

namespace defersim {

using GroupId = int;

// One input instance. `true_label` exists for the simulation side (expert draws,
// final scoring); the learning path never reads it after aggregation.
struct Sample {
    long id = 0;
    std::vector<double> features;
    GroupId group = 0;
    int true_label = 0;
};

// Dense ids for group-name strings, assigned in sorted name order so that the
// mapping does not depend on row order of a shuffled file.
class GroupMap {
  public:
    GroupMap() = default;
    explicit GroupMap(std::vector<std::string> names) : names_(std::move(names)) {
        std::sort(names_.begin(), names_.end());
        names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
    }

    GroupId id_of(const std::string& name) const {
        auto it = std::lower_bound(names_.begin(), names_.end(), name);
        if (it == names_.end() || *it != name)
            throw ConfigError("unknown group name: " + name);
        return static_cast<GroupId>(it - names_.begin());
    }
    const std::string& name_of(GroupId id) const {
        if (id < 0 || static_cast<size_t>(id) >= names_.size())
            throw ShapeError("group id out of range: " + std::to_string(id));
        return names_[static_cast<size_t>(id)];
    }
    size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

  private:
    std::vector<std::string> names_;
};

inline constexpr double kSimplexTolerance = 1e-9;

// Nonnegative weights summing to one; validated on construction.
class SimplexVector {
  public:
    SimplexVector() = default;

    static SimplexVector checked(std::vector<double> w) {
        double sum = 0.0;
        for (double x : w) {
            if (!(x >= 0.0)) throw DegenerateWeightsError("negative or NaN simplex entry");
            sum += x;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance)
            throw DegenerateWeightsError("simplex mass " + std::to_string(sum) + " != 1");
        SimplexVector v;
        v.w_ = std::move(w);
        return v;
    }
    // For producers that guarantee the invariant structurally (softmax, projection).
    static SimplexVector trusted(std::vector<double> w) {
        SimplexVector v;
        v.w_ = std::move(w);
        return v;
    }

    size_t size() const { return w_.size(); }
    double operator[](size_t i) const { return w_[i]; }
    std::span<const double> span() const { return w_; }
    const std::vector<double>& values() const { return w_; }

  private:
    std::vector<double> w_;
};

// Per-slot predictions for one sample: entries 0..m-2 are binary expert votes,
// the last entry is the classifier probability in [0,1].
struct PredictionVector {
    std::vector<double> values;

    size_t size() const { return values.size(); }
    double operator[](size_t i) const { return values[i]; }

    void validate() const {
        if (values.empty()) throw ShapeError("empty prediction vector");
        for (size_t i = 0; i + 1 < values.size(); ++i)
            if (values[i] != 0.0 && values[i] != 1.0)
                throw ShapeError("expert vote must be 0 or 1");
        double f = values.back();
        if (!(f >= 0.0 && f <= 1.0)) throw ShapeError("classifier output outside [0,1]");
    }
};

// Per-slot deferral costs; the classifier slot (last) costs nothing.
struct CostVector {
    std::vector<double> values;

    size_t size() const { return values.size(); }
    double operator[](size_t i) const { return values[i]; }

    void validate() const {
        if (values.empty()) throw ShapeError("empty cost vector");
        for (double c : values)
            if (!(c >= 0.0)) throw ShapeError("negative cost");
        if (values.back() != 0.0) throw ShapeError("classifier slot must have zero cost");
    }
};

}  // namespace defersim
