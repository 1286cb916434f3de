#include "defersim/dsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "defersim/simplex.hpp"

namespace defersim {

DSimTable::DSimTable(size_t slots, const GroupMap& groups)
    : slots_(slots), groups_(groups), vals_(slots * groups.size(), 0.0) {
    if (slots < 2) throw ShapeError("dsim table needs at least one expert and the classifier");
}

double DSimTable::at(size_t slot, GroupId g) const {
    if (slot >= slots_ || g < 0 || static_cast<size_t>(g) >= groups_.size())
        throw ShapeError("dsim index out of range");
    return vals_[slot * groups_.size() + static_cast<size_t>(g)];
}

void DSimTable::set(size_t slot, GroupId g, double value) {
    if (slot >= slots_ || g < 0 || static_cast<size_t>(g) >= groups_.size())
        throw ShapeError("dsim index out of range");
    if (!(value >= 0.0)) throw DegenerateWeightsError("dsim entries must be nonnegative");
    vals_[slot * groups_.size() + static_cast<size_t>(g)] = value;
}

std::vector<double> DSimTable::column(GroupId g) const {
    std::vector<double> out(slots_);
    for (size_t s = 0; s < slots_; ++s) out[s] = at(s, g);
    return out;
}

SimplexVector DSimTable::normalized_column(GroupId g) const {
    std::vector<double> col = column(g);
    double expert_mass = std::accumulate(col.begin(), col.end() - 1, 0.0);
    if (expert_mass <= 0.0)
        for (size_t s = 0; s + 1 < col.size(); ++s) col[s] = 1.0;
    return normalize(col);
}

DSimTable make_cluster_dsim(double s, const GroupMap& groups) {
    if (!(s >= 0.0 && s <= 0.5)) throw ConfigError("similarity parameter s must be in [0,0.5]");
    GroupId orange = groups.id_of("orange");
    GroupId blue = groups.id_of("blue");
    DSimTable t(3, groups);
    t.set(0, orange, 1.0 - s);
    t.set(0, blue, s);
    t.set(1, orange, s);
    t.set(1, blue, 1.0 - s);
    t.set(2, orange, 0.1);
    t.set(2, blue, 0.1);
    return t;
}

DSimTable make_cm_dsim(const ExpertPanel& panel, int n_s, const GroupMap& groups, Rng& rng,
                       double classifier_entry) {
    if (n_s < 0) throw ConfigError("n_s must be nonnegative");
    DSimTable t(panel.slot_count(), groups);

    // Partition experts into per-group specialist blocks by best accuracy.
    std::vector<std::vector<size_t>> blocks(groups.size());
    for (size_t j = 0; j < panel.size(); ++j) {
        const auto& acc = panel.experts[j].accuracy_by_group;
        size_t best = static_cast<size_t>(
            std::max_element(acc.begin(), acc.end()) - acc.begin());
        blocks[best].push_back(j);
    }
    for (GroupId g = 0; g < static_cast<GroupId>(groups.size()); ++g) {
        auto& block = blocks[static_cast<size_t>(g)];
        if (static_cast<size_t>(n_s) > block.size())
            throw ConfigError("n_s exceeds the specialist block for group " + groups.name_of(g));
        // Draw n_s distinct experts from the block (partial Fisher-Yates).
        std::vector<size_t> pool = block;
        for (int i = 0; i < n_s; ++i) {
            int j = rng.uniform_int(i, static_cast<int>(pool.size()) - 1);
            std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
            t.set(pool[static_cast<size_t>(i)], g, 1.0);
        }
    }
    for (GroupId g = 0; g < static_cast<GroupId>(groups.size()); ++g)
        t.set(panel.size(), g, classifier_entry);
    return t;
}

DSimTable load_dsim(const std::string& path, const GroupMap& groups) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dsim file: " + path);
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ConfigError("empty dsim file: " + path);
    ++line_no;

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            field.erase(0, field.find_first_not_of(" \t\r"));
            field.erase(field.find_last_not_of(" \t\r") + 1);
            header.push_back(field);
        }
    }
    if (header.size() != groups.size() + 1 || header[0] != "slot")
        throw ParseError("expected header 'slot,<groups..>'", line_no);
    std::vector<GroupId> order;
    for (size_t i = 1; i < header.size(); ++i) order.push_back(groups.id_of(header[i]));

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ',')) {
            try {
                row.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw ParseError("bad numeric field '" + field + "'", line_no);
            }
        }
        if (row.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields", line_no);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ConfigError("dsim file needs at least two slots: " + path);

    DSimTable t(rows.size(), groups);
    for (size_t r = 0; r < rows.size(); ++r) {
        size_t slot = static_cast<size_t>(rows[r][0]) - 1;  // slots are 1-based on disk
        if (slot != r) throw ParseError("slot column must run 1.." + std::to_string(rows.size()));
        for (size_t i = 0; i < order.size(); ++i) t.set(slot, order[i], rows[r][i + 1]);
    }
    return t;
}

void save_dsim(const std::string& path, const DSimTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dsim file: " + path);
    out << "slot";
    for (const auto& name : table.groups().names()) out << ',' << name;
    out << "\n";
    char buf[32];
    for (size_t s = 0; s < table.slots(); ++s) {
        out << (s + 1);
        for (GroupId g = 0; g < static_cast<GroupId>(table.categories()); ++g) {
            std::snprintf(buf, sizeof buf, "%.17g", table.at(s, g));
            out << ',' << buf;
        }
        out << "\n";
    }
}

AnchorDsim::AnchorDsim(std::vector<AnchorPoint> anchors, Kernel kernel)
    : anchors_(std::move(anchors)), kernel_(std::move(kernel)) {
    if (anchors_.empty()) throw ConfigError("anchor set must not be empty");
    size_t m = anchors_.front().correct.size();
    for (const auto& a : anchors_)
        if (a.correct.size() != m) throw ShapeError("anchor correctness widths differ");
}

size_t AnchorDsim::expert_count() const { return anchors_.front().correct.size(); }

double AnchorDsim::operator()(size_t expert, std::span<const double> x) const {
    if (expert >= expert_count()) throw ShapeError("anchor dsim: expert index out of range");
    double wsum = 0.0, csum = 0.0;
    for (const auto& a : anchors_) {
        double k = kernel_(a.features, x);
        wsum += k;
        csum += k * a.correct[expert];
    }
    if (wsum <= 0.0) return 0.0;  // query beyond kernel support: no evidence
    return csum / wsum;
}

Kernel median_bandwidth_rbf(const std::vector<AnchorPoint>& anchors) {
    std::vector<double> d2;
    for (size_t i = 0; i < anchors.size(); ++i)
        for (size_t j = i + 1; j < anchors.size(); ++j) {
            double s = 0.0;
            for (size_t k = 0; k < anchors[i].features.size(); ++k) {
                double d = anchors[i].features[k] - anchors[j].features[k];
                s += d * d;
            }
            d2.push_back(s);
        }
    double h2 = 1.0;
    if (!d2.empty()) {
        std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
        h2 = std::max(d2[d2.size() / 2], 1e-12);
    }
    return [h2](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (size_t k = 0; k < a.size(); ++k) {
            double d = a[k] - b[k];
            s += d * d;
        }
        return std::exp(-s / h2);
    };
}

}  // namespace defersim
