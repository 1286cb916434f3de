#include "defersim/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace defersim {

SimplexVector normalize(std::span<const double> weights) {
    if (weights.empty()) throw DegenerateWeightsError("cannot normalize empty weights");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw DegenerateWeightsError("weights must be finite and nonnegative");
        sum += w;
    }
    if (sum <= 0.0) throw DegenerateWeightsError("all-zero weight vector");
    std::vector<double> out(weights.begin(), weights.end());
    for (double& w : out) w /= sum;
    return SimplexVector::trusted(std::move(out));
}

SimplexVector project_simplex(std::span<const double> v) {
    if (v.empty()) throw ShapeError("cannot project empty vector");
    const size_t n = v.size();
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<double>());

    // Largest rho with u_rho + (1 - sum_{i<=rho} u_i) / rho > 0.
    double cum = 0.0, tau = 0.0;
    size_t rho = 0;
    for (size_t i = 0; i < n; ++i) {
        cum += u[i];
        double t = (1.0 - cum) / static_cast<double>(i + 1);
        if (u[i] + t > 0.0) {
            rho = i + 1;
            tau = t;
        }
    }
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = std::max(0.0, v[i] + tau);
    // rho is always >= 1, so the result carries positive mass.
    (void)rho;
    return SimplexVector::trusted(std::move(out));
}

}  // namespace defersim
