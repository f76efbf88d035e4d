#include "secot/entropy.hpp"

#include <cmath>
#include <stdexcept>

namespace secot {

ClusterDistribution cluster_answers(const std::vector<CanonicalAnswer>& answers) {
    if (answers.empty()) {
        throw std::invalid_argument("cluster_answers: empty answer list");
    }
    ClusterDistribution dist;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        bool merged = false;
        for (auto& cluster : dist.clusters) {
            if (cluster.answer == answers[i]) {
                ++cluster.count;
                merged = true;
                break;
            }
        }
        if (!merged) {
            dist.clusters.push_back({answers[i], 1, i});
        }
    }
    dist.total = static_cast<int>(answers.size());
    return dist;
}

double entropy(const ClusterDistribution& dist) {
    double e = 0.0;
    for (std::size_t i = 0; i < dist.clusters.size(); ++i) {
        const double g = dist.frequency(i);
        if (g > 0.0) e -= g * std::log(g);
    }
    return e;
}

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("binary_entropy: p must lie in [0, 1]");
    }
    double e = 0.0;
    if (p > 0.0) e -= p * std::log(p);
    if (p < 1.0) e -= (1.0 - p) * std::log(1.0 - p);
    return e;
}

const CanonicalAnswer& mode_answer(const ClusterDistribution& dist) {
    if (dist.clusters.empty()) {
        throw std::invalid_argument("mode_answer: empty distribution");
    }
    const Cluster* best = &dist.clusters.front();
    for (const auto& cluster : dist.clusters) {
        if (cluster.count > best->count ||
            (cluster.count == best->count && cluster.first_index < best->first_index)) {
            best = &cluster;
        }
    }
    return best->answer;
}

} // namespace secot
