#pragma once

#include "secot/answers.hpp"

#include <cstddef>
#include <vector>

namespace secot {

/// One semantic cluster: a canonical answer, how many samples landed in it,
/// and the input position where it first appeared (used for tie-breaking).
struct Cluster {
    CanonicalAnswer answer;
    int count = 0;
    std::size_t first_index = 0;
};

/// Histogram of sampled answers over semantic clusters. Clusters are kept in
/// first-appearance order; `total` is the number of samples N.
struct ClusterDistribution {
    std::vector<Cluster> clusters;
    int total = 0;

    double frequency(std::size_t i) const {
        return static_cast<double>(clusters[i].count) / total;
    }
};

/// Groups answers by canonical equality. Throws std::invalid_argument on an
/// empty input (precondition violation).
ClusterDistribution cluster_answers(const std::vector<CanonicalAnswer>& answers);

/// Discrete semantic-entropy approximation, in nats:
/// -sum_j g_j ln g_j with g_j = count_j / N. Range [0, ln N].
double entropy(const ClusterDistribution& dist);

/// Entropy of a Bernoulli(p) variable in nats, with 0 ln 0 := 0.
/// Throws std::domain_error when p is outside [0, 1].
double binary_entropy(double p);

/// Majority answer; ties go to the cluster that appeared first.
const CanonicalAnswer& mode_answer(const ClusterDistribution& dist);

} // namespace secot
