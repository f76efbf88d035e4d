#include "secot/entropy.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace secot;

namespace {

CanonicalAnswer label(const std::string& text) {
    return {text, AnswerFormat::Kind::FreeForm, std::nullopt};
}

std::vector<CanonicalAnswer> labels(const std::vector<std::string>& texts) {
    std::vector<CanonicalAnswer> out;
    for (const auto& t : texts) out.push_back(label(t));
    return out;
}

// Independent oracle: entropy from raw counts, no clustering involved.
double brute_force_entropy(const std::vector<int>& counts) {
    int n = 0;
    for (int c : counts) n += c;
    double e = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        const double g = static_cast<double>(c) / n;
        e -= g * std::log(g);
    }
    return e;
}

} // namespace

TEST_CASE("entropy matches the brute-force oracle on all small multisets") {
    // Every tuple of length 1..6 over 4 labels; tuples cover each multiset in
    // all orders, which doubles as a permutation-invariance sweep.
    const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
    for (int len = 1; len <= 6; ++len) {
        std::vector<int> index(len, 0);
        while (true) {
            std::vector<CanonicalAnswer> answers;
            std::vector<int> counts(alphabet.size(), 0);
            for (int i = 0; i < len; ++i) {
                answers.push_back(label(alphabet[index[i]]));
                ++counts[index[i]];
            }
            const double expected = brute_force_entropy(counts);
            const double actual = entropy(cluster_answers(answers));
            REQUIRE(std::abs(actual - expected) < 1e-12);

            int pos = len - 1;
            while (pos >= 0 && index[pos] == 3) index[pos--] = 0;
            if (pos < 0) break;
            ++index[pos];
        }
    }
}

TEST_CASE("entropy reference values") {
    CHECK(entropy(cluster_answers(labels({"x", "x", "x"}))) == doctest::Approx(0.0));
    CHECK(std::abs(entropy(cluster_answers(labels({"x", "x", "y"}))) - 0.6365141682948128) <
          1e-9);
    CHECK(std::abs(entropy(cluster_answers(labels({"x", "y", "z"}))) - std::log(3.0)) < 1e-9);
}

TEST_CASE("clustering groups numeric answers by value") {
    std::vector<CanonicalAnswer> answers = {
        {"36", AnswerFormat::Kind::Numeric, 36.0},
        {"36", AnswerFormat::Kind::Numeric, 36.0},
        {"186624", AnswerFormat::Kind::Numeric, 186624.0},
    };
    const auto dist = cluster_answers(answers);
    REQUIRE(dist.clusters.size() == 2);
    CHECK(dist.clusters[0].count == 2);
    CHECK(dist.clusters[1].count == 1);
    CHECK(dist.total == 3);
    CHECK(mode_answer(dist).text == "36");
}

TEST_CASE("clustering rejects empty input") {
    CHECK_THROWS_AS((void)cluster_answers({}), std::invalid_argument);
}

TEST_CASE("mode ties break by first appearance") {
    const auto dist = cluster_answers(labels({"A", "B"}));
    CHECK(mode_answer(dist).text == "A");
    CHECK(mode_answer(cluster_answers(labels({"x"}))).text == "x");
}

TEST_CASE("entropy is permutation invariant") {
    std::mt19937_64 rng(11);
    std::vector<std::string> pool = {"a", "a", "b", "c", "c", "c", "d"};
    const double reference = entropy(cluster_answers(labels(pool)));
    for (int trial = 0; trial < 50; ++trial) {
        std::shuffle(pool.begin(), pool.end(), rng);
        CHECK(entropy(cluster_answers(labels(pool))) == doctest::Approx(reference).epsilon(1e-12));
    }
}

TEST_CASE("entropy is maximal exactly for equal-sized clusters") {
    // k equal clusters hit ln k; any unequal split over k labels stays below.
    for (int k = 2; k <= 4; ++k) {
        std::vector<std::string> equal;
        for (int i = 0; i < k; ++i) equal.push_back(std::string(1, static_cast<char>('a' + i)));
        CHECK(entropy(cluster_answers(labels(equal))) ==
              doctest::Approx(std::log(k)).epsilon(1e-12));
    }
    std::vector<std::string> unequal = {"a", "a", "b", "c"};
    CHECK(entropy(cluster_answers(labels(unequal))) < std::log(3.0));
}

TEST_CASE("entropy stays within [0, ln N] on random multisets") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> size(1, 12);
    std::uniform_int_distribution<int> which(0, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = size(rng);
        std::vector<CanonicalAnswer> answers;
        for (int i = 0; i < n; ++i) {
            answers.push_back(label(std::string(1, static_cast<char>('a' + which(rng)))));
        }
        const double e = entropy(cluster_answers(answers));
        CHECK(e >= 0.0);
        CHECK(e <= std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST_CASE("binary entropy reference values and domain") {
    CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(std::abs(binary_entropy(0.9) - 0.3250829733914482) < 1e-4);
    CHECK_THROWS_AS((void)binary_entropy(-0.01), std::domain_error);
    CHECK_THROWS_AS((void)binary_entropy(1.01), std::domain_error);
}

TEST_CASE("binary entropy is symmetric and decreasing in |p - 1/2|") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double p1 = uniform(rng);
        const double p2 = uniform(rng);
        CHECK(binary_entropy(p1) == doctest::Approx(binary_entropy(1.0 - p1)).epsilon(1e-12));
        if (std::abs(p1 - 0.5) < std::abs(p2 - 0.5)) {
            CHECK(binary_entropy(p1) > binary_entropy(p2));
        }
    }
}
