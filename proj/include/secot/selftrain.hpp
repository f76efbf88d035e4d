#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace secot::selftrain {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
Vec normalized(const Vec& v);
/// Angle between two vectors in [0, pi].
double angle_between(const Vec& a, const Vec& b);

/// Two-component Gaussian mixture: y ~ Unif({+1,-1}), x | y ~ N(y*mean, I).
struct GmmConfig {
    int dimension = 2;
    Vec mean = {1.0, 0.0};
    double temperature = 1.0; // sigma; must satisfy sigma >= max(1, |mean|)
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainSchedule {
    double step_size = 0.02;   // eta
    int batch_size = 512;      // B; a fresh i.i.d. batch is drawn per step
    int steps = 1000;          // T; the trajectory records t = 0 .. T-1
    double initial_angle = 0.7853981633974483; // theta_0 = pi/4

    void validate() const;
};

struct Sample {
    Vec x;
    int label = 1; // +1 or -1
};

struct ClassifierState {
    Vec beta; // unit norm
    int step = 0;
};

/// Quadrant of the mod-pi line-angle circle a sample falls in, relative to
/// the sweep of the classifier's decision line from beta_0 toward mu.
enum class RegionLabel {
    BetaToMu,         // entropy dips then rises
    MuToBetaPerp,     // entropy decreases
    BetaPerpToMuPerp, // entropy rises then falls
    MuPerpToBeta,     // entropy increases
};

enum class PatternLabel {
    MonotoneDecreasing,
    MonotoneIncreasing,
    DecreaseThenIncrease,
    IncreaseThenDecrease,
    Flat,
    Irregular,
};

std::string_view to_string(RegionLabel label);
std::string_view to_string(PatternLabel label);

struct SimTrajectory {
    std::vector<double> theta;       // angle(beta_t, mean), length T
    std::vector<double> delta;       // 2 sin(theta_t / 2)
    std::vector<Vec> beta;           // classifier at each t
    // sample_entropy[i][t] = H_t(x_i) for tracked point i
    std::vector<std::vector<double>> sample_entropy;
    std::vector<double> avg_entropy; // mean over tracked points per t
};

std::vector<Sample> sample_gmm(const GmmConfig& cfg, int n, std::mt19937_64& rng);

/// Unit classifier at angle theta0 from the mean direction, rotated inside
/// the plane spanned by the mean and a fixed orthogonal axis.
ClassifierState init_classifier(const GmmConfig& cfg, double theta0);

/// Mean logistic loss (1/B) sum_i l(yhat_i * beta.x_i / sigma) with the
/// pseudo-labels held fixed; l(z) = ln(1 + e^-z).
double pseudo_label_loss(const Vec& beta, std::span<const Vec> batch,
                         std::span<const int> pseudo_labels, double sigma);
Vec pseudo_label_gradient(const Vec& beta, std::span<const Vec> batch,
                          std::span<const int> pseudo_labels, double sigma);

/// One pseudo-label gradient step followed by renormalization. Throws
/// DegenerateUpdate when the pre-normalization vector is numerically zero.
ClassifierState self_train_step(const ClassifierState& state, const std::vector<Vec>& batch,
                                double step_size, double sigma);

/// Runs the pseudo-label loop, recording theta_t and (for every tracked
/// point) H_t(x) = binary_entropy(sigmoid(beta_t . x)) at each t.
SimTrajectory run_self_training(const GmmConfig& cfg, const TrainSchedule& schedule,
                                const std::vector<Vec>& tracked_points = {});

/// Maps x to its sweep region via line angles mod pi. Intervals are closed
/// at their sweep-start edge; nullopt marks points within `band` radians of
/// any interval endpoint.
std::optional<RegionLabel> region_of(const Vec& x, const Vec& beta0, const Vec& mu,
                                     double band = 0.0);

/// Collapses a series into a shape label. Successive differences of
/// magnitude <= tol count as zero; at most one persisting sign change is
/// allowed per non-flat pattern.
PatternLabel classify_trajectory(const std::vector<double>& series, double tol);

struct TheoremCheckOptions {
    int checkpoints = 26;       // H series is sampled at this many time points
    double tol_fraction = 0.02; // per-point tol = fraction of the series range
};

struct TrackedPoint {
    Vec x;
    RegionLabel region;
    PatternLabel pattern;
    bool matched = false;
};

struct RegionStats {
    RegionLabel region;
    int total = 0;
    int matched = 0;

    double match_rate() const { return total == 0 ? 1.0 : static_cast<double>(matched) / total; }
};

struct RegionReport {
    std::array<RegionStats, 4> regions{};
    int boundary_excluded = 0;
    double avg_entropy_start = 0.0;
    double avg_entropy_final = 0.0;
    SimTrajectory trajectory;
    std::vector<TrackedPoint> points;

    bool avg_entropy_decreased() const { return avg_entropy_final < avg_entropy_start; }
    bool all_regions_at_least(double min_rate) const;
};

/// Whether `pattern` is consistent with the predicted entropy shape for
/// `region`; the dip/bump regions also accept the pure monotone pattern
/// (turning point past the simulated horizon).
bool pattern_matches_region(RegionLabel region, PatternLabel pattern);

/// Trains once, then classifies the entropy trajectory of n_test fresh
/// mixture samples (boundary band excluded) against the per-region
/// predictions.
RegionReport verify_theorem(const GmmConfig& cfg, const TrainSchedule& schedule, int n_test,
                            double band, const TheoremCheckOptions& options = {});

/// Per-run CSV: t, theta_t, delta_t, avg_entropy.
void write_trajectory_csv(const SimTrajectory& trajectory, const std::filesystem::path& path);
/// Per-sample CSV (long format): sample_id, region, t, H_t. `stride` thins
/// the time axis (the final step is always written).
void write_samples_csv(const RegionReport& report, const std::filesystem::path& path,
                       int stride = 1);

} // namespace secot::selftrain
