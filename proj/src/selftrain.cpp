#include "secot/selftrain.hpp"

#include "secot/entropy.hpp"
#include "secot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace secot::selftrain {

namespace {

constexpr double kPi = std::numbers::pi;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double wrap_mod(double a, double m) {
    double r = std::fmod(a, m);
    if (r < 0.0) r += m;
    return r;
}

/// Angle of the line through v, in [0, pi).
double line_angle(const Vec& v) { return wrap_mod(std::atan2(v[1], v[0]), kPi); }

} // namespace

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec normalized(const Vec& v) {
    const double n = norm(v);
    if (n == 0.0) throw std::invalid_argument("normalized: zero vector");
    Vec out = v;
    for (double& c : out) c /= n;
    return out;
}

double angle_between(const Vec& a, const Vec& b) {
    const double c = dot(a, b) / (norm(a) * norm(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

void GmmConfig::validate() const {
    if (dimension < 2) throw std::invalid_argument("GmmConfig: dimension must be >= 2");
    if (mean.size() != static_cast<std::size_t>(dimension)) {
        throw std::invalid_argument("GmmConfig: mean has wrong dimension");
    }
    const double mu_norm = norm(mean);
    if (!(mu_norm > 0.0)) throw std::invalid_argument("GmmConfig: |mean| must be positive");
    if (temperature < std::max(1.0, mu_norm)) {
        throw std::invalid_argument("GmmConfig: temperature must be >= max(1, |mean|)");
    }
}

void TrainSchedule::validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("TrainSchedule: step_size must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainSchedule: batch_size must be >= 1");
    if (steps < 1) throw std::invalid_argument("TrainSchedule: steps must be >= 1");
    if (initial_angle < 0.0 || initial_angle >= kPi / 2) {
        throw std::invalid_argument("TrainSchedule: initial_angle must lie in [0, pi/2)");
    }
}

std::vector<Sample> sample_gmm(const GmmConfig& cfg, int n, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("sample_gmm: n must be >= 1");
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Sample> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.label = coin(rng) ? 1 : -1;
        s.x.resize(cfg.dimension);
        for (int d = 0; d < cfg.dimension; ++d) {
            s.x[d] = s.label * cfg.mean[d] + gauss(rng);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

ClassifierState init_classifier(const GmmConfig& cfg, double theta0) {
    if (theta0 < 0.0 || theta0 >= kPi / 2) {
        throw std::invalid_argument("init_classifier: theta0 must lie in [0, pi/2)");
    }
    const Vec mu_hat = normalized(cfg.mean);
    // Fixed orthogonal axis: rotate in the (mu, e_k) plane where e_k is the
    // basis vector least aligned with mu.
    Vec ortho(cfg.dimension, 0.0);
    if (cfg.dimension == 2) {
        ortho = {-mu_hat[1], mu_hat[0]};
    } else {
        std::size_t k = 0;
        for (std::size_t d = 1; d < mu_hat.size(); ++d) {
            if (std::abs(mu_hat[d]) < std::abs(mu_hat[k])) k = d;
        }
        ortho[k] = 1.0;
        const double proj = dot(ortho, mu_hat);
        for (std::size_t d = 0; d < ortho.size(); ++d) ortho[d] -= proj * mu_hat[d];
        ortho = normalized(ortho);
    }
    ClassifierState state;
    state.beta.resize(cfg.dimension);
    for (int d = 0; d < cfg.dimension; ++d) {
        state.beta[d] = std::cos(theta0) * mu_hat[d] + std::sin(theta0) * ortho[d];
    }
    state.beta = normalized(state.beta);
    state.step = 0;
    return state;
}

double pseudo_label_loss(const Vec& beta, std::span<const Vec> batch,
                         std::span<const int> pseudo_labels, double sigma) {
    if (batch.size() != pseudo_labels.size() || batch.empty()) {
        throw std::invalid_argument("pseudo_label_loss: bad batch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double z = pseudo_labels[i] * dot(beta, batch[i]) / sigma;
        // ln(1 + e^-z), stable for large |z|
        loss += z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
    return loss / static_cast<double>(batch.size());
}

Vec pseudo_label_gradient(const Vec& beta, std::span<const Vec> batch,
                          std::span<const int> pseudo_labels, double sigma) {
    if (batch.size() != pseudo_labels.size() || batch.empty()) {
        throw std::invalid_argument("pseudo_label_gradient: bad batch");
    }
    Vec grad(beta.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double z = pseudo_labels[i] * dot(beta, batch[i]) / sigma;
        const double coeff = -sigmoid(-z) * pseudo_labels[i] / sigma; // l'(z) * dz/dbeta
        for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += coeff * batch[i][d];
    }
    for (double& g : grad) g /= static_cast<double>(batch.size());
    return grad;
}

ClassifierState self_train_step(const ClassifierState& state, const std::vector<Vec>& batch,
                                double step_size, double sigma) {
    if (batch.empty()) throw std::invalid_argument("self_train_step: empty batch");
    std::vector<int> pseudo(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        pseudo[i] = dot(state.beta, batch[i]) >= 0.0 ? 1 : -1;
    }
    const Vec grad = pseudo_label_gradient(state.beta, batch, pseudo, sigma);
    Vec updated = state.beta;
    for (std::size_t d = 0; d < updated.size(); ++d) updated[d] -= step_size * grad[d];
    const double n = norm(updated);
    if (n < 1e-15) throw DegenerateUpdate("self_train_step: update collapsed to zero vector");
    for (double& c : updated) c /= n;
    return ClassifierState{std::move(updated), state.step + 1};
}

SimTrajectory run_self_training(const GmmConfig& cfg, const TrainSchedule& schedule,
                                const std::vector<Vec>& tracked_points) {
    cfg.validate();
    schedule.validate();
    std::mt19937_64 rng(cfg.seed);
    const Vec mu_hat = normalized(cfg.mean);

    SimTrajectory out;
    out.sample_entropy.resize(tracked_points.size());

    ClassifierState state = init_classifier(cfg, schedule.initial_angle);
    auto record = [&](const ClassifierState& s) {
        const double theta = angle_between(s.beta, mu_hat);
        out.theta.push_back(theta);
        out.delta.push_back(2.0 * std::sin(theta / 2.0));
        out.beta.push_back(s.beta);
        double total = 0.0;
        for (std::size_t i = 0; i < tracked_points.size(); ++i) {
            const double h = binary_entropy(sigmoid(dot(s.beta, tracked_points[i])));
            out.sample_entropy[i].push_back(h);
            total += h;
        }
        if (!tracked_points.empty()) {
            out.avg_entropy.push_back(total / static_cast<double>(tracked_points.size()));
        }
    };

    record(state);
    for (int t = 0; t + 1 < schedule.steps; ++t) {
        auto samples = sample_gmm(cfg, schedule.batch_size, rng);
        std::vector<Vec> batch;
        batch.reserve(samples.size());
        for (auto& s : samples) batch.push_back(std::move(s.x));
        state = self_train_step(state, batch, schedule.step_size, cfg.temperature);
        record(state);
    }
    return out;
}

std::optional<RegionLabel> region_of(const Vec& x, const Vec& beta0, const Vec& mu,
                                     double band) {
    if (x.size() != 2 || beta0.size() != 2 || mu.size() != 2) {
        throw std::invalid_argument("region_of: d = 2 required");
    }
    const double a = line_angle(beta0);
    const double b = line_angle(mu);
    const double diff = wrap_mod(b - a, kPi);
    // Sweep along the shorter arc from the beta0 line to the mu line.
    const double direction = diff <= kPi / 2 ? 1.0 : -1.0;
    const double theta0 = std::min(diff, kPi - diff);

    const double offset = wrap_mod(direction * (line_angle(x) - a), kPi);
    const double edges[] = {0.0, theta0, kPi / 2, kPi / 2 + theta0, kPi};
    if (band > 0.0) {
        for (double e : edges) {
            const double d = std::min(wrap_mod(offset - e, kPi), wrap_mod(e - offset, kPi));
            if (d < band) return std::nullopt;
        }
    }
    if (offset < theta0) return RegionLabel::BetaToMu;
    if (offset < kPi / 2) return RegionLabel::MuToBetaPerp;
    if (offset < kPi / 2 + theta0) return RegionLabel::BetaPerpToMuPerp;
    return RegionLabel::MuPerpToBeta;
}

PatternLabel classify_trajectory(const std::vector<double>& series, double tol) {
    if (series.size() < 3) {
        throw std::invalid_argument("classify_trajectory: need at least 3 points");
    }
    std::vector<int> signs;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double d = series[i] - series[i - 1];
        if (std::abs(d) <= tol) continue;
        const int s = d > 0.0 ? 1 : -1;
        if (signs.empty() || signs.back() != s) signs.push_back(s);
    }
    if (signs.empty()) return PatternLabel::Flat;
    if (signs.size() == 1) {
        return signs[0] < 0 ? PatternLabel::MonotoneDecreasing : PatternLabel::MonotoneIncreasing;
    }
    if (signs.size() == 2) {
        return signs[0] < 0 ? PatternLabel::DecreaseThenIncrease
                            : PatternLabel::IncreaseThenDecrease;
    }
    return PatternLabel::Irregular;
}

bool pattern_matches_region(RegionLabel region, PatternLabel pattern) {
    switch (region) {
    case RegionLabel::BetaToMu:
        return pattern == PatternLabel::DecreaseThenIncrease ||
               pattern == PatternLabel::MonotoneDecreasing;
    case RegionLabel::MuToBetaPerp: return pattern == PatternLabel::MonotoneDecreasing;
    case RegionLabel::BetaPerpToMuPerp:
        return pattern == PatternLabel::IncreaseThenDecrease ||
               pattern == PatternLabel::MonotoneIncreasing;
    case RegionLabel::MuPerpToBeta: return pattern == PatternLabel::MonotoneIncreasing;
    }
    return false;
}

bool RegionReport::all_regions_at_least(double min_rate) const {
    return std::all_of(regions.begin(), regions.end(),
                       [&](const RegionStats& s) { return s.match_rate() >= min_rate; });
}

RegionReport verify_theorem(const GmmConfig& cfg, const TrainSchedule& schedule, int n_test,
                            double band, const TheoremCheckOptions& options) {
    cfg.validate();
    schedule.validate();
    if (cfg.dimension != 2) throw std::invalid_argument("verify_theorem: d = 2 required");
    if (n_test < 1) throw std::invalid_argument("verify_theorem: n_test must be >= 1");
    if (options.checkpoints < 3) throw std::invalid_argument("verify_theorem: checkpoints < 3");

    const Vec mu_hat = normalized(cfg.mean);
    const ClassifierState initial = init_classifier(cfg, schedule.initial_angle);

    // Fresh test points from an rng stream decoupled from the training draw.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    auto samples = sample_gmm(cfg, n_test, rng);

    RegionReport report;
    for (std::size_t i = 0; i < 4; ++i) {
        report.regions[i].region = static_cast<RegionLabel>(i);
    }

    std::vector<Vec> tracked;
    std::vector<RegionLabel> regions;
    for (auto& s : samples) {
        const auto region = region_of(s.x, initial.beta, cfg.mean, band);
        if (!region) {
            ++report.boundary_excluded;
            continue;
        }
        tracked.push_back(std::move(s.x));
        regions.push_back(*region);
    }

    report.trajectory = run_self_training(cfg, schedule, tracked);
    const int total_steps = static_cast<int>(report.trajectory.theta.size());

    std::vector<int> checkpoint_times;
    const int k = std::min(options.checkpoints, total_steps);
    for (int j = 0; j < k; ++j) {
        const int t = static_cast<int>(
            std::llround(static_cast<double>(j) * (total_steps - 1) / (k - 1)));
        if (checkpoint_times.empty() || checkpoint_times.back() != t) {
            checkpoint_times.push_back(t);
        }
    }

    for (std::size_t i = 0; i < tracked.size(); ++i) {
        const auto& series = report.trajectory.sample_entropy[i];
        std::vector<double> sub;
        sub.reserve(checkpoint_times.size());
        for (int t : checkpoint_times) sub.push_back(series[t]);
        PatternLabel pattern = PatternLabel::Flat; // too short to classify
        if (sub.size() >= 3) {
            const auto [lo, hi] = std::minmax_element(sub.begin(), sub.end());
            const double tol = options.tol_fraction * (*hi - *lo);
            pattern = classify_trajectory(sub, tol);
        }

        TrackedPoint point;
        point.x = tracked[i];
        point.region = regions[i];
        point.pattern = pattern;
        point.matched = pattern_matches_region(point.region, pattern);
        auto& stats = report.regions[static_cast<std::size_t>(point.region)];
        ++stats.total;
        if (point.matched) ++stats.matched;
        report.points.push_back(std::move(point));
    }

    if (!report.trajectory.avg_entropy.empty()) {
        report.avg_entropy_start = report.trajectory.avg_entropy.front();
        report.avg_entropy_final = report.trajectory.avg_entropy.back();
    }
    return report;
}

std::string_view to_string(RegionLabel label) {
    switch (label) {
    case RegionLabel::BetaToMu: return "beta0_to_mu";
    case RegionLabel::MuToBetaPerp: return "mu_to_beta0perp";
    case RegionLabel::BetaPerpToMuPerp: return "beta0perp_to_muperp";
    case RegionLabel::MuPerpToBeta: return "muperp_to_beta0";
    }
    return "";
}

std::string_view to_string(PatternLabel label) {
    switch (label) {
    case PatternLabel::MonotoneDecreasing: return "monotone_decreasing";
    case PatternLabel::MonotoneIncreasing: return "monotone_increasing";
    case PatternLabel::DecreaseThenIncrease: return "decrease_then_increase";
    case PatternLabel::IncreaseThenDecrease: return "increase_then_decrease";
    case PatternLabel::Flat: return "flat";
    case PatternLabel::Irregular: return "irregular";
    }
    return "";
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.precision(17);
    return out;
}

} // namespace

void write_trajectory_csv(const SimTrajectory& trajectory, const std::filesystem::path& path) {
    auto out = open_csv(path);
    out << "t,theta_t,delta_t,avg_entropy\n";
    for (std::size_t t = 0; t < trajectory.theta.size(); ++t) {
        out << t << ',' << trajectory.theta[t] << ',' << trajectory.delta[t] << ',';
        if (t < trajectory.avg_entropy.size()) out << trajectory.avg_entropy[t];
        out << '\n';
    }
}

void write_samples_csv(const RegionReport& report, const std::filesystem::path& path,
                       int stride) {
    if (stride < 1) throw std::invalid_argument("write_samples_csv: stride must be >= 1");
    auto out = open_csv(path);
    out << "sample_id,region,t,H_t\n";
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        const auto& series = report.trajectory.sample_entropy[i];
        for (std::size_t t = 0; t < series.size(); ++t) {
            if (t % stride != 0 && t + 1 != series.size()) continue;
            out << i << ',' << to_string(report.points[i].region) << ',' << t << ','
                << series[t] << '\n';
        }
    }
}

} // namespace secot::selftrain
