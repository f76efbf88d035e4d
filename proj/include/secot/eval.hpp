#pragma once

#include "secot/dataset.hpp"
#include "secot/engine.hpp"
#include "secot/provider.hpp"
#include "secot/selftrain.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace secot {

enum class Method { ZeroShot, ZeroShotCot, Sc, TspSc, Ari, TspAri };

std::string_view to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

struct RunConfig {
    Method method = Method::Ari;
    std::string model = "gpt-3.5-turbo";
    AriParams ari;
    TspParams tsp;
    std::string task_prompt;   // overrides TSP calibration / default trigger
    int parallelism = 1;
    std::uint64_t seed = 0;
    std::size_t limit = 0;     // 0 = all questions

    void validate() const;
};

struct QuestionRecord {
    std::string id;
    std::string question;
    std::string gold;
    std::string answer;
    bool correct = false;
    bool failed = false;
    std::string error;
    std::string stop_reason;
    int stop_iteration = 0;
    int iterations = 0;
    std::vector<double> entropies;     // e_t per iteration
    std::vector<double> similarities;  // s_t per iteration (t >= 2)
    std::vector<int> resamples;
    long provider_calls = 0;
};

struct EntropyBin {
    double level = 0.0; // attainable entropy value for the configured N
    long count = 0;
    long correct = 0;

    double accuracy() const { return count == 0 ? 0.0 : static_cast<double>(correct) / count; }
};

struct SimilarityStat {
    std::string pair_label; // "1&2", "2&3", ...
    double mean = 0.0;
    long count = 0;
};

struct EvalReport {
    std::string method;
    std::string dataset;
    std::string model;
    std::string task_prompt;
    AriParams params;
    std::uint64_t seed = 0;
    std::vector<QuestionRecord> records;
    long total = 0;
    long correct_total = 0;
    double accuracy = 0.0;
    long total_calls = 0;
    std::optional<double> mean_similarity;
    std::vector<SimilarityStat> similarity_by_pair;
    std::vector<EntropyBin> entropy_bins;
    long wall_time_ms = 0; // reported via summary.csv only, to keep
                           // report.json byte-stable across runs
};

/// Every entropy value attainable by clustering exactly n samples,
/// ascending (integer-partition enumeration).
std::vector<double> attainable_entropy_levels(int n);

EvalReport run_eval(Provider& provider, const std::vector<Question>& questions,
                    const RunConfig& config, const std::string& dataset_name);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& parsed);

/// Writes report.json, summary.csv, entropy_accuracy.csv, similarity.csv.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

enum class SweepAxis { Iterations, Paths };

struct SweepPoint {
    int axis_value = 0;
    double accuracy = 0.0;
    long total_calls = 0;
};

/// One eval per axis value (T in 1..5 or N in 1..7); per-value reports land
/// in subdirectories plus a sweep.csv summary.
std::vector<SweepPoint> run_sweep(Provider& provider, const std::vector<Question>& questions,
                                  RunConfig config, const std::string& dataset_name,
                                  SweepAxis axis, const std::filesystem::path& out_dir);

struct SimOptions {
    selftrain::GmmConfig gmm;
    selftrain::TrainSchedule schedule;
    int n_test = 2000;
    double band_degrees = 5.0;
    selftrain::TheoremCheckOptions check;
    double min_match_rate = 0.85;
    int sample_csv_stride = 1; // thin the per-sample CSV's time axis
};

nlohmann::ordered_json region_report_to_json(const selftrain::RegionReport& report,
                                             const SimOptions& options);

/// Runs the theorem verification and writes trajectory.csv, samples.csv and
/// region_report.json. Returns false when a region misses min_match_rate or
/// the average entropy fails to decrease.
bool run_sim(const SimOptions& options, const std::filesystem::path& out_dir);

nlohmann::ordered_json ari_result_to_json(const AriResult& result);

} // namespace secot
