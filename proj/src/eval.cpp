#include "secot/eval.hpp"

#include "secot/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

namespace secot {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void enumerate_partitions(int remaining, int max_part, std::vector<int>& current,
                          std::vector<std::vector<int>>& out) {
    if (remaining == 0) {
        out.push_back(current);
        return;
    }
    for (int part = std::min(remaining, max_part); part >= 1; --part) {
        current.push_back(part);
        enumerate_partitions(remaining - part, part, current, out);
        current.pop_back();
    }
}

double partition_entropy(const std::vector<int>& partition, int n) {
    double e = 0.0;
    for (int c : partition) {
        const double g = static_cast<double>(c) / n;
        e -= g * std::log(g);
    }
    return e;
}

AriParams params_for(Method method, const RunConfig& config) {
    AriParams params = config.ari;
    switch (method) {
    case Method::ZeroShot: break; // unused
    case Method::ZeroShotCot:
        params.paths_n = 1;
        params.max_iterations = 1;
        params.delta = std::numeric_limits<double>::infinity();
        params.temperature_diverse = params.temperature_greedy; // greedy decoding
        break;
    case Method::Sc:
    case Method::TspSc:
        params.max_iterations = 1;
        params.delta = std::numeric_limits<double>::infinity();
        break;
    case Method::Ari:
    case Method::TspAri: break;
    }
    return params;
}

QuestionRecord evaluate_question(Provider& provider, const PromptBuilder& builder,
                                 const Question& question, Method method,
                                 const std::string& task_prompt) {
    QuestionRecord record;
    record.id = question.id;
    record.question = question.text;
    record.gold = question.gold.text;
    const std::string shown = presented_text(question);

    if (method == Method::ZeroShot) {
        auto completion = provider.complete(builder.direct_request(shown, 0));
        record.provider_calls = 1;
        record.iterations = 0;
        const auto answer =
            normalize_answer(completion.text, question.format, builder.params().answer_trigger);
        if (answer) {
            record.answer = answer->text;
            record.correct = is_correct(*answer, question.gold);
        }
        record.stop_reason = "direct";
        return record;
    }

    const AriResult result = run_ari(provider, builder, shown, task_prompt, question.format);
    record.answer = result.final_answer.text;
    record.correct = is_correct(result.final_answer, question.gold);
    record.stop_reason = std::string(to_string(result.stop_reason));
    record.stop_iteration = result.stop_iteration;
    record.iterations = static_cast<int>(result.iterations.size());
    record.provider_calls = result.provider_calls;
    for (const auto& iteration : result.iterations) {
        record.entropies.push_back(iteration.entropy);
        if (iteration.similarity) record.similarities.push_back(*iteration.similarity);
        record.resamples.push_back(iteration.resamples);
    }
    return record;
}

std::string pair_label(std::size_t i) {
    return std::to_string(i + 1) + "&" + std::to_string(i + 2);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    return out;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

} // namespace

std::string_view to_string(Method method) {
    switch (method) {
    case Method::ZeroShot: return "zero-shot";
    case Method::ZeroShotCot: return "zero-shot-cot";
    case Method::Sc: return "sc";
    case Method::TspSc: return "tsp+sc";
    case Method::Ari: return "ari";
    case Method::TspAri: return "tsp+ari";
    }
    return "";
}

std::optional<Method> method_from_string(std::string_view name) {
    if (name == "zero-shot") return Method::ZeroShot;
    if (name == "zero-shot-cot") return Method::ZeroShotCot;
    if (name == "sc") return Method::Sc;
    if (name == "tsp+sc") return Method::TspSc;
    if (name == "ari") return Method::Ari;
    if (name == "tsp+ari") return Method::TspAri;
    return std::nullopt;
}

void RunConfig::validate() const {
    ari.validate();
    if (parallelism < 1) throw std::invalid_argument("RunConfig: parallelism must be >= 1");
    if ((method == Method::TspSc || method == Method::TspAri) && task_prompt.empty()) {
        if (tsp.sample_size_k < 1 || tsp.candidates_m < 1) {
            throw std::invalid_argument("RunConfig: TSP methods need k >= 1 and m >= 1");
        }
    }
}

std::vector<double> attainable_entropy_levels(int n) {
    if (n < 1) throw std::invalid_argument("attainable_entropy_levels: n must be >= 1");
    std::vector<std::vector<int>> partitions;
    std::vector<int> current;
    enumerate_partitions(n, n, current, partitions);
    std::vector<double> levels;
    for (const auto& partition : partitions) {
        const double e = partition_entropy(partition, n);
        const bool seen = std::any_of(levels.begin(), levels.end(),
                                      [&](double l) { return std::abs(l - e) < 1e-12; });
        if (!seen) levels.push_back(e);
    }
    std::sort(levels.begin(), levels.end());
    return levels;
}

EvalReport run_eval(Provider& provider, const std::vector<Question>& questions,
                    const RunConfig& config, const std::string& dataset_name) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    EvalReport report;
    report.method = std::string(to_string(config.method));
    report.dataset = dataset_name;
    report.model = config.model;
    report.seed = config.seed;
    report.params = params_for(config.method, config);

    const std::size_t count =
        config.limit == 0 ? questions.size() : std::min(config.limit, questions.size());

    long tsp_calls = 0;
    std::string task_prompt = config.task_prompt;
    if (task_prompt.empty()) {
        if (config.method == Method::TspSc || config.method == Method::TspAri) {
            std::vector<std::string> texts;
            texts.reserve(count);
            for (std::size_t i = 0; i < count; ++i) texts.push_back(presented_text(questions[i]));
            std::mt19937_64 rng(config.seed);
            PromptBuilder calibration_builder(config.model, report.params);
            TspParams tsp = config.tsp;
            tsp.paths_n = std::max(2, config.ari.paths_n);
            const auto tsp_result =
                calibrate_task_prompt(provider, calibration_builder, texts,
                                      count > 0 ? questions.front().format : AnswerFormat{},
                                      tsp, rng);
            task_prompt = tsp_result.selected.text;
            tsp_calls = tsp_result.provider_calls;
        } else if (config.method != Method::ZeroShot) {
            task_prompt = std::string(prompts::kStepByStep);
        }
    }
    report.task_prompt = task_prompt;

    const PromptBuilder builder(config.model, report.params);
    std::vector<QuestionRecord> records(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                records[i] = evaluate_question(provider, builder, questions[i], config.method,
                                               task_prompt);
            } catch (const std::exception& e) {
                QuestionRecord failure;
                failure.id = questions[i].id;
                failure.question = questions[i].text;
                failure.gold = questions[i].gold.text;
                failure.failed = true;
                failure.error = e.what();
                records[i] = std::move(failure);
            }
        }
    };
    if (config.parallelism == 1 || count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int workers = std::min<int>(config.parallelism, static_cast<int>(count));
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }

    report.records = std::move(records);
    report.total = static_cast<long>(report.records.size());
    report.total_calls = tsp_calls;
    double similarity_sum = 0.0;
    long similarity_count = 0;
    std::vector<double> pair_sums;
    std::vector<long> pair_counts;
    for (const auto& record : report.records) {
        if (record.correct) ++report.correct_total;
        report.total_calls += record.provider_calls;
        for (std::size_t s = 0; s < record.similarities.size(); ++s) {
            similarity_sum += record.similarities[s];
            ++similarity_count;
            if (pair_sums.size() <= s) {
                pair_sums.resize(s + 1, 0.0);
                pair_counts.resize(s + 1, 0);
            }
            pair_sums[s] += record.similarities[s];
            ++pair_counts[s];
        }
    }
    report.accuracy =
        report.total == 0 ? 0.0 : static_cast<double>(report.correct_total) / report.total;
    if (similarity_count > 0) report.mean_similarity = similarity_sum / similarity_count;
    for (std::size_t s = 0; s < pair_sums.size(); ++s) {
        report.similarity_by_pair.push_back(
            {pair_label(s), pair_sums[s] / pair_counts[s], pair_counts[s]});
    }

    // Accuracy binned by first-iteration entropy over the attainable levels.
    if (config.method != Method::ZeroShot) {
        for (double level : attainable_entropy_levels(report.params.paths_n)) {
            report.entropy_bins.push_back({level, 0, 0});
        }
        for (const auto& record : report.records) {
            if (record.entropies.empty()) continue;
            const double e = record.entropies.front();
            for (auto& bin : report.entropy_bins) {
                if (std::abs(bin.level - e) < 1e-9) {
                    ++bin.count;
                    if (record.correct) ++bin.correct;
                    break;
                }
            }
        }
    }

    report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    ordered_json out;
    out["method"] = report.method;
    out["dataset"] = report.dataset;
    out["model"] = report.model;
    out["task_prompt"] = report.task_prompt;
    out["seed"] = report.seed;
    // JSON has no infinity: an unbounded stop threshold round-trips as null
    out["params"] = {
        {"paths_n", report.params.paths_n},
        {"delta", std::isfinite(report.params.delta) ? ordered_json(report.params.delta)
                                                     : ordered_json(nullptr)},
        {"max_iterations", report.params.max_iterations},
        {"tau_sim", report.params.tau_sim},
        {"max_resamples", report.params.max_resamples},
        {"refinement_prompt", report.params.refinement_prompt},
        {"answer_trigger", report.params.answer_trigger},
        {"temperature_diverse", report.params.temperature_diverse},
        {"temperature_greedy", report.params.temperature_greedy},
    };
    out["total"] = report.total;
    out["correct"] = report.correct_total;
    out["accuracy"] = report.accuracy;
    out["total_calls"] = report.total_calls;
    if (report.mean_similarity) out["mean_similarity"] = *report.mean_similarity;
    else out["mean_similarity"] = nullptr;
    out["similarity_by_pair"] = ordered_json::array();
    for (const auto& stat : report.similarity_by_pair) {
        out["similarity_by_pair"].push_back(
            {{"pair", stat.pair_label}, {"mean", stat.mean}, {"count", stat.count}});
    }
    out["entropy_bins"] = ordered_json::array();
    for (const auto& bin : report.entropy_bins) {
        out["entropy_bins"].push_back({{"level", bin.level},
                                       {"count", bin.count},
                                       {"correct", bin.correct},
                                       {"accuracy", bin.accuracy()}});
    }
    out["records"] = ordered_json::array();
    for (const auto& record : report.records) {
        ordered_json r;
        r["id"] = record.id;
        r["question"] = record.question;
        r["gold"] = record.gold;
        r["answer"] = record.answer;
        r["correct"] = record.correct;
        r["failed"] = record.failed;
        if (record.failed) r["error"] = record.error;
        r["stop_reason"] = record.stop_reason;
        r["stop_iteration"] = record.stop_iteration;
        r["iterations"] = record.iterations;
        r["entropies"] = record.entropies;
        r["similarities"] = record.similarities;
        r["resamples"] = record.resamples;
        r["provider_calls"] = record.provider_calls;
        out["records"].push_back(std::move(r));
    }
    return out;
}

EvalReport report_from_json(const json& parsed) {
    EvalReport report;
    report.method = parsed.at("method").get<std::string>();
    report.dataset = parsed.at("dataset").get<std::string>();
    report.model = parsed.at("model").get<std::string>();
    report.task_prompt = parsed.at("task_prompt").get<std::string>();
    report.seed = parsed.at("seed").get<std::uint64_t>();
    const auto& params = parsed.at("params");
    report.params.paths_n = params.at("paths_n").get<int>();
    report.params.delta = params.at("delta").is_null()
                              ? std::numeric_limits<double>::infinity()
                              : params.at("delta").get<double>();
    report.params.max_iterations = params.at("max_iterations").get<int>();
    report.params.tau_sim = params.at("tau_sim").get<double>();
    report.params.max_resamples = params.at("max_resamples").get<int>();
    report.params.refinement_prompt = params.at("refinement_prompt").get<std::string>();
    report.params.answer_trigger = params.at("answer_trigger").get<std::string>();
    report.params.temperature_diverse = params.at("temperature_diverse").get<double>();
    report.params.temperature_greedy = params.at("temperature_greedy").get<double>();
    report.total = parsed.at("total").get<long>();
    report.correct_total = parsed.at("correct").get<long>();
    report.accuracy = parsed.at("accuracy").get<double>();
    report.total_calls = parsed.at("total_calls").get<long>();
    if (!parsed.at("mean_similarity").is_null()) {
        report.mean_similarity = parsed.at("mean_similarity").get<double>();
    }
    for (const auto& stat : parsed.at("similarity_by_pair")) {
        report.similarity_by_pair.push_back({stat.at("pair").get<std::string>(),
                                             stat.at("mean").get<double>(),
                                             stat.at("count").get<long>()});
    }
    for (const auto& bin : parsed.at("entropy_bins")) {
        report.entropy_bins.push_back({bin.at("level").get<double>(),
                                       bin.at("count").get<long>(),
                                       bin.at("correct").get<long>()});
    }
    for (const auto& r : parsed.at("records")) {
        QuestionRecord record;
        record.id = r.at("id").get<std::string>();
        record.question = r.at("question").get<std::string>();
        record.gold = r.at("gold").get<std::string>();
        record.answer = r.at("answer").get<std::string>();
        record.correct = r.at("correct").get<bool>();
        record.failed = r.at("failed").get<bool>();
        if (r.contains("error")) record.error = r.at("error").get<std::string>();
        record.stop_reason = r.at("stop_reason").get<std::string>();
        record.stop_iteration = r.at("stop_iteration").get<int>();
        record.iterations = r.at("iterations").get<int>();
        record.entropies = r.at("entropies").get<std::vector<double>>();
        record.similarities = r.at("similarities").get<std::vector<double>>();
        record.resamples = r.at("resamples").get<std::vector<int>>();
        record.provider_calls = r.at("provider_calls").get<long>();
        report.records.push_back(std::move(record));
    }
    return report;
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "report.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "summary.csv");
        out.precision(17);
        out << "method,dataset,total,correct,accuracy,total_calls,mean_similarity,"
               "wall_time_ms\n";
        out << report.method << ',' << report.dataset << ',' << report.total << ','
            << report.correct_total << ',' << report.accuracy << ',' << report.total_calls
            << ',';
        if (report.mean_similarity) out << *report.mean_similarity;
        out << ',' << report.wall_time_ms << '\n';
    }
    {
        auto out = open_out(dir / "entropy_accuracy.csv");
        out.precision(17);
        out << "entropy_level,count,correct,accuracy\n";
        for (const auto& bin : report.entropy_bins) {
            out << bin.level << ',' << bin.count << ',' << bin.correct << ','
                << bin.accuracy() << '\n';
        }
    }
    {
        auto out = open_out(dir / "similarity.csv");
        out.precision(17);
        out << "prompt_type,iteration_pair,mean_similarity,count\n";
        const std::string prompt_type =
            report.params.refinement_prompt.empty() ? "general_prompt" : "divergence_prompt";
        for (const auto& stat : report.similarity_by_pair) {
            out << prompt_type << ',' << csv_escape(stat.pair_label) << ',' << stat.mean << ','
                << stat.count << '\n';
        }
    }
}

std::vector<SweepPoint> run_sweep(Provider& provider, const std::vector<Question>& questions,
                                  RunConfig config, const std::string& dataset_name,
                                  SweepAxis axis, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<int> values;
    if (axis == SweepAxis::Iterations) values = {1, 2, 3, 4, 5};
    else values = {1, 2, 3, 4, 5, 6, 7};

    std::vector<SweepPoint> points;
    for (int value : values) {
        RunConfig point_config = config;
        std::string label;
        if (axis == SweepAxis::Iterations) {
            point_config.ari.max_iterations = value;
            label = "t=" + std::to_string(value);
        } else {
            point_config.ari.paths_n = value;
            label = "n=" + std::to_string(value);
        }
        const EvalReport report = run_eval(provider, questions, point_config, dataset_name);
        emit_report(report, out_dir / label);
        points.push_back({value, report.accuracy, report.total_calls});
    }
    {
        auto out = open_out(out_dir / "sweep.csv");
        out.precision(17);
        out << (axis == SweepAxis::Iterations ? "t" : "n") << ",accuracy,total_calls\n";
        for (const auto& point : points) {
            out << point.axis_value << ',' << point.accuracy << ',' << point.total_calls
                << '\n';
        }
    }
    return points;
}

nlohmann::ordered_json region_report_to_json(const selftrain::RegionReport& report,
                                             const SimOptions& options) {
    ordered_json out;
    out["config"] = {
        {"dimension", options.gmm.dimension},
        {"mean", options.gmm.mean},
        {"temperature", options.gmm.temperature},
        {"seed", options.gmm.seed},
        {"step_size", options.schedule.step_size},
        {"batch_size", options.schedule.batch_size},
        {"steps", options.schedule.steps},
        {"initial_angle", options.schedule.initial_angle},
        {"n_test", options.n_test},
        {"band_degrees", options.band_degrees},
        {"checkpoints", options.check.checkpoints},
        {"tol_fraction", options.check.tol_fraction},
        {"min_match_rate", options.min_match_rate},
    };
    out["regions"] = ordered_json::array();
    for (const auto& stats : report.regions) {
        out["regions"].push_back({{"region", std::string(to_string(stats.region))},
                                  {"total", stats.total},
                                  {"matched", stats.matched},
                                  {"match_rate", stats.match_rate()}});
    }
    out["boundary_excluded"] = report.boundary_excluded;
    out["avg_entropy_start"] = report.avg_entropy_start;
    out["avg_entropy_final"] = report.avg_entropy_final;
    out["avg_entropy_decreased"] = report.avg_entropy_decreased();
    out["theta_start"] = report.trajectory.theta.empty() ? 0.0 : report.trajectory.theta.front();
    out["theta_final"] = report.trajectory.theta.empty() ? 0.0 : report.trajectory.theta.back();
    out["all_regions_passed"] = report.all_regions_at_least(options.min_match_rate);
    return out;
}

bool run_sim(const SimOptions& options, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const double band = options.band_degrees * std::acos(-1.0) / 180.0;
    const auto report = selftrain::verify_theorem(options.gmm, options.schedule, options.n_test,
                                                  band, options.check);
    selftrain::write_trajectory_csv(report.trajectory, out_dir / "trajectory.csv");
    selftrain::write_samples_csv(report, out_dir / "samples.csv", options.sample_csv_stride);
    {
        auto out = open_out(out_dir / "region_report.json");
        out << region_report_to_json(report, options).dump(2) << '\n';
    }
    return report.all_regions_at_least(options.min_match_rate) &&
           report.avg_entropy_decreased();
}

nlohmann::ordered_json ari_result_to_json(const AriResult& result) {
    ordered_json out;
    out["final_answer"] = result.final_answer.text;
    out["stop_reason"] = std::string(to_string(result.stop_reason));
    out["stop_iteration"] = result.stop_iteration;
    out["provider_calls"] = result.provider_calls;
    out["iterations"] = ordered_json::array();
    for (const auto& iteration : result.iterations) {
        ordered_json it;
        it["index"] = iteration.index;
        it["reasoning"] = iteration.reasoning;
        it["raw_predictions"] = iteration.raw_predictions;
        ordered_json preds = ordered_json::array();
        for (const auto& p : iteration.predictions) preds.push_back(p.text);
        it["predictions"] = std::move(preds);
        it["entropy"] = iteration.entropy;
        if (iteration.similarity) it["similarity"] = *iteration.similarity;
        it["resamples"] = iteration.resamples;
        it["resample_budget_exhausted"] = iteration.resample_budget_exhausted;
        out["iterations"].push_back(std::move(it));
    }
    return out;
}

} // namespace secot
