#include "secot/eval.hpp"
#include "secot/http_provider.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitProvider = 2;
constexpr int kExitSimCheck = 3;

struct ProviderFlags {
    std::string kind = "http"; // http | scripted | replay
    std::string script_path;
    std::string cache_dir;
    std::string base_url;
    std::string api_key;
    int requests_per_minute = 60;
    int max_attempts = 5;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& flags) {
    cmd->add_option("--provider", flags.kind, "Provider kind: http, scripted, replay")
        ->check(CLI::IsMember({"http", "scripted", "replay"}));
    cmd->add_option("--script", flags.script_path, "JSONL script for the scripted provider");
    cmd->add_option("--cache-dir", flags.cache_dir, "On-disk completion cache directory");
    cmd->add_option("--base-url", flags.base_url, "API base URL (or OPENAI_BASE_URL)");
    cmd->add_option("--rpm", flags.requests_per_minute, "Requests per minute for live calls");
    cmd->add_option("--max-attempts", flags.max_attempts, "Retry budget for live calls");
}

// Live traffic is always cached so interrupted runs resume cleanly; an
// explicit --cache-dir overrides the per-run default.
std::shared_ptr<secot::Provider> make_provider(ProviderFlags flags,
                                               const std::string& default_cache_dir) {
    if (flags.kind == "http" && flags.cache_dir.empty()) {
        flags.cache_dir = default_cache_dir;
    }
    if (flags.kind == "scripted") {
        if (flags.script_path.empty()) {
            throw std::invalid_argument("scripted provider requires --script");
        }
        auto provider = std::make_shared<secot::ScriptedProvider>(
            secot::Script::load_jsonl(flags.script_path));
        if (!flags.cache_dir.empty()) {
            return std::make_shared<secot::CachingProvider>(provider, flags.cache_dir);
        }
        return provider;
    }
    if (flags.kind == "replay") {
        if (flags.cache_dir.empty()) {
            throw std::invalid_argument("replay provider requires --cache-dir");
        }
        return std::make_shared<secot::CachingProvider>(nullptr, flags.cache_dir,
                                                        /*replay_only=*/true);
    }
    secot::HttpProviderConfig config;
    config.base_url = flags.base_url;
    config.requests_per_minute = flags.requests_per_minute;
    config.max_attempts = flags.max_attempts;
    config = secot::HttpProviderConfig::from_env(std::move(config));
    auto live = std::make_shared<secot::HttpProvider>(std::move(config));
    if (!flags.cache_dir.empty()) {
        return std::make_shared<secot::CachingProvider>(live, flags.cache_dir);
    }
    return live;
}

secot::DatasetSpec spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("dataset spec not found: " + path);
    const json parsed = json::parse(in);
    secot::DatasetSpec spec;
    spec.name = parsed.at("name").get<std::string>();
    if (parsed.contains("path")) spec.path = parsed.at("path").get<std::string>();
    const auto layout = secot::layout_from_string(parsed.at("layout").get<std::string>());
    if (!layout) throw std::invalid_argument("unknown layout in dataset spec");
    spec.layout = *layout;
    const auto kind = secot::kind_from_string(parsed.at("format").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown format in dataset spec");
    if (*kind == secot::AnswerFormat::Kind::MultipleChoice) {
        spec.format = secot::AnswerFormat::multiple_choice(
            parsed.value("letters", std::string("ABCDE")));
    } else {
        spec.format.kind = *kind;
    }
    if (parsed.contains("fields")) {
        const auto& fields = parsed.at("fields");
        spec.fields.question_fields =
            fields.value("question_fields", std::vector<std::string>{});
        spec.fields.answer_field = fields.value("answer_field", std::string{});
        spec.fields.choices_field = fields.value("choices_field", std::string{});
        spec.fields.id_field = fields.value("id_field", std::string{});
    }
    spec.generated_count = parsed.value("generated_count", 500);
    spec.generator_seed = parsed.value("generator_seed", std::uint64_t{7});
    return spec;
}

struct DatasetFlags {
    std::string name;
    std::string data_dir = "datasets";
    std::string spec_file;
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags) {
    cmd->add_option("--dataset", flags.name, "Built-in dataset name");
    cmd->add_option("--data-dir", flags.data_dir, "Directory holding the dataset files");
    cmd->add_option("--dataset-spec", flags.spec_file,
                    "JSON dataset spec (alternative to --dataset)");
}

std::vector<secot::Question> load_questions(const DatasetFlags& flags, std::string& name_out) {
    secot::DatasetSpec spec;
    if (!flags.spec_file.empty()) {
        spec = spec_from_json_file(flags.spec_file);
    } else if (!flags.name.empty()) {
        spec = secot::builtin_dataset(flags.name, flags.data_dir);
    } else {
        throw std::invalid_argument("either --dataset or --dataset-spec is required");
    }
    name_out = spec.name;
    return secot::load_dataset(spec);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("file not found: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

int run_or_exit_code(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const secot::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << '\n';
        return kExitProvider;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic-entropy-guided chain-of-thought runner"};
    app.set_config("--config", "", "TOML config file; flags override its values");
    app.require_subcommand(1);

    // ---- calibrate ----------------------------------------------------
    auto* calibrate = app.add_subcommand("calibrate", "Search for a task-specific prompt");
    DatasetFlags cal_dataset;
    ProviderFlags cal_provider;
    add_dataset_flags(calibrate, cal_dataset);
    add_provider_flags(calibrate, cal_provider);
    std::string cal_model = "gpt-3.5-turbo";
    int cal_k = 5, cal_m = 5, cal_n = 3;
    std::uint64_t cal_seed = 0;
    std::string cal_out = "out/calibrate";
    std::size_t cal_limit = 0;
    calibrate->add_option("--model", cal_model, "Model id");
    calibrate->add_option("--k", cal_k, "Questions sampled for Q' and Q''");
    calibrate->add_option("--m", cal_m, "Candidate prompts to draw");
    calibrate->add_option("--n", cal_n, "Paths per question while scoring");
    calibrate->add_option("--seed", cal_seed, "Sampling seed");
    calibrate->add_option("--limit", cal_limit, "Use only the first L questions");
    calibrate->add_option("--out", cal_out, "Output directory");

    // ---- eval ----------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Evaluate a method over a dataset");
    DatasetFlags eval_dataset;
    ProviderFlags eval_provider;
    add_dataset_flags(eval, eval_dataset);
    add_provider_flags(eval, eval_provider);
    secot::RunConfig run_config;
    std::string method_name = "ari";
    std::string task_prompt_file;
    std::string eval_out = "out/eval";
    bool no_divergence_prompt = false;
    eval->add_option("--method", method_name,
                     "zero-shot | zero-shot-cot | sc | tsp+sc | ari | tsp+ari");
    eval->add_option("--model", run_config.model, "Model id");
    eval->add_option("--n", run_config.ari.paths_n, "Reasoning paths per iteration (N)");
    eval->add_option("--t-max", run_config.ari.max_iterations, "Maximum iterations (T)");
    eval->add_option("--delta", run_config.ari.delta, "Entropy stop threshold, nats");
    eval->add_option("--tau-sim", run_config.ari.tau_sim, "Jaccard resampling threshold");
    eval->add_option("--max-resamples", run_config.ari.max_resamples,
                     "Refinement redraw budget");
    eval->add_option("--temperature", run_config.ari.temperature_diverse,
                     "Diverse sampling temperature");
    eval->add_option("--k", run_config.tsp.sample_size_k, "TSP sample size");
    eval->add_option("--m", run_config.tsp.candidates_m, "TSP candidate count");
    eval->add_option("--seed", run_config.seed, "Seed (TSP sampling)");
    eval->add_option("--parallelism", run_config.parallelism, "Concurrent questions");
    eval->add_option("--limit", run_config.limit, "Use only the first L questions");
    eval->add_option("--task-prompt", run_config.task_prompt,
                     "Use this task prompt instead of calibrating");
    eval->add_option("--task-prompt-file", task_prompt_file,
                     "Read the task prompt from a file (text or calibrate output)");
    eval->add_flag("--no-divergence-prompt", no_divergence_prompt,
                   "Reuse the task prompt in refinement rounds instead of the "
                   "divergence prompt");
    eval->add_option("--out", eval_out, "Output directory");

    // ---- sweep ----------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep over T or N");
    DatasetFlags sweep_dataset;
    ProviderFlags sweep_provider;
    add_dataset_flags(sweep, sweep_dataset);
    add_provider_flags(sweep, sweep_provider);
    secot::RunConfig sweep_config;
    std::string sweep_method = "ari";
    std::string sweep_axis = "t";
    std::string sweep_out = "out/sweep";
    sweep->add_option("--axis", sweep_axis, "t (iterations 1..5) or n (paths 1..7)")
        ->check(CLI::IsMember({"t", "n"}));
    sweep->add_option("--method", sweep_method, "Method to sweep");
    sweep->add_option("--model", sweep_config.model, "Model id");
    sweep->add_option("--n", sweep_config.ari.paths_n, "Paths per iteration (fixed on t axis)");
    sweep->add_option("--t-max", sweep_config.ari.max_iterations,
                      "Iterations (fixed on n axis)");
    sweep->add_option("--delta", sweep_config.ari.delta, "Entropy stop threshold");
    sweep->add_option("--tau-sim", sweep_config.ari.tau_sim, "Jaccard resampling threshold");
    sweep->add_option("--seed", sweep_config.seed, "Seed");
    sweep->add_option("--parallelism", sweep_config.parallelism, "Concurrent questions");
    sweep->add_option("--limit", sweep_config.limit, "Use only the first L questions");
    sweep->add_option("--task-prompt", sweep_config.task_prompt, "Fixed task prompt");
    sweep->add_option("--out", sweep_out, "Output directory");

    // ---- sim -------------------------------------------------------------
    auto* sim = app.add_subcommand("sim", "Self-training entropy-dynamics simulation");
    secot::SimOptions sim_options;
    double theta0_deg = 45.0;
    double mu_norm = 1.0;
    std::string sim_out = "out/sim";
    sim->add_option("--eta", sim_options.schedule.step_size, "Step size");
    sim->add_option("--batch-size", sim_options.schedule.batch_size, "Batch size B");
    sim->add_option("--steps", sim_options.schedule.steps, "Iterations T");
    sim->add_option("--theta0-deg", theta0_deg, "Initial angle, degrees");
    sim->add_option("--sigma", sim_options.gmm.temperature, "Loss temperature sigma");
    sim->add_option("--mu-norm", mu_norm, "Mixture mean norm");
    sim->add_option("--seed", sim_options.gmm.seed, "RNG seed");
    sim->add_option("--n-test", sim_options.n_test, "Fresh test points");
    sim->add_option("--band-deg", sim_options.band_degrees, "Boundary guard band, degrees");
    sim->add_option("--checkpoints", sim_options.check.checkpoints,
                    "Entropy-series checkpoints");
    sim->add_option("--tol-fraction", sim_options.check.tol_fraction,
                    "Flat tolerance as a fraction of series range");
    sim->add_option("--min-match-rate", sim_options.min_match_rate,
                    "Per-region acceptance threshold");
    sim->add_option("--sample-stride", sim_options.sample_csv_stride,
                    "Write every k-th step to samples.csv");
    sim->add_option("--out", sim_out, "Output directory");

    // ---- report -----------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Re-emit report files from report.json");
    std::string report_in;
    std::string report_out = "out/report";
    report_cmd->add_option("--in", report_in, "Existing report.json")->required();
    report_cmd->add_option("--out", report_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (calibrate->parsed()) {
        return run_or_exit_code([&] {
            std::string dataset_name;
            auto questions = load_questions(cal_dataset, dataset_name);
            if (cal_limit > 0 && questions.size() > cal_limit) questions.resize(cal_limit);
            auto provider = make_provider(cal_provider, cal_out + "/cache");
            secot::AriParams params;
            params.paths_n = cal_n;
            secot::PromptBuilder builder(cal_model, params);
            secot::TspParams tsp;
            tsp.sample_size_k = cal_k;
            tsp.candidates_m = cal_m;
            tsp.paths_n = std::max(2, cal_n);
            std::vector<std::string> texts;
            texts.reserve(questions.size());
            for (const auto& q : questions) texts.push_back(secot::presented_text(q));
            std::mt19937_64 rng(cal_seed);
            const auto result = secot::calibrate_task_prompt(
                *provider, builder, texts,
                questions.empty() ? secot::AnswerFormat{} : questions.front().format, tsp, rng);

            std::filesystem::create_directories(cal_out);
            ordered_json out;
            out["dataset"] = dataset_name;
            out["selected"] = {{"text", result.selected.text},
                               {"mean_entropy", *result.selected.mean_entropy},
                               {"origin_index", result.selected.origin_index}};
            out["candidates"] = ordered_json::array();
            for (const auto& candidate : result.candidates) {
                out["candidates"].push_back({{"text", candidate.text},
                                             {"mean_entropy", *candidate.mean_entropy},
                                             {"origin_index", candidate.origin_index}});
            }
            out["provider_calls"] = result.provider_calls;
            out["seed"] = cal_seed;
            std::ofstream file(std::filesystem::path(cal_out) / "task_prompt.json");
            file << out.dump(2) << '\n';
            std::cout << "selected prompt: " << result.selected.text << '\n';
        });
    }

    if (eval->parsed()) {
        return run_or_exit_code([&] {
            const auto method = secot::method_from_string(method_name);
            if (!method) throw std::invalid_argument("unknown method: " + method_name);
            run_config.method = *method;
            if (!task_prompt_file.empty()) {
                const std::string contents = read_file(task_prompt_file);
                // calibrate output or plain text
                const json parsed = json::parse(contents, nullptr, false);
                run_config.task_prompt =
                    parsed.is_object() && parsed.contains("selected")
                        ? parsed["selected"]["text"].get<std::string>()
                        : contents;
            }
            if (no_divergence_prompt) run_config.ari.refinement_prompt.clear();
            std::string dataset_name;
            const auto questions = load_questions(eval_dataset, dataset_name);
            auto provider = make_provider(eval_provider, eval_out + "/cache");
            const auto report = secot::run_eval(*provider, questions, run_config, dataset_name);
            secot::emit_report(report, eval_out);
            std::cout << "accuracy " << report.correct_total << "/" << report.total << " = "
                      << report.accuracy << ", provider calls " << report.total_calls << '\n';
        });
    }

    if (sweep->parsed()) {
        return run_or_exit_code([&] {
            const auto method = secot::method_from_string(sweep_method);
            if (!method) throw std::invalid_argument("unknown method: " + sweep_method);
            sweep_config.method = *method;
            std::string dataset_name;
            const auto questions = load_questions(sweep_dataset, dataset_name);
            auto provider = make_provider(sweep_provider, sweep_out + "/cache");
            const auto axis = sweep_axis == "t" ? secot::SweepAxis::Iterations
                                                : secot::SweepAxis::Paths;
            const auto points =
                secot::run_sweep(*provider, questions, sweep_config, dataset_name, axis,
                                 sweep_out);
            for (const auto& point : points) {
                std::cout << sweep_axis << "=" << point.axis_value << " accuracy "
                          << point.accuracy << " calls " << point.total_calls << '\n';
            }
        });
    }

    if (sim->parsed()) {
        try {
            sim_options.schedule.initial_angle = theta0_deg * std::acos(-1.0) / 180.0;
            sim_options.gmm.mean = {mu_norm, 0.0};
            const bool passed = secot::run_sim(sim_options, sim_out);
            std::cout << (passed ? "sim checks passed" : "sim checks FAILED") << ", report in "
                      << sim_out << '\n';
            return passed ? kExitOk : kExitSimCheck;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitConfig;
        }
    }

    if (report_cmd->parsed()) {
        return run_or_exit_code([&] {
            std::ifstream in(report_in);
            if (!in) throw std::invalid_argument("report not found: " + report_in);
            const json parsed = json::parse(in);
            const auto report = secot::report_from_json(parsed);
            secot::emit_report(report, report_out);
            std::cout << "re-emitted to " << report_out << '\n';
        });
    }

    return kExitConfig;
}
