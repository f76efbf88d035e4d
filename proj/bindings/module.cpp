#include "secot/answers.hpp"
#include "secot/dataset.hpp"
#include "secot/engine.hpp"
#include "secot/entropy.hpp"
#include "secot/eval.hpp"
#include "secot/provider.hpp"
#include "secot/selftrain.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace secot;

namespace {

AnswerFormat format_from_name(const std::string& name, const std::string& letters) {
    const auto kind = kind_from_string(name);
    if (!kind) throw std::invalid_argument("unknown format: " + name);
    if (*kind == AnswerFormat::Kind::MultipleChoice) {
        return AnswerFormat::multiple_choice(letters.empty() ? "ABCDE" : letters);
    }
    AnswerFormat format;
    format.kind = *kind;
    return format;
}

} // namespace

PYBIND11_MODULE(secot, m) {
    m.doc() = "Semantic-entropy-guided chain-of-thought toolkit";

    // ---- answers & entropy -------------------------------------------
    m.def(
        "normalize_answer",
        [](const std::string& raw, const std::string& format, const std::string& letters,
           const std::string& trigger) -> std::optional<std::string> {
            const auto result =
                normalize_answer(raw, format_from_name(format, letters), trigger);
            if (!result) return std::nullopt;
            return result->text;
        },
        py::arg("raw"), py::arg("format") = "numeric", py::arg("letters") = "",
        py::arg("trigger") = std::string(kDefaultAnswerTrigger));

    m.def(
        "cluster_counts",
        [](const std::vector<std::string>& answers, const std::string& format,
           const std::string& letters) {
            const AnswerFormat fmt = format_from_name(format, letters);
            std::vector<CanonicalAnswer> canonical;
            canonical.reserve(answers.size());
            for (std::size_t i = 0; i < answers.size(); ++i) {
                auto a = normalize_answer(answers[i], fmt);
                canonical.push_back(a ? *a
                                      : CanonicalAnswer{"unparseable#" + std::to_string(i),
                                                        fmt.kind, std::nullopt});
            }
            const auto dist = cluster_answers(canonical);
            std::vector<std::pair<std::string, int>> out;
            for (const auto& cluster : dist.clusters) {
                out.emplace_back(cluster.answer.text, cluster.count);
            }
            return out;
        },
        py::arg("answers"), py::arg("format") = "free_form", py::arg("letters") = "");

    m.def(
        "entropy",
        [](const std::vector<int>& counts) {
            ClusterDistribution dist;
            int total = 0;
            for (std::size_t i = 0; i < counts.size(); ++i) {
                dist.clusters.push_back(
                    {CanonicalAnswer{"c" + std::to_string(i), AnswerFormat::Kind::FreeForm,
                                     std::nullopt},
                     counts[i], i});
                total += counts[i];
            }
            dist.total = total;
            return entropy(dist);
        },
        py::arg("counts"), "Semantic entropy (nats) of a cluster-count histogram");

    m.def("binary_entropy", &binary_entropy, py::arg("p"));
    m.def("jaccard", &jaccard, py::arg("prev"), py::arg("next"));
    m.def("attainable_entropy_levels", &attainable_entropy_levels, py::arg("n"));

    // ---- self-training simulator --------------------------------------
    py::class_<selftrain::GmmConfig>(m, "GmmConfig")
        .def(py::init<>())
        .def_readwrite("dimension", &selftrain::GmmConfig::dimension)
        .def_readwrite("mean", &selftrain::GmmConfig::mean)
        .def_readwrite("temperature", &selftrain::GmmConfig::temperature)
        .def_readwrite("seed", &selftrain::GmmConfig::seed);

    py::class_<selftrain::TrainSchedule>(m, "TrainSchedule")
        .def(py::init<>())
        .def_readwrite("step_size", &selftrain::TrainSchedule::step_size)
        .def_readwrite("batch_size", &selftrain::TrainSchedule::batch_size)
        .def_readwrite("steps", &selftrain::TrainSchedule::steps)
        .def_readwrite("initial_angle", &selftrain::TrainSchedule::initial_angle);

    py::class_<selftrain::SimTrajectory>(m, "SimTrajectory")
        .def_readonly("theta", &selftrain::SimTrajectory::theta)
        .def_readonly("delta", &selftrain::SimTrajectory::delta)
        .def_readonly("sample_entropy", &selftrain::SimTrajectory::sample_entropy)
        .def_readonly("avg_entropy", &selftrain::SimTrajectory::avg_entropy);

    m.def("run_self_training", &selftrain::run_self_training, py::arg("config"),
          py::arg("schedule"), py::arg("tracked_points") = std::vector<selftrain::Vec>{});

    m.def(
        "region_of",
        [](const selftrain::Vec& x, const selftrain::Vec& beta0, const selftrain::Vec& mu,
           double band) -> std::optional<std::string> {
            const auto region = selftrain::region_of(x, beta0, mu, band);
            if (!region) return std::nullopt;
            return std::string(selftrain::to_string(*region));
        },
        py::arg("x"), py::arg("beta0"), py::arg("mu"), py::arg("band") = 0.0);

    m.def(
        "classify_trajectory",
        [](const std::vector<double>& series, double tol) {
            return std::string(selftrain::to_string(selftrain::classify_trajectory(series, tol)));
        },
        py::arg("series"), py::arg("tol"));

    m.def(
        "verify_theorem",
        [](const selftrain::GmmConfig& cfg, const selftrain::TrainSchedule& schedule,
           int n_test, double band) {
            const auto report = selftrain::verify_theorem(cfg, schedule, n_test, band);
            py::dict out;
            py::list regions;
            for (const auto& stats : report.regions) {
                py::dict r;
                r["region"] = std::string(to_string(stats.region));
                r["total"] = stats.total;
                r["matched"] = stats.matched;
                r["match_rate"] = stats.match_rate();
                regions.append(std::move(r));
            }
            out["regions"] = std::move(regions);
            out["boundary_excluded"] = report.boundary_excluded;
            out["avg_entropy_start"] = report.avg_entropy_start;
            out["avg_entropy_final"] = report.avg_entropy_final;
            out["avg_entropy_decreased"] = report.avg_entropy_decreased();
            out["theta_final"] = report.trajectory.theta.back();
            return out;
        },
        py::arg("config"), py::arg("schedule"), py::arg("n_test") = 2000,
        py::arg("band") = 0.0872664625997165); // 5 degrees

    // ---- provider & engine ---------------------------------------------
    py::enum_<Role>(m, "Role")
        .value("system", Role::System)
        .value("user", Role::User)
        .value("assistant", Role::Assistant);

    py::class_<ChatMessage>(m, "ChatMessage")
        .def(py::init([](const std::string& role, const std::string& content) {
                 const auto r = role_from_string(role);
                 if (!r) throw std::invalid_argument("unknown role: " + role);
                 return ChatMessage{*r, content};
             }),
             py::arg("role"), py::arg("content"))
        .def_readwrite("content", &ChatMessage::content);

    py::class_<ChatRequest>(m, "ChatRequest")
        .def(py::init<>())
        .def_readwrite("model", &ChatRequest::model)
        .def_readwrite("messages", &ChatRequest::messages)
        .def_readwrite("temperature", &ChatRequest::temperature)
        .def_readwrite("sample_index", &ChatRequest::sample_index);

    m.def("script_fingerprint", &script_fingerprint, py::arg("request"));

    py::class_<Script>(m, "Script")
        .def(py::init<>())
        .def("add", &Script::add, py::arg("request"), py::arg("response"))
        .def("add_fingerprint", &Script::add_fingerprint, py::arg("fingerprint"),
             py::arg("response"))
        .def("set_default_text", &Script::set_default_text, py::arg("text"))
        .def_static("load_jsonl", &Script::load_jsonl, py::arg("path"));

    py::class_<Provider, std::shared_ptr<Provider>>(m, "Provider");

    py::class_<ScriptedProvider, Provider, std::shared_ptr<ScriptedProvider>>(
        m, "ScriptedProvider")
        .def(py::init<Script>(), py::arg("script"))
        .def_property_readonly("call_count", &ScriptedProvider::call_count)
        .def(
            "complete",
            [](ScriptedProvider& self, const ChatRequest& request) {
                return self.complete(request).text;
            },
            py::arg("request"));

    py::class_<AriParams>(m, "AriParams")
        .def(py::init<>())
        .def_readwrite("paths_n", &AriParams::paths_n)
        .def_readwrite("delta", &AriParams::delta)
        .def_readwrite("max_iterations", &AriParams::max_iterations)
        .def_readwrite("tau_sim", &AriParams::tau_sim)
        .def_readwrite("max_resamples", &AriParams::max_resamples)
        .def_readwrite("refinement_prompt", &AriParams::refinement_prompt)
        .def_readwrite("answer_trigger", &AriParams::answer_trigger)
        .def_readwrite("temperature_diverse", &AriParams::temperature_diverse)
        .def_readwrite("temperature_greedy", &AriParams::temperature_greedy);

    py::class_<PromptBuilder>(m, "PromptBuilder")
        .def(py::init<std::string, const AriParams&>(), py::arg("model"), py::arg("params"))
        .def("reasoning_request", &PromptBuilder::reasoning_request, py::arg("question"),
             py::arg("task_prompt"), py::arg("sample_index"))
        .def("predict_request", &PromptBuilder::predict_request, py::arg("question"),
             py::arg("task_prompt"), py::arg("reasoning"), py::arg("sample_index"))
        .def("refine_request", &PromptBuilder::refine_request, py::arg("question"),
             py::arg("task_prompt"), py::arg("prev_reasoning"), py::arg("prev_answer"),
             py::arg("sample_index"));

    m.attr("STEP_BY_STEP_PROMPT") = std::string(prompts::kStepByStep);
    m.attr("DIVERGENCE_PROMPT") = std::string(prompts::kDivergencePrompt);
    m.attr("ANSWER_TRIGGER") = std::string(prompts::kAnswerTrigger);

    m.def(
        "run_ari",
        [](std::shared_ptr<Provider> provider, const PromptBuilder& builder,
           const std::string& question, const std::string& task_prompt,
           const std::string& format, const std::string& letters) {
            const auto result = run_ari(*provider, builder, question, task_prompt,
                                        format_from_name(format, letters));
            py::dict out;
            out["final_answer"] = result.final_answer.text;
            out["stop_reason"] = std::string(to_string(result.stop_reason));
            out["stop_iteration"] = result.stop_iteration;
            out["provider_calls"] = result.provider_calls;
            py::list iterations;
            for (const auto& iteration : result.iterations) {
                py::dict it;
                it["index"] = iteration.index;
                it["entropy"] = iteration.entropy;
                py::list predictions;
                for (const auto& p : iteration.predictions) predictions.append(p.text);
                it["predictions"] = std::move(predictions);
                if (iteration.similarity) it["similarity"] = *iteration.similarity;
                it["resamples"] = iteration.resamples;
                iterations.append(std::move(it));
            }
            out["iterations"] = std::move(iterations);
            return out;
        },
        py::arg("provider"), py::arg("builder"), py::arg("question"), py::arg("task_prompt"),
        py::arg("format") = "numeric", py::arg("letters") = "");

    // ---- datasets ---------------------------------------------------------
    py::class_<Question>(m, "Question")
        .def_readonly("id", &Question::id)
        .def_readonly("text", &Question::text)
        .def_readonly("choices", &Question::choices)
        .def_property_readonly("gold", [](const Question& q) { return q.gold.text; })
        .def_property_readonly("format",
                               [](const Question& q) { return std::string(to_string(q.format.kind)); });

    m.def(
        "load_builtin_dataset",
        [](const std::string& name, const std::string& data_dir) {
            return load_dataset(builtin_dataset(name, data_dir));
        },
        py::arg("name"), py::arg("data_dir") = "datasets");

    m.def("builtin_dataset_names", &builtin_dataset_names);

    m.def(
        "is_correct",
        [](const std::string& pred, const std::string& gold, const std::string& format,
           const std::string& letters) {
            const AnswerFormat fmt = format_from_name(format, letters);
            const auto p = normalize_answer(pred, fmt);
            const auto g = normalize_answer(gold, fmt);
            if (!p || !g) return false;
            return is_correct(*p, *g);
        },
        py::arg("pred"), py::arg("gold"), py::arg("format") = "numeric",
        py::arg("letters") = "");
}
