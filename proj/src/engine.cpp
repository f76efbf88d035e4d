#include "secot/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace secot {

namespace {

void bump(long* counter, long by = 1) {
    if (counter) *counter += by;
}

std::set<std::string> token_set(const std::vector<std::string>& texts) {
    std::set<std::string> tokens;
    for (const auto& text : texts) {
        std::string current;
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                current.push_back(
                    static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            } else if (!current.empty()) {
                tokens.insert(std::move(current));
                current.clear();
            }
        }
        if (!current.empty()) tokens.insert(std::move(current));
    }
    return tokens;
}

std::string first_nonempty_line(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        // trim
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        std::string trimmed = line.substr(begin, end - begin + 1);
        // strip wrapping quotes, if any
        if (trimmed.size() >= 2 && (trimmed.front() == '"' || trimmed.front() == '\'') &&
            trimmed.back() == trimmed.front()) {
            trimmed = trimmed.substr(1, trimmed.size() - 2);
        }
        if (!trimmed.empty()) return trimmed;
    }
    return {};
}

CanonicalAnswer unparseable_answer(const AnswerFormat& format, int label) {
    return CanonicalAnswer{"unparseable#" + std::to_string(label), format.kind, std::nullopt};
}

} // namespace

void AriParams::validate() const {
    if (paths_n < 1) throw std::invalid_argument("AriParams: paths_n must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("AriParams: max_iterations must be >= 1");
    if (delta < 0.0) throw std::invalid_argument("AriParams: delta must be >= 0");
    if (tau_sim < 0.0 || tau_sim > 1.0) {
        throw std::invalid_argument("AriParams: tau_sim must lie in [0, 1]");
    }
    if (max_resamples < 0) throw std::invalid_argument("AriParams: max_resamples must be >= 0");
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
    case StopReason::EntropyBelowDelta: return "entropy_below_delta";
    case StopReason::MaxIterationsVote: return "max_iterations_vote";
    }
    return "";
}

std::string concat_segments(std::initializer_list<std::string_view> segments) {
    std::string out;
    for (auto segment : segments) {
        if (segment.empty()) continue;
        if (!out.empty()) out += "\n\n";
        out += segment;
    }
    return out;
}

ChatRequest PromptBuilder::make(std::string content, double temperature,
                                int sample_index) const {
    ChatRequest request;
    request.model = model_;
    request.messages.push_back({Role::User, std::move(content)});
    request.temperature = temperature;
    request.sample_index = sample_index;
    return request;
}

ChatRequest PromptBuilder::reasoning_request(std::string_view question,
                                             std::string_view task_prompt,
                                             int sample_index) const {
    return make(concat_segments({question, task_prompt}), params_.temperature_diverse,
                sample_index);
}

ChatRequest PromptBuilder::predict_request(std::string_view question,
                                           std::string_view task_prompt,
                                           std::string_view reasoning,
                                           int sample_index) const {
    return make(concat_segments({question, task_prompt, reasoning, params_.answer_trigger}),
                params_.temperature_greedy, sample_index);
}

ChatRequest PromptBuilder::refine_request(std::string_view question,
                                          std::string_view task_prompt,
                                          std::string_view prev_reasoning,
                                          std::string_view prev_answer,
                                          int sample_index) const {
    return make(concat_segments({question, task_prompt, prev_reasoning, prev_answer,
                                 params_.refinement_prompt}),
                params_.temperature_diverse, sample_index);
}

ChatRequest PromptBuilder::candidate_request(std::string_view instruction_block,
                                             int sample_index, double temperature) const {
    return make(std::string(instruction_block), temperature, sample_index);
}

ChatRequest PromptBuilder::direct_request(std::string_view question, int sample_index) const {
    return make(concat_segments({question, params_.answer_trigger}), params_.temperature_greedy,
                sample_index);
}

double jaccard(const std::vector<std::string>& prev, const std::vector<std::string>& next) {
    if (prev.empty() || next.empty()) {
        throw std::invalid_argument("jaccard: both sides must be non-empty");
    }
    const auto a = token_set(prev);
    const auto b = token_set(next);
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& token : a) {
        if (b.count(token)) ++inter;
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> initial_reasoning(Provider& provider, const PromptBuilder& builder,
                                           std::string_view question,
                                           std::string_view task_prompt, int n,
                                           long* call_count) {
    if (n < 1) throw std::invalid_argument("initial_reasoning: n must be >= 1");
    const auto request = builder.reasoning_request(question, task_prompt, 0);
    auto completions = provider.sample_n(request, n);
    bump(call_count, n);
    std::vector<std::string> reasoning;
    reasoning.reserve(completions.size());
    for (auto& completion : completions) reasoning.push_back(std::move(completion.text));
    return reasoning;
}

Predictions predict(Provider& provider, const PromptBuilder& builder,
                    std::string_view question, std::string_view task_prompt,
                    const std::vector<std::string>& reasoning, const AnswerFormat& format,
                    int label_offset, long* call_count) {
    if (reasoning.empty()) throw std::invalid_argument("predict: reasoning must be non-empty");
    Predictions out;
    for (std::size_t j = 0; j < reasoning.size(); ++j) {
        const auto request =
            builder.predict_request(question, task_prompt, reasoning[j], static_cast<int>(j));
        auto completion = provider.complete(request);
        bump(call_count);
        auto canonical =
            normalize_answer(completion.text, format, builder.params().answer_trigger);
        out.canonical.push_back(
            canonical ? *canonical
                      : unparseable_answer(format, label_offset + static_cast<int>(j)));
        out.raw.push_back(std::move(completion.text));
    }
    return out;
}

RefinementOutcome refine_reasoning(Provider& provider, const PromptBuilder& builder,
                                   std::string_view question, std::string_view task_prompt,
                                   const std::vector<std::string>& prev_reasoning,
                                   const std::vector<std::string>& prev_answers,
                                   long* call_count) {
    if (prev_reasoning.size() != prev_answers.size() || prev_reasoning.empty()) {
        throw std::invalid_argument("refine_reasoning: |R| and |A| must match and be > 0");
    }
    const auto& params = builder.params();
    const int n = static_cast<int>(prev_reasoning.size());

    RefinementOutcome best;
    best.similarity = std::numeric_limits<double>::infinity();
    int attempt = 0;
    while (true) {
        std::vector<std::string> batch;
        batch.reserve(n);
        for (int j = 0; j < n; ++j) {
            const auto request = builder.refine_request(question, task_prompt,
                                                        prev_reasoning[j], prev_answers[j],
                                                        attempt * n + j);
            batch.push_back(provider.complete(request).text);
            bump(call_count);
        }
        const double similarity = jaccard(prev_reasoning, batch);
        if (similarity < best.similarity) {
            best.reasoning = std::move(batch);
            best.similarity = similarity;
        }
        if (similarity <= params.tau_sim) break;
        if (attempt >= params.max_resamples) {
            best.budget_exhausted = true;
            break;
        }
        ++attempt;
    }
    best.resamples = attempt;
    return best;
}

AriResult run_ari(Provider& provider, const PromptBuilder& builder, std::string_view question,
                  std::string_view task_prompt, const AnswerFormat& format) {
    const auto& params = builder.params();
    params.validate();
    const int n = params.paths_n;

    AriResult result;
    std::vector<CanonicalAnswer> pooled;

    std::vector<std::string> reasoning;
    std::vector<std::string> raw_answers;
    for (int t = 1; t <= params.max_iterations; ++t) {
        IterationRecord record;
        record.index = t;
        if (t == 1) {
            reasoning = initial_reasoning(provider, builder, question, task_prompt, n,
                                          &result.provider_calls);
        } else {
            auto refined = refine_reasoning(provider, builder, question, task_prompt,
                                            reasoning, raw_answers, &result.provider_calls);
            reasoning = std::move(refined.reasoning);
            record.similarity = refined.similarity;
            record.resamples = refined.resamples;
            record.resample_budget_exhausted = refined.budget_exhausted;
        }
        // Predictions are based solely on the new reasoning batch.
        auto predictions = predict(provider, builder, question, task_prompt, reasoning, format,
                                   (t - 1) * n, &result.provider_calls);
        record.reasoning = reasoning;
        record.raw_predictions = predictions.raw;
        record.predictions = predictions.canonical;

        const auto dist = cluster_answers(predictions.canonical);
        record.entropy = entropy(dist);
        raw_answers = predictions.raw;
        pooled.insert(pooled.end(), predictions.canonical.begin(), predictions.canonical.end());
        result.iterations.push_back(std::move(record));

        if (result.iterations.back().entropy <= params.delta) {
            result.stop_reason = StopReason::EntropyBelowDelta;
            result.stop_iteration = t;
            result.final_answer = mode_answer(dist);
            return result;
        }
    }

    result.stop_reason = StopReason::MaxIterationsVote;
    result.stop_iteration = 0;
    result.final_answer = mode_answer(cluster_answers(pooled));
    return result;
}

std::vector<PromptCandidate> generate_candidate_prompts(
    Provider& provider, const PromptBuilder& builder,
    const std::vector<std::string>& sampled_questions, int m, long* call_count) {
    if (sampled_questions.empty()) {
        throw std::invalid_argument("generate_candidate_prompts: empty question sample");
    }
    if (m < 1) throw std::invalid_argument("generate_candidate_prompts: m must be >= 1");

    std::string block{prompts::kCandidateInstruction};
    for (const auto& q : sampled_questions) {
        block += "\n";
        block += q;
    }

    std::vector<PromptCandidate> candidates;
    int retry_index = m; // retries draw fresh sample indices past the planned m
    for (int i = 0; i < m; ++i) {
        auto completion = provider.complete(
            builder.candidate_request(block, i, builder.params().temperature_diverse));
        bump(call_count);
        std::string insertion = first_nonempty_line(completion.text);
        if (insertion.empty()) {
            completion = provider.complete(builder.candidate_request(
                block, retry_index++, builder.params().temperature_diverse));
            bump(call_count);
            insertion = first_nonempty_line(completion.text);
            if (insertion.empty()) continue; // skip this draw
        }
        PromptCandidate candidate;
        candidate.text = std::string(prompts::kStepByStep) + ", " + insertion;
        candidate.origin_index = i;
        candidates.push_back(std::move(candidate));
    }
    return candidates;
}

double score_prompt(Provider& provider, const PromptBuilder& builder,
                    const PromptCandidate& candidate,
                    const std::vector<std::string>& holdout_questions,
                    const AnswerFormat& format, int n, long* call_count) {
    if (holdout_questions.empty()) {
        throw std::invalid_argument("score_prompt: empty holdout set");
    }
    if (n < 2) throw std::invalid_argument("score_prompt: n must be >= 2");
    double total = 0.0;
    for (const auto& question : holdout_questions) {
        const auto reasoning =
            initial_reasoning(provider, builder, question, candidate.text, n, call_count);
        const auto predictions =
            predict(provider, builder, question, candidate.text, reasoning, format, 0,
                    call_count);
        total += entropy(cluster_answers(predictions.canonical));
    }
    return total / static_cast<double>(holdout_questions.size());
}

const PromptCandidate& select_task_prompt(const std::vector<PromptCandidate>& scored) {
    if (scored.empty()) throw std::invalid_argument("select_task_prompt: no candidates");
    const PromptCandidate* best = nullptr;
    for (const auto& candidate : scored) {
        if (!candidate.mean_entropy) {
            throw std::invalid_argument("select_task_prompt: unscored candidate");
        }
        if (!best || *candidate.mean_entropy < *best->mean_entropy ||
            (*candidate.mean_entropy == *best->mean_entropy &&
             candidate.origin_index < best->origin_index)) {
            best = &candidate;
        }
    }
    return *best;
}

TspResult calibrate_task_prompt(Provider& provider, const PromptBuilder& builder,
                                const std::vector<std::string>& questions,
                                const AnswerFormat& format, const TspParams& params,
                                std::mt19937_64& rng) {
    const int k = params.sample_size_k;
    if (k < 1) throw std::invalid_argument("calibrate_task_prompt: k must be >= 1");
    if (questions.size() < static_cast<std::size_t>(2 * k)) {
        throw std::invalid_argument("calibrate_task_prompt: dataset must hold >= 2k questions");
    }

    std::vector<std::size_t> order(questions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    TspResult result;
    result.prompt_sample_indices.assign(order.begin(), order.begin() + k);
    result.holdout_sample_indices.assign(order.begin() + k, order.begin() + 2 * k);
    {
        // Q' and Q'' are disjoint by construction; keep the guard hot.
        std::set<std::size_t> a(result.prompt_sample_indices.begin(),
                                result.prompt_sample_indices.end());
        for (auto idx : result.holdout_sample_indices) {
            if (a.count(idx)) throw std::logic_error("calibrate_task_prompt: Q' and Q'' overlap");
        }
    }

    std::vector<std::string> prompt_sample;
    for (auto idx : result.prompt_sample_indices) prompt_sample.push_back(questions[idx]);
    std::vector<std::string> holdout;
    for (auto idx : result.holdout_sample_indices) holdout.push_back(questions[idx]);

    result.candidates = generate_candidate_prompts(provider, builder, prompt_sample,
                                                   params.candidates_m, &result.provider_calls);
    if (result.candidates.empty()) {
        throw Error("calibrate_task_prompt: no usable candidates generated");
    }
    for (auto& candidate : result.candidates) {
        candidate.mean_entropy = score_prompt(provider, builder, candidate, holdout, format,
                                              params.paths_n, &result.provider_calls);
    }
    result.selected = select_task_prompt(result.candidates);
    return result;
}

} // namespace secot
