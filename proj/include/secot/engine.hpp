#pragma once

#include "secot/answers.hpp"
#include "secot/entropy.hpp"
#include "secot/provider.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace secot {

namespace prompts {

/// Generic zero-shot reasoning trigger.
inline constexpr std::string_view kStepByStep = "Let's think step by step";

/// Instruction used to elicit task-specific prompt candidates.
inline constexpr std::string_view kCandidateInstruction =
    "\"Let's think step by step\" is a general prompt that can guide the LLMs to produce "
    "reasoning processes. However, in specialized domains, this prompt may lack accuracy "
    "and clarity. Below is a dataset sample. Please enhance the \"Let's think step by step, "
    "%s\" prompt by adding a sentence in the %s section to better fit the dataset's "
    "characteristics.";

/// Divergence prompt appended in refinement rounds to push the model off the
/// previous reasoning paths.
inline constexpr std::string_view kDivergencePrompt =
    "Based on the above thoughts, reevaluate from alternative perspectives to produce "
    "deeper, solution-oriented insights that go beyond prior inferences. Focus on "
    "identifying unexplored assumptions or challenges in the question context, and propose "
    "new processes.";

inline constexpr std::string_view kAnswerTrigger = "Therefore, the answer is";

} // namespace prompts

struct PromptCandidate {
    std::string text;
    std::optional<double> mean_entropy; // set once scored
    int origin_index = 0;               // position in sampling order
};

struct TspParams {
    int sample_size_k = 5;  // |Q'| = |Q''|
    int candidates_m = 5;
    int paths_n = 3;        // N used while scoring
    double temperature_diverse = 0.7;
};

struct AriParams {
    int paths_n = 3;            // N
    double delta = 0.95;        // entropy stop threshold, nats
    int max_iterations = 3;     // T
    double tau_sim = 0.5;       // Jaccard acceptance threshold
    int max_resamples = 2;
    std::string refinement_prompt{prompts::kDivergencePrompt}; // empty -> reuse p-hat only
    std::string answer_trigger{prompts::kAnswerTrigger};
    double temperature_diverse = 0.7;
    double temperature_greedy = 0.0;

    void validate() const;
};

struct IterationRecord {
    int index = 1; // 1-based
    std::vector<std::string> reasoning;
    std::vector<std::string> raw_predictions;
    std::vector<CanonicalAnswer> predictions;
    double entropy = 0.0;
    std::optional<double> similarity; // vs previous iteration; absent at t = 1
    int resamples = 0;
    bool resample_budget_exhausted = false;
};

enum class StopReason { EntropyBelowDelta, MaxIterationsVote };

std::string_view to_string(StopReason reason);

struct AriResult {
    CanonicalAnswer final_answer;
    StopReason stop_reason = StopReason::EntropyBelowDelta;
    int stop_iteration = 0; // iteration that satisfied the threshold, 0 for vote
    std::vector<IterationRecord> iterations;
    long provider_calls = 0;
};

/// Request builders shared by the engine and by test scripts. Sample indices
/// are phase-local: reasoning/prediction draws use the path index j, the
/// a-th refinement redraw uses a*N+j, candidate draws use the sampling
/// order.
class PromptBuilder {
public:
    PromptBuilder(std::string model, const AriParams& params)
        : model_(std::move(model)), params_(params) {}

    ChatRequest reasoning_request(std::string_view question, std::string_view task_prompt,
                                  int sample_index) const;
    ChatRequest predict_request(std::string_view question, std::string_view task_prompt,
                                std::string_view reasoning, int sample_index) const;
    ChatRequest refine_request(std::string_view question, std::string_view task_prompt,
                               std::string_view prev_reasoning, std::string_view prev_answer,
                               int sample_index) const;
    ChatRequest candidate_request(std::string_view instruction_block, int sample_index,
                                  double temperature) const;
    ChatRequest direct_request(std::string_view question, int sample_index) const;

    const std::string& model() const { return model_; }
    const AriParams& params() const { return params_; }

private:
    ChatRequest make(std::string content, double temperature, int sample_index) const;

    std::string model_;
    AriParams params_;
};

/// Joins prompt segments with blank lines, skipping empty segments.
std::string concat_segments(std::initializer_list<std::string_view> segments);

/// Token-set Jaccard similarity between two iterations' reasoning batches.
/// Tokens are lowercased alphanumeric runs; each side is the union over its
/// paths. Two empty token sets compare as 1.0.
double jaccard(const std::vector<std::string>& prev, const std::vector<std::string>& next);

/// N diverse-temperature reasoning paths for Concat(q, p-hat).
std::vector<std::string> initial_reasoning(Provider& provider, const PromptBuilder& builder,
                                           std::string_view question,
                                           std::string_view task_prompt, int n,
                                           long* call_count = nullptr);

/// One greedy prediction per reasoning path, normalized per `format`.
/// Failures become "unparseable#<label_offset + j>" singletons so pooled
/// votes cannot group them.
struct Predictions {
    std::vector<std::string> raw;
    std::vector<CanonicalAnswer> canonical;
};
Predictions predict(Provider& provider, const PromptBuilder& builder,
                    std::string_view question, std::string_view task_prompt,
                    const std::vector<std::string>& reasoning, const AnswerFormat& format,
                    int label_offset = 0, long* call_count = nullptr);

struct RefinementOutcome {
    std::vector<std::string> reasoning;
    int resamples = 0;
    double similarity = 0.0;
    bool budget_exhausted = false;
};

/// Redraws the full batch while its Jaccard similarity to the previous
/// iteration exceeds tau; on an exhausted budget, keeps the least similar
/// batch seen.
RefinementOutcome refine_reasoning(Provider& provider, const PromptBuilder& builder,
                                   std::string_view question, std::string_view task_prompt,
                                   const std::vector<std::string>& prev_reasoning,
                                   const std::vector<std::string>& prev_answers,
                                   long* call_count = nullptr);

/// The adaptive reasoning loop: sample, predict, stop when entropy falls to
/// delta, otherwise refine up to T iterations and fall back to a pooled
/// majority vote.
AriResult run_ari(Provider& provider, const PromptBuilder& builder, std::string_view question,
                  std::string_view task_prompt, const AnswerFormat& format);

/// Draws m candidate prompts from the instruction + k sampled questions.
/// Draws whose first non-empty line is unusable are retried once with a
/// fresh sample index, then skipped.
std::vector<PromptCandidate> generate_candidate_prompts(
    Provider& provider, const PromptBuilder& builder,
    const std::vector<std::string>& sampled_questions, int m, long* call_count = nullptr);

/// Mean semantic entropy of the candidate over the holdout questions.
/// Questions whose extractions all fail contribute ln N.
double score_prompt(Provider& provider, const PromptBuilder& builder,
                    const PromptCandidate& candidate,
                    const std::vector<std::string>& holdout_questions,
                    const AnswerFormat& format, int n, long* call_count = nullptr);

/// Argmin of mean entropy; ties break toward the lowest origin index.
const PromptCandidate& select_task_prompt(const std::vector<PromptCandidate>& scored);

struct TspResult {
    PromptCandidate selected;
    std::vector<PromptCandidate> candidates;
    std::vector<std::size_t> prompt_sample_indices;  // Q'
    std::vector<std::size_t> holdout_sample_indices; // Q''
    long provider_calls = 0;
};

/// Full task-specific-prompt calibration: disjoint Q'/Q'' sampling,
/// candidate generation, scoring, selection.
TspResult calibrate_task_prompt(Provider& provider, const PromptBuilder& builder,
                                const std::vector<std::string>& questions,
                                const AnswerFormat& format, const TspParams& params,
                                std::mt19937_64& rng);

} // namespace secot
