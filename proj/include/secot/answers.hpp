#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace secot {

/// Answer-format discipline of a benchmark task: numeric value, one letter
/// out of a choice set, yes/no, or a short free-form string.
struct AnswerFormat {
    enum class Kind { Numeric, MultipleChoice, YesNo, FreeForm };

    Kind kind = Kind::FreeForm;
    std::string choice_letters; // MultipleChoice only, ordered, e.g. "ABCDE"

    static AnswerFormat numeric() { return {Kind::Numeric, {}}; }
    static AnswerFormat multiple_choice(std::string letters);
    static AnswerFormat yes_no() { return {Kind::YesNo, {}}; }
    static AnswerFormat free_form() { return {Kind::FreeForm, {}}; }

    bool operator==(const AnswerFormat&) const = default;
};

std::string_view to_string(AnswerFormat::Kind kind);
std::optional<AnswerFormat::Kind> kind_from_string(std::string_view name);

/// A normalized answer. `text` is canonical for its format: numeric answers
/// are re-rendered from their parsed value (so "36" and "36.0" coincide),
/// choice letters are uppercase, yes/no lowercase, free-form lowercase with
/// punctuation stripped. Numeric answers compare by parsed value; everything
/// else by canonical text.
struct CanonicalAnswer {
    std::string text;
    AnswerFormat::Kind kind = AnswerFormat::Kind::FreeForm;
    std::optional<double> value; // parsed value, Numeric only

    bool operator==(const CanonicalAnswer& other) const {
        if (kind != other.kind) return false;
        if (value && other.value) return *value == *other.value;
        return text == other.text;
    }
};

inline constexpr std::string_view kDefaultAnswerTrigger = "the answer is";

/// Extracts the canonical answer from raw completion text.
///   Numeric        last number token; commas inside digit groups stripped
///   MultipleChoice last valid letter, preferring parenthesized "(X)" forms
///   YesNo          last standalone yes/no, case-insensitive
///   FreeForm       text after the last answer trigger (or the last
///                  non-empty line), lowercased and punctuation-stripped
/// Returns nullopt when no candidate token exists; callers treat such a
/// sample as its own singleton "unparseable" cluster.
std::optional<CanonicalAnswer> normalize_answer(
    std::string_view raw, const AnswerFormat& format,
    std::string_view answer_trigger = kDefaultAnswerTrigger);

/// Shortest round-trip decimal rendering (36.0 -> "36", 0.5 -> "0.5").
std::string canonical_number_text(double value);

/// Parses a clean numeric string (gold labels); falls back to last-number
/// extraction for decorated fields like "...\n#### 72".
std::optional<double> parse_gold_number(std::string_view text);

} // namespace secot
