#pragma once

#include "secot/answers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace secot {

struct Question {
    std::string id;
    std::string text;                  // stem only; choices rendered separately
    std::vector<std::string> choices;  // MultipleChoice only
    CanonicalAnswer gold;
    AnswerFormat format;

    bool operator==(const Question&) const = default;
};

enum class FileLayout { JsonArray, JsonLines, TaskJson, CanonicalJsonl, Generated };

std::string_view to_string(FileLayout layout);
std::optional<FileLayout> layout_from_string(std::string_view name);

/// Dotted paths into each record; question_fields are joined with a space
/// (e.g. SVAMP's Body + Question).
struct FieldMap {
    std::vector<std::string> question_fields;
    std::string answer_field;
    std::string choices_field;
    std::string id_field;
};

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    FileLayout layout = FileLayout::JsonLines;
    AnswerFormat format;
    FieldMap fields;
    int generated_count = 500;        // Generated layouts only
    std::uint64_t generator_seed = 7; // Generated layouts only
};

/// Loads one Question per record, in file order, with gold answers
/// normalized. Throws ParseError (malformed record, with its index) or
/// SchemaError (mapped field missing).
std::vector<Question> load_dataset(const DatasetSpec& spec);

/// Numeric comparison uses |pred - gold| <= 1e-6 * max(1, |gold|); all other
/// formats compare canonical text exactly. Throws FormatMismatch when the
/// formats differ.
bool is_correct(const CanonicalAnswer& pred, const CanonicalAnswer& gold);

/// Question stem plus an "Answer Choices: (A) ..." block when choices exist.
std::string presented_text(const Question& question);

/// Canonical JSONL round-trip surface.
void write_canonical_jsonl(const std::vector<Question>& questions,
                           const std::filesystem::path& path);

/// Built-in specs for the ten benchmark datasets; `data_dir` holds the
/// published files under their conventional names.
DatasetSpec builtin_dataset(std::string_view name, const std::filesystem::path& data_dir);
std::vector<std::string> builtin_dataset_names();

/// Published test-split size, where one exists.
std::optional<std::size_t> expected_sample_count(std::string_view name);

} // namespace secot
