#include "secot/dataset.hpp"

#include "secot/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

namespace secot {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const json* walk(const json& record, const std::string& dotted) {
    const json* node = &record;
    std::size_t begin = 0;
    while (begin <= dotted.size()) {
        const auto dot = dotted.find('.', begin);
        const std::string part =
            dotted.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
        if (!node->is_object() || !node->contains(part)) return nullptr;
        node = &node->at(part);
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }
    return node;
}

std::string scalar_to_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<long long>());
    if (value.is_number_float()) return canonical_number_text(value.get<double>());
    if (value.is_boolean()) return value.get<bool>() ? "yes" : "no";
    if (value.is_array() && !value.empty()) return scalar_to_string(value.front());
    return value.dump();
}

CanonicalAnswer normalize_gold(const std::string& raw, const AnswerFormat& format,
                               std::size_t record_index) {
    switch (format.kind) {
    case AnswerFormat::Kind::Numeric: {
        const auto value = parse_gold_number(raw);
        if (!value) {
            throw ParseError(record_index, "record " + std::to_string(record_index) +
                                               ": gold answer is not numeric: " + raw);
        }
        return {canonical_number_text(*value), format.kind, value};
    }
    case AnswerFormat::Kind::MultipleChoice: {
        std::string letter = raw;
        letter.erase(std::remove_if(letter.begin(), letter.end(),
                                    [](unsigned char c) { return std::isspace(c); }),
                     letter.end());
        if (letter.size() != 1) {
            throw ParseError(record_index, "record " + std::to_string(record_index) +
                                               ": gold choice is not a single letter: " + raw);
        }
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(letter[0])));
        if (format.choice_letters.find(up) == std::string::npos) {
            throw ParseError(record_index, "record " + std::to_string(record_index) +
                                               ": gold letter outside choice set: " + raw);
        }
        return {std::string(1, up), format.kind, std::nullopt};
    }
    case AnswerFormat::Kind::YesNo: {
        std::string word;
        for (char c : raw) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            }
        }
        if (word != "yes" && word != "no") {
            throw ParseError(record_index, "record " + std::to_string(record_index) +
                                               ": gold answer is not yes/no: " + raw);
        }
        return {word, format.kind, std::nullopt};
    }
    case AnswerFormat::Kind::FreeForm: {
        std::string cleaned;
        for (char c : raw) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                cleaned.push_back(
                    static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            } else if (!cleaned.empty() && cleaned.back() != ' ') {
                cleaned.push_back(' ');
            }
        }
        while (!cleaned.empty() && cleaned.back() == ' ') cleaned.pop_back();
        if (cleaned.empty()) {
            throw ParseError(record_index,
                             "record " + std::to_string(record_index) + ": empty gold answer");
        }
        return {cleaned, format.kind, std::nullopt};
    }
    }
    throw SchemaError("unknown answer format");
}

// Strips option prefixes like "A)" / "(B)" / "C." from AQuA-style choices.
std::string strip_choice_prefix(const std::string& option) {
    std::size_t i = 0;
    if (i < option.size() && option[i] == '(') ++i;
    if (i < option.size() && std::isalpha(static_cast<unsigned char>(option[i]))) {
        std::size_t j = i + 1;
        if (j < option.size() && (option[j] == ')' || option[j] == '.' || option[j] == ':')) {
            std::size_t k = j + 1;
            while (k < option.size() && option[k] == ' ') ++k;
            return option.substr(k);
        }
    }
    return option;
}

std::vector<std::string> parse_choices(const json& value) {
    std::vector<std::string> out;
    if (!value.is_array()) throw SchemaError("choices field is not an array");
    for (const auto& item : value) {
        if (item.is_string()) {
            out.push_back(strip_choice_prefix(item.get<std::string>()));
        } else if (item.is_object() && item.contains("text")) {
            out.push_back(item.at("text").get<std::string>());
        } else {
            throw SchemaError("unsupported choice entry: " + item.dump());
        }
    }
    return out;
}

Question question_from_record(const json& record, const DatasetSpec& spec,
                              std::size_t record_index) {
    Question q;
    q.format = spec.format;

    if (!spec.fields.id_field.empty()) {
        if (const json* id = walk(record, spec.fields.id_field)) q.id = scalar_to_string(*id);
    }
    if (q.id.empty()) q.id = spec.name + "-" + std::to_string(record_index);

    std::string text;
    for (const auto& field : spec.fields.question_fields) {
        const json* node = walk(record, field);
        if (!node) throw SchemaError("record " + std::to_string(record_index) +
                                     ": missing question field '" + field + "'");
        if (!text.empty()) text += " ";
        text += node->get<std::string>();
    }
    q.text = std::move(text);

    if (!spec.fields.choices_field.empty()) {
        const json* node = walk(record, spec.fields.choices_field);
        if (!node) throw SchemaError("record " + std::to_string(record_index) +
                                     ": missing choices field '" + spec.fields.choices_field +
                                     "'");
        q.choices = parse_choices(*node);
        if (q.choices.size() > spec.format.choice_letters.size()) {
            throw SchemaError("record " + std::to_string(record_index) +
                              ": more choices than letters");
        }
    }

    const json* answer = walk(record, spec.fields.answer_field);
    if (!answer) throw SchemaError("record " + std::to_string(record_index) +
                                   ": missing answer field '" + spec.fields.answer_field + "'");
    q.gold = normalize_gold(scalar_to_string(*answer), spec.format, record_index);

    if (q.format.kind == AnswerFormat::Kind::MultipleChoice && !q.choices.empty()) {
        const auto pos = q.format.choice_letters.find(q.gold.text[0]);
        if (pos == std::string::npos || pos >= q.choices.size()) {
            throw SchemaError("record " + std::to_string(record_index) +
                              ": gold letter outside loaded choices");
        }
    }
    return q;
}

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("dataset file not found: " + path.string());
    json parsed = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) throw ParseError(0, "malformed JSON in " + path.string());
    return parsed;
}

std::vector<Question> load_json_array(const DatasetSpec& spec) {
    const json parsed = parse_file(spec.path);
    if (!parsed.is_array()) throw SchemaError(spec.path.string() + ": expected a JSON array");
    std::vector<Question> questions;
    questions.reserve(parsed.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        questions.push_back(question_from_record(parsed[i], spec, i));
    }
    return questions;
}

std::vector<Question> load_jsonl(const DatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw Error("dataset file not found: " + spec.path.string());
    std::vector<Question> questions;
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded()) {
            throw ParseError(index, spec.path.string() + ": malformed JSONL record " +
                                        std::to_string(index));
        }
        questions.push_back(question_from_record(record, spec, index));
        ++index;
    }
    return questions;
}

std::vector<Question> load_task_json(const DatasetSpec& spec) {
    const json parsed = parse_file(spec.path);
    if (!parsed.contains("examples") || !parsed.at("examples").is_array()) {
        throw SchemaError(spec.path.string() + ": task.json lacks an examples array");
    }
    const auto& examples = parsed.at("examples");
    std::vector<Question> questions;
    questions.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& record = examples[i];
        Question q;
        q.format = spec.format;
        q.id = spec.name + "-" + std::to_string(i);
        const json* input = walk(record, "input");
        if (!input) throw SchemaError("example " + std::to_string(i) + ": missing input");
        q.text = input->get<std::string>();
        const json* scores = walk(record, "target_scores");
        if (!scores || !scores->is_object()) {
            throw SchemaError("example " + std::to_string(i) + ": missing target_scores");
        }
        std::string best;
        double best_score = -1.0;
        for (const auto& [label, score] : scores->items()) {
            const double s = score.get<double>();
            if (s > best_score) {
                best_score = s;
                best = label;
            }
        }
        q.gold = normalize_gold(best, spec.format, i);
        questions.push_back(std::move(q));
    }
    return questions;
}

std::vector<Question> load_canonical(const DatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw Error("dataset file not found: " + spec.path.string());
    std::vector<Question> questions;
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded()) {
            throw ParseError(index, spec.path.string() + ": malformed canonical record " +
                                        std::to_string(index));
        }
        Question q;
        const auto kind = kind_from_string(record.at("format").get<std::string>());
        if (!kind) throw SchemaError("record " + std::to_string(index) + ": unknown format");
        q.format.kind = *kind;
        if (record.contains("letters")) {
            q.format.choice_letters = record.at("letters").get<std::string>();
        }
        q.id = record.at("id").get<std::string>();
        q.text = record.at("question").get<std::string>();
        if (record.contains("choices")) {
            q.choices = record.at("choices").get<std::vector<std::string>>();
        }
        q.gold = normalize_gold(record.at("gold").get<std::string>(), q.format, index);
        questions.push_back(std::move(q));
        ++index;
    }
    return questions;
}

const std::array<std::string, 32>& name_pool() {
    static const std::array<std::string, 32> names = {
        "Alice",  "Brian",  "Carla",  "Derek",  "Elena",  "Felix",  "Grace",  "Henry",
        "Irene",  "James",  "Karen",  "Louis",  "Maria",  "Nadia",  "Oscar",  "Paula",
        "Quinn",  "Rosa",   "Steve",  "Tanya",  "Ulric",  "Vera",   "Wade",   "Ximena",
        "Yusuf",  "Zelda",  "Amber",  "Boris",  "Clara",  "Dmitri", "Edith",  "Frank",
    };
    return names;
}

std::vector<Question> generate_last_letters(const DatasetSpec& spec) {
    std::mt19937_64 rng(spec.generator_seed);
    const auto& names = name_pool();
    std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
    std::vector<Question> questions;
    questions.reserve(spec.generated_count);
    for (int i = 0; i < spec.generated_count; ++i) {
        std::array<std::string, 4> words{};
        for (auto& w : words) w = names[pick(rng)];
        std::string phrase = words[0] + " " + words[1] + " " + words[2] + " " + words[3];
        std::string gold;
        for (const auto& w : words) {
            gold.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(w.back()))));
        }
        Question q;
        q.id = spec.name + "-" + std::to_string(i);
        q.text = "Take the last letters of each word in \"" + phrase +
                 "\" and concatenate them.";
        q.format = AnswerFormat::free_form();
        q.gold = {gold, AnswerFormat::Kind::FreeForm, std::nullopt};
        questions.push_back(std::move(q));
    }
    return questions;
}

std::vector<Question> generate_coin_flip(const DatasetSpec& spec) {
    std::mt19937_64 rng(spec.generator_seed);
    const auto& names = name_pool();
    std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
    std::bernoulli_distribution flip(0.5);
    std::vector<Question> questions;
    questions.reserve(spec.generated_count);
    for (int i = 0; i < spec.generated_count; ++i) {
        std::string text = "A coin is heads up.";
        bool heads = true;
        for (int actor = 0; actor < 4; ++actor) {
            const bool does_flip = flip(rng);
            const auto& name = names[pick(rng)];
            text += " " + name + (does_flip ? " flips the coin." : " does not flip the coin.");
            if (does_flip) heads = !heads;
        }
        text += " Is the coin still heads up?";
        Question q;
        q.id = spec.name + "-" + std::to_string(i);
        q.text = std::move(text);
        q.format = AnswerFormat::yes_no();
        q.gold = {heads ? "yes" : "no", AnswerFormat::Kind::YesNo, std::nullopt};
        questions.push_back(std::move(q));
    }
    return questions;
}

} // namespace

std::string_view to_string(FileLayout layout) {
    switch (layout) {
    case FileLayout::JsonArray: return "json-array";
    case FileLayout::JsonLines: return "jsonl";
    case FileLayout::TaskJson: return "task-json";
    case FileLayout::CanonicalJsonl: return "canonical-jsonl";
    case FileLayout::Generated: return "generated";
    }
    return "";
}

std::optional<FileLayout> layout_from_string(std::string_view name) {
    if (name == "json-array") return FileLayout::JsonArray;
    if (name == "jsonl") return FileLayout::JsonLines;
    if (name == "task-json") return FileLayout::TaskJson;
    if (name == "canonical-jsonl") return FileLayout::CanonicalJsonl;
    if (name == "generated") return FileLayout::Generated;
    return std::nullopt;
}

std::vector<Question> load_dataset(const DatasetSpec& spec) {
    switch (spec.layout) {
    case FileLayout::JsonArray: return load_json_array(spec);
    case FileLayout::JsonLines: return load_jsonl(spec);
    case FileLayout::TaskJson: return load_task_json(spec);
    case FileLayout::CanonicalJsonl: return load_canonical(spec);
    case FileLayout::Generated:
        if (spec.name == "lastletters") return generate_last_letters(spec);
        if (spec.name == "coinflip") return generate_coin_flip(spec);
        throw SchemaError("no generator for dataset '" + spec.name + "'");
    }
    throw SchemaError("unknown layout");
}

bool is_correct(const CanonicalAnswer& pred, const CanonicalAnswer& gold) {
    if (pred.kind != gold.kind) {
        throw FormatMismatch("is_correct: prediction and gold formats differ");
    }
    if (pred.kind == AnswerFormat::Kind::Numeric) {
        if (!pred.value || !gold.value) return false; // unparseable predictions
        return std::abs(*pred.value - *gold.value) <= 1e-6 * std::max(1.0, std::abs(*gold.value));
    }
    return pred.text == gold.text;
}

std::string presented_text(const Question& question) {
    if (question.choices.empty()) return question.text;
    std::string out = question.text + "\nAnswer Choices:";
    for (std::size_t i = 0; i < question.choices.size(); ++i) {
        out += " (";
        out += question.format.choice_letters[i];
        out += ") ";
        out += question.choices[i];
    }
    return out;
}

void write_canonical_jsonl(const std::vector<Question>& questions,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write: " + path.string());
    for (const auto& q : questions) {
        ordered_json record;
        record["id"] = q.id;
        record["question"] = q.text;
        if (!q.choices.empty()) record["choices"] = q.choices;
        record["gold"] = q.gold.text;
        record["format"] = std::string(to_string(q.format.kind));
        if (!q.format.choice_letters.empty()) record["letters"] = q.format.choice_letters;
        out << record.dump() << '\n';
    }
}

DatasetSpec builtin_dataset(std::string_view name, const std::filesystem::path& data_dir) {
    DatasetSpec spec;
    spec.name = std::string(name);
    if (name == "singleeq") {
        spec.path = data_dir / "SingleEq" / "questions.json";
        spec.layout = FileLayout::JsonArray;
        spec.format = AnswerFormat::numeric();
        spec.fields = {{"sQuestion"}, "lSolutions", "", "iIndex"};
    } else if (name == "addsub") {
        spec.path = data_dir / "AddSub" / "AddSub.json";
        spec.layout = FileLayout::JsonArray;
        spec.format = AnswerFormat::numeric();
        spec.fields = {{"sQuestion"}, "lSolutions", "", "iIndex"};
    } else if (name == "multiarith") {
        spec.path = data_dir / "MultiArith" / "MultiArith.json";
        spec.layout = FileLayout::JsonArray;
        spec.format = AnswerFormat::numeric();
        spec.fields = {{"sQuestion"}, "lSolutions", "", "iIndex"};
    } else if (name == "gsm8k") {
        spec.path = data_dir / "grade-school-math" / "test.jsonl";
        spec.layout = FileLayout::JsonLines;
        spec.format = AnswerFormat::numeric();
        spec.fields = {{"question"}, "answer", "", ""};
    } else if (name == "aqua") {
        spec.path = data_dir / "AQuA" / "test.jsonl";
        spec.layout = FileLayout::JsonLines;
        spec.format = AnswerFormat::multiple_choice("ABCDE");
        spec.fields = {{"question"}, "correct", "options", ""};
    } else if (name == "svamp") {
        spec.path = data_dir / "SVAMP" / "SVAMP.json";
        spec.layout = FileLayout::JsonArray;
        spec.format = AnswerFormat::numeric();
        spec.fields = {{"Body", "Question"}, "Answer", "", "ID"};
    } else if (name == "commonsenseqa") {
        spec.path = data_dir / "CommonsenseQA" / "dev_rand_split.jsonl";
        spec.layout = FileLayout::JsonLines;
        spec.format = AnswerFormat::multiple_choice("ABCDE");
        spec.fields = {{"question.stem"}, "answerKey", "question.choices", "id"};
    } else if (name == "strategyqa") {
        spec.path = data_dir / "StrategyQA" / "task.json";
        spec.layout = FileLayout::TaskJson;
        spec.format = AnswerFormat::yes_no();
        spec.fields = {{"input"}, "target_scores", "", ""};
    } else if (name == "lastletters") {
        spec.layout = FileLayout::Generated;
        spec.format = AnswerFormat::free_form();
    } else if (name == "coinflip") {
        spec.layout = FileLayout::Generated;
        spec.format = AnswerFormat::yes_no();
    } else {
        throw SchemaError("unknown dataset '" + std::string(name) + "'");
    }
    return spec;
}

std::vector<std::string> builtin_dataset_names() {
    return {"singleeq", "addsub",        "multiarith", "gsm8k",       "aqua",
            "svamp",    "commonsenseqa", "strategyqa", "lastletters", "coinflip"};
}

std::optional<std::size_t> expected_sample_count(std::string_view name) {
    if (name == "singleeq") return 508;
    if (name == "addsub") return 395;
    if (name == "multiarith") return 600;
    if (name == "gsm8k") return 1319;
    if (name == "aqua") return 254;
    if (name == "svamp") return 1000;
    if (name == "commonsenseqa") return 1221;
    if (name == "strategyqa") return 2290;
    if (name == "lastletters") return 500;
    if (name == "coinflip") return 500;
    return std::nullopt;
}

} // namespace secot
