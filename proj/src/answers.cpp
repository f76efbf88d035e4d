#include "secot/answers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace secot {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Scans for number tokens: optional leading '-', digits with thousand-group
// commas (a comma counts only when followed by exactly three digits), and an
// optional fractional part. Returns the last token with commas removed.
std::optional<std::string> last_number_token(std::string_view text) {
    std::optional<std::string> result;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        const bool sign_start = c == '-' && i + 1 < n && is_digit(text[i + 1]) &&
                                (i == 0 || !is_digit(text[i - 1]));
        if (!is_digit(c) && !sign_start) {
            ++i;
            continue;
        }
        std::string token;
        if (sign_start) {
            token.push_back('-');
            ++i;
        }
        while (i < n) {
            if (is_digit(text[i])) {
                token.push_back(text[i]);
                ++i;
                continue;
            }
            if (text[i] == ',') {
                std::size_t digits = 0;
                while (i + 1 + digits < n && is_digit(text[i + 1 + digits])) ++digits;
                if (digits >= 3 &&
                    (i + 4 >= n || !is_digit(text[i + 4]))) { // exactly 3 in the group
                    ++i; // skip grouping comma
                    continue;
                }
            }
            break;
        }
        if (i < n && text[i] == '.' && i + 1 < n && is_digit(text[i + 1])) {
            token.push_back('.');
            ++i;
            while (i < n && is_digit(text[i])) {
                token.push_back(text[i]);
                ++i;
            }
        }
        result = std::move(token);
    }
    return result;
}

std::optional<double> parse_double(std::string_view s) {
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::optional<CanonicalAnswer> extract_numeric(std::string_view raw) {
    auto token = last_number_token(raw);
    if (!token) return std::nullopt;
    auto value = parse_double(*token);
    if (!value) return std::nullopt;
    return CanonicalAnswer{canonical_number_text(*value), AnswerFormat::Kind::Numeric, value};
}

std::optional<CanonicalAnswer> extract_choice(std::string_view raw, const std::string& letters) {
    auto in_set = [&](char c) {
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return letters.find(up) != std::string::npos;
    };
    // Parenthesized "(X)" forms win over bare letters.
    std::optional<char> parenthesized;
    for (std::size_t i = 0; i + 2 < raw.size(); ++i) {
        if (raw[i] == '(' && raw[i + 2] == ')' && in_set(raw[i + 1])) {
            parenthesized = raw[i + 1];
        }
    }
    if (parenthesized) {
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(*parenthesized)));
        return CanonicalAnswer{std::string(1, up), AnswerFormat::Kind::MultipleChoice, std::nullopt};
    }
    // Last standalone uppercase letter from the set (lowercase would collide
    // with the article "a").
    std::optional<char> standalone;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c < 'A' || c > 'Z' || letters.find(c) == std::string::npos) continue;
        const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        const bool right_ok =
            i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
        if (left_ok && right_ok) standalone = c;
    }
    if (!standalone) return std::nullopt;
    return CanonicalAnswer{std::string(1, *standalone), AnswerFormat::Kind::MultipleChoice,
                           std::nullopt};
}

bool word_at(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t k = 0; k < word.size(); ++k) {
        if (std::tolower(static_cast<unsigned char>(text[pos + k])) != word[k]) return false;
    }
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    const bool right_ok = pos + word.size() == text.size() ||
                          !std::isalnum(static_cast<unsigned char>(text[pos + word.size()]));
    return left_ok && right_ok;
}

std::optional<CanonicalAnswer> extract_yes_no(std::string_view raw) {
    std::optional<std::string> found;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (word_at(raw, i, "yes")) found = "yes";
        else if (word_at(raw, i, "no")) found = "no";
    }
    if (!found) return std::nullopt;
    return CanonicalAnswer{*found, AnswerFormat::Kind::YesNo, std::nullopt};
}

std::string strip_punctuation(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(c);
        } else if (!out.empty() && out.back() != ' ') {
            out.push_back(' ');
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::optional<std::size_t> find_last_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
    const std::string hay = lower(haystack);
    const std::string ndl = lower(needle);
    const auto pos = hay.rfind(ndl);
    if (pos == std::string::npos) return std::nullopt;
    return pos;
}

std::optional<CanonicalAnswer> extract_free_form(std::string_view raw,
                                                 std::string_view trigger) {
    std::string_view tail = raw;
    if (auto pos = find_last_ci(raw, trigger)) {
        tail = raw.substr(*pos + trigger.size());
    } else {
        // No trigger: fall back to the last non-empty line.
        std::size_t end = raw.size();
        while (end > 0) {
            std::size_t begin = raw.rfind('\n', end - 1);
            const std::size_t start = begin == std::string_view::npos ? 0 : begin + 1;
            std::string_view line = raw.substr(start, end - start);
            if (!strip_punctuation(line).empty()) {
                tail = line;
                break;
            }
            if (begin == std::string_view::npos) break;
            end = begin;
        }
    }
    std::string cleaned = strip_punctuation(lower(tail));
    if (cleaned.empty()) return std::nullopt;
    return CanonicalAnswer{std::move(cleaned), AnswerFormat::Kind::FreeForm, std::nullopt};
}

} // namespace

AnswerFormat AnswerFormat::multiple_choice(std::string letters) {
    if (letters.empty()) {
        throw std::invalid_argument("multiple_choice requires a non-empty letter set");
    }
    for (char& c : letters) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return {Kind::MultipleChoice, std::move(letters)};
}

std::string_view to_string(AnswerFormat::Kind kind) {
    switch (kind) {
    case AnswerFormat::Kind::Numeric: return "numeric";
    case AnswerFormat::Kind::MultipleChoice: return "multiple_choice";
    case AnswerFormat::Kind::YesNo: return "yes_no";
    case AnswerFormat::Kind::FreeForm: return "free_form";
    }
    return "free_form";
}

std::optional<AnswerFormat::Kind> kind_from_string(std::string_view name) {
    if (name == "numeric") return AnswerFormat::Kind::Numeric;
    if (name == "multiple_choice") return AnswerFormat::Kind::MultipleChoice;
    if (name == "yes_no") return AnswerFormat::Kind::YesNo;
    if (name == "free_form") return AnswerFormat::Kind::FreeForm;
    return std::nullopt;
}

std::string canonical_number_text(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::invalid_argument("unrepresentable number");
    return std::string(buf, ptr);
}

std::optional<double> parse_gold_number(std::string_view text) {
    if (auto direct = parse_double(text)) return direct;
    if (auto token = last_number_token(text)) return parse_double(*token);
    return std::nullopt;
}

std::optional<CanonicalAnswer> normalize_answer(std::string_view raw,
                                                const AnswerFormat& format,
                                                std::string_view answer_trigger) {
    switch (format.kind) {
    case AnswerFormat::Kind::Numeric: return extract_numeric(raw);
    case AnswerFormat::Kind::MultipleChoice:
        if (format.choice_letters.empty()) {
            throw std::invalid_argument("MultipleChoice format without letters");
        }
        return extract_choice(raw, format.choice_letters);
    case AnswerFormat::Kind::YesNo: return extract_yes_no(raw);
    case AnswerFormat::Kind::FreeForm: return extract_free_form(raw, answer_trigger);
    }
    return std::nullopt;
}

} // namespace secot
