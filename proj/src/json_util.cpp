#include "ttc/json_util.hpp"

namespace ttc {

std::string strip_code_fences(const std::string& text) {
    // Find a ``` opener; tolerate a language tag on the same line.
    const std::size_t open = text.find("```");
    if (open == std::string::npos) return text;
    std::size_t body_start = text.find('\n', open);
    if (body_start == std::string::npos) return text;
    ++body_start;
    const std::size_t close = text.find("```", body_start);
    if (close == std::string::npos) return text;
    return text.substr(body_start, close - body_start);
}

std::optional<std::string> first_balanced_object(const std::string& text) {
    const std::size_t start = text.find('{');
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

std::optional<nlohmann::json> extract_json_object(const std::string& text) {
    const std::string defenced = strip_code_fences(text);
    auto span = first_balanced_object(defenced);
    if (!span) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(*span, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

} // namespace ttc
