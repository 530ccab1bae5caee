#include "webdream/common.hpp"

#include <cctype>

namespace webdream {

namespace {
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    const std::string h = to_lower(haystack);
    const std::string n = to_lower(needle);
    size_t pos = h.find(n);
    while (pos != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(h[pos - 1]) || !is_word_char(n.front());
        const size_t end = pos + n.size();
        const bool right_ok = end == h.size() || !is_word_char(h[end]) || !is_word_char(n.back());
        if (left_ok && right_ok) return true;
        pos = h.find(n, pos + 1);
    }
    return false;
}

}  // namespace webdream
