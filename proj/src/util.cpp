#include "mirage/util.hpp"

#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mirage::util {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string digest_hex(std::string_view data) {
    static const char* hexdigits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hexdigits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string json_digest(const nlohmann::json& value) {
    return digest_hex(value.dump());
}

std::uint64_t split_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t z = seed ^ fnv1a64(label);
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

double token_overlap(std::string_view a, std::string_view b) {
    auto ta = tokenize(a);
    auto tb = tokenize(b);
    std::set<std::string> sa(ta.begin(), ta.end());
    std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : sa)
        if (sb.count(t)) ++inter;
    std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string substitute_placeholders(std::string_view templ,
                                    const std::vector<std::pair<std::string, std::string>>& bindings,
                                    std::vector<std::string>* missing) {
    std::string out;
    out.reserve(templ.size());
    for (std::size_t i = 0; i < templ.size();) {
        if (templ[i] == '{') {
            auto close = templ.find('}', i);
            if (close != std::string_view::npos) {
                std::string key(templ.substr(i + 1, close - i - 1));
                const std::string* value = nullptr;
                for (const auto& [k, v] : bindings)
                    if (k == key) { value = &v; break; }
                if (value) {
                    out += *value;
                } else if (missing) {
                    missing->push_back(key);
                } else {
                    throw std::runtime_error("unbound placeholder: {" + key + "}");
                }
                i = close + 1;
                continue;
            }
        }
        out.push_back(templ[i]);
        ++i;
    }
    return out;
}

std::vector<std::string> placeholder_names(std::string_view templ) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < templ.size();) {
        if (templ[i] == '{') {
            auto close = templ.find('}', i);
            if (close != std::string_view::npos) {
                std::string key(templ.substr(i + 1, close - i - 1));
                bool seen = false;
                for (const auto& n : names)
                    if (n == key) { seen = true; break; }
                if (!seen && !key.empty()) names.push_back(key);
                i = close + 1;
                continue;
            }
        }
        ++i;
    }
    return names;
}

}  // namespace mirage::util
