#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mirage::util {

// FNV-1a, 64-bit. Stable across platforms; used for all content digests.
std::uint64_t fnv1a64(std::string_view data);

// 16-char lowercase hex of fnv1a64(data).
std::string digest_hex(std::string_view data);

// Digest of a JSON value's canonical serialization (sorted keys, no spaces).
std::string json_digest(const nlohmann::json& value);

// Derive an independent child seed from (seed, label). splitmix64 finalizer
// over the label hash keeps streams decorrelated.
std::uint64_t split_seed(std::uint64_t seed, std::string_view label);

// Lowercased alphanumeric tokens. "The Save-button" -> {"the","save","button"}.
std::vector<std::string> tokenize(std::string_view text);

// Jaccard overlap between the token sets of two strings, in [0,1].
double token_overlap(std::string_view a, std::string_view b);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Substitute "{key}" placeholders from the map; unknown placeholders are an
// error listed in `missing` when non-null, otherwise throw std::runtime_error.
std::string substitute_placeholders(std::string_view templ,
                                    const std::vector<std::pair<std::string, std::string>>& bindings,
                                    std::vector<std::string>* missing = nullptr);

// Placeholder names appearing as "{name}" in the template.
std::vector<std::string> placeholder_names(std::string_view templ);

}  // namespace mirage::util
