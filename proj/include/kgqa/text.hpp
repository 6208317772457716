#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgqa::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Case-insensitive search; returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);
std::size_t irfind(std::string_view haystack, std::string_view needle);

/// Whitespace-split, lowercased tokens with punctuation removed. Hyphens
/// survive inside a token ("CC-3068" -> "cc-3068") but are stripped from
/// its ends, so a lone "-" separator disappears. Bytes >= 0x80 are kept
/// untouched so UTF-8 text tokenizes as opaque words.
std::vector<std::string> tokenize(std::string_view s);

/// Replace every "{name}" with its value. Unknown placeholders are left as is.
std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace kgqa::text
