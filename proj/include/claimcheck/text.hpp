#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace claimcheck {

/// Lowercases (Unicode simple case mapping), removes every code point in the
/// Unicode punctuation categories (Pc, Pd, Ps, Pe, Pi, Pf, Po), collapses
/// whitespace runs to one ASCII space and trims. Input is UTF-8; malformed
/// sequences become U+FFFD.
std::string normalize_sentence(std::string_view raw);

/// normalize_sentence followed by a split on single spaces. This is the only
/// tokenizer in the project: indexing, querying and hashed embeddings share it.
std::vector<std::string> tokenize(std::string_view raw);

std::string_view trim(std::string_view s);

/// Collapses ASCII whitespace runs to a single space and trims.
std::string collapse_spaces(std::string_view s);

std::string ascii_lower(std::string_view s);

/// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace claimcheck
