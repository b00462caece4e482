#include "claimcheck/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cctype>

namespace claimcheck {

std::string normalize_sentence(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;

  const auto* bytes = reinterpret_cast<const uint8_t*>(raw.data());
  const auto length = static_cast<int32_t>(raw.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) c = 0xFFFD;

    if (u_isUWhiteSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    c = u_tolower(c);
    if (u_ispunct(c)) continue;

    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    char buffer[U8_MAX_LENGTH];
    int32_t written = 0;
    [[maybe_unused]] UBool error = false;
    U8_APPEND(reinterpret_cast<uint8_t*>(buffer), written, U8_MAX_LENGTH, c, error);
    out.append(buffer, static_cast<size_t>(written));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  const std::string normalized = normalize_sentence(raw);
  size_t start = 0;
  while (start < normalized.size()) {
    size_t end = normalized.find(' ', start);
    if (end == std::string::npos) end = normalized.size();
    if (end > start) tokens.emplace_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

std::string_view trim(std::string_view s) {
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(ch);
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace claimcheck
