#include <cctype>
#include <string>

#include "code2seq/paths.hpp"

namespace code2seq {
namespace {

enum class CharClass { kSeparator, kLower, kUpper, kDigit, kOther };

// Bytes >= 0x80 belong to multibyte UTF-8 letters: treated as caseless word
// characters so they stay attached to their neighbors.
CharClass classify(unsigned char c) {
  if (c >= 0x80) return CharClass::kOther;
  if (std::islower(c)) return CharClass::kLower;
  if (std::isupper(c)) return CharClass::kUpper;
  if (std::isdigit(c)) return CharClass::kDigit;
  return CharClass::kSeparator;
}

bool is_letter(CharClass c) {
  return c == CharClass::kLower || c == CharClass::kUpper || c == CharClass::kOther;
}

}  // namespace

std::vector<std::string> split_subtokens(std::string_view token) {
  std::vector<std::string> pieces;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) pieces.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t i = 0; i < token.size(); ++i) {
    const auto c = static_cast<unsigned char>(token[i]);
    const CharClass cls = classify(c);
    if (cls == CharClass::kSeparator) {
      flush();
      continue;
    }
    if (!current.empty()) {
      const CharClass prev = classify(static_cast<unsigned char>(token[i - 1]));
      const CharClass next =
          i + 1 < token.size() ? classify(static_cast<unsigned char>(token[i + 1])) : CharClass::kSeparator;
      const bool lower_to_upper = prev == CharClass::kLower && cls == CharClass::kUpper;
      // HTTPServer: the 'S' starts a new word because a lowercase letter follows.
      const bool acronym_end =
          prev == CharClass::kUpper && cls == CharClass::kUpper && next == CharClass::kLower;
      const bool digit_edge = (prev == CharClass::kDigit && is_letter(cls)) ||
                              (is_letter(prev) && cls == CharClass::kDigit);
      if (lower_to_upper || acronym_end || digit_edge) flush();
    }
    current.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  if (pieces.empty()) pieces.emplace_back("_");
  return pieces;
}

}  // namespace code2seq
