#pragma once

// Shared text normalization for answer clustering and ROUGE-L tokenization:
// Unicode NFKC, lowercase, ASCII punctuation removed, whitespace-split.

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf16.h>

#include "eruq/error.hpp"

namespace eruq::text {

namespace detail {

inline icu::UnicodeString nfkc_lower(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFKC normalizer unavailable");
  // Invalid UTF-8 sequences become U+FFFD.
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString out = nfkc->normalize(src, status);
  if (U_FAILURE(status)) throw Error("NFKC normalization failed");
  out.toLower(icu::Locale::getRoot());
  return out;
}

inline bool is_ascii_punct(UChar32 c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view utf8) {
  const auto norm = detail::nfkc_lower(utf8);
  std::vector<std::string> tokens;
  icu::UnicodeString current;
  const auto flush = [&] {
    if (!current.isEmpty()) {
      std::string s;
      current.toUTF8String(s);
      tokens.push_back(std::move(s));
      current.remove();
    }
  };
  for (int32_t i = 0; i < norm.length();) {
    const UChar32 c = norm.char32At(i);
    i += U16_LENGTH(c);
    if (detail::is_ascii_punct(c)) continue;
    if (u_isUWhiteSpace(c)) {
      flush();
      continue;
    }
    current.append(c);
  }
  flush();
  return tokens;
}

// Canonical form used for exact-match clustering: tokens joined by one space.
inline std::string normalize(std::string_view utf8) {
  std::string out;
  for (const auto& t : tokenize(utf8)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace eruq::text
