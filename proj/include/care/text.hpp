#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace care {

namespace detail {

inline icu::UnicodeString nfc_lower(std::string_view raw) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  u.toLower(icu::Locale::getRoot());
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec)) return u;
  icu::UnicodeString out = nfc->normalize(u, ec);
  return U_FAILURE(ec) ? u : out;
}

inline void append_utf8(std::string& out, UChar32 c) {
  icu::UnicodeString tmp(c);
  tmp.toUTF8String(out);
}

inline bool is_word_char(UChar32 c) {
  return u_isalnum(c) || u_hasBinaryProperty(c, UCHAR_ALPHABETIC) ||
         u_charType(c) == U_NON_SPACING_MARK;
}

inline bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019; }

}  // namespace detail

/// Lowercase, NFC, collapse whitespace runs to one space, trim.
inline std::string normalize_text(std::string_view raw) {
  const icu::UnicodeString u = detail::nfc_lower(raw);
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    detail::append_utf8(out, c);
  }
  return out;
}

/// Word tokens of the normalized text. Apostrophes survive only between
/// word characters ("it's"); typographic apostrophes fold to ASCII.
inline std::vector<std::string> tokenize(std::string_view text) {
  const icu::UnicodeString u = detail::nfc_lower(text);
  std::vector<UChar32> cps;
  cps.reserve(static_cast<std::size_t>(u.length()));
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    cps.push_back(c);
    i += U16_LENGTH(c);
  }

  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const UChar32 c = cps[i];
    if (detail::is_word_char(c)) {
      detail::append_utf8(current, c);
    } else if (detail::is_apostrophe(c) && !current.empty() &&
               i + 1 < cps.size() && detail::is_word_char(cps[i + 1])) {
      current.push_back('\'');
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Unicode code points of a UTF-8 string (invalid bytes become U+FFFD).
inline std::u32string to_code_points(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(u.length()));
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return out;
}

inline std::size_t char_length(std::string_view text) {
  return to_code_points(text).size();
}

inline std::string to_utf8(std::u32string_view cps) {
  std::string out;
  for (char32_t c : cps) detail::append_utf8(out, static_cast<UChar32>(c));
  return out;
}

inline bool is_space(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c));
}

}  // namespace care
