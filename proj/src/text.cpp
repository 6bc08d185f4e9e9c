#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cctype>
#include <stdexcept>

#include "popmine/corpus.hpp"

namespace popmine {

namespace {

bool ascii_only(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' ||
         c == '\r';
}

// Collapses whitespace runs to single spaces and trims, code point aware.
std::string collapse_whitespace(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  bool pending_space = false;
  bool emitted = false;
  std::int32_t i = 0;
  const auto len = static_cast<std::int32_t>(utf8.size());
  while (i < len) {
    UChar32 c;
    std::int32_t start = i;
    U8_NEXT(utf8.data(), i, len, c);
    bool ws = c >= 0 && (c < 0x80 ? is_ascii_space(static_cast<unsigned char>(c))
                                  : u_isUWhiteSpace(c));
    if (ws) {
      pending_space = emitted;
    } else {
      if (pending_space) {
        out += ' ';
        pending_space = false;
      }
      out.append(utf8.substr(start, i - start));
      emitted = true;
    }
  }
  return out;
}

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* instance = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || instance == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *instance;
}

// Case-insensitive ASCII substring search.
std::size_t find_nocase(std::string_view haystack, std::string_view needle,
                        std::size_t from) {
  if (needle.empty() || haystack.size() < needle.size()) {
    return std::string_view::npos;
  }
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool hit = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) != needle[j]) {
        hit = false;
        break;
      }
    }
    if (hit) return i;
  }
  return std::string_view::npos;
}

constexpr std::string_view kUrlMarkers[] = {"http://", "https://", "t.co/"};

// Removes URL spans (marker through the next ASCII whitespace), replacing each
// with a single space so they still separate tokens.
std::string strip_urls_from(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best = std::string_view::npos;
    for (std::string_view marker : kUrlMarkers) {
      std::size_t hit = find_nocase(text, marker, pos);
      if (hit < best) best = hit;
    }
    if (best == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, best - pos));
    out += ' ';
    std::size_t end = best;
    while (end < text.size() &&
           !is_ascii_space(static_cast<unsigned char>(text[end]))) {
      ++end;
    }
    pos = end;
  }
  return out;
}

void append_code_point(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, c);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string normalize(std::string_view text) {
  if (ascii_only(text)) {
    std::string lowered;
    lowered.reserve(text.size());
    for (unsigned char c : text) {
      lowered += static_cast<char>(std::tolower(c));
    }
    return collapse_whitespace(lowered);
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2& norm = nfc();
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
  s = norm.normalize(s, status);
  s.toLower(icu::Locale::getRoot());
  // Lowercasing can denormalize; re-apply NFC so the result is stable.
  s = norm.normalize(s, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("unicode normalization failed");
  }
  std::string utf8;
  s.toUTF8String(utf8);
  return collapse_whitespace(utf8);
}

bool contains_url(std::string_view text) {
  std::string norm = normalize(text);
  for (std::string_view marker : kUrlMarkers) {
    if (norm.find(marker) != std::string::npos) return true;
  }
  return false;
}

bool is_retweet(std::string_view text) {
  return normalize(text).starts_with("rt @");
}

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenRules& rules) {
  if (rules.min_token_len < 1) {
    throw std::invalid_argument("min_token_len must be >= 1");
  }
  std::string stripped;
  if (rules.strip_urls) {
    stripped = strip_urls_from(text);
    text = stripped;
  }

  std::vector<std::string> out;
  std::string current;
  int current_len = 0;  // code points

  auto flush = [&] {
    if (current_len >= rules.min_token_len) {
      out.push_back(current);
    }
    current.clear();
    current_len = 0;
  };

  std::int32_t i = 0;
  const auto len = static_cast<std::int32_t>(text.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(text.data(), i, len, c);
    if (c < 0) {  // invalid byte sequence acts as a separator
      flush();
      continue;
    }
    bool alnum = c < 0x80 ? std::isalnum(static_cast<unsigned char>(c)) != 0
                          : u_isalnum(c) != 0;
    if (alnum) {
      UChar32 emit = c;
      if (rules.lowercase) {
        emit = c < 0x80 ? std::tolower(static_cast<unsigned char>(c))
                        : u_tolower(c);
      }
      append_code_point(current, emit);
      ++current_len;
    } else if (c < 0x80 && current.empty() &&
               rules.keep_prefixes.find(static_cast<char>(c)) !=
                   std::string::npos) {
      current += static_cast<char>(c);
      ++current_len;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool matches(std::string_view text, const QueryFilter& filter) {
  // Token presence is tested against an exhaustive tokenization: every token
  // retained, URLs intact.
  TokenRules rules;
  rules.min_token_len = 1;
  rules.strip_urls = false;
  std::vector<std::string> tokens = tokenize(text, rules);
  StringSet present(tokens.begin(), tokens.end());

  switch (filter.kind) {
    case QueryKind::Mention:
      return present.contains("@" + filter.terms.front());
    case QueryKind::Hashtag:
      return present.contains("#" + filter.terms.front());
    case QueryKind::Keyword:
      return present.contains(filter.terms.front());
    case QueryKind::Conjunction:
      for (const std::string& term : filter.terms) {
        if (!present.contains(term)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace popmine
