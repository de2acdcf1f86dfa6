#include "tessera/text/utf8.hpp"

namespace tessera::utf8 {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Latin Extended-A alternates case by parity, with the parity flipping in
// two runs.
bool latin_ext_a_upper(char32_t c) {
  if (c >= 0x139 && c <= 0x148) return c % 2 == 1;
  if (c >= 0x179 && c <= 0x17E) return c % 2 == 1;
  if (c == 0x178) return true;
  if (c == 0x130 || c == 0x138 || c == 0x149 || c == 0x17F) return false;
  return c % 2 == 0;
}

}  // namespace

std::u32string decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + extra >= bytes.size()) {
      out.push_back(kReplacement);
      break;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string encode(std::u32string_view chars) {
  std::string out;
  out.reserve(chars.size());
  for (char32_t c : chars) out += encode(c);
  return out;
}

std::size_t length(std::string_view bytes) {
  std::size_t n = 0;
  for (char ch : bytes) {
    if ((static_cast<unsigned char>(ch) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string substr(std::string_view bytes, std::size_t begin, std::size_t end) {
  const auto chars = decode(bytes);
  if (begin > chars.size()) begin = chars.size();
  if (end > chars.size()) end = chars.size();
  if (end < begin) end = begin;
  return encode(std::u32string_view(chars).substr(begin, end - begin));
}

bool is_space(char32_t c) {
  switch (c) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_upper(char32_t c) {
  if (c >= U'A' && c <= U'Z') return true;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return true;
  if (c >= 0x100 && c <= 0x17F) return latin_ext_a_upper(c);
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return true;
  if (c >= 0x400 && c <= 0x42F) return true;
  return false;
}

char32_t to_lower(char32_t c) {
  if (!is_upper(c)) return c;
  if (c <= U'Z') return c + 0x20;
  if (c <= 0xDE) return c + 0x20;
  if (c == 0x178) return 0xFF;
  if (c <= 0x17F) return c + 1;
  if (c <= 0x3A9) return c + 0x20;
  if (c < 0x410) return c + 0x50;
  return c + 0x20;
}

char32_t to_upper(char32_t c) {
  if (c >= U'a' && c <= U'z') return c - 0x20;
  if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 0x20;
  if (c == 0xFF) return 0x178;
  if (c >= 0x100 && c <= 0x17F && c != 0x130 && c != 0x138 && c != 0x149 &&
      c != 0x17F && !latin_ext_a_upper(c)) {
    return c - 1;
  }
  if (c >= 0x3B1 && c <= 0x3C9 && c != 0x3C2) return c - 0x20;
  if (c >= 0x430 && c <= 0x44F) return c - 0x20;
  if (c >= 0x450 && c <= 0x45F) return c - 0x50;
  return c;
}

std::string to_lower(std::string_view s) {
  auto chars = decode(s);
  for (auto& c : chars) c = to_lower(c);
  return encode(chars);
}

std::string capitalize(std::string_view s) {
  auto chars = decode(s);
  if (!chars.empty()) chars[0] = to_upper(chars[0]);
  return encode(chars);
}

bool starts_upper(std::string_view s) {
  const auto chars = decode(s);
  return !chars.empty() && is_upper(chars[0]);
}

std::u32string strip_spaces(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (!is_space(c)) out.push_back(c);
  }
  return out;
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                       (c >= 0x7B && c <= 0x7E);
  switch (c) {
    case 0xA1: case 0xAB: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003);
  }
}

}  // namespace tessera::utf8
