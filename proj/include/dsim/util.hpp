#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dsim/error.hpp"

namespace dsim {

inline std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Lowercase tokens, split on runs of non-alphanumeric characters.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

// Canonical form used for substring tracing: tokens joined by single spaces.
inline std::string normalize_text(std::string_view text) {
  auto toks = tokenize(text);
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

template <typename It>
std::string join(It begin, It end, std::string_view sep) {
  std::string out;
  for (It it = begin; it != end; ++it) {
    if (it != begin) out += sep;
    out += *it;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  return join(parts.begin(), parts.end(), sep);
}

// Space-joins the nonempty parts only; used for canonical item rendering.
inline std::string join_nonempty(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (auto p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

inline bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

// FNV-1a, used to derive per-run seeds from stable string keys.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// SplitMix64; deterministic across platforms, unlike std:: distributions.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Finds the first balanced {...} object in free text (judges wrap JSON in
// prose and code fences). Returns the raw substring; caller parses it.
inline std::optional<std::string> extract_first_json_object(std::string_view text) {
  for (size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) return std::string(text.substr(start, i - start + 1));
      }
    }
  }
  return std::nullopt;
}

// Removes every occurrence of `token`, then trims the ends.
inline std::string strip_token(std::string_view text, std::string_view token) {
  if (token.empty()) return std::string(text);
  std::string out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t hit = text.find(token, pos);
    if (hit == std::string_view::npos) {
      out += text.substr(pos);
      break;
    }
    out += text.substr(pos, hit - pos);
    pos = hit + token.size();
  }
  return trim(out);
}

// {{name}} placeholder substitution. Required slots throw when missing;
// {{?name}} slots expand to empty when absent.
inline std::string substitute_slots(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& slots) {
  std::string out;
  size_t pos = 0;
  while (pos < tmpl.size()) {
    size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    size_t close = tmpl.find("}}", open);
    if (close == std::string_view::npos)
      throw ConfigError("unterminated template slot");
    std::string name(tmpl.substr(open + 2, close - open - 2));
    bool optional = !name.empty() && name[0] == '?';
    if (optional) name.erase(0, 1);
    bool found = false;
    for (const auto& [k, v] : slots) {
      if (k == name) {
        out += v;
        found = true;
        break;
      }
    }
    if (!found && !optional)
      throw ConfigError("missing required input for slot '" + name + "'");
    pos = close + 2;
  }
  return out;
}

// Slot names referenced by a template, '?' prefix stripped, in order.
struct TemplateSlot {
  std::string name;
  bool optional = false;  // {{?name}} slots may be left unfilled
};

inline std::vector<TemplateSlot> template_slots(std::string_view tmpl) {
  std::vector<TemplateSlot> slots;
  size_t pos = 0;
  while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
    size_t close = tmpl.find("}}", pos);
    if (close == std::string_view::npos) break;
    std::string name(tmpl.substr(pos + 2, close - pos - 2));
    bool optional = !name.empty() && name[0] == '?';
    if (optional) name.erase(0, 1);
    slots.push_back({std::move(name), optional});
    pos = close + 2;
  }
  return slots;
}

}  // namespace dsim
