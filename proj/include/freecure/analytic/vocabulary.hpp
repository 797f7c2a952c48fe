#pragma once

// Toy text side of the analytic backend: a word tokenizer, seeded token embeddings, and a
// rule-based reading of prompts into face attributes with per-token spatial roles.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freecure/analytic/face.hpp"
#include "freecure/conditioning.hpp"

namespace freecure::analytic {

inline constexpr int kPlaceholderId = 3;
inline constexpr int kFirstWordId = 10;
inline constexpr int kUnknownBase = 1000;

inline constexpr std::array<std::string_view, 47> kVocabulary{
    "a",        "an",       "the",     "with",    "and",      "wearing", "looking", "hair",  "eyes",   "earrings",
    "sunglasses", "glasses", "black",  "brown",   "blonde",   "red",     "white",   "gray",  "grey",   "curly",
    "straight", "long",     "short",   "blue",    "green",    "silver",  "pearl",   "gold",  "golden", "very",
    "laughing", "happily",  "smiling", "angry",   "frowning", "worriedly", "unhappy", "neutral", "man", "woman",
    "boy",      "girl",     "person",  "photo",   "of",       ",",       "."};

inline std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline int word_id(std::string_view word) {
  if (word == "<S>") return kPlaceholderId;
  for (std::size_t i = 0; i < kVocabulary.size(); ++i)
    if (kVocabulary[i] == word) return kFirstWordId + static_cast<int>(i);
  return kUnknownBase + static_cast<int>(fnv1a(word) % 100000u);
}

inline std::optional<std::string_view> id_word(int id) {
  if (id == kPlaceholderId) return std::string_view("<S>");
  const int i = id - kFirstWordId;
  if (i >= 0 && i < static_cast<int>(kVocabulary.size())) return kVocabulary[static_cast<std::size_t>(i)];
  return std::nullopt;
}

/// Lower-cased words; punctuation marks become their own tokens; `<S>` is kept whole.
inline std::vector<Token> tokenize_words(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (text.substr(i, 3) == "<S>") {
      out.push_back({kPlaceholderId, "<S>", i, i + 3});
      i += 3;
      continue;
    }
    if (std::isalnum(c) || c == '\'' || c == '-') {
      std::size_t j = i;
      std::string word;
      while (j < text.size()) {
        const unsigned char d = static_cast<unsigned char>(text[j]);
        if (!(std::isalnum(d) || d == '\'' || d == '-')) break;
        word.push_back(static_cast<char>(std::tolower(d)));
        ++j;
      }
      out.push_back({word_id(word), word, i, j});
      i = j;
      continue;
    }
    const std::string punct(1, static_cast<char>(c));
    out.push_back({word_id(punct), punct, i, i + 1});
    ++i;
  }
  return out;
}

inline constexpr std::size_t kEmbeddingDim = 32;

/// Seeded unit vector for a token id.
inline std::vector<double> token_vector(int id) {
  std::mt19937_64 engine(0xC11Full * 1000003ull + static_cast<std::uint64_t>(id));
  std::vector<double> v(kEmbeddingDim);
  double norm = 0.0;
  for (auto& x : v) {
    // Irwin-Hall approximation keeps the draw portable across standard libraries.
    double s = 0.0;
    for (int k = 0; k < 12; ++k) s += detail::unit_uniform(engine);
    x = s - 6.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

enum class Role { filler, placeholder, hair, eyes, earrings, glasses, mouth };

inline constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::filler: return "filler";
    case Role::placeholder: return "placeholder";
    case Role::hair: return "hair";
    case Role::eyes: return "eyes";
    case Role::earrings: return "earrings";
    case Role::glasses: return "glasses";
    case Role::mouth: return "mouth";
  }
  return "?";
}

/// Attributes a prompt asks for; unset fields fall back to the default look (or identity).
struct PromptReading {
  std::optional<HairColor> hair;
  std::optional<HairTexture> texture;
  std::optional<EyeColor> eyes;
  std::optional<Earrings> earrings;
  std::optional<Glasses> glasses;
  std::optional<Expression> expression;
  std::vector<Role> roles;  // per token

  friend bool operator==(const PromptReading&, const PromptReading&) = default;
};

namespace detail {
inline std::optional<Expression> expression_word(std::string_view w) {
  if (w == "laughing") return Expression::laughing;
  if (w == "smiling") return Expression::smiling;
  if (w == "angry") return Expression::angry;
  if (w == "frowning") return Expression::frowning;
  if (w == "unhappy") return Expression::unhappy;
  if (w == "neutral") return Expression::neutral;
  return std::nullopt;
}
inline bool is_expression_adverb(std::string_view w) { return w == "happily" || w == "worriedly" || w == "looking"; }
inline bool is_modifier(std::string_view w) {
  return parse_enum<HairColor>(w) || w == "grey" || w == "curly" || w == "straight" || w == "long" || w == "short" ||
         parse_enum<EyeColor>(w) || w == "silver" || w == "pearl" || w == "gold" || w == "golden";
}
}  // namespace detail

/// Reads a word sequence (absent entries = unknown or filler words).
inline PromptReading read_prompt(const std::vector<std::optional<std::string_view>>& words) {
  PromptReading out;
  out.roles.assign(words.size(), Role::filler);
  std::vector<std::size_t> pending;
  auto word_at = [&words](std::size_t i) -> std::string_view { return words[i] ? *words[i] : std::string_view(); };

  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string_view w = word_at(i);
    if (w == "<S>") {
      out.roles[i] = Role::placeholder;
      pending.clear();
      continue;
    }
    if (detail::is_modifier(w)) {
      pending.push_back(i);
      continue;
    }
    if (w == "hair" || w == "eyes" || w == "earrings") {
      const Role role = w == "hair" ? Role::hair : (w == "eyes" ? Role::eyes : Role::earrings);
      out.roles[i] = role;
      for (auto p : pending) {
        const std::string_view m = word_at(p);
        out.roles[p] = role;
        if (role == Role::hair) {
          if (auto c = parse_enum<HairColor>(m)) out.hair = *c;
          else if (m == "grey") out.hair = HairColor::gray;
          else if (m == "curly") out.texture = HairTexture::curly;
          else if (m == "straight") out.texture = HairTexture::straight;
        } else if (role == Role::eyes) {
          if (auto c = parse_enum<EyeColor>(m)) out.eyes = *c;
          else if (m == "grey") out.eyes = EyeColor::gray;
        } else {
          if (m == "silver") out.earrings = Earrings::silver;
          else if (m == "pearl") out.earrings = Earrings::pearl;
          else if (m == "gold" || m == "golden") out.earrings = Earrings::gold;
        }
      }
      if (role == Role::earrings && !out.earrings) out.earrings = Earrings::silver;
      pending.clear();
      continue;
    }
    pending.clear();
    if (w == "sunglasses" || w == "glasses") {
      out.roles[i] = Role::glasses;
      out.glasses = Glasses::dark;
      continue;
    }
    if (auto e = detail::expression_word(w)) {
      out.expression = *e;
      out.roles[i] = Role::mouth;
      if (i > 0 && word_at(i - 1) == "very") out.roles[i - 1] = Role::mouth;
      std::size_t j = i + 1;
      while (j < words.size() && detail::is_expression_adverb(word_at(j))) out.roles[j++] = Role::mouth;
      i = j - 1;
      continue;
    }
  }
  return out;
}

inline PromptReading read_prompt(const std::vector<Token>& tokens) {
  std::vector<std::optional<std::string_view>> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(id_word(t.id));
  return read_prompt(words);
}

inline PromptReading read_prompt_text(std::string_view text) { return read_prompt(tokenize_words(text)); }

/// Foundation look: the default face with every prompt attribute applied.
inline FaceLook foundation_look(const PromptReading& r) {
  FaceLook look;
  if (r.hair) look.hair = *r.hair;
  if (r.texture) look.texture = *r.texture;
  if (r.eyes) look.eyes = *r.eyes;
  if (r.earrings) look.earrings = *r.earrings;
  if (r.glasses) look.glasses = *r.glasses;
  if (r.expression) look.expression = *r.expression;
  return look;
}

/// Identity-fused look: identity traits win over the prompt, prompt accessories fade.
inline FaceLook eroded_look(const PromptReading& r, const FaceLook& identity) {
  FaceLook look = identity;
  look.earrings = r.earrings ? Earrings::weak : Earrings::none;
  look.glasses = r.glasses ? Glasses::weak : Glasses::none;
  return look;
}

}  // namespace freecure::analytic
