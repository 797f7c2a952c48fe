#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "freecure/backend.hpp"
#include "freecure/conditioning.hpp"

namespace freecure {

/// Marker for the identity slot in manifest prompts.
inline constexpr std::string_view kPlaceholderMarker = "<S>";

struct EncodedPrompt {
  PromptSpec spec;
  ConditioningBundle bundle;
};

inline std::size_t find_placeholder(const std::vector<Token>& tokens, int placeholder_id) {
  std::size_t found = tokens.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].id == placeholder_id) {
      found = i;
      ++count;
    }
  }
  require(count == 1, ErrorKind::invalid_prompt,
          "prompt must contain exactly one " + std::string(kPlaceholderMarker) + " placeholder (found " +
              std::to_string(count) + ")");
  return found;
}

inline ConditioningBundle embed_spec(const PromptSpec& spec, const DiffusionBackend& backend) {
  const auto ids = spec.token_ids();
  ConditioningBundle bundle;
  bundle.embeddings = backend.embed_tokens(ids);
  bundle.identity_fused = false;
  bundle.placeholder_index = spec.placeholder_index();
  return bundle;
}

inline EncodedPrompt encode_prompt(std::string_view text, const DiffusionBackend& backend,
                                   std::vector<PromptAttribute> attributes = {}) {
  require(!text.empty(), ErrorKind::invalid_prompt, "prompt text is empty");
  auto tokens = backend.tokenize(text);
  require(tokens.size() <= backend.capabilities().token_limit, ErrorKind::invalid_prompt,
          "prompt exceeds the backend token limit");
  const std::size_t placeholder = find_placeholder(tokens, backend.placeholder_token_id());
  PromptSpec spec(std::string(text), std::move(tokens), placeholder, std::move(attributes));
  auto bundle = embed_spec(spec, backend);
  return {std::move(spec), std::move(bundle)};
}

/// Replaces the placeholder row with the identity embedding; every other row is untouched.
inline ConditioningBundle fuse_identity(const ConditioningBundle& bundle, const IdentityEmbedding& identity) {
  require(!bundle.identity_fused, ErrorKind::invalid_state, "conditioning is already identity-fused");
  require(bundle.placeholder_index < bundle.token_count(), ErrorKind::invalid_argument,
          "placeholder row outside embedding table");
  require(identity.vector.size() == bundle.dim(), ErrorKind::invalid_argument,
          "identity embedding dim " + std::to_string(identity.vector.size()) + " != text embedding dim " +
              std::to_string(bundle.dim()));
  require(std::all_of(identity.vector.begin(), identity.vector.end(), [](double v) { return std::isfinite(v); }),
          ErrorKind::numeric, "identity embedding is not finite");
  ConditioningBundle out = bundle;
  auto rows = out.embeddings.values();
  const std::size_t dim = bundle.dim();
  std::copy(identity.vector.begin(), identity.vector.end(),
            rows.begin() + static_cast<std::ptrdiff_t>(bundle.placeholder_index * dim));
  out.identity_fused = true;
  return out;
}

inline IdentityEmbedding encode_identity(const Image& reference, const DiffusionBackend& backend) {
  require(reference.size() > 0, ErrorKind::invalid_argument, "reference image is empty");
  return backend.encode_identity(reference);
}

struct RemovedSpan {
  std::string attribute_id;
  std::size_t position = 0;  // token index in the original prompt
  std::vector<Token> tokens;
};

struct StrippedPrompt {
  PromptSpec spec;
  std::vector<RemovedSpan> removed;  // ascending by position
};

/// Removes the target attributes' tokens from text and ids, re-indexing the remaining spans.
inline StrippedPrompt strip_attributes(const PromptSpec& spec, const std::vector<std::string>& targets) {
  std::set<std::string> wanted(targets.begin(), targets.end());
  for (const auto& id : wanted)
    require(spec.find_attribute(id) != nullptr, ErrorKind::invalid_argument, "unknown attribute id '" + id + "'");
  if (wanted.empty()) return {spec, {}};

  const auto& tokens = spec.tokens();
  std::vector<bool> drop(tokens.size(), false);
  std::vector<RemovedSpan> removed;
  for (const auto& attr : spec.attributes()) {
    if (!wanted.contains(attr.id)) continue;
    RemovedSpan r{attr.id, attr.span.begin, {}};
    for (std::size_t i = attr.span.begin; i < attr.span.end; ++i) {
      drop[i] = true;
      r.tokens.push_back(tokens[i]);
    }
    removed.push_back(std::move(r));
  }
  std::sort(removed.begin(), removed.end(), [](const auto& a, const auto& b) { return a.position < b.position; });

  // Character ranges to erase: each maximal run of dropped tokens plus trailing blanks
  // (or leading blanks when the run ends the prompt).
  const std::string& text = spec.text();
  std::vector<std::pair<std::size_t, std::size_t>> cuts;
  for (std::size_t i = 0; i < tokens.size();) {
    if (!drop[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tokens.size() && drop[j]) ++j;
    std::size_t b = tokens[i].begin;
    std::size_t e = tokens[j - 1].end;
    std::size_t e_ext = e;
    while (e_ext < text.size() && std::isspace(static_cast<unsigned char>(text[e_ext]))) ++e_ext;
    if (e_ext == text.size()) {
      while (b > 0 && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
      e = text.size();
    } else {
      e = e_ext;
    }
    cuts.emplace_back(b, e);
    i = j;
  }

  auto shift_for = [&cuts](std::size_t offset) {
    std::size_t shift = 0;
    for (const auto& [b, e] : cuts)
      if (e <= offset) shift += e - b;
    return shift;
  };

  std::string new_text;
  std::size_t cursor = 0;
  for (const auto& [b, e] : cuts) {
    new_text.append(text, cursor, b - cursor);
    cursor = e;
  }
  new_text.append(text, cursor, std::string::npos);

  std::vector<std::size_t> new_index(tokens.size(), 0);
  std::vector<Token> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (drop[i]) continue;
    new_index[i] = kept.size();
    Token t = tokens[i];
    const std::size_t s = shift_for(t.begin);
    t.begin -= s;
    t.end -= s;
    kept.push_back(std::move(t));
  }

  std::vector<PromptAttribute> attrs;
  for (const auto& attr : spec.attributes()) {
    if (wanted.contains(attr.id)) continue;
    PromptAttribute a = attr;
    a.span = {new_index[attr.span.begin], new_index[attr.span.end - 1] + 1};
    attrs.push_back(std::move(a));
  }
  PromptSpec stripped(std::move(new_text), std::move(kept), new_index[spec.placeholder_index()], std::move(attrs));
  return {std::move(stripped), std::move(removed)};
}

}  // namespace freecure
