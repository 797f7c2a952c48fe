#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure {

struct Token {
  int id = 0;
  std::string text;
  std::size_t begin = 0;  // character offsets into the prompt text
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class MaskSource { parsing, attention_only };

/// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  bool overlaps(const TokenSpan& o) const noexcept { return begin < o.end && o.begin < end; }

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct PromptAttribute {
  std::string id;
  std::string label;
  TokenSpan span;
  MaskSource mask_source = MaskSource::parsing;

  friend bool operator==(const PromptAttribute&, const PromptAttribute&) = default;
};

class PromptSpec {
 public:
  PromptSpec() = default;

  /// Validates span bounds, disjointness, and placeholder exclusion.
  PromptSpec(std::string text, std::vector<Token> tokens, std::size_t placeholder_index,
             std::vector<PromptAttribute> attributes)
      : text_(std::move(text)), tokens_(std::move(tokens)), placeholder_(placeholder_index),
        attributes_(std::move(attributes)) {
    require(placeholder_ < tokens_.size(), ErrorKind::invalid_prompt, "placeholder index outside token range");
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      const auto& a = attributes_[i];
      require(a.span.begin < a.span.end && a.span.end <= tokens_.size(), ErrorKind::invalid_argument,
              "attribute '" + a.id + "' span outside token range");
      require(!a.span.contains(placeholder_), ErrorKind::invalid_argument,
              "attribute '" + a.id + "' span covers the placeholder token");
      for (std::size_t j = 0; j < i; ++j) {
        require(!a.span.overlaps(attributes_[j].span), ErrorKind::invalid_argument,
                "attribute spans overlap: '" + attributes_[j].id + "' and '" + a.id + "'");
        require(a.id != attributes_[j].id, ErrorKind::invalid_argument, "duplicate attribute id '" + a.id + "'");
      }
    }
  }

  const std::string& text() const noexcept { return text_; }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t placeholder_index() const noexcept { return placeholder_; }
  const std::vector<PromptAttribute>& attributes() const noexcept { return attributes_; }

  std::vector<int> token_ids() const {
    std::vector<int> ids;
    ids.reserve(tokens_.size());
    for (const auto& t : tokens_) ids.push_back(t.id);
    return ids;
  }

  const PromptAttribute* find_attribute(const std::string& id) const {
    for (const auto& a : attributes_)
      if (a.id == id) return &a;
    return nullptr;
  }

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;

 private:
  std::string text_;
  std::vector<Token> tokens_;
  std::size_t placeholder_ = 0;
  std::vector<PromptAttribute> attributes_;
};

/// Text-encoder output, optionally with the placeholder row replaced by an identity embedding.
struct ConditioningBundle {
  Tensor embeddings;  // [tokens x dim]
  bool identity_fused = false;
  std::size_t placeholder_index = 0;

  std::size_t token_count() const { return embeddings.rank() == 2 ? embeddings.dim(0) : 0; }
  std::size_t dim() const { return embeddings.rank() == 2 ? embeddings.dim(1) : 0; }

  friend bool operator==(const ConditioningBundle&, const ConditioningBundle&) = default;
};

struct IdentityEmbedding {
  std::vector<double> vector;
  std::string source_ref;

  friend bool operator==(const IdentityEmbedding&, const IdentityEmbedding&) = default;
};

}  // namespace freecure
