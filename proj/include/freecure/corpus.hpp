#pragma once

// Evaluation prompts grouped by attribute count, with per-attribute phrases, routes and
// parser labels. Phrases are located in a tokenized prompt to produce token spans.

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "freecure/conditioning.hpp"
#include "freecure/errors.hpp"
#include "freecure/rofa.hpp"

namespace freecure {

struct CorpusAttribute {
  std::string id;
  std::string phrase;
  Route route = Route::localized;
  std::set<int> labels;
};

struct CorpusPrompt {
  std::string text;
  std::vector<CorpusAttribute> attributes;

  std::size_t attribute_count() const { return attributes.size(); }
};

namespace corpus_detail {
// CelebAMask-style label ids.
inline CorpusAttribute hair(std::string p) { return {"hair", std::move(p), Route::localized, {17}}; }
inline CorpusAttribute eyes(std::string p) { return {"eyes", std::move(p), Route::localized, {4, 5}}; }
inline CorpusAttribute earrings(std::string p) { return {"earrings", std::move(p), Route::localized, {9}}; }
inline CorpusAttribute glasses(std::string p) { return {"glasses", std::move(p), Route::localized, {6}}; }
inline CorpusAttribute expression(std::string p) { return {"expression", std::move(p), Route::abstract_attr, {}}; }
}  // namespace corpus_detail

/// 8 single-attribute, 8 two-attribute and 4 three-attribute prompts.
inline const std::vector<CorpusPrompt>& evaluation_corpus() {
  using namespace corpus_detail;
  static const std::vector<CorpusPrompt> prompts = {
      {"a <S> with black curly hair", {hair("black curly hair")}},
      {"a <S> with blonde curly hair", {hair("blonde curly hair")}},
      {"a <S> with red long straight hair", {hair("red long straight hair")}},
      {"a <S> with very angry looking", {expression("very angry looking")}},
      {"a <S> with frowning worriedly", {expression("frowning worriedly")}},
      {"a <S> laughing happily", {expression("laughing happily")}},
      {"a <S> wearing silver earrings", {earrings("silver earrings")}},
      {"a <S> wearing sunglasses", {glasses("sunglasses")}},

      {"a <S> with white curly hair, frowning worriedly", {hair("white curly hair"), expression("frowning worriedly")}},
      {"a <S> with black curly hair, laughing happily", {hair("black curly hair"), expression("laughing happily")}},
      {"a <S> with blonde curly hair and blue eyes", {hair("blonde curly hair"), eyes("blue eyes")}},
      {"a <S> with blue eyes, laughing happily", {eyes("blue eyes"), expression("laughing happily")}},
      {"a <S> wearing sunglasses, laughing happily", {glasses("sunglasses"), expression("laughing happily")}},
      {"a <S> with black hair, wearing silver earrings", {hair("black hair"), earrings("silver earrings")}},
      {"a <S> with blonde hair and blue eyes", {hair("blonde hair"), eyes("blue eyes")}},
      {"a <S> with sunglasses and silver earrings", {glasses("sunglasses"), earrings("silver earrings")}},

      {"a <S> with red curly hair, wearing pearl earrings, unhappy looking",
       {hair("red curly hair"), earrings("pearl earrings"), expression("unhappy looking")}},
      {"a <S> with blue eyes and blonde curly hair, smiling",
       {eyes("blue eyes"), hair("blonde curly hair"), expression("smiling")}},
      {"a <S> with white curly hair, wearing sunglasses, laughing happily",
       {hair("white curly hair"), glasses("sunglasses"), expression("laughing happily")}},
      {"a <S> with black curly hair, wearing silver earrings, frowning worriedly",
       {hair("black curly hair"), earrings("silver earrings"), expression("frowning worriedly")}},
  };
  return prompts;
}

/// First occurrence of the phrase's token texts inside the prompt's tokens.
template <class Tokenizer>
TokenSpan find_phrase(const std::vector<Token>& tokens, std::string_view phrase, const Tokenizer& tokenize) {
  const std::vector<Token> needle = tokenize(phrase);
  require(!needle.empty(), ErrorKind::invalid_argument, "empty attribute phrase");
  for (std::size_t i = 0; i + needle.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) match = tokens[i + k].text == needle[k].text;
    if (match) return {i, i + needle.size()};
  }
  fail(ErrorKind::invalid_argument, "phrase '" + std::string(phrase) + "' not found in prompt");
}

}  // namespace freecure
