#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsst/core.hpp"
#include "zsst/embeddings.hpp"

namespace zsst {

// Outcome of masking one example against one class. When no token qualifies
// the text passes through unchanged and masked == false.
struct MaskResult {
  std::string original_text;
  std::string masked_text;
  std::string masked_token;  // surface form that was replaced, empty if none
  std::size_t span_begin = 0;
  std::size_t span_end = 0;
  double similarity = 0.0;
  bool masked = false;
};

// Replaces the single token of `text` most similar to `class_vector` with
// `unk_token`. Candidates are the punctuation-stripped tokens that are
// in-vocabulary, not stopwords, not punctuation-only, and not already the
// unk token. Ties on similarity go to the earliest occurrence. At most one
// token is replaced.
MaskResult mask_most_similar(std::string_view text,
                             std::span<const float> class_vector,
                             const EmbeddingStore& store,
                             const std::string& unk_token);

// Binds an embedding store and a model's unk token, then masks per class.
// prepare() precomputes class-name vectors so mask_for_class() is const and
// safe to call from parallel loops.
class Masker {
 public:
  Masker(const EmbeddingStore& store, std::string unk_token);

  // Resolves the class-name vector for every class, throwing
  // UnmaskableClassError for any class with no in-vocabulary unigram.
  void prepare(const ClassSet& classes);

  MaskResult mask_for_class(std::string_view text,
                            const std::string& class_name) const;

  const std::string& unk_token() const { return unk_token_; }
  bool prepared_for(const std::string& class_name) const {
    return class_vectors_.count(class_name) > 0;
  }

 private:
  const EmbeddingStore& store_;
  std::string unk_token_;
  std::unordered_map<std::string, std::vector<float>> class_vectors_;
};

// Masks texts[i] against class_names[i] for the whole batch. Parallel over
// the batch; results are positionally identical to the serial loop.
std::vector<MaskResult> mask_batch(const Masker& masker,
                                   std::span<const std::string> texts,
                                   std::span<const std::string> class_names);

}  // namespace zsst
