#include "zsst/masking.hpp"

#include <exception>
#include <stdexcept>

#include "zsst/errors.hpp"
#include "zsst/parallel.hpp"
#include "zsst/text.hpp"

namespace zsst {

MaskResult mask_most_similar(std::string_view text,
                             std::span<const float> class_vector,
                             const EmbeddingStore& store,
                             const std::string& unk_token) {
  MaskResult result;
  result.original_text = std::string(text);
  result.masked_text = result.original_text;

  const std::string unk_lower = to_lower(unk_token);
  double best_sim = 0.0;
  const TokenSpan* best = nullptr;

  std::vector<TokenSpan> spans = tokenize_with_spans(text);
  for (const TokenSpan& span : spans) {
    std::string lower = to_lower(span.token);
    if (lower == unk_lower) continue;
    if (is_punct_only(lower)) continue;
    if (store.is_stopword(lower)) continue;
    const std::vector<float>* vec = store.find(lower);
    if (!vec) continue;
    double sim = cosine(*vec, class_vector);
    // Strict > keeps the earliest occurrence on ties.
    if (!best || sim > best_sim) {
      best_sim = sim;
      best = &span;
    }
  }

  if (!best) return result;

  result.masked = true;
  result.masked_token = best->token;
  result.span_begin = best->begin;
  result.span_end = best->end;
  result.similarity = best_sim;
  result.masked_text = result.original_text.substr(0, best->begin) +
                       unk_token + result.original_text.substr(best->end);
  return result;
}

Masker::Masker(const EmbeddingStore& store, std::string unk_token)
    : store_(store), unk_token_(std::move(unk_token)) {
  if (unk_token_.empty()) {
    throw ConfigError("unk token must not be empty");
  }
}

void Masker::prepare(const ClassSet& classes) {
  for (const std::string& name : classes.names()) {
    if (class_vectors_.count(name)) continue;
    class_vectors_.emplace(name, class_name_vector(name, store_));
  }
}

MaskResult Masker::mask_for_class(std::string_view text,
                                  const std::string& class_name) const {
  auto it = class_vectors_.find(to_lower(trim(class_name)));
  if (it == class_vectors_.end()) {
    throw LookupError("class '" + class_name +
                      "' was not prepared on this masker");
  }
  return mask_most_similar(text, it->second, store_, unk_token_);
}

std::vector<MaskResult> mask_batch(const Masker& masker,
                                   std::span<const std::string> texts,
                                   std::span<const std::string> class_names) {
  if (texts.size() != class_names.size()) {
    throw ValidationError("mask_batch: texts and class_names differ in size");
  }
  std::vector<MaskResult> results(texts.size());
  ParallelErrorCapture errors;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(texts.size()); ++i) {
    errors.run([&] {
      results[static_cast<std::size_t>(i)] =
          masker.mask_for_class(texts[static_cast<std::size_t>(i)],
                                class_names[static_cast<std::size_t>(i)]);
    });
  }
  errors.rethrow();
  return results;
}

}  // namespace zsst
