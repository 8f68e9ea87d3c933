#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace zsst {

// Static word vectors with cosine similarity. Read-only after load; lookups
// are case-insensitive (keys are lowercased on insertion and lookup).
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }

  // First occurrence wins; returns false if the token was already present.
  bool add(std::string_view token, std::vector<float> vec);

  const std::vector<float>* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }

  void set_stopwords(std::unordered_set<std::string> stopwords);
  bool is_stopword(std::string_view token) const;
  const std::unordered_set<std::string>& stopwords() const {
    return stopwords_;
  }

  // Order-sensitive content digest (tokens, vectors, stopwords).
  std::string digest() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;  // insertion order, for the digest
  std::unordered_map<std::string, std::vector<float>> vectors_;
  std::unordered_set<std::string> stopwords_;
};

// Loads word2vec-style text vectors: one `token v1 .. vd` line each, with an
// optional `count dim` header line. The dimension is fixed by the header or
// the first vector line; any later mismatch raises an IngestionError naming
// the line. Duplicate tokens keep their first occurrence.
EmbeddingStore load_embeddings(const std::filesystem::path& path);

// Newline-delimited stopword list ('#' comments allowed).
std::unordered_set<std::string> load_stopwords(
    const std::filesystem::path& path);

// The list shipped in data/stopwords.txt, compiled in so the toolkit works
// without a configured path. A test pins file and constant together.
const std::unordered_set<std::string>& default_stopwords();

// Cosine similarity, 0.0 when either vector has zero norm.
double cosine(std::span<const float> a, std::span<const float> b);

// Mean of the in-vocabulary unigram vectors of a (possibly multi-word) class
// name, stopwords removed first. Throws UnmaskableClassError when no unigram
// is covered.
std::vector<float> class_name_vector(std::string_view class_name,
                                     const EmbeddingStore& store);

}  // namespace zsst
