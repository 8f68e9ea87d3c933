#include "zsst/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "zsst/errors.hpp"
#include "zsst/hashing.hpp"
#include "zsst/text.hpp"

namespace zsst {

bool EmbeddingStore::add(std::string_view token, std::vector<float> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) {
    throw IngestionError("embedding dimension mismatch for token '" +
                         std::string(token) + "': expected " +
                         std::to_string(dim_) + ", got " +
                         std::to_string(vec.size()));
  }
  std::string key = to_lower(token);
  auto [it, inserted] = vectors_.emplace(std::move(key), std::move(vec));
  if (inserted) tokens_.push_back(it->first);
  return inserted;
}

const std::vector<float>* EmbeddingStore::find(std::string_view token) const {
  auto it = vectors_.find(to_lower(token));
  if (it == vectors_.end()) return nullptr;
  return &it->second;
}

void EmbeddingStore::set_stopwords(std::unordered_set<std::string> stopwords) {
  stopwords_.clear();
  for (const std::string& s : stopwords) stopwords_.insert(to_lower(trim(s)));
}

bool EmbeddingStore::is_stopword(std::string_view token) const {
  return stopwords_.count(to_lower(token)) > 0;
}

std::string EmbeddingStore::digest() const {
  std::uint64_t h = kFnvOffset;
  for (const std::string& t : tokens_) {
    h = fnv1a64(t, h);
    const std::vector<float>& v = vectors_.at(t);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()),
                                 v.size() * sizeof(float)),
                h);
  }
  std::vector<std::string> sw(stopwords_.begin(), stopwords_.end());
  std::sort(sw.begin(), sw.end());
  for (const std::string& s : sw) h = fnv1a64(s, h);
  return hex16(h);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IngestionError("cannot open embedding file: " + path.string());
  }
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<float> vec;
    double v;
    while (ss >> v) vec.push_back(static_cast<float>(v));
    if (!ss.eof()) {
      throw IngestionError(path.string() + ": line " +
                           std::to_string(line_no) +
                           ": malformed vector component");
    }
    // Optional word2vec header: "count dim" as the first line.
    if (line_no == 1 && vec.size() == 1 && store.size() == 0) {
      bool numeric = !token.empty();
      for (char c : token) {
        if (!std::isdigit(static_cast<unsigned char>(c))) numeric = false;
      }
      if (numeric) {
        dim = static_cast<std::size_t>(v);
        continue;
      }
    }
    if (vec.empty()) {
      throw IngestionError(path.string() + ": line " +
                           std::to_string(line_no) + ": no vector components");
    }
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw IngestionError(path.string() + ": line " +
                           std::to_string(line_no) +
                           ": expected dimension " + std::to_string(dim) +
                           ", got " + std::to_string(vec.size()));
    }
    store.add(token, std::move(vec));
  }
  if (store.size() == 0) {
    throw IngestionError("embedding file has no vectors: " + path.string());
  }
  return store;
}

std::unordered_set<std::string> load_stopwords(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IngestionError("cannot open stopword file: " + path.string());
  }
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string word = trim(line);
    if (word.empty() || word[0] == '#') continue;
    out.insert(to_lower(word));
  }
  return out;
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",       "about",   "above",   "after",   "again",   "against",
      "all",     "am",      "an",      "and",     "any",     "are",
      "aren't",  "as",      "at",      "be",      "because", "been",
      "before",  "being",   "below",   "between", "both",    "but",
      "by",      "can",     "cannot",  "could",   "couldn't", "did",
      "didn't",  "do",      "does",    "doesn't", "doing",   "don't",
      "down",    "during",  "each",    "few",     "for",     "from",
      "further", "had",     "hadn't",  "has",     "hasn't",  "have",
      "haven't", "having",  "he",      "he'd",    "he'll",   "he's",
      "her",     "here",    "here's",  "hers",    "herself", "him",
      "himself", "his",     "how",     "how's",   "i",       "i'd",
      "i'll",    "i'm",     "i've",    "if",      "in",      "into",
      "is",      "isn't",   "it",      "it's",    "its",     "itself",
      "let's",   "me",      "more",    "most",    "mustn't", "my",
      "myself",  "no",      "nor",     "not",     "of",      "off",
      "on",      "once",    "only",    "or",      "other",   "ought",
      "our",     "ours",    "ourselves", "out",   "over",    "own",
      "same",    "shan't",  "she",     "she'd",   "she'll",  "she's",
      "should",  "shouldn't", "so",    "some",    "such",    "than",
      "that",    "that's",  "the",     "their",   "theirs",  "them",
      "themselves", "then", "there",   "there's", "these",   "they",
      "they'd",  "they'll", "they're", "they've", "this",    "those",
      "through", "to",      "too",     "under",   "until",   "up",
      "very",    "was",     "wasn't",  "we",      "we'd",    "we'll",
      "we're",   "we've",   "were",    "weren't", "what",    "what's",
      "when",    "when's",  "where",   "where's", "which",   "while",
      "who",     "who's",   "whom",    "why",     "why's",   "with",
      "won't",   "would",   "wouldn't", "you",    "you'd",   "you'll",
      "you're",  "you've",  "your",    "yours",   "yourself",
      "yourselves"};
  return words;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InternalError("cosine: dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<float> class_name_vector(std::string_view class_name,
                                     const EmbeddingStore& store) {
  std::vector<const std::vector<float>*> parts;
  for (const std::string& unigram : tokenize_lower(class_name)) {
    if (store.is_stopword(unigram)) continue;
    if (const std::vector<float>* v = store.find(unigram)) {
      parts.push_back(v);
    }
  }
  if (parts.empty()) {
    throw UnmaskableClassError("no unigram of class name '" +
                               std::string(class_name) +
                               "' is in the embedding vocabulary");
  }
  std::vector<float> mean(store.dim(), 0.0f);
  for (const std::vector<float>* v : parts) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*v)[i];
  }
  const float inv = 1.0f / static_cast<float>(parts.size());
  for (float& x : mean) x *= inv;
  return mean;
}

}  // namespace zsst
