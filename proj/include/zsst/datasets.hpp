#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zsst/core.hpp"

namespace zsst {

struct Example {
  std::string id;    // provided id, or the record ordinal as a string
  std::string text;  // non-empty
};

struct LabeledExample {
  Example example;
  std::string gold_class;
};

enum class CorpusRole { kUnlabeled, kTest, kValidation };
enum class CorpusFormat { kCsv, kJsonl };

CorpusFormat parse_corpus_format(std::string_view s);
std::string to_string(CorpusRole role);
std::string to_string(CorpusFormat format);

// Immutable after load. Labels run parallel to examples for labeled roles
// and are empty for unlabeled corpora.
struct Corpus {
  std::string dataset_id;
  CorpusRole role = CorpusRole::kUnlabeled;
  std::vector<Example> examples;
  std::vector<std::string> labels;

  bool labeled() const { return role != CorpusRole::kUnlabeled; }
  std::size_t size() const { return examples.size(); }
  LabeledExample labeled_at(std::size_t i) const;

  // Stable content digest (ids + texts + labels, in order).
  std::string digest() const;
};

// Loads a corpus from disk. JSONL records carry `text`, optional `label`,
// optional `id`; CSV needs a header row with the same column names. Labeled
// roles require the label field. Errors name the failing record ordinal
// (1-based, header excluded for CSV). Multi-valued labels (JSON array or
// comma-separated string) are reduced to their first entry.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   CorpusRole role);

// Identity when the corpus fits under max_size; otherwise a uniform random
// subset of exactly max_size rows, drawn with the given seed. Input order is
// preserved in the output.
Corpus sample_unlabeled(const Corpus& corpus, std::size_t max_size,
                        std::uint64_t seed);

// Built-in per-dataset class names plus user registrations.
class DatasetRegistry {
 public:
  // Registry preloaded with the 8 built-in benchmark datasets.
  static DatasetRegistry builtin();

  void register_dataset(ClassSet classes);

  // Registry file: a JSON object mapping dataset_id -> ordered class-name
  // list. Entries override built-ins of the same id.
  void load_file(const std::filesystem::path& path);

  const ClassSet& get(std::string_view dataset_id) const;
  bool contains(std::string_view dataset_id) const;
  std::vector<std::string> ids() const;

 private:
  std::vector<ClassSet> sets_;
};

// Built-in registry lookup.
const ClassSet& class_registry(std::string_view dataset_id);

}  // namespace zsst
