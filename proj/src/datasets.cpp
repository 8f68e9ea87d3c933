#include "zsst/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zsst/errors.hpp"
#include "zsst/hashing.hpp"
#include "zsst/rng.hpp"
#include "zsst/text.hpp"

namespace zsst {

CorpusFormat parse_corpus_format(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "csv") return CorpusFormat::kCsv;
  if (v == "jsonl") return CorpusFormat::kJsonl;
  throw ConfigError("unknown corpus format '" + std::string(s) +
                    "' (expected csv or jsonl)");
}

std::string to_string(CorpusRole role) {
  switch (role) {
    case CorpusRole::kUnlabeled:
      return "unlabeled";
    case CorpusRole::kTest:
      return "test";
    case CorpusRole::kValidation:
      return "validation";
  }
  return "unlabeled";
}

std::string to_string(CorpusFormat format) {
  return format == CorpusFormat::kCsv ? "csv" : "jsonl";
}

LabeledExample Corpus::labeled_at(std::size_t i) const {
  if (!labeled()) {
    throw InternalError("labeled_at called on an unlabeled corpus");
  }
  return LabeledExample{examples.at(i), labels.at(i)};
}

std::string Corpus::digest() const {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    h = fnv1a64(examples[i].id, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(examples[i].text, h);
    h = fnv1a64("\x1f", h);
    if (i < labels.size()) h = fnv1a64(labels[i], h);
    h = fnv1a64("\x1e", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

struct RawRecord {
  std::string id;
  std::string text;
  std::string label;
  bool has_label = false;
};

std::string ordinal_msg(const std::filesystem::path& path, std::size_t n,
                        const std::string& what) {
  return path.string() + ": record " + std::to_string(n) + ": " + what;
}

// Takes the first label of a multi-valued field ("joy,pride" -> "joy").
std::string first_label(std::string_view raw) {
  const std::size_t comma = raw.find(',');
  if (comma == std::string_view::npos) return trim(raw);
  return trim(raw.substr(0, comma));
}

std::vector<RawRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open dataset file: " + path.string());
  std::vector<RawRecord> records;
  std::string line;
  std::size_t ordinal = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++ordinal;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(ordinal_msg(path, ordinal, e.what()));
    }
    if (!j.is_object() || !j.contains("text")) {
      throw IngestionError(ordinal_msg(path, ordinal, "missing `text` field"));
    }
    RawRecord r;
    if (!j.at("text").is_string()) {
      throw IngestionError(ordinal_msg(path, ordinal, "`text` must be a string"));
    }
    r.text = j.at("text").get<std::string>();
    if (j.contains("id")) {
      if (j.at("id").is_string()) {
        r.id = j.at("id").get<std::string>();
      } else if (j.at("id").is_number_integer()) {
        r.id = std::to_string(j.at("id").get<long long>());
      } else {
        throw IngestionError(ordinal_msg(path, ordinal, "`id` must be a string or integer"));
      }
    }
    if (j.contains("label")) {
      const nlohmann::json& l = j.at("label");
      if (l.is_string()) {
        r.label = first_label(l.get<std::string>());
        r.has_label = true;
      } else if (l.is_array() && !l.empty() && l.at(0).is_string()) {
        r.label = trim(l.at(0).get<std::string>());
        r.has_label = true;
      } else {
        throw IngestionError(ordinal_msg(
            path, ordinal, "`label` must be a string or non-empty array"));
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

// RFC-4180-ish: comma delimited, double quotes, "" escapes a quote inside a
// quoted field. Newlines inside quoted fields are supported.
std::vector<std::vector<std::string>> read_csv_rows(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open dataset file: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        break;
      case ',':
        row.push_back(field);
        field.clear();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_started || !field.empty() || !row.empty()) {
          row.push_back(field);
          field.clear();
          rows.push_back(row);
          row.clear();
          row_started = false;
        }
        break;
      default:
        field.push_back(c);
        row_started = true;
        break;
    }
  }
  if (in_quotes) {
    throw IngestionError(path.string() + ": unterminated quoted field");
  }
  if (row_started || !field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

std::vector<RawRecord> read_csv(const std::filesystem::path& path) {
  auto rows = read_csv_rows(path);
  if (rows.empty()) {
    throw IngestionError("dataset file is empty: " + path.string());
  }
  const std::vector<std::string>& header = rows.front();
  long text_col = -1, label_col = -1, id_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string key = to_lower(trim(header[i]));
    if (key == "text") text_col = static_cast<long>(i);
    if (key == "label") label_col = static_cast<long>(i);
    if (key == "id") id_col = static_cast<long>(i);
  }
  if (text_col < 0) {
    throw IngestionError(path.string() + ": header has no `text` column");
  }
  std::vector<RawRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::vector<std::string>& row = rows[r];
    const std::size_t ordinal = r;  // 1-based data record index
    if (static_cast<std::size_t>(text_col) >= row.size()) {
      throw IngestionError(ordinal_msg(path, ordinal, "missing `text` field"));
    }
    RawRecord rec;
    rec.text = row[static_cast<std::size_t>(text_col)];
    if (id_col >= 0 && static_cast<std::size_t>(id_col) < row.size() &&
        !row[static_cast<std::size_t>(id_col)].empty()) {
      rec.id = row[static_cast<std::size_t>(id_col)];
    }
    if (label_col >= 0 && static_cast<std::size_t>(label_col) < row.size() &&
        !trim(row[static_cast<std::size_t>(label_col)]).empty()) {
      rec.label = first_label(row[static_cast<std::size_t>(label_col)]);
      rec.has_label = true;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   CorpusRole role) {
  if (!std::filesystem::exists(path)) {
    throw IngestionError("dataset file does not exist: " + path.string());
  }
  std::vector<RawRecord> records = format == CorpusFormat::kJsonl
                                       ? read_jsonl(path)
                                       : read_csv(path);
  if (records.empty()) {
    throw IngestionError("dataset file is empty: " + path.string());
  }
  Corpus corpus;
  corpus.role = role;
  const bool need_label = role != CorpusRole::kUnlabeled;
  std::unordered_map<std::string, std::size_t> seen_ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    RawRecord& r = records[i];
    const std::size_t ordinal = i + 1;
    if (trim(r.text).empty()) {
      throw IngestionError(ordinal_msg(path, ordinal, "empty `text` field"));
    }
    if (need_label && !r.has_label) {
      throw IngestionError(ordinal_msg(
          path, ordinal,
          "missing `label` field (required for " + to_string(role) +
              " corpora)"));
    }
    Example ex;
    ex.id = r.id.empty() ? std::to_string(ordinal - 1) : r.id;
    ex.text = std::move(r.text);
    auto [it, inserted] = seen_ids.emplace(ex.id, ordinal);
    if (!inserted) {
      throw IngestionError(ordinal_msg(
          path, ordinal,
          "duplicate id '" + ex.id + "' (first seen at record " +
              std::to_string(it->second) + ")"));
    }
    corpus.examples.push_back(std::move(ex));
    if (need_label) corpus.labels.push_back(to_lower(trim(r.label)));
  }
  return corpus;
}

Corpus sample_unlabeled(const Corpus& corpus, std::size_t max_size,
                        std::uint64_t seed) {
  if (corpus.role != CorpusRole::kUnlabeled) {
    throw ValidationError("sample_unlabeled requires an unlabeled corpus");
  }
  if (max_size < 1) {
    throw ConfigError("sample_unlabeled max_size must be >= 1");
  }
  if (corpus.size() <= max_size) return corpus;
  Rng rng(seed);
  std::vector<std::size_t> keep =
      sample_without_replacement(corpus.size(), max_size, rng);
  Corpus out;
  out.dataset_id = corpus.dataset_id;
  out.role = corpus.role;
  out.examples.reserve(keep.size());
  for (std::size_t i : keep) out.examples.push_back(corpus.examples[i]);
  return out;
}

void DatasetRegistry::register_dataset(ClassSet classes) {
  for (ClassSet& existing : sets_) {
    if (existing.dataset_id() == classes.dataset_id()) {
      existing = std::move(classes);
      return;
    }
  }
  sets_.push_back(std::move(classes));
}

void DatasetRegistry::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open registry file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("registry file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) {
    throw IngestionError("registry file must be a JSON object: " +
                         path.string());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) {
      throw IngestionError("registry entry '" + it.key() +
                           "' must be an array of class names");
    }
    std::vector<std::string> names;
    for (const auto& v : it.value()) names.push_back(v.get<std::string>());
    register_dataset(ClassSet(it.key(), std::move(names)));
  }
}

const ClassSet& DatasetRegistry::get(std::string_view dataset_id) const {
  for (const ClassSet& s : sets_) {
    if (s.dataset_id() == dataset_id) return s;
  }
  std::ostringstream msg;
  msg << "unknown dataset id '" << dataset_id << "'; known ids:";
  for (const std::string& id : ids()) msg << " " << id;
  throw LookupError(msg.str());
}

bool DatasetRegistry::contains(std::string_view dataset_id) const {
  for (const ClassSet& s : sets_) {
    if (s.dataset_id() == dataset_id) return true;
  }
  return false;
}

std::vector<std::string> DatasetRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(sets_.size());
  for (const ClassSet& s : sets_) out.push_back(s.dataset_id());
  return out;
}

DatasetRegistry DatasetRegistry::builtin() {
  DatasetRegistry reg;
  reg.register_dataset(ClassSet(
      "isear",
      {"anger", "disgust", "fear", "guilt", "joy", "sadness", "shame"}));
  reg.register_dataset(ClassSet(
      "goemotions",
      {"admiration",    "amusement", "anger",     "annoyance",
       "approval",      "caring",    "confusion", "curiosity",
       "desire",        "disappointment", "disapproval", "disgust",
       "embarrassment", "excitement", "fear",     "gratitude",
       "grief",         "joy",       "love",      "nervousness",
       "neutral",       "optimism",  "pride",     "realization",
       "relief",        "remorse",   "sadness",   "surprise"}));
  reg.register_dataset(ClassSet(
      "agnews", {"business", "world", "sports", "science and technology"}));
  reg.register_dataset(ClassSet(
      "yahoo",
      {"business & finance", "computers & internet", "education & reference",
       "entertainment & music", "family & relationships", "health",
       "politics & government", "science & mathematics", "society & culture",
       "sports"}));
  reg.register_dataset(ClassSet(
      "20newsgroup",
      {"atheism", "computer graphics", "hockey", "cryptography",
       "electronics", "medicine", "space", "christianity", "guns",
       "middle east", "politics", "religion", "microsoft windows",
       "pc hardware", "mac hardware", "windows x", "for sale", "cars",
       "motorcycles", "baseball"}));
  reg.register_dataset(ClassSet(
      "dbpedia",
      {"album", "animal", "artist", "athlete", "building", "company",
       "educational institution", "film", "mean of transportation",
       "natural place", "office holder", "plant", "village",
       "written work"}));
  reg.register_dataset(ClassSet("amazon", {"bad", "good"}));
  reg.register_dataset(ClassSet("imdb", {"bad", "good"}));
  return reg;
}

const ClassSet& class_registry(std::string_view dataset_id) {
  static const DatasetRegistry registry = DatasetRegistry::builtin();
  return registry.get(dataset_id);
}

}  // namespace zsst
