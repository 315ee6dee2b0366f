#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace medtext::corpus {

/// Category names; a label id is the position of its name.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  /// Returns the id of `name`, adding it at the end if unseen.
  int intern(const std::string& name);
  std::optional<int> find(const std::string& name) const;

  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool operator==(const LabelMap& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct LabeledExample {
  std::string text;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  LabelMap label_map;

  std::size_t size() const { return examples.size(); }
  /// Example count for each label id.
  std::vector<std::size_t> class_counts() const;
};

// Stop-words are never removed and no stemming is applied; the policy only
// controls case folding and punctuation splitting.
struct TokenizerPolicy {
  bool lowercase = true;
  bool punctuation_split = true;
};

/// Splits on Unicode whitespace and detaches leading/trailing punctuation
/// characters as single-character tokens.
std::vector<std::string> tokenize(std::string_view text, const TokenizerPolicy& policy = {});

enum class Format { tsv, jsonl };

Format parse_format(std::string_view tag);
/// `.jsonl`/`.json` extension means jsonl, anything else tsv.
Format guess_format(const std::filesystem::path& path);

/// Loads a corpus. With `fixed_labels`, labels must already exist in that map
/// and ids follow it; otherwise the map is built in first-appearance order.
Dataset load_dataset(const std::filesystem::path& path, Format format,
                     const LabelMap* fixed_labels = nullptr);

void save_dataset(const Dataset& d, const std::filesystem::path& path, Format format);

Dataset balanced_sample(const Dataset& d, std::size_t n_per_class, std::uint64_t seed);

std::pair<Dataset, Dataset> split(const Dataset& d, double valid_fraction, std::uint64_t seed);

/// Tokenizes every example text.
std::vector<std::vector<std::string>> tokenize_all(const Dataset& d,
                                                   const TokenizerPolicy& policy = {});

}  // namespace medtext::corpus
