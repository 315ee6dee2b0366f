#include "medtext/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "medtext/error.hpp"
#include "medtext/rng.hpp"

namespace medtext::corpus {

LabelMap::LabelMap(std::vector<std::string> names) {
  for (auto& n : names) {
    if (index_.count(n)) throw InputError("duplicate label name: " + n);
    index_.emplace(n, static_cast<int>(names_.size()));
    names_.push_back(std::move(n));
  }
}

int LabelMap::intern(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  index_.emplace(name, id);
  names_.push_back(name);
  return id;
}

std::optional<int> LabelMap::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(label_map.size(), 0);
  for (const auto& ex : examples) ++counts.at(static_cast<std::size_t>(ex.label));
  return counts;
}

namespace {

// Decodes one code point starting at s[i]; invalid bytes decode as themselves
// so that malformed input still round-trips byte for byte.
char32_t decode_utf8(std::string_view s, std::size_t i, std::size_t& len) {
  auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0) {
      len = 2;
      return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      len = 3;
      return static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      len = 4;
      return static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
    }
  }
  len = 1;
  return 0xFFFD;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  switch (c) {
    case 0xA1: case 0xAB: case 0xB7: case 0xBB: case 0xBF:
    case 0x2026: case 0x3001: case 0x3002:
      return true;
    default:
      return c >= 0x2010 && c <= 0x201F;
  }
}

// Simple case folding: ASCII, Latin-1, Greek and basic Cyrillic capitals.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

struct CodePoint {
  char32_t cp;
  std::string_view bytes;
};

void flush_word(const std::vector<CodePoint>& word, const TokenizerPolicy& policy,
                std::vector<std::string>& out) {
  if (word.empty()) return;
  auto emit = [&](std::size_t from, std::size_t to) {
    std::string tok;
    for (std::size_t i = from; i < to; ++i) {
      if (policy.lowercase) {
        char32_t lc = to_lower(word[i].cp);
        if (lc != word[i].cp) {
          encode_utf8(lc, tok);
          continue;
        }
      }
      tok.append(word[i].bytes);
    }
    out.push_back(std::move(tok));
  };
  std::size_t lo = 0, hi = word.size();
  if (policy.punctuation_split) {
    while (lo < hi && is_punct(word[lo].cp)) ++lo;
    while (hi > lo && is_punct(word[hi - 1].cp)) --hi;
  }
  for (std::size_t i = 0; i < lo; ++i) emit(i, i + 1);
  if (hi > lo) emit(lo, hi);
  for (std::size_t i = std::max(lo, hi); i < word.size(); ++i) emit(i, i + 1);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerPolicy& policy) {
  std::vector<std::string> out;
  std::vector<CodePoint> word;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 1;
    char32_t cp = decode_utf8(text, i, len);
    if (is_space(cp)) {
      flush_word(word, policy, out);
      word.clear();
    } else {
      word.push_back({cp, text.substr(i, len)});
    }
    i += len;
  }
  flush_word(word, policy, out);
  return out;
}

Format parse_format(std::string_view tag) {
  if (tag == "tsv") return Format::tsv;
  if (tag == "jsonl") return Format::jsonl;
  throw InputError("unknown corpus format: '" + std::string(tag) + "' (expected tsv or jsonl)");
}

Format guess_format(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? Format::jsonl : Format::tsv;
}

Dataset load_dataset(const std::filesystem::path& path, Format format,
                     const LabelMap* fixed_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus: " + path.string());

  Dataset d;
  if (fixed_labels) d.label_map = *fixed_labels;

  auto fail = [&](std::size_t line_no, const std::string& why) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  auto add = [&](std::size_t line_no, const std::string& label, std::string text) {
    if (label.empty()) fail(line_no, "empty label");
    int id;
    if (fixed_labels) {
      auto found = d.label_map.find(label);
      if (!found) fail(line_no, "label '" + label + "' not in the label map");
      id = *found;
    } else {
      id = d.label_map.intern(label);
    }
    d.examples.push_back({std::move(text), id});
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (format == Format::tsv) {
      auto tab = line.find('\t');
      if (tab == std::string::npos) fail(line_no, "missing tab separator between label and text");
      add(line_no, line.substr(0, tab), line.substr(tab + 1));
    } else {
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        fail(line_no, std::string("invalid JSON: ") + e.what());
      }
      if (!rec.is_object()) fail(line_no, "record is not a JSON object");
      auto text = rec.find("text");
      auto label = rec.find("label");
      if (text == rec.end() || !text->is_string()) fail(line_no, "missing string field \"text\"");
      if (label == rec.end() || !label->is_string()) fail(line_no, "missing string field \"label\"");
      add(line_no, label->get<std::string>(), text->get<std::string>());
    }
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, Format format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write corpus: " + path.string());
  for (const auto& ex : d.examples) {
    const auto& label = d.label_map.name(ex.label);
    if (format == Format::tsv) {
      out << label << '\t' << ex.text << '\n';
    } else {
      out << nlohmann::json{{"text", ex.text}, {"label", label}}.dump() << '\n';
    }
  }
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& d) {
  std::vector<std::vector<std::size_t>> by_class(d.label_map.size());
  for (std::size_t i = 0; i < d.examples.size(); ++i)
    by_class.at(static_cast<std::size_t>(d.examples[i].label)).push_back(i);
  return by_class;
}

}  // namespace

Dataset balanced_sample(const Dataset& d, std::size_t n_per_class, std::uint64_t seed) {
  require(n_per_class > 0, "balanced_sample: n_per_class must be positive");
  auto by_class = indices_by_class(d);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < n_per_class)
      throw InputError("class '" + d.label_map.name(static_cast<int>(c)) + "' has " +
                       std::to_string(by_class[c].size()) + " examples, fewer than the " +
                       std::to_string(n_per_class) + " requested");
  }
  Rng rng(seed);
  Dataset out;
  out.label_map = d.label_map;
  out.examples.reserve(n_per_class * by_class.size());
  for (auto& idx : by_class) {
    // Partial Fisher-Yates: the first n slots become a uniform sample.
    for (std::size_t i = 0; i < n_per_class; ++i) {
      std::size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      out.examples.push_back(d.examples[idx[i]]);
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double valid_fraction, std::uint64_t seed) {
  require(valid_fraction > 0.0 && valid_fraction < 1.0,
          "split: valid_fraction must lie strictly between 0 and 1");
  auto by_class = indices_by_class(d);
  Rng rng(seed);
  std::vector<char> to_valid(d.examples.size(), 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    const auto n_valid = static_cast<std::size_t>(std::lround(valid_fraction * static_cast<double>(idx.size())));
    if (n_valid == 0 || n_valid >= idx.size())
      throw InputError("split: class '" + d.label_map.name(static_cast<int>(c)) + "' with " +
                       std::to_string(idx.size()) + " examples leaves an empty side");
    rng.shuffle(idx);
    for (std::size_t i = 0; i < n_valid; ++i) to_valid[idx[i]] = 1;
  }
  Dataset train, valid;
  train.label_map = valid.label_map = d.label_map;
  for (std::size_t i = 0; i < d.examples.size(); ++i)
    (to_valid[i] ? valid : train).examples.push_back(d.examples[i]);
  return {std::move(train), std::move(valid)};
}

std::vector<std::vector<std::string>> tokenize_all(const Dataset& d, const TokenizerPolicy& policy) {
  std::vector<std::vector<std::string>> out;
  out.reserve(d.examples.size());
  for (const auto& ex : d.examples) out.push_back(tokenize(ex.text, policy));
  return out;
}

}  // namespace medtext::corpus
