#include <algorithm>
#include <cctype>
#include <set>

#include "doctest.h"
#include "medtext/corpus.hpp"
#include "medtext/error.hpp"
#include "medtext/rng.hpp"
#include "oracles.hpp"

using namespace medtext;
using corpus::tokenize;
using Toks = std::vector<std::string>;

namespace {

std::string join(const Toks& t, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? sep : "") + t[i];
  return s;
}

// Random ASCII text mixing letters of both cases, digits, punctuation and
// assorted whitespace.
std::string random_text(Rng& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:!?()'\"-/%     \t\n";
  std::string s;
  const auto n = rng.below(60);
  for (std::uint64_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

corpus::Dataset make_dataset(std::size_t classes, std::size_t per_class) {
  corpus::Dataset d;
  for (std::size_t c = 0; c < classes; ++c) d.label_map.intern("class" + std::to_string(c));
  for (std::size_t i = 0; i < per_class; ++i)
    for (std::size_t c = 0; c < classes; ++c)
      d.examples.push_back({"sentence " + std::to_string(c) + " " + std::to_string(i), static_cast<int>(c)});
  return d;
}

}  // namespace

TEST_CASE("tokenize: lowercases and splits trailing punctuation") {
  CHECK(tokenize("The patient lives with their mother.") ==
        Toks{"the", "patient", "lives", "with", "their", "mother", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("A  B") == Toks{"a", "b"});
  CHECK(tokenize("   \t\n ").empty());
}

TEST_CASE("tokenize: punctuation handling") {
  CHECK(tokenize("(BP 120/80), stable!") == Toks{"(", "bp", "120/80", ")", ",", "stable", "!"});
  CHECK(tokenize("...") == Toks{".", ".", "."});
  CHECK(tokenize("e.g. x-ray") == Toks{"e.g", ".", "x-ray"});
  CHECK(tokenize("Mother.", {true, false}) == Toks{"mother."});
  CHECK(tokenize("Mother.", {false, true}) == Toks{"Mother", "."});
}

TEST_CASE("tokenize: unicode whitespace and case folding") {
  CHECK(tokenize("cafÉ NAÏVE") == Toks{"café", "naïve"});
  CHECK(tokenize("ΔΕΛΤΑ МРТ") ==
        Toks{"δελτα", "мрт"});
  CHECK(tokenize("«dose»") == Toks{"«", "dose", "»"});
  // Malformed UTF-8 passes through untouched.
  CHECK(tokenize("a\xff" "b") == Toks{"a\xff" "b"});
}

TEST_CASE("tokenize: idempotent on its own joined output (property)") {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    auto text = random_text(rng);
    auto once = tokenize(text);
    CHECK(tokenize(join(once, " ")) == once);
  }
}

TEST_CASE("tokenize: tokens hold no whitespace and concatenate to the folded input (property)") {
  Rng rng(202);
  for (int trial = 0; trial < 500; ++trial) {
    auto text = random_text(rng);
    auto toks = tokenize(text);
    std::string folded;
    for (unsigned char c : text)
      if (!std::isspace(c)) folded += static_cast<char>(std::tolower(c));
    for (const auto& t : toks) {
      CHECK(!t.empty());
      CHECK(std::none_of(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }));
    }
    CHECK(join(toks, "") == folded);
  }
}

TEST_CASE("load_dataset: tsv and jsonl") {
  testutil::TempDir dir("corpus");
  testutil::spit(dir / "a.tsv", "brain\tHead CT normal.\ncancer\tTumor noted.\r\n\nbrain\tMRI clear.\n");
  auto d = corpus::load_dataset(dir / "a.tsv", corpus::Format::tsv);
  CHECK(d.size() == 3);
  CHECK(d.label_map.size() == 2);
  CHECK(d.label_map.names() == Toks{"brain", "cancer"});
  CHECK(d.examples[1] == corpus::LabeledExample{"Tumor noted.", 1});
  CHECK(d.class_counts() == std::vector<std::size_t>{2, 1});

  testutil::spit(dir / "b.jsonl", "{\"text\":\"x\",\"label\":\"brain\"}\n");
  auto j = corpus::load_dataset(dir / "b.jsonl", corpus::guess_format(dir / "b.jsonl"));
  CHECK(j.size() == 1);
  CHECK(j.examples[0].label == 0);
  CHECK(j.examples[0].text == "x");
}

TEST_CASE("load_dataset: errors carry file and line") {
  testutil::TempDir dir("corpus_err");
  testutil::spit(dir / "bad.tsv", "brain\tok\nno tab here\n");
  try {
    corpus::load_dataset(dir / "bad.tsv", corpus::Format::tsv);
    FAIL("expected an InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bad.tsv:2:") != std::string::npos);
  }
  testutil::spit(dir / "bad.jsonl", "{\"text\":\"x\"}\n");
  CHECK_THROWS_AS(corpus::load_dataset(dir / "bad.jsonl", corpus::Format::jsonl), InputError);
  testutil::spit(dir / "bad2.jsonl", "not json\n");
  CHECK_THROWS_AS(corpus::load_dataset(dir / "bad2.jsonl", corpus::Format::jsonl), InputError);
  CHECK_THROWS_AS(corpus::load_dataset(dir / "missing.tsv", corpus::Format::tsv), InputError);
  CHECK_THROWS_AS(corpus::parse_format("csv"), InputError);

  corpus::LabelMap fixed(std::vector<std::string>{"brain"});
  testutil::spit(dir / "c.tsv", "brain\ta\ncancer\tb\n");
  CHECK_THROWS_AS(corpus::load_dataset(dir / "c.tsv", corpus::Format::tsv, &fixed), InputError);
}

TEST_CASE("load_dataset: fixed label map keeps ids") {
  testutil::TempDir dir("corpus_fixed");
  testutil::spit(dir / "v.tsv", "cancer\tb\nbrain\ta\n");
  corpus::LabelMap fixed(std::vector<std::string>{"brain", "cancer"});
  auto d = corpus::load_dataset(dir / "v.tsv", corpus::Format::tsv, &fixed);
  CHECK(d.examples[0].label == 1);
  CHECK(d.examples[1].label == 0);
  CHECK_THROWS_AS(corpus::LabelMap(std::vector<std::string>{"a", "a"}), InputError);
}

TEST_CASE("save_dataset roundtrips both formats") {
  testutil::TempDir dir("corpus_rt");
  corpus::Dataset d;
  d.label_map.intern("x");
  d.label_map.intern("y");
  d.examples = {{"quote \" and \\ backslash", 1}, {"plain", 0}};
  for (auto f : {corpus::Format::jsonl, corpus::Format::tsv}) {
    auto path = dir / (f == corpus::Format::tsv ? "d.tsv" : "d.jsonl");
    corpus::save_dataset(d, path, f);
    auto back = corpus::load_dataset(path, f);
    CHECK(back.examples.size() == 2);
    CHECK(back.label_map.name(back.examples[0].label) == "y");
    CHECK(back.examples[0].text == d.examples[0].text);
  }
}

TEST_CASE("balanced_sample") {
  auto d = make_dataset(3, 10);
  auto s = corpus::balanced_sample(d, 4, 7);
  CHECK(s.size() == 12);
  CHECK(s.class_counts() == std::vector<std::size_t>{4, 4, 4});
  auto again = corpus::balanced_sample(d, 4, 7);
  CHECK(s.examples == again.examples);
  std::set<std::string> texts;
  for (const auto& ex : s.examples) texts.insert(ex.text);
  CHECK(texts.size() == 12);

  try {
    corpus::balanced_sample(d, 11, 7);
    FAIL("expected an InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("class0") != std::string::npos);
  }
}

TEST_CASE("split: per-class fractions") {
  auto d = make_dataset(3, 10);
  auto [train, valid] = corpus::split(d, 0.2, 3);
  CHECK(valid.class_counts() == std::vector<std::size_t>{2, 2, 2});
  CHECK(train.class_counts() == std::vector<std::size_t>{8, 8, 8});

  auto big = make_dataset(2, 5000);
  auto [bt, bv] = corpus::split(big, 0.2, 3);
  CHECK(bv.class_counts() == std::vector<std::size_t>{1000, 1000});
  CHECK(bt.class_counts() == std::vector<std::size_t>{4000, 4000});

  auto tiny = make_dataset(2, 1);
  CHECK_THROWS_AS(corpus::split(tiny, 0.5, 1), InputError);
  CHECK_THROWS_AS(corpus::split(d, 0.0, 1), InputError);
}

TEST_CASE("split and balanced_sample: partition and determinism (property)") {
  Rng gen(303);
  for (int trial = 0; trial < 50; ++trial) {
    const auto classes = 2 + gen.below(4);
    const auto per = 5 + gen.below(30);
    auto d = make_dataset(classes, per);
    const double fraction = 0.1 + 0.8 * gen.uniform();
    const auto seed = gen.next();
    auto [train, valid] = corpus::split(d, fraction, seed);
    auto [train2, valid2] = corpus::split(d, fraction, seed);
    CHECK(train.examples == train2.examples);
    CHECK(valid.examples == valid2.examples);
    CHECK(train.size() + valid.size() == d.size());
    std::set<std::string> a, b;
    for (const auto& ex : train.examples) a.insert(ex.text);
    for (const auto& ex : valid.examples) b.insert(ex.text);
    std::vector<std::string> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    CHECK(both.empty());

    const auto n = 1 + gen.below(per);
    CHECK(corpus::balanced_sample(d, n, seed).examples == corpus::balanced_sample(d, n, seed).examples);
  }
}
