#include "medtext/synthetic.hpp"

#include "medtext/rng.hpp"

namespace medtext::synthetic {

namespace {

std::vector<std::string> word_group(const std::string& prefix, std::size_t n) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(prefix + std::to_string(i));
  return words;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

std::vector<std::string> draw(const std::vector<std::string>& group, std::size_t n, Rng& rng) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(group[rng.below(group.size())]);
  return out;
}

}  // namespace

TwoTopicCorpus two_topic_corpus(std::size_t n_sentences, std::size_t sentence_len, std::size_t words_per_topic,
                                std::uint64_t seed) {
  Rng rng(seed);
  TwoTopicCorpus c{{}, word_group("alpha", words_per_topic), word_group("beta", words_per_topic)};
  for (std::size_t i = 0; i < n_sentences; ++i)
    c.sentences.push_back(draw(i % 2 == 0 ? c.topic_a : c.topic_b, sentence_len, rng));
  return c;
}

OrderCorpus order_corpus(std::size_t train_per_class, std::size_t valid_per_class, std::uint64_t seed) {
  Rng rng(seed);
  const auto group_a = word_group("ant", 12);
  const auto group_b = word_group("bee", 12);
  const auto group_c = word_group("cat", 12);
  const auto group_d = word_group("dog", 12);
  const auto filler = word_group("the", 4);

  OrderCorpus out;
  corpus::LabelMap labels({kTwinForward, kTwinReverse, "topic_c", "topic_d"});
  out.train.label_map = out.valid.label_map = labels;

  auto fill = [&](corpus::Dataset& d, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t run = 3 + rng.below(4);
      auto a = draw(group_a, run, rng);
      auto b = draw(group_b, run, rng);
      std::vector<std::string> fwd = a, rev = b;
      fwd.insert(fwd.end(), b.begin(), b.end());
      rev.insert(rev.end(), a.begin(), a.end());
      d.examples.push_back({join(fwd), 0});
      d.examples.push_back({join(rev), 1});
      for (int topic : {2, 3}) {
        const auto& group = topic == 2 ? group_c : group_d;
        auto words = draw(group, 4 + rng.below(6), rng);
        // A few filler and twin-group words so topics share some vocabulary.
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)),
                     filler[rng.below(filler.size())]);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)),
                     (rng.bernoulli(0.5) ? group_a : group_b)[rng.below(12)]);
        d.examples.push_back({join(words), topic});
      }
    }
  };
  fill(out.train, train_per_class);
  fill(out.valid, valid_per_class);
  return out;
}

corpus::Dataset topic_corpus(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  const auto filler = std::vector<std::string>{"the", "patient", "with", "and", "of"};
  corpus::Dataset d;
  std::vector<std::vector<std::string>> groups;
  for (std::size_t c = 0; c < classes; ++c) {
    d.label_map.intern("category" + std::to_string(c));
    groups.push_back(word_group("w" + std::to_string(c) + "x", 8));
  }
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      auto words = draw(groups[c], 3 + rng.below(4), rng);
      auto extra = draw(filler, 2, rng);
      words.insert(words.end(), extra.begin(), extra.end());
      rng.shuffle(words);
      d.examples.push_back({join(words) + ".", static_cast<int>(c)});
    }
  }
  return d;
}

}  // namespace medtext::synthetic
