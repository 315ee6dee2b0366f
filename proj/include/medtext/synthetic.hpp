#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medtext/corpus.hpp"
#include "medtext/embeddings.hpp"

// Seeded synthetic corpora for tests, demos and the acceptance suite.
namespace medtext::synthetic {

struct TwoTopicCorpus {
  embeddings::TokenSequences sentences;
  std::vector<std::string> topic_a;
  std::vector<std::string> topic_b;
};

/// Every sentence draws all its tokens from one of two disjoint vocabularies.
TwoTopicCorpus two_topic_corpus(std::size_t n_sentences, std::size_t sentence_len, std::size_t words_per_topic,
                                std::uint64_t seed);

inline constexpr const char* kTwinForward = "twin_forward";
inline constexpr const char* kTwinReverse = "twin_reverse";

struct OrderCorpus {
  corpus::Dataset train;
  corpus::Dataset valid;
};

/// Four classes. twin_forward and twin_reverse sentences come in pairs built
/// from the same bag of words: forward places the group-A run before the
/// group-B run, reverse swaps them. The other two classes are topical.
OrderCorpus order_corpus(std::size_t train_per_class, std::size_t valid_per_class, std::uint64_t seed);

/// `classes` topical classes with disjoint vocabularies plus shared filler words.
corpus::Dataset topic_corpus(std::size_t classes, std::size_t per_class, std::uint64_t seed);

}  // namespace medtext::synthetic
