#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wce/corpus.hpp"
#include "wce/embeddings.hpp"

namespace wce {

/// Generator for labeled toy corpora with class-conditional vocabularies.
///
/// Every document has one class. Each token is drawn from the shared noise
/// vocabulary with probability noise_fraction; otherwise from its own
/// class vocabulary with probability purity, else from a random other
/// class. Within a vocabulary terms follow a Zipf law.
///
/// Pretrained vectors are unsupervised stand-ins: classes are grouped into
/// topics of classes_per_topic, and a class term's vector is its topic
/// centroid plus a weaker class direction plus per-term noise. Noise terms
/// get per-term noise only.
struct SyntheticConfig {
  std::size_t documents = 5000;
  std::size_t classes = 20;
  std::size_t terms_per_class = 80;
  std::size_t noise_terms = 400;
  double noise_fraction = 0.3;
  double purity = 0.4;
  double zipf_exponent = 1.0;
  std::size_t min_length = 10;
  std::size_t max_length = 25;
  double test_fraction = 0.3;

  std::size_t pretrained_dim = 100;
  std::size_t classes_per_topic = 2;
  double topic_scale = 1.0;
  double class_scale = 0.15;
  double term_noise = 1.0;

  /// Label-correlated tokens added to training documents only. Test
  /// documents receive them at the same rate but from a random class.
  std::size_t spurious_per_class = 0;
  double spurious_rate = 0.0;  // expected spurious tokens per token
  bool spurious_pretrained = false;

  /// Fraction of each class vocabulary that only occurs in test documents.
  double oov_fraction = 0.0;

  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<Document> train;
  std::vector<Document> test;
  PretrainedEmbeddings pretrained;
  std::vector<std::string> oov_terms;  // held-out class terms, sorted
};

SyntheticCorpus make_synthetic(const SyntheticConfig& config);

/// Writes train.jsonl, test.jsonl and pretrained.txt into dir.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

/// Alphabetic term name; digits would be masked by the tokenizer.
std::string synthetic_word(char prefix, std::size_t group, std::size_t index);

}  // namespace wce
