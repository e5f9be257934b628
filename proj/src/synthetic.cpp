#include "wce/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "wce/error.hpp"
#include "wce/rng.hpp"

namespace wce {

namespace {

std::string letters(std::size_t value, std::size_t width) {
  std::string s(width, 'a');
  for (std::size_t i = width; i-- > 0;) {
    s[i] = static_cast<char>('a' + value % 26);
    value /= 26;
  }
  return s;
}

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cumulative_(n) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
      cumulative_[k] = total;
    }
    for (auto& c : cumulative_) c /= total;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

void validate(const SyntheticConfig& c) {
  if (c.documents < 2 || c.classes < 2) fail(ErrorKind::Config, "need >= 2 documents and classes");
  if (c.terms_per_class == 0) fail(ErrorKind::Config, "terms_per_class must be > 0");
  if (c.min_length == 0 || c.max_length < c.min_length) {
    fail(ErrorKind::Config, "document length range is empty");
  }
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(c.noise_fraction) || !unit(c.purity) || !unit(c.oov_fraction) ||
      !(c.test_fraction > 0.0 && c.test_fraction < 1.0) || c.spurious_rate < 0.0) {
    fail(ErrorKind::Config, "synthetic fractions out of range");
  }
  if (c.noise_fraction > 0.0 && c.noise_terms == 0) {
    fail(ErrorKind::Config, "noise_fraction > 0 needs noise_terms > 0");
  }
  if (c.spurious_rate > 0.0 && c.spurious_per_class == 0) {
    fail(ErrorKind::Config, "spurious_rate > 0 needs spurious_per_class > 0");
  }
  if (c.classes_per_topic == 0) fail(ErrorKind::Config, "classes_per_topic must be > 0");
}

}  // namespace

std::string synthetic_word(char prefix, std::size_t group, std::size_t index) {
  return std::string(1, prefix) + letters(group, 2) + letters(index, 3);
}

SyntheticCorpus make_synthetic(const SyntheticConfig& config) {
  validate(config);
  const std::size_t m = config.classes;
  const std::size_t t = config.terms_per_class;

  Rng doc_rng(derive_seed(config.seed, 21));
  Rng vec_rng(derive_seed(config.seed, 22));
  Rng oov_rng(derive_seed(config.seed, 23));

  std::vector<std::vector<std::string>> class_terms(m);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t k = 0; k < t; ++k) class_terms[c].push_back(synthetic_word('w', c, k));
  std::vector<std::string> noise;
  for (std::size_t k = 0; k < config.noise_terms; ++k) noise.push_back(synthetic_word('n', k / 17576, k % 17576));
  std::vector<std::vector<std::string>> spurious(m);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t k = 0; k < config.spurious_per_class; ++k)
      spurious[c].push_back(synthetic_word('s', c, k));

  // Held-out (test-only) terms per class.
  std::vector<std::vector<bool>> held(m, std::vector<bool>(t, false));
  SyntheticCorpus out;
  const auto held_count = static_cast<std::size_t>(std::llround(config.oov_fraction * static_cast<double>(t)));
  for (std::size_t c = 0; c < m && held_count > 0; ++c) {
    std::vector<std::size_t> idx(t);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    oov_rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < std::min(held_count, t - 1); ++k) {
      held[c][idx[k]] = true;
      out.oov_terms.push_back(class_terms[c][idx[k]]);
    }
  }
  std::sort(out.oov_terms.begin(), out.oov_terms.end());

  const ZipfSampler class_zipf(t, config.zipf_exponent);
  const ZipfSampler noise_zipf(std::max<std::size_t>(config.noise_terms, 1), config.zipf_exponent);
  const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(config.documents)));
  const std::size_t n_train = config.documents - n_test;
  char id[32];
  for (std::size_t i = 0; i < config.documents; ++i) {
    const bool is_test = i >= n_train;
    const std::size_t c = static_cast<std::size_t>(doc_rng.below(m));
    const std::size_t len = config.min_length +
                            static_cast<std::size_t>(doc_rng.below(config.max_length - config.min_length + 1));
    std::string text;
    auto append = [&](const std::string& w) {
      if (!text.empty()) text += ' ';
      text += w;
    };
    for (std::size_t k = 0; k < len; ++k) {
      if (doc_rng.uniform() < config.noise_fraction) {
        append(noise[noise_zipf(doc_rng)]);
      } else {
        std::size_t source = c;
        if (doc_rng.uniform() >= config.purity) {
          source = static_cast<std::size_t>(doc_rng.below(m - 1));
          if (source >= c) ++source;
        }
        std::size_t term = class_zipf(doc_rng);
        while (!is_test && held[source][term]) term = class_zipf(doc_rng);
        append(class_terms[source][term]);
      }
      if (config.spurious_rate > 0.0 && doc_rng.uniform() < config.spurious_rate) {
        const std::size_t sc = is_test ? static_cast<std::size_t>(doc_rng.below(m)) : c;
        append(spurious[sc][doc_rng.below(config.spurious_per_class)]);
      }
    }
    std::snprintf(id, sizeof id, "d%06zu", i);
    Document doc{id, std::move(text), {"c" + letters(c, 2)}};
    (is_test ? out.test : out.train).push_back(std::move(doc));
  }

  // Pretrained stand-ins.
  const std::size_t q = config.pretrained_dim;
  auto& pre = out.pretrained;
  pre.dim = q;
  pre.source = "synthetic";
  if (q == 0) return out;
  const std::size_t topics = (m + config.classes_per_topic - 1) / config.classes_per_topic;
  auto gaussian = [&](double scale) {
    std::vector<double> v(q);
    for (auto& x : v) x = scale * vec_rng.normal();
    return v;
  };
  std::vector<std::vector<double>> topic(topics), direction(m);
  for (auto& v : topic) v = gaussian(config.topic_scale);
  for (auto& v : direction) v = gaussian(config.class_scale);
  for (std::size_t c = 0; c < m; ++c) {
    const auto& mu = topic[c / config.classes_per_topic];
    for (const auto& w : class_terms[c]) {
      auto v = gaussian(config.term_noise);
      for (std::size_t j = 0; j < q; ++j) v[j] += mu[j] + direction[c][j];
      pre.vectors.emplace(w, std::move(v));
    }
    if (config.spurious_pretrained) {
      for (const auto& w : spurious[c]) pre.vectors.emplace(w, gaussian(config.term_noise));
    }
  }
  for (const auto& w : noise) pre.vectors.emplace(w, gaussian(config.term_noise));
  return out;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "train.jsonl", corpus.train);
  write_jsonl(dir / "test.jsonl", corpus.test);
  save_pretrained_text(dir / "pretrained.txt", corpus.pretrained);
}

}  // namespace wce
