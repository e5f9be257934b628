#include "wce/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "wce/error.hpp"
#include "wce/rng.hpp"

namespace wce {

using nlohmann::json;

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (const unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

constexpr int kCorpusVersion = 1;

}  // namespace

const char* to_string(LabelMode mode) noexcept {
  return mode == LabelMode::SingleLabel ? "single-label" : "multilabel";
}

LabelMode parse_label_mode(std::string_view name) {
  if (name == "single-label" || name == "single") return LabelMode::SingleLabel;
  if (name == "multilabel" || name == "multi") return LabelMode::Multilabel;
  fail(ErrorKind::Config, "unknown label mode '" + std::string(name) + "'");
}

const char* to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string current;
  bool has_digit = false;
  auto flush = [&] {
    if (code_points(current) >= 2) {
      if (has_digit) {
        tokens.emplace_back(kNumberToken);
      } else if (!is_stop_word(current)) {
        tokens.push_back(current);
      }
    }
    current.clear();
    has_digit = false;
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      if (c >= 'A' && c <= 'Z') {
        current.push_back(static_cast<char>(c - 'A' + 'a'));
      } else {
        if (c >= '0' && c <= '9') has_digit = true;
        current.push_back(ch);
      }
    } else if (!current.empty()) {
      flush();
    }
  }
  if (!current.empty()) flush();
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> document_frequency,
                       std::size_t min_df)
    : terms_(std::move(terms)), df_(std::move(document_frequency)), min_df_(min_df) {
  if (terms_.size() != df_.size()) fail(ErrorKind::Data, "vocabulary terms/df size mismatch");
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) {
      fail(ErrorKind::Data, "vocabulary terms must be unique and sorted");
    }
    index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const TokenList> docs, std::size_t min_df) {
  if (min_df < 1) fail(ErrorKind::Config, "min_df must be >= 1");
  std::map<std::string, std::size_t> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& tok : doc) {
      if (seen.insert(tok).second) ++df[tok];
    }
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> freqs;
  for (const auto& [term, count] : df) {
    if (count >= min_df) {
      terms.push_back(term);
      freqs.push_back(count);
    }
  }
  if (terms.empty()) {
    fail(ErrorKind::Config, "empty vocabulary: no term reaches min_df=" + std::to_string(min_df));
  }
  return Vocabulary(std::move(terms), std::move(freqs), min_df);
}

LabelIndex::LabelIndex(std::vector<std::string> names, LabelMode mode)
    : names_(std::move(names)), mode_(mode) {
  if (names_.size() < 2) fail(ErrorKind::Data, "need at least two classes, got " +
                                                   std::to_string(names_.size()));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      fail(ErrorKind::Data, "duplicate class name '" + names_[i] + "'");
    }
  }
}

LabelIndex LabelIndex::from_documents(std::span<const TokenizedDocument> docs, LabelMode mode) {
  std::set<std::string> names;
  for (const auto& d : docs) names.insert(d.labels.begin(), d.labels.end());
  return LabelIndex(std::vector<std::string>(names.begin(), names.end()), mode);
}

std::optional<std::size_t> LabelIndex::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EncodedSplit encode(std::span<const TokenizedDocument> docs, const Vocabulary& vocab,
                    const LabelIndex& labels) {
  EncodedSplit out;
  out.sequences.reserve(docs.size());
  std::vector<Triplet> counts;
  std::vector<Triplet> ys;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Sequence seq;
    seq.reserve(docs[d].tokens.size());
    for (const auto& tok : docs[d].tokens) {
      const auto id = vocab.index_of(tok);
      if (id) {
        seq.push_back(*id);
        counts.push_back({d, *id, 1.0});
      } else {
        seq.push_back(vocab.unk_id());
      }
    }
    out.sequences.push_back(std::move(seq));
    for (const auto& name : docs[d].labels) {
      const auto c = labels.index_of(name);
      if (!c) {
        fail(ErrorKind::Data, "document '" + docs[d].id + "' has unknown label '" + name + "'");
      }
      ys.push_back({d, *c, 1.0});
    }
  }
  out.counts = SparseMatrix::from_triplets(docs.size(), vocab.size(), std::move(counts));
  // Duplicate labels on one document collapse to a single 1.
  out.labels = SparseMatrix::from_triplets(docs.size(), labels.size(), std::move(ys))
                   .map_values([](std::size_t, std::size_t, double) { return 1.0; });
  return out;
}

std::vector<std::size_t> validation_indices(std::size_t n, const CorpusOptions& options) {
  if (options.validation_fraction <= 0.0 || options.validation_fraction >= 1.0) {
    fail(ErrorKind::Config, "validation fraction must lie in (0,1)");
  }
  std::size_t count = static_cast<std::size_t>(std::floor(options.validation_fraction * n));
  count = std::min(count, options.validation_cap);
  if (count == 0 && n >= 2) count = 1;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(options.seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

LabeledCorpus::LabeledCorpus(std::vector<TokenizedDocument> train,
                             std::vector<TokenizedDocument> validation,
                             std::vector<TokenizedDocument> test, Vocabulary vocab,
                             LabelIndex labels, CorpusOptions options)
    : train_(std::move(train)),
      validation_(std::move(validation)),
      test_(std::move(test)),
      vocab_(std::move(vocab)),
      labels_(std::move(labels)),
      options_(std::move(options)) {
  options_.mode = labels_.mode();
  enc_train_ = encode(train_, vocab_, labels_);
  enc_validation_ = encode(validation_, vocab_, labels_);
  enc_test_ = encode(test_, vocab_, labels_);
}

LabeledCorpus LabeledCorpus::build(std::span<const Document> training,
                                   std::span<const Document> test, const CorpusOptions& options) {
  if (training.empty()) fail(ErrorKind::Config, "training split is empty");

  LabelMode mode = LabelMode::SingleLabel;
  if (options.mode) {
    mode = *options.mode;
  } else {
    for (const auto& d : training)
      if (d.labels.size() != 1) mode = LabelMode::Multilabel;
  }
  for (const auto& d : training) {
    if (d.labels.empty()) fail(ErrorKind::Data, "training document '" + d.id + "' has no labels");
    if (mode == LabelMode::SingleLabel && d.labels.size() != 1) {
      fail(ErrorKind::Data, "training document '" + d.id +
                                "' has multiple labels in single-label mode");
    }
  }

  auto tokenize_all = [](std::span<const Document> docs) {
    std::vector<TokenizedDocument> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back({d.id, tokenize(d.text), d.labels});
    return out;
  };
  std::vector<TokenizedDocument> all_train = tokenize_all(training);
  std::vector<TokenizedDocument> test_docs = tokenize_all(test);

  const auto val_idx = validation_indices(all_train.size(), options);
  std::vector<TokenizedDocument> train_docs, val_docs;
  std::size_t next = 0;
  for (std::size_t i = 0; i < all_train.size(); ++i) {
    if (next < val_idx.size() && val_idx[next] == i) {
      val_docs.push_back(std::move(all_train[i]));
      ++next;
    } else {
      train_docs.push_back(std::move(all_train[i]));
    }
  }

  std::vector<TokenList> token_lists;
  token_lists.reserve(train_docs.size());
  for (const auto& d : train_docs) token_lists.push_back(d.tokens);
  Vocabulary vocab = build_vocabulary(token_lists, options.min_df);

  std::vector<TokenizedDocument> labelled = train_docs;
  labelled.insert(labelled.end(), val_docs.begin(), val_docs.end());
  LabelIndex labels = LabelIndex::from_documents(labelled, mode);

  return LabeledCorpus(std::move(train_docs), std::move(val_docs), std::move(test_docs),
                       std::move(vocab), std::move(labels), options);
}

const std::vector<TokenizedDocument>& LabeledCorpus::split(Split s) const {
  switch (s) {
    case Split::Train: return train_;
    case Split::Validation: return validation_;
    case Split::Test: return test_;
  }
  return train_;
}

const EncodedSplit& LabeledCorpus::encoded(Split s) const {
  switch (s) {
    case Split::Train: return enc_train_;
    case Split::Validation: return enc_validation_;
    case Split::Test: return enc_test_;
  }
  return enc_train_;
}

std::vector<std::string> LabeledCorpus::out_of_vocabulary_terms() const {
  std::set<std::string> oov;
  for (const auto* docs : {&train_, &validation_, &test_})
    for (const auto& d : *docs)
      for (const auto& t : d.tokens)
        if (!vocab_.index_of(t)) oov.insert(t);
  return {oov.begin(), oov.end()};
}

namespace {

void write_split(const std::filesystem::path& path, const std::vector<TokenizedDocument>& docs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& d : docs) {
    json j;
    j["id"] = d.id;
    j["tokens"] = d.tokens;
    j["labels"] = d.labels;
    out << j.dump() << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<TokenizedDocument> read_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::vector<TokenizedDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      docs.push_back({j.at("id").get<std::string>(), j.at("tokens").get<TokenList>(),
                      j.at("labels").get<std::vector<std::string>>()});
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace

void LabeledCorpus::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta;
  meta["format"] = "wce-corpus";
  meta["version"] = kCorpusVersion;
  meta["mode"] = to_string(labels_.mode());
  meta["min_df"] = options_.min_df;
  meta["seed"] = options_.seed;
  meta["validation_fraction"] = options_.validation_fraction;
  meta["validation_cap"] = options_.validation_cap;
  meta["classes"] = labels_.names();
  meta["documents"] = {{"train", train_.size()},
                       {"validation", validation_.size()},
                       {"test", test_.size()}};
  meta["vocabulary_size"] = vocab_.size();
  {
    std::ofstream out(dir / "meta.json", std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "vocab.tsv", std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "vocab.tsv").string());
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      out << vocab_.term(i) << '\t' << vocab_.document_frequency(i) << '\n';
  }
  write_split(dir / "train.jsonl", train_);
  write_split(dir / "validation.jsonl", validation_);
  write_split(dir / "test.jsonl", test_);
}

LabeledCorpus LabeledCorpus::load(const std::filesystem::path& dir) {
  json meta;
  {
    std::ifstream in(dir / "meta.json", std::ios::binary);
    if (!in) fail(ErrorKind::Io, "not a corpus directory (missing meta.json): " + dir.string());
    try {
      meta = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, (dir / "meta.json").string() + ": " + e.what());
    }
  }
  CorpusOptions options;
  LabelIndex labels;
  try {
    if (meta.at("format") != "wce-corpus" || meta.at("version") != kCorpusVersion) {
      fail(ErrorKind::Parse, dir.string() + ": unsupported corpus format");
    }
    options.min_df = meta.at("min_df").get<std::size_t>();
    options.seed = meta.at("seed").get<std::uint64_t>();
    options.validation_fraction = meta.at("validation_fraction").get<double>();
    options.validation_cap = meta.at("validation_cap").get<std::size_t>();
    const LabelMode mode = parse_label_mode(meta.at("mode").get<std::string>());
    options.mode = mode;
    labels = LabelIndex(meta.at("classes").get<std::vector<std::string>>(), mode);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / "meta.json").string() + ": " + e.what());
  }

  std::vector<std::string> terms;
  std::vector<std::size_t> df;
  {
    std::ifstream in(dir / "vocab.tsv", std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read " + (dir / "vocab.tsv").string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        fail(ErrorKind::Parse, "vocab.tsv:" + std::to_string(lineno) + ": expected term<TAB>df");
      }
      terms.push_back(line.substr(0, tab));
      try {
        df.push_back(std::stoull(line.substr(tab + 1)));
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, "vocab.tsv:" + std::to_string(lineno) + ": bad document frequency");
      }
    }
  }
  return LabeledCorpus(read_split(dir / "train.jsonl"), read_split(dir / "validation.jsonl"),
                       read_split(dir / "test.jsonl"),
                       Vocabulary(std::move(terms), std::move(df), options.min_df),
                       std::move(labels), options);
}

std::vector<Document> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Document d;
      d.id = j.at("id").get<std::string>();
      d.text = j.at("text").get<std::string>();
      if (j.contains("labels")) d.labels = j.at("labels").get<std::vector<std::string>>();
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

void write_jsonl(const std::filesystem::path& path, std::span<const Document> docs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& d : docs) {
    json j;
    j["id"] = d.id;
    j["text"] = d.text;
    j["labels"] = d.labels;
    out << j.dump() << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void apply_split_manifest(std::span<const Document> all, const std::filesystem::path& manifest,
                          std::vector<Document>& train, std::vector<Document>& test) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + manifest.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, manifest.string() + ": " + e.what());
  }
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : all) {
    if (!by_id.emplace(d.id, &d).second) fail(ErrorKind::Data, "duplicate document id '" + d.id + "'");
  }
  auto pick = [&](const char* key, std::vector<Document>& out) {
    if (!j.contains(key)) fail(ErrorKind::Parse, manifest.string() + ": missing \"" + key + "\"");
    for (const auto& id : j.at(key)) {
      const auto it = by_id.find(id.get<std::string>());
      if (it == by_id.end()) {
        fail(ErrorKind::Data, "manifest references unknown document '" + id.get<std::string>() + "'");
      }
      out.push_back(*it->second);
    }
  };
  pick("train", train);
  pick("test", test);
}

Matrix dense_labels(const SparseMatrix& labels) { return labels.to_dense(); }

}  // namespace wce
