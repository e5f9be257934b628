#include "wce/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "serialization.hpp"
#include "text_format.hpp"
#include "wce/error.hpp"
#include "wce/rng.hpp"

namespace wce {

namespace {

constexpr std::string_view kEmbMagic = "WCEE";
constexpr std::uint32_t kEmbVersion = 1;

struct Field {
  std::size_t begin;
  std::string_view text;
};

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({b, line.substr(b, i - b)});
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_unsigned(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string_view trim_right(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string parse_error(const std::filesystem::path& path, std::size_t lineno,
                        const std::string& what) {
  return path.string() + ":" + std::to_string(lineno) + ": " + what;
}

}  // namespace

const std::vector<double>* PretrainedEmbeddings::find(std::string_view term) const {
  const auto it = vectors.find(std::string(term));
  return it == vectors.end() ? nullptr : &it->second;
}

PretrainedEmbeddings load_pretrained(const std::filesystem::path& path,
                                     const std::unordered_set<std::string>* keep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  PretrainedEmbeddings out;
  out.source = path.filename().string();
  std::string line;
  std::size_t lineno = 0;
  std::size_t q = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      if (fields.size() == 2 && is_unsigned(fields[0].text) && is_unsigned(fields[1].text)) {
        q = std::stoull(std::string(fields[1].text));
        if (q == 0) fail(ErrorKind::Parse, parse_error(path, lineno, "header declares dimension 0"));
        continue;
      }
      std::size_t numeric = 0;
      while (numeric < fields.size() - 1 &&
             parse_double(fields[fields.size() - 1 - numeric].text)) {
        ++numeric;
      }
      if (numeric == 0) fail(ErrorKind::Parse, parse_error(path, lineno, "no vector values"));
      q = numeric;
    }
    if (fields.size() < q + 1) {
      fail(ErrorKind::Parse, parse_error(path, lineno, "expected " + std::to_string(q) +
                                                           " values, found " +
                                                           std::to_string(fields.size() - 1)));
    }
    const std::size_t first_value = fields.size() - q;
    std::vector<double> vec(q);
    for (std::size_t k = 0; k < q; ++k) {
      const auto v = parse_double(fields[first_value + k].text);
      if (!v) {
        fail(ErrorKind::Parse, parse_error(path, lineno, "bad number '" +
                                                             std::string(fields[first_value + k].text) + "'"));
      }
      vec[k] = *v;
    }
    if (first_value > 1) {
      bool all_numeric = true;
      for (std::size_t k = 1; k < first_value; ++k)
        if (!parse_double(fields[k].text)) all_numeric = false;
      if (all_numeric) {
        fail(ErrorKind::Parse, parse_error(path, lineno, "inconsistent dimension: expected " +
                                                             std::to_string(q) + " values, found " +
                                                             std::to_string(fields.size() - 1)));
      }
    }
    const std::string_view token = trim_right(
        std::string_view(line).substr(fields[0].begin, fields[first_value].begin - fields[0].begin));
    std::string key(token);
    if (keep && !keep->contains(key)) continue;
    out.vectors.insert_or_assign(std::move(key), std::move(vec));
  }
  out.dim = q;
  if (out.vectors.empty()) {
    fail(ErrorKind::Config, path.string() + ": no embedding matches the vocabulary");
  }
  return out;
}

void save_pretrained_text(const std::filesystem::path& path, const PretrainedEmbeddings& u) {
  std::vector<std::string> keys;
  keys.reserve(u.vectors.size());
  for (const auto& kv : u.vectors) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& k : keys) {
    out << k;
    for (const double x : u.vectors.at(k)) out << ' ' << text::format_g6(x);
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::Random: return "random";
    case Variant::Pretrained: return "pretrained";
    case Variant::PretrainedRandom: return "pretrained+random";
    case Variant::PretrainedWce: return "pretrained+wce";
    case Variant::Wce: return "wce";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (const auto v : {Variant::Random, Variant::Pretrained, Variant::PretrainedRandom,
                       Variant::PretrainedWce, Variant::Wce}) {
    if (name == to_string(v)) return v;
  }
  fail(ErrorKind::Config, "unknown variant '" + std::string(name) +
                              "' (random|pretrained|pretrained+random|pretrained+wce|wce)");
}

bool variant_uses_pretrained(Variant v) noexcept {
  return v == Variant::Pretrained || v == Variant::PretrainedRandom || v == Variant::PretrainedWce;
}

bool variant_uses_wce(Variant v) noexcept {
  return v == Variant::PretrainedWce || v == Variant::Wce;
}

std::optional<std::uint32_t> EmbeddingMatrix::index_of(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingMatrix::rebuild_index() {
  index_.clear();
  index_.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!index_.emplace(terms[i], static_cast<std::uint32_t>(i)).second) {
      fail(ErrorKind::Data, "duplicate embedding term '" + terms[i] + "'");
    }
  }
}

void EmbeddingMatrix::validate() const {
  if (values.cols() != q + r) fail(ErrorKind::Dimension, "embedding width != q + r");
  if (terms.size() != values.rows() || has_pretrained.size() != values.rows() ||
      has_wce.size() != values.rows() || training_rows > values.rows()) {
    fail(ErrorKind::Data, "embedding row annotations do not match the matrix");
  }
  for (std::size_t i = 0; i < values.rows(); ++i) {
    const auto row = values.row(i);
    if (!has_pretrained[i]) {
      for (std::size_t k = 0; k < q; ++k)
        if (row[k] != 0.0) fail(ErrorKind::Data, "row '" + terms[i] + "' has a stray pretrained value");
    }
    if (!has_wce[i]) {
      for (std::size_t k = q; k < q + r; ++k)
        if (row[k] != 0.0) fail(ErrorKind::Data, "row '" + terms[i] + "' has a stray WCE value");
    }
  }
}

namespace detail {

void write_embedding(io::BinaryWriter& w, const EmbeddingMatrix& e) {
  w.u8(static_cast<std::uint8_t>(e.variant));
  w.u64(e.q);
  w.u64(e.r);
  w.u8(static_cast<std::uint8_t>(e.leading_kind));
  w.u8(static_cast<std::uint8_t>(e.trailing_kind));
  w.u8(e.leading_trainable ? 1 : 0);
  w.u8(e.trailing_trainable ? 1 : 0);
  w.u64(e.training_rows);
  w.strings(e.terms);
  w.bytes(e.has_pretrained);
  w.bytes(e.has_wce);
  w.strings(e.trailing_names);
  w.matrix(e.values);
}

EmbeddingMatrix read_embedding(io::BinaryReader& rd) {
  EmbeddingMatrix e;
  const auto variant = rd.u8();
  if (variant > static_cast<std::uint8_t>(Variant::Wce)) fail(ErrorKind::Parse, "bad variant tag");
  e.variant = static_cast<Variant>(variant);
  e.q = rd.u64();
  e.r = rd.u64();
  const auto lk = rd.u8();
  const auto tk = rd.u8();
  if (lk > 3 || tk > 3) fail(ErrorKind::Parse, "bad span tag");
  e.leading_kind = static_cast<SpanKind>(lk);
  e.trailing_kind = static_cast<SpanKind>(tk);
  e.leading_trainable = rd.u8() != 0;
  e.trailing_trainable = rd.u8() != 0;
  e.training_rows = rd.u64();
  e.terms = rd.strings();
  e.has_pretrained = rd.bytes();
  e.has_wce = rd.bytes();
  e.trailing_names = rd.strings();
  e.values = rd.matrix();
  e.validate();
  e.rebuild_index();
  return e;
}

}  // namespace detail

void EmbeddingMatrix::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path, kEmbMagic, kEmbVersion);
  detail::write_embedding(w, *this);
  w.close();
}

EmbeddingMatrix EmbeddingMatrix::load(const std::filesystem::path& path) {
  io::BinaryReader rd(path, kEmbMagic, kEmbVersion);
  EmbeddingMatrix e = detail::read_embedding(rd);
  rd.expect_end();
  return e;
}

void EmbeddingMatrix::export_text(const std::filesystem::path& path, Columns which) const {
  std::size_t first = 0;
  std::size_t count = q + r;
  if (which == Columns::Leading) count = q;
  if (which == Columns::Trailing) {
    first = q;
    count = r;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (std::size_t i = 0; i < rows(); ++i) {
    out << terms[i];
    const auto row = values.row(i).subspan(first, count);
    for (const double x : row) out << ' ' << text::format_g6(x);
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

EmbeddingMatrix build_embedding_matrix(const Vocabulary& vocab,
                                       std::span<const std::string> extra_terms,
                                       const PretrainedEmbeddings* pretrained,
                                       const WordClassMatrix* wce, const EmbeddingOptions& options) {
  const Variant variant = options.variant;
  if (variant_uses_pretrained(variant) && pretrained == nullptr) {
    fail(ErrorKind::Config, std::string("variant ") + to_string(variant) +
                                " requires pretrained embeddings");
  }
  if (variant_uses_wce(variant) && wce == nullptr) {
    fail(ErrorKind::Config, std::string("variant ") + to_string(variant) +
                                " requires a word-class matrix");
  }
  if (wce != nullptr && variant_uses_wce(variant)) {
    if (wce->rows() != vocab.size()) {
      fail(ErrorKind::Dimension, "word-class matrix has " + std::to_string(wce->rows()) +
                                     " rows, vocabulary has " + std::to_string(vocab.size()));
    }
    if (!wce->terms.empty() && wce->terms != vocab.terms()) {
      fail(ErrorKind::Data, "word-class matrix rows do not follow the corpus vocabulary");
    }
  }
  if (options.random_scale < 0.0) fail(ErrorKind::Config, "random scale must be >= 0");

  EmbeddingMatrix e;
  e.variant = variant;
  e.training_rows = vocab.size();
  e.terms = vocab.terms();
  if (variant_uses_pretrained(variant)) {
    for (const auto& t : extra_terms) {
      if (!vocab.index_of(t) && pretrained->find(t)) e.terms.push_back(t);
    }
    std::sort(e.terms.begin() + static_cast<std::ptrdiff_t>(e.training_rows), e.terms.end());
    e.terms.erase(std::unique(e.terms.begin() + static_cast<std::ptrdiff_t>(e.training_rows),
                              e.terms.end()),
                  e.terms.end());
  }

  switch (variant) {
    case Variant::Random:
      if (options.random_dim == 0) fail(ErrorKind::Config, "random dimension must be > 0");
      e.q = options.random_dim;
      e.leading_kind = SpanKind::Random;
      break;
    case Variant::Pretrained:
      e.q = pretrained->dim;
      e.leading_kind = SpanKind::Pretrained;
      break;
    case Variant::PretrainedRandom:
      e.q = pretrained->dim;
      e.r = wce ? wce->dims() : options.random_dim;
      if (e.r == 0) fail(ErrorKind::Config, "random dimension must be > 0");
      e.leading_kind = SpanKind::Pretrained;
      e.trailing_kind = SpanKind::Random;
      break;
    case Variant::PretrainedWce:
      e.q = pretrained->dim;
      e.r = wce->dims();
      e.leading_kind = SpanKind::Pretrained;
      e.trailing_kind = SpanKind::Supervised;
      break;
    case Variant::Wce:
      e.r = wce->dims();
      e.trailing_kind = SpanKind::Supervised;
      break;
  }
  const bool random_init = variant == Variant::Random || variant == Variant::PretrainedRandom;
  e.leading_trainable = e.q > 0 && (options.trainable || random_init);
  e.trailing_trainable = e.r > 0 && (options.trainable || random_init);
  if (e.trailing_kind == SpanKind::Supervised) {
    e.trailing_names = wce->column_names;
  }

  const std::size_t n = e.terms.size();
  e.values = Matrix(n, e.q + e.r);
  e.has_pretrained.assign(n, 0);
  e.has_wce.assign(n, 0);
  Rng rng(derive_seed(options.seed, 0x454d42));
  const double s = options.random_scale;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = e.values.row(i);
    const bool in_vocab = i < e.training_rows;
    if (e.leading_kind == SpanKind::Pretrained) {
      if (const auto* u = pretrained->find(e.terms[i])) {
        std::copy(u->begin(), u->end(), row.begin());
        e.has_pretrained[i] = 1;
      }
    } else if (e.leading_kind == SpanKind::Random) {
      for (std::size_t k = 0; k < e.q; ++k) row[k] = rng.uniform(-s, s);
      e.has_pretrained[i] = 1;
    }
    if (!in_vocab) continue;  // out-of-vocabulary rows keep a zero trailing span
    if (e.trailing_kind == SpanKind::Supervised) {
      const auto src = wce->values.row(i);
      std::copy(src.begin(), src.end(), row.begin() + static_cast<std::ptrdiff_t>(e.q));
      e.has_wce[i] = 1;
    } else if (e.trailing_kind == SpanKind::Random) {
      for (std::size_t k = 0; k < e.r; ++k) row[e.q + k] = rng.uniform(-s, s);
      e.has_wce[i] = 1;
    }
  }
  e.rebuild_index();
  return e;
}

Matrix project_documents(const SparseMatrix& x, const EmbeddingMatrix& e) {
  if (x.cols() != e.training_rows) {
    fail(ErrorKind::Dimension, "project_documents: X has " + std::to_string(x.cols()) +
                                   " columns, embedding has " + std::to_string(e.training_rows) +
                                   " training rows");
  }
  Matrix out(x.rows(), e.dims());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto view = x.row(i);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < view.indices.size(); ++k) {
      const auto src = e.values.row(view.indices[k]);
      const double v = view.values[k];
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

std::vector<Sequence> sequences_for(std::span<const TokenizedDocument> docs,
                                    const EmbeddingMatrix& e) {
  const auto unk = static_cast<std::uint32_t>(e.rows());
  std::vector<Sequence> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    Sequence seq;
    seq.reserve(d.tokens.size());
    for (const auto& t : d.tokens) seq.push_back(e.index_of(t).value_or(unk));
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace wce
