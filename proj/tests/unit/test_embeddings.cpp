#include <doctest.h>

#include <fstream>

#include "support/oracles.hpp"
#include "wce/embeddings.hpp"
#include "wce/error.hpp"

using namespace wce;

namespace {

std::filesystem::path write_text(const std::string& name, const std::string& body) {
  const auto path = oracle::temp_dir("emb_" + name) / "vectors.txt";
  std::ofstream(path) << body;
  return path;
}

struct Setup {
  Vocabulary vocab{{"alpha", "beta", "gamma"}, {3, 3, 3}, 1};
  PretrainedEmbeddings pre;
  WordClassMatrix wcm;

  Setup() {
    pre.dim = 2;
    pre.vectors = {{"alpha", {1, 2}}, {"gamma", {5, 6}}, {"delta", {7, 8}}};
    wcm.values = Matrix{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.7, 0.8, 0.9}};
    wcm.terms = vocab.terms();
    wcm.column_names = {"x", "y", "z"};
  }
};

}  // namespace

TEST_SUITE("embeddings") {
  TEST_CASE("pretrained loader handles headers and spaced tokens") {
    const auto path = write_text("header", "3 2\nnew york 0.5 1.5\ncat 1 2\ndog -1 1e-2\n");
    const auto u = load_pretrained(path);
    CHECK(u.dim == 2);
    CHECK(u.vectors.size() == 3);
    REQUIRE(u.find("new york") != nullptr);
    CHECK((*u.find("new york"))[1] == 1.5);
    CHECK((*u.find("dog"))[1] == doctest::Approx(0.01));

    const std::unordered_set<std::string> keep = {"cat"};
    CHECK(load_pretrained(path, &keep).vectors.size() == 1);
  }

  TEST_CASE("pretrained loader errors carry line numbers") {
    const auto ragged = write_text("ragged", "cat 1 2 3\ndog 1 2\n");
    try {
      load_pretrained(ragged);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_pretrained(write_text("bad", "cat 1 x2\n")), Error);
    CHECK_THROWS_AS(load_pretrained(write_text("long", "cat 1 2\ndog 1 2 3\n")), Error);
    const std::unordered_set<std::string> none = {"zzz"};
    try {
      load_pretrained(write_text("none", "cat 1 2\n"), &none);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
    CHECK_THROWS_AS(load_pretrained("/nonexistent/vectors.txt"), Error);
  }

  TEST_CASE("pretrained+wce layout and zero spans") {
    Setup s;
    const std::vector<std::string> extra = {"delta", "omega"};
    EmbeddingOptions opts;
    opts.variant = Variant::PretrainedWce;
    const auto e = build_embedding_matrix(s.vocab, extra, &s.pre, &s.wcm, opts);
    CHECK(e.q == 2);
    CHECK(e.r == 3);
    CHECK(e.rows() == 4);  // omega has no pretrained vector
    CHECK(e.training_rows == 3);
    CHECK(e.terms[3] == "delta");
    CHECK_FALSE(e.leading_trainable);
    CHECK_FALSE(e.trailing_trainable);
    CHECK(e.values(0, 0) == 1);
    CHECK(e.values(0, 2) == 0.1);
    // beta lacks a pretrained vector: zero leading span, WCE present
    CHECK(e.has_pretrained[1] == 0);
    CHECK(e.values(1, 0) == 0);
    CHECK(e.values(1, 3) == 0.5);
    // delta is out of the training vocabulary: pretrained only
    CHECK(e.has_pretrained[3] == 1);
    CHECK(e.has_wce[3] == 0);
    CHECK(e.values(3, 4) == 0);
    CHECK(e.trailing_names == s.wcm.column_names);
    e.validate();
  }

  TEST_CASE("other variants") {
    Setup s;
    EmbeddingOptions opts;
    opts.variant = Variant::Pretrained;
    const auto p = build_embedding_matrix(s.vocab, {}, &s.pre, nullptr, opts);
    CHECK(p.dims() == 2);
    CHECK(p.r == 0);

    opts.variant = Variant::Random;
    opts.random_dim = 7;
    const auto r = build_embedding_matrix(s.vocab, {}, nullptr, nullptr, opts);
    CHECK(r.q == 7);
    CHECK(r.leading_trainable);
    for (const double x : r.values.data()) CHECK(std::abs(x) <= opts.random_scale);
    const auto r2 = build_embedding_matrix(s.vocab, {}, nullptr, nullptr, opts);
    CHECK(r.values == r2.values);

    opts.variant = Variant::PretrainedRandom;
    const auto pr = build_embedding_matrix(s.vocab, {}, &s.pre, &s.wcm, opts);
    CHECK(pr.r == 3);
    CHECK(pr.trailing_kind == SpanKind::Random);
    CHECK(pr.trailing_trainable);

    opts.variant = Variant::Wce;
    const auto w = build_embedding_matrix(s.vocab, {}, nullptr, &s.wcm, opts);
    CHECK(w.q == 0);
    CHECK(w.values == s.wcm.values);

    opts.variant = Variant::PretrainedWce;
    opts.trainable = true;
    const auto t = build_embedding_matrix(s.vocab, {}, &s.pre, &s.wcm, opts);
    CHECK(t.leading_trainable);
    CHECK(t.trailing_trainable);

    CHECK(parse_variant("pretrained+wce") == Variant::PretrainedWce);
    CHECK_THROWS_AS(parse_variant("glove"), Error);
  }

  TEST_CASE("missing inputs and misaligned word-class matrix") {
    Setup s;
    EmbeddingOptions opts;
    opts.variant = Variant::PretrainedWce;
    CHECK_THROWS_AS(build_embedding_matrix(s.vocab, {}, nullptr, &s.wcm, opts), Error);
    CHECK_THROWS_AS(build_embedding_matrix(s.vocab, {}, &s.pre, nullptr, opts), Error);
    auto bad = s.wcm;
    bad.terms = {"alpha", "gamma", "beta"};
    CHECK_THROWS_AS(build_embedding_matrix(s.vocab, {}, &s.pre, &bad, opts), Error);
    bad.terms.clear();
    bad.values = Matrix(2, 3);
    try {
      build_embedding_matrix(s.vocab, {}, &s.pre, &bad, opts);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Dimension);
    }
  }

  TEST_CASE("project_documents matches the brute-force product") {
    Setup s;
    EmbeddingOptions opts;
    const auto e = build_embedding_matrix(s.vocab, std::vector<std::string>{"delta"}, &s.pre, &s.wcm, opts);
    oracle::Random rng(3);
    const auto x = oracle::random_counts(rng, 6, 3, 0.5);
    const auto dense_e = oracle::to_nested(e.values);
    oracle::Dense expected = oracle::zeros(6, 5);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t j = 0; j < 5; ++j) expected[i][j] += x[i][t] * dense_e[t][j];
    CHECK(oracle::max_diff(expected, project_documents(oracle::sparse(x), e)) < 1e-12);
    CHECK_THROWS_AS(project_documents(oracle::sparse(oracle::zeros(2, 4)), e), Error);
  }

  TEST_CASE("sequences use extra rows and an unknown id") {
    Setup s;
    const auto e = build_embedding_matrix(s.vocab, std::vector<std::string>{"delta"}, &s.pre, &s.wcm,
                                          EmbeddingOptions{});
    const std::vector<TokenizedDocument> docs = {{"d", {"gamma", "delta", "nope"}, {}}};
    const auto seqs = sequences_for(docs, e);
    CHECK(seqs[0] == Sequence{2, 3, 4});
  }

  TEST_CASE("save, load and text export") {
    Setup s;
    const auto e = build_embedding_matrix(s.vocab, std::vector<std::string>{"delta"}, &s.pre, &s.wcm,
                                          EmbeddingOptions{});
    const auto dir = oracle::temp_dir("emb_io");
    e.save(dir / "e.bin");
    const auto back = EmbeddingMatrix::load(dir / "e.bin");
    CHECK(back.values == e.values);
    CHECK(back.terms == e.terms);
    CHECK(back.has_wce == e.has_wce);
    CHECK(back.index_of("delta") == e.index_of("delta"));

    e.export_text(dir / "trailing.txt", EmbeddingMatrix::Columns::Trailing);
    const auto u = load_pretrained(dir / "trailing.txt");
    CHECK(u.dim == 3);
    CHECK((*u.find("beta"))[1] == doctest::Approx(0.5));
  }
}
