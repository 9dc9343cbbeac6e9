#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mindmap/vectorizer.hpp"
#include "support.hpp"

using namespace mindmap;

namespace {

std::vector<CleanDocument> make_docs(const std::vector<std::vector<std::string>>& tokens) {
  std::vector<CleanDocument> docs;
  for (std::size_t i = 0; i < tokens.size(); ++i) docs.push_back({"d" + std::to_string(i), tokens[i]});
  return docs;
}

}  // namespace

TEST_CASE("build_vocabulary thresholds") {
  auto docs = make_docs({{"cat", "dog"}, {"cat"}});
  auto v = build_vocabulary(docs, 1, 1.0);
  CHECK(v.terms == std::vector<std::string>{"cat", "dog"});
  CHECK(v.document_frequency("cat") == 2);
  CHECK(v.document_frequency("dog") == 1);
  CHECK(v.document_frequency("emu") == 0);
  CHECK(*v.find("dog") == 1);
  CHECK_FALSE(v.find("emu").has_value());
  CHECK(build_vocabulary(docs, 2, 1.0).terms == std::vector<std::string>{"cat"});

  std::vector<std::vector<std::string>> ten(10, {"talk"});
  ten[0].push_back("rare");
  ten[1].push_back("rare");
  auto v10 = build_vocabulary(make_docs(ten), 1, 0.5);
  CHECK(v10.terms == std::vector<std::string>{"rare"});
}

TEST_CASE("build_vocabulary errors") {
  auto docs = make_docs({{"cat"}, {"cat"}});
  CHECK(mmtest::error_kind([&] { build_vocabulary(docs, 0, 1.0); }) == ErrorKind::DomainError);
  CHECK(mmtest::error_kind([&] { build_vocabulary(docs, 1, 0.0); }) == ErrorKind::DomainError);
  CHECK(mmtest::error_kind([&] { build_vocabulary(docs, 1, 1.5); }) == ErrorKind::DomainError);
  CHECK(mmtest::error_kind([&] { build_vocabulary(docs, 3, 1.0); }) == ErrorKind::EmptyVocabulary);
  CHECK(mmtest::error_kind([] { build_vocabulary({}, 1, 1.0); }) == ErrorKind::EmptyVocabulary);
}

TEST_CASE("idf values") {
  CHECK(idf(5, 5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(idf(1, 2) == doctest::Approx(1.405465108108164).epsilon(1e-12));
  CHECK(idf(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mmtest::error_kind([] { idf(0, 3); }) == ErrorKind::DomainError);
  CHECK(mmtest::error_kind([] { idf(4, 3); }) == ErrorKind::DomainError);
}

TEST_CASE("tfidf_rows examples") {
  SUBCASE("single term collapses to 1") {
    auto docs = make_docs({{"cat", "cat"}});
    auto m = tfidf_rows(docs, build_vocabulary(docs, 1, 1.0));
    REQUIRE(m.row("d0")->entries.size() == 1);
    CHECK(m.row("d0")->entries[0].second == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two documents") {
    auto docs = make_docs({{"cat", "dog"}, {"cat"}});
    auto m = tfidf_rows(docs, build_vocabulary(docs, 1, 1.0));
    const auto* d1 = m.row("d0");
    CHECK(d1->weight(0) == doctest::Approx(0.579739).epsilon(1e-6));
    CHECK(d1->weight(1) == doctest::Approx(0.814801).epsilon(1e-6));
    CHECK(m.row("d1")->weight(0) == doctest::Approx(1.0));
  }
  SUBCASE("empty document is the zero row") {
    auto docs = make_docs({{"cat"}, {}});
    auto m = tfidf_rows(docs, build_vocabulary(docs, 1, 1.0));
    CHECK(m.row("d1")->empty());
    CHECK(m.row("d1")->norm() == 0.0);
  }
  SUBCASE("out-of-vocabulary tokens are ignored") {
    auto docs = make_docs({{"cat", "dog"}, {"cat", "emu"}});
    auto m = tfidf_rows(docs, build_vocabulary(docs, 2, 1.0));
    CHECK(m.row("d1")->entries.size() == 1);
  }
}

TEST_CASE("oracle equivalence, norms and permutation invariance on random corpora") {
  const std::vector<std::string> pool = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<std::vector<std::string>> tokens(n);
    for (auto& doc : tokens) {
      const auto len = rng() % 12;
      for (std::size_t i = 0; i < len; ++i) doc.push_back(pool[rng() % pool.size()]);
    }
    const auto docs = make_docs(tokens);
    Vocabulary vocab;
    try {
      vocab = build_vocabulary(docs, 1, 1.0);
    } catch (const Error&) {
      continue;  // all documents empty
    }
    const auto model = tfidf_rows(docs, vocab);
    const auto oracle = mmtest::brute_tfidf(tokens, vocab.terms);
    for (std::size_t d = 0; d < n; ++d) {
      const auto* row = model.row(docs[d].recording_id);
      REQUIRE(row != nullptr);
      for (std::uint32_t t = 0; t < vocab.size(); ++t) {
        auto it = oracle[d].find(vocab.terms[t]);
        const double expected = it == oracle[d].end() ? 0.0 : it->second;
        CHECK(std::abs(row->weight(t) - expected) <= 1e-9);
        CHECK(row->weight(t) >= 0.0);
      }
      const double norm = row->norm();
      CHECK((norm == 0.0 || std::abs(norm - 1.0) <= 1e-9));
      if (norm > 0) CHECK(cosine(*row, *row) == doctest::Approx(1.0).epsilon(1e-9));
    }

    auto shuffled = docs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto permuted = tfidf_rows(shuffled, build_vocabulary(shuffled, 1, 1.0));
    CHECK(permuted.rows == model.rows);
  }
}

TEST_CASE("vocab.tsv and vectors.bin round trip") {
  auto docs = make_docs({{"cat", "dog", "dog"}, {"cat"}, {}});
  auto vocab = build_vocabulary(docs, 1, 1.0);
  auto model = tfidf_rows(docs, vocab);
  const auto tsv = format_vocab_tsv(vocab);
  CHECK(tsv == "cat\t2\ndog\t1\n");
  auto parsed = parse_vocab_tsv(tsv, 3);
  CHECK(parsed.terms == vocab.terms);
  CHECK(parsed.df == vocab.df);
  const auto bytes = encode_vectors(model);
  CHECK(bytes.substr(0, 8) == "MMVEC001");
  auto back = decode_vectors(bytes, parsed);
  CHECK(back.rows == model.rows);
  CHECK(back.n_docs == 3);
  CHECK(encode_vectors(back) == bytes);

  CHECK(mmtest::error_kind([&] { decode_vectors("MMVEC999" + bytes.substr(8), parsed); }) ==
        ErrorKind::InconsistentStore);
  CHECK(mmtest::error_kind([&] { decode_vectors(bytes.substr(0, bytes.size() - 3), parsed); }) ==
        ErrorKind::InconsistentStore);
  CHECK(mmtest::error_kind([] { parse_vocab_tsv("cat\n", 1); }) == ErrorKind::MalformedLine);
}

TEST_CASE("cosine") {
  SparseVector a{{{0, 1.0}, {2, 1.0}}};
  SparseVector b{{{1, 3.0}}};
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(a, SparseVector{}) == 0.0);
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(a.dot(SparseVector{{{2, 4.0}}}) == 4.0);
}
