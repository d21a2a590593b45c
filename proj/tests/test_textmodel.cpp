#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "semkey/rng.hpp"
#include "semkey/textmodel.hpp"

using namespace semkey;

namespace {

Vocabulary tiny_vocab(std::vector<std::string> words) {
  return Vocabulary::from_tokens(words);
}

std::string strip_whitespace(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

}  // namespace

TEST_CASE("tokenize maps words to ids and OOV to the sentinel") {
  const Vocabulary v = tiny_vocab({"a", "b"});
  CHECK(v.size() == 3);  // a, b, <unk>
  CHECK(tokenize("a b a", v) == TokenSeq{0, 1, 0});
  CHECK(tokenize("", v) == TokenSeq{});
  CHECK(tokenize("a zzz", v) == TokenSeq{0, v.sentinel_id()});
}

TEST_CASE("punctuation splits off words") {
  const Vocabulary v = tiny_vocab({"a", "b", ",", "."});
  CHECK(tokenize("a, b.", v) == TokenSeq{0, 2, 1, 3});
  // Interior punctuation stays attached.
  CHECK(split_words("don't stop") == std::vector<std::string>{"don't", "stop"});
}

TEST_CASE("detokenize(tokenize(t)) round-trips up to whitespace") {
  const std::vector<std::string> docs = {"the fox, ran.", "a  b   c", "x 'quoted' y."};
  const Vocabulary v = Vocabulary::from_documents(docs);
  for (const auto& doc : docs) {
    const TokenSeq ids = tokenize(doc, v);
    CHECK(strip_whitespace(detokenize(ids, v)) == strip_whitespace(doc));
  }
}

TEST_CASE("vocabulary is a bijection with the sentinel at V-1") {
  const std::vector<std::string> docs = {"c b a", "b c d"};
  const Vocabulary v = Vocabulary::from_documents(docs);
  CHECK(v.size() == 5);
  CHECK(v.token(v.size() - 1) == kSentinelToken);
  for (TokenId id = 0; id < v.size(); ++id) CHECK(v.id_of(v.token(id)) == id);
  CHECK(v.counts()[std::size_t(v.id_of("b"))] == 2);
}

TEST_CASE("vocabulary file round-trip preserves ids") {
  const Vocabulary v = Vocabulary::from_documents(std::vector<std::string>{"x y z y"});
  const std::string path = "vocab_roundtrip.txt";
  v.save(path);
  const Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.size() == v.size());
  for (TokenId id = 0; id < v.size(); ++id) CHECK(loaded.token(id) == v.token(id));
}

TEST_CASE("bigram counts follow additive smoothing") {
  const Vocabulary v = tiny_vocab({"t0", "t1", "t2"});  // V = 4 with sentinel

  SUBCASE("deterministic transition with vanishing smoothing") {
    const NgramModel m = train_ngram({0, 1, 0, 1}, v, 1, 1e-12);
    const ProbVector p = m.next_dist(TokenSeq{0}, 1.0);
    CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("hand-computed smoothed estimate") {
    // Transitions from 0: ->1 and ->2; P(1|0) = (1+1)/(2+1*V).
    const Vocabulary v3 = tiny_vocab({"t0", "t1"});  // force V = 3: t0,t1,<unk>
    const NgramModel m = train_ngram({0, 1, 0, 2}, v3, 1, 1.0);
    const ProbVector p = m.next_dist(TokenSeq{0}, 1.0);
    CHECK(p[1] == doctest::Approx((1.0 + 1.0) / (2.0 + 3.0)));
  }

  SUBCASE("conditional distributions sum to 1") {
    const NgramModel m = train_ngram({0, 1, 2, 0, 1}, v, 2, 0.5);
    for (const TokenSeq ctx : {TokenSeq{0, 1}, TokenSeq{2, 2}, TokenSeq{}}) {
      const ProbVector p = m.next_dist(ctx, 1.0);
      double sum = 0.0;
      for (double x : p) {
        CHECK(x > 0.0);
        sum += x;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("training requires a long enough corpus") {
  const Vocabulary v = tiny_vocab({"t0", "t1"});
  CHECK_THROWS_AS(train_ngram({0}, v, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(train_ngram({0, 1, 0}, v, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(train_ngram({0, 1, 0}, v, 1, 0.0), std::invalid_argument);
}

TEST_CASE("nucleus truncation") {
  SUBCASE("top_p = 1 is the identity") {
    const ProbVector p{0.6, 0.3, 0.1};
    CHECK(nucleus_truncate(p, 1.0) == p);
  }
  SUBCASE("keeps the smallest prefix reaching the mass") {
    const ProbVector out = nucleus_truncate({0.6, 0.3, 0.1}, 0.9);
    CHECK(out[0] == doctest::Approx(2.0 / 3.0));
    CHECK(out[1] == doctest::Approx(1.0 / 3.0));
    CHECK(out[2] == 0.0);
  }
  SUBCASE("one-hot is unchanged for any top_p") {
    for (double tp : {0.1, 0.5, 0.9}) {
      const ProbVector out = nucleus_truncate({0.0, 1.0, 0.0}, tp);
      CHECK(out[1] == doctest::Approx(1.0));
      CHECK(out[0] == 0.0);
    }
  }
  SUBCASE("boundary ties keep the lower id") {
    // Equal probabilities: nucleus of 0.5 keeps only id 0.
    const ProbVector out = nucleus_truncate({0.25, 0.25, 0.25, 0.25}, 0.5);
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == doctest::Approx(0.5));
    CHECK(out[2] == 0.0);
    CHECK(out[3] == 0.0);
  }
  SUBCASE("rejects top_p outside (0, 1]") {
    CHECK_THROWS_AS(nucleus_truncate({1.0, 0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(nucleus_truncate({1.0, 0.0}, 1.5), std::invalid_argument);
  }
}

TEST_CASE("next_dist is deterministic and valid over random contexts") {
  const std::vector<std::string> docs = {"a b c a b", "b c a c b a", "c c a b b"};
  const Vocabulary v = Vocabulary::from_documents(docs);
  TokenSeq corpus;
  for (const auto& d : docs) {
    const TokenSeq ids = tokenize(d, v);
    corpus.insert(corpus.end(), ids.begin(), ids.end());
  }
  const NgramModel m = train_ngram(corpus, v, 2, 0.1);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    TokenSeq ctx(rng.uniform_int(5));
    for (auto& id : ctx) id = TokenId(rng.uniform_int(std::uint64_t(v.size())));
    const ProbVector a = m.next_dist(ctx, 0.9);
    const ProbVector b = m.next_dist(ctx, 0.9);
    CHECK(a == b);
    double sum = 0.0;
    for (double x : a) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("perplexity") {
  SUBCASE("uniform model gives perplexity V") {
    const Vocabulary v = tiny_vocab({"t0", "t1", "t2", "t3"});  // V = 5
    const NgramModel m = train_ngram({0, 1}, v, 1, 0.1);
    // Contexts unseen in training: every conditional is exactly uniform.
    CHECK(m.perplexity(TokenSeq{2, 3, 2, 3}) == doctest::Approx(double(v.size())));
  }

  SUBCASE("near-deterministic model on its own training data") {
    const Vocabulary v = tiny_vocab({"a", "b"});
    const TokenSeq seq{0, 1, 0, 1, 0, 1};
    const NgramModel m = train_ngram(seq, v, 1, 1e-12);
    CHECK(m.perplexity(seq) == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("matches a hand-computed chain product") {
    const Vocabulary v = tiny_vocab({"a", "b"});  // V = 3
    const NgramModel m = train_ngram(tokenize("a b a b", v), v, 1, 0.1);
    // Transitions: a->b twice, b->a once; evaluate "a b a" at positions 1,2.
    const double p_b_a = (2.0 + 0.1) / (2.0 + 0.1 * 3.0);
    const double p_a_b = (1.0 + 0.1) / (1.0 + 0.1 * 3.0);
    const double expected = std::exp(-(std::log(p_b_a) + std::log(p_a_b)) / 2.0);
    CHECK(m.perplexity(tokenize("a b a", v)) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("bounded between 1 and the inverse minimum probability") {
    const std::vector<std::string> docs = {"a b c a", "c b a b"};
    const Vocabulary v = Vocabulary::from_documents(docs);
    const NgramModel m = train_ngram(tokenize(docs[0] + " " + docs[1], v), v, 1, 0.3);
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      TokenSeq seq(8);
      for (auto& id : seq) id = TokenId(rng.uniform_int(std::uint64_t(v.size())));
      const double ppl = m.perplexity(seq);
      double min_p = 1.0;
      for (std::size_t i = 1; i < seq.size(); ++i) {
        const ProbVector p = m.next_dist(std::span(seq).subspan(0, i), 1.0);
        min_p = std::min(min_p, p[std::size_t(seq[i])]);
      }
      CHECK(ppl >= 1.0);
      CHECK(ppl <= 1.0 / min_p + 1e-9);
    }
  }

  SUBCASE("rejects sequences too short to score") {
    const Vocabulary v = tiny_vocab({"a", "b"});
    const NgramModel m = train_ngram({0, 1, 0}, v, 2, 0.1);
    CHECK_THROWS_AS(m.perplexity(TokenSeq{0, 1}), std::invalid_argument);
  }
}

TEST_CASE("window_before pads on the left") {
  const TokenSeq ctx{5, 6, 7};
  CHECK(window_before(ctx, 3, 5, 9) == TokenSeq{9, 9, 5, 6, 7});
  CHECK(window_before(ctx, 2, 2, 9) == TokenSeq{5, 6});
  CHECK(window_before(ctx, 0, 3, 9) == TokenSeq{9, 9, 9});
}

TEST_CASE("corpus loading builds a consistent training sequence") {
  const std::string path = std::string(SEMKEY_DATA_DIR) + "/corpus.txt";
  const Corpus c = load_corpus(path);
  CHECK(c.vocab.size() > 100);
  CHECK(c.documents.size() > 1000);
  // Sentinel separators: one per document boundary.
  std::size_t sentinels = 0;
  for (TokenId id : c.train_sequence)
    if (id == c.vocab.sentinel_id()) ++sentinels;
  CHECK(sentinels == c.documents.size() - 1);
}
