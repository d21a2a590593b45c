#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "semkey/harness.hpp"

namespace py = pybind11;
using namespace semkey;

namespace {

Salt to_salt(const py::bytes& b) {
  const std::string s = b;
  return Salt(s.begin(), s.end());
}

WatermarkKey to_key(const py::bytes& b) {
  const std::string s = b;
  if (s.size() != 32) throw std::invalid_argument("watermark key must be 32 bytes");
  WatermarkKey key;
  std::copy(s.begin(), s.end(), key.bytes.begin());
  return key;
}

py::bytes from_key(const WatermarkKey& key) {
  return py::bytes(reinterpret_cast<const char*>(key.bytes.data()), key.bytes.size());
}

CostDistribution to_dist(const std::vector<double>& support, const std::vector<double>& probs) {
  return CostDistribution::discrete(support, probs);
}

// One configured pipeline: corpus-trained model, embedder, key module.
class Session {
 public:
  explicit Session(const std::string& config_text)
      : pipeline_(build_pipeline(parse_config_text(config_text))) {}

  TokenSeq generate_tokens(std::uint64_t seed, int length) {
    Rng rng(seed);
    const TokenSeq prompt = sample_prompt(pipeline_.corpus.vocab, rng);
    return generate(pipeline_.lm, *pipeline_.keys, pipeline_.config.scheme,
                    pipeline_.config.mark, prompt, length, pipeline_.config.top_p, rng);
  }

  std::string generate_text(std::uint64_t seed, int length) {
    return detokenize(generate_tokens(seed, length), pipeline_.corpus.vocab);
  }

  std::string detect_tokens(const TokenSeq& tokens) {
    return detect(tokens, *pipeline_.keys, pipeline_.config.scheme, pipeline_.config.mark)
        .to_json();
  }

  std::string detect_text(const std::string& text) {
    return detect_tokens(tokenize(text, pipeline_.corpus.vocab));
  }

  TokenSeq attack_tokens(const TokenSeq& tokens, const std::string& kind, int count, double rate,
                         std::uint64_t seed) {
    AttackSpec spec;
    spec.kind = attack_from_name(kind);
    spec.count = count;
    spec.rate = rate;
    spec.seed = seed;
    SynonymTable synonyms;
    const AttackContext ctx{&pipeline_.corpus.vocab, &pipeline_.lm,
                            spec.kind == AttackKind::kSynonymParaphrase ? &ensure_synonyms()
                                                                        : &synonyms};
    return apply_attack(spec, tokens, ctx);
  }

  std::string text_of(const TokenSeq& tokens) { return detokenize(tokens, pipeline_.corpus.vocab); }
  TokenSeq tokens_of(const std::string& text) { return tokenize(text, pipeline_.corpus.vocab); }
  int vocab_size() const { return pipeline_.corpus.vocab.size(); }

 private:
  const SynonymTable& ensure_synonyms() {
    if (pipeline_.synonyms.empty()) {
      const auto& e = pipeline_.config.embedder;
      const FeatureHashEmbedder grouping(e.dimension, e.ngram_min, e.ngram_max,
                                         idf_weights(pipeline_.corpus.vocab.counts()));
      pipeline_.synonyms = build_synonym_table(pipeline_.corpus.vocab, grouping);
    }
    return pipeline_.synonyms;
  }

  Pipeline pipeline_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Text watermarking toolkit: semantic keys, keyed samplers, p-value detection";

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static("from_documents",
                  [](const std::vector<std::string>& docs) {
                    return Vocabulary::from_documents(docs);
                  })
      .def_static("load", &Vocabulary::load)
      .def("save", &Vocabulary::save)
      .def("size", &Vocabulary::size)
      .def("sentinel_id", &Vocabulary::sentinel_id)
      .def("token", &Vocabulary::token)
      .def("id_of", &Vocabulary::id_of);

  m.def("tokenize", &tokenize);
  m.def("detokenize", &detokenize);

  py::class_<NgramModel>(m, "NgramModel")
      .def("order", &NgramModel::order)
      .def("next_dist",
           [](const NgramModel& lm, const TokenSeq& ctx, double top_p) {
             return lm.next_dist(ctx, top_p);
           })
      .def("perplexity",
           [](const NgramModel& lm, const TokenSeq& tokens) { return lm.perplexity(tokens); });
  m.def("train_ngram", &train_ngram, py::arg("corpus"), py::arg("vocab"),
        py::arg("order") = NgramModel::kDefaultOrder,
        py::arg("smoothing") = NgramModel::kDefaultSmoothing);
  m.def("nucleus_truncate", &nucleus_truncate);

  m.def("angle_degrees", [](const std::vector<double>& a, const std::vector<double>& b) {
    return angle_degrees(SemanticVector(a), SemanticVector(b));
  });
  py::class_<FeatureHashEmbedder>(m, "FeatureHashEmbedder")
      .def(py::init<int, int, int, std::vector<double>>(), py::arg("dim"), py::arg("ngram_min") = 1,
           py::arg("ngram_max") = 2, py::arg("token_weights") = std::vector<double>{})
      .def("embed",
           [](const FeatureHashEmbedder& e, const TokenSeq& window) {
             return e.embed_window(window).values();
           });

  m.def("gaussian_from_seed", [](const py::bytes& seed, int d) {
    const std::string s = seed;
    return gaussian_from_seed(std::span<const std::uint8_t>(
                                  reinterpret_cast<const std::uint8_t*>(s.data()), s.size()),
                              d);
  });
  m.def("simkey",
        [](const std::vector<double>& v, int idx, int b, int k, const py::bytes& salt) {
          SimKeyParams params{b, k, to_salt(salt), int(v.size())};
          return from_key(simkey(SemanticVector(v), idx, params));
        },
        py::arg("v"), py::arg("idx"), py::arg("b"), py::arg("k"), py::arg("salt"));
  m.def("key_match_prob", &key_match_prob);
  m.def("standard_hash_key", [](const TokenSeq& window, int idx, const py::bytes& salt) {
    return from_key(standard_hash_key(window, idx, to_salt(salt)));
  });
  m.def("fixed_key",
        [](int idx, const py::bytes& salt) { return from_key(fixed_key(idx, to_salt(salt))); });

  m.def("xi", [](const py::bytes& key, TokenId id) { return xi(to_key(key), id); });
  m.def("expmin_mark",
        [](const py::bytes& key, const ProbVector& dist) { return expmin_mark(to_key(key), dist); });
  m.def("expmin_cost",
        [](const py::bytes& key, TokenId id) { return expmin_cost(to_key(key), id); });
  m.def("tournament_mark", [](const py::bytes& key, const ProbVector& dist, int m_layers) {
    TournamentParams params;
    params.m = m_layers;
    return tournament_mark(to_key(key), dist, params);
  });
  m.def("tournament_cost", [](const py::bytes& key, TokenId id, int m_layers) {
    TournamentParams params;
    params.m = m_layers;
    return tournament_cost(to_key(key), id, params);
  });

  m.def("pvalue_gamma", &pvalue_gamma, py::arg("mean_cost"), py::arg("n"), py::arg("k"));
  m.def("min_of_k_cdf",
        [](const std::vector<double>& support, const std::vector<double>& probs, int k) {
          const CostDistribution out = min_of_k_cdf(to_dist(support, probs), k);
          return py::make_tuple(out.support, out.probs);
        });
  m.def("convolve_pvalue",
        [](double total, int n, const std::vector<double>& support,
           const std::vector<double>& probs) {
          return convolve_pvalue(total, n, to_dist(support, probs));
        });
  m.def("discretize_exponential", [](double rate, int bins, double cap) {
    const CostDistribution out = discretize(rate, bins, cap);
    return py::make_tuple(out.support, out.probs);
  });
  m.def("tpr_at_fpr", &tpr_at_fpr);

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&>(), py::arg("config_text"))
      .def("generate_tokens", &Session::generate_tokens, py::arg("seed"), py::arg("length"))
      .def("generate_text", &Session::generate_text, py::arg("seed"), py::arg("length"))
      .def("detect_tokens", &Session::detect_tokens)
      .def("detect_text", &Session::detect_text)
      .def("attack_tokens", &Session::attack_tokens, py::arg("tokens"), py::arg("kind"),
           py::arg("count") = 0, py::arg("rate") = 0.0, py::arg("seed") = 1)
      .def("text_of", &Session::text_of)
      .def("tokens_of", &Session::tokens_of)
      .def("vocab_size", &Session::vocab_size);

  m.def("run_experiment", [](const std::string& config_text) {
    return run_experiment(parse_config_text(config_text)).to_json();
  });
}
