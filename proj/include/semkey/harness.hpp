#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semkey/attacks.hpp"
#include "semkey/detect.hpp"
#include "semkey/embed.hpp"
#include "semkey/keymod.hpp"
#include "semkey/markmod.hpp"
#include "semkey/rng.hpp"
#include "semkey/textmodel.hpp"

namespace semkey {

inline constexpr const char* kSaltEnvVar = "SEMKEY_SALT";

enum class KeyModuleKind { kSimKey, kStandard, kFixed };

KeyModuleKind key_module_from_name(const std::string& name);  // simkey | standard | fixed
std::string key_module_name(KeyModuleKind kind);

struct RunConfig {
  Scheme scheme = Scheme::kExpMin;
  KeyModuleKind key_module = KeyModuleKind::kSimKey;
  int k = 4;
  int b = 4;
  int window = 8;
  double top_p = 0.9;
  int n_texts = 80;        // watermarked texts
  int n_null_texts = 120;  // unwatermarked texts
  int text_len = 64;       // generated tokens per text
  AttackSpec attack{};
  std::uint64_t seed = 1;
  std::string corpus_path;
  std::string synonym_table_path;  // empty: derive from the embedder
  Salt salt;                       // loaded from config or SEMKEY_SALT; never logged
  EmbedderConfig embedder{};
  std::string embed_weighting = "idf";  // idf | none
  int lm_order = NgramModel::kDefaultOrder;
  double lm_smoothing = NgramModel::kDefaultSmoothing;
  MarkParams mark{};

  void validate() const;
};

// Flat key=value config file. Unknown keys are an error. The salt comes
// from the `salt` key (hex) or the SEMKEY_SALT environment variable.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Everything a run needs, built deterministically from one config.
struct Pipeline {
  Corpus corpus;
  NgramModel lm;
  std::shared_ptr<const Embedder> embedder;
  std::unique_ptr<KeyModule> keys;
  SynonymTable synonyms;
  RunConfig config;
};
Pipeline build_pipeline(const RunConfig& config);

// Three uniformly drawn in-vocabulary words.
TokenSeq sample_prompt(const Vocabulary& vocab, Rng& rng);

// Watermarked generation: per step, embed/window the committed context,
// draw a key index uniformly from {1..k}, derive the key, and let the
// scheme pick the next token(s). Returns prompt + length new tokens.
TokenSeq generate(const NgramModel& lm, const KeyModule& keys, Scheme scheme,
                  const MarkParams& params, const TokenSeq& prompt, int length, double top_p,
                  Rng& rng);

// Plain top-p sampling without any watermark.
TokenSeq generate_plain(const NgramModel& lm, const TokenSeq& prompt, int length, double top_p,
                        Rng& rng);

// Threshold = the largest p-value whose empirical null CDF stays <= fpr;
// returns the fraction of watermarked p-values at or below it.
double tpr_at_fpr(const std::vector<double>& p_watermarked,
                  const std::vector<double>& p_null, double fpr);

struct ConditionSummary {
  std::vector<double> p_values;
  std::vector<double> mean_costs;
  std::vector<double> perplexities;
  std::vector<int> n_tokens;
  double median_p = 1.0;
};

struct ExperimentReport {
  std::string scheme;
  std::string key_module;
  std::string attack;
  ConditionSummary watermarked;
  ConditionSummary null_texts;
  ConditionSummary attacked;
  std::map<std::string, double> tpr;  // "tpr@0.01" etc., watermarked vs null
  std::map<std::string, double> tpr_attacked;
  double perplexity_watermarked_mean = 0.0;
  double perplexity_null_mean = 0.0;
  std::string config_echo;  // input config with the salt value redacted
  double wall_clock_seconds = 0.0;

  std::string to_json() const;
  std::string to_csv() const;  // text_id, condition, scheme, key_module, ...
};

ExperimentReport run_experiment(const RunConfig& config);

// Writes report.json and results.csv into `out_dir`.
void emit_report(const ExperimentReport& report, const std::string& out_dir);

double median(std::vector<double> values);

// Hex salt from the argument when nonempty, otherwise from SEMKEY_SALT.
Salt resolve_salt(const std::string& config_hex);

}  // namespace semkey
