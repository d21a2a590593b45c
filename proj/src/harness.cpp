#include "semkey/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace semkey {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json condition_json(const ConditionSummary& c) {
  nlohmann::ordered_json j;
  j["median_p"] = c.median_p;
  j["p_values"] = c.p_values;
  j["mean_costs"] = c.mean_costs;
  j["perplexities"] = c.perplexities;
  j["n_tokens"] = c.n_tokens;
  return j;
}

void csv_rows(std::ostringstream& out, const ConditionSummary& c, const std::string& condition,
              const ExperimentReport& r) {
  for (std::size_t i = 0; i < c.p_values.size(); ++i) {
    out << i << ',' << condition << ',' << r.scheme << ',' << r.key_module << ','
        << (condition == "attacked" ? r.attack : std::string("none")) << ',' << c.n_tokens[i]
        << ',' << format_double(c.p_values[i]) << ',' << format_double(c.mean_costs[i]) << ','
        << format_double(c.perplexities[i]) << '\n';
  }
}

}  // namespace

KeyModuleKind key_module_from_name(const std::string& name) {
  if (name == "simkey") return KeyModuleKind::kSimKey;
  if (name == "standard") return KeyModuleKind::kStandard;
  if (name == "fixed") return KeyModuleKind::kFixed;
  throw std::invalid_argument("unknown key module: " + name);
}

std::string key_module_name(KeyModuleKind kind) {
  switch (kind) {
    case KeyModuleKind::kSimKey: return "simkey";
    case KeyModuleKind::kStandard: return "standard";
    case KeyModuleKind::kFixed: return "fixed";
  }
  throw std::invalid_argument("unknown key module");
}

void RunConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (b < 1) throw std::invalid_argument("b must be >= 1");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (!(top_p > 0.0) || top_p > 1.0) throw std::invalid_argument("top_p must be in (0, 1]");
  if (n_texts < 0 || n_null_texts < 0) throw std::invalid_argument("text counts must be >= 0");
  if (text_len < 0) throw std::invalid_argument("text_len must be >= 0");
  if (corpus_path.empty()) throw std::invalid_argument("corpus path is required");
  if (salt.empty()) throw std::invalid_argument("salt is required (config key `salt` or SEMKEY_SALT)");
  if (embed_weighting != "idf" && embed_weighting != "none")
    throw std::invalid_argument("embed_weighting must be idf or none");
  if (lm_order < 1) throw std::invalid_argument("lm_order must be >= 1");
  if (!(lm_smoothing > 0.0)) throw std::invalid_argument("lm_smoothing must be > 0");
  if (attack.rate < 0.0 || attack.rate > 1.0)
    throw std::invalid_argument("attack rate must be in [0, 1]");
  if (attack.count < 0) throw std::invalid_argument("attack count must be >= 0");
  mark.tournament.validate();
  mark.watermax.validate();
  embedder.validate();
}

Salt resolve_salt(const std::string& config_hex) {
  if (!config_hex.empty()) return salt_from_hex(config_hex);
  const char* env = std::getenv(kSaltEnvVar);
  if (env != nullptr && *env != '\0') return salt_from_hex(env);
  return {};
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::string salt_hex;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "scheme") cfg.scheme = scheme_from_name(value);
      else if (key == "key_module") cfg.key_module = key_module_from_name(value);
      else if (key == "k") cfg.k = std::stoi(value);
      else if (key == "b") cfg.b = std::stoi(value);
      else if (key == "window") cfg.window = std::stoi(value);
      else if (key == "top_p") cfg.top_p = std::stod(value);
      else if (key == "n_texts") cfg.n_texts = std::stoi(value);
      else if (key == "n_null_texts") cfg.n_null_texts = std::stoi(value);
      else if (key == "text_len") cfg.text_len = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "corpus") cfg.corpus_path = value;
      else if (key == "synonym_table") cfg.synonym_table_path = value;
      else if (key == "salt") salt_hex = value;
      else if (key == "attack_kind") cfg.attack.kind = attack_from_name(value);
      else if (key == "attack_count") cfg.attack.count = std::stoi(value);
      else if (key == "attack_rate") cfg.attack.rate = std::stod(value);
      else if (key == "attack_seed") cfg.attack.seed = std::stoull(value);
      else if (key == "embedder_kind") {
        if (value == "feature_hash") cfg.embedder.kind = EmbedderKind::kFeatureHash;
        else if (value == "table") cfg.embedder.kind = EmbedderKind::kTable;
        else if (value == "remote") cfg.embedder.kind = EmbedderKind::kRemote;
        else throw std::invalid_argument("unknown embedder kind: " + value);
      }
      else if (key == "embedder_dim") cfg.embedder.dimension = std::stoi(value);
      else if (key == "embedder_table") cfg.embedder.table_path = value;
      else if (key == "embedder_endpoint") cfg.embedder.endpoint = value;
      else if (key == "embedder_timeout_ms") cfg.embedder.timeout_ms = std::stoi(value);
      else if (key == "embed_weighting") cfg.embed_weighting = value;
      else if (key == "lm_order") cfg.lm_order = std::stoi(value);
      else if (key == "lm_smoothing") cfg.lm_smoothing = std::stod(value);
      else if (key == "tournament_layers") cfg.mark.tournament.m = std::stoi(value);
      else if (key == "watermax_drafts") cfg.mark.watermax.n_drafts = std::stoi(value);
      else if (key == "watermax_chunk_len") cfg.mark.watermax.chunk_len = std::stoi(value);
      else throw std::invalid_argument("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad value for " + key);
    }
  }
  cfg.salt = resolve_salt(salt_hex);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

Pipeline build_pipeline(const RunConfig& config) {
  config.validate();
  Pipeline p;
  p.config = config;
  p.corpus = load_corpus(config.corpus_path);
  p.lm = train_ngram(p.corpus.train_sequence, p.corpus.vocab, config.lm_order,
                     config.lm_smoothing);

  EmbedderConfig embed_cfg = config.embedder;
  if (embed_cfg.token_weights.empty() && config.embed_weighting == "idf")
    embed_cfg.token_weights = idf_weights(p.corpus.vocab.counts());
  p.embedder = make_embedder(embed_cfg, p.corpus.vocab);

  const TokenId pad = p.corpus.vocab.sentinel_id();
  switch (config.key_module) {
    case KeyModuleKind::kSimKey: {
      SimKeyParams params{config.b, config.k, config.salt, embed_cfg.dimension};
      p.keys = std::make_unique<SimKeyModule>(p.embedder, params, config.window, pad);
      break;
    }
    case KeyModuleKind::kStandard:
      p.keys = std::make_unique<StandardHashKeyModule>(config.salt, config.window, pad, config.k);
      break;
    case KeyModuleKind::kFixed:
      p.keys = std::make_unique<FixedKeyModule>(config.salt, config.k);
      break;
  }

  if (config.attack.kind == AttackKind::kSynonymParaphrase) {
    if (!config.synonym_table_path.empty()) {
      p.synonyms = load_synonym_table(config.synonym_table_path);
    } else {
      const FeatureHashEmbedder grouping(embed_cfg.dimension, embed_cfg.ngram_min,
                                         embed_cfg.ngram_max, embed_cfg.token_weights);
      p.synonyms = build_synonym_table(p.corpus.vocab, grouping);
    }
  }
  return p;
}

TokenSeq sample_prompt(const Vocabulary& vocab, Rng& rng) {
  TokenSeq prompt(3);
  for (auto& id : prompt)
    id = TokenId(rng.uniform_int(std::uint64_t(vocab.size() - 1)));  // sentinel excluded
  return prompt;
}

TokenSeq generate(const NgramModel& lm, const KeyModule& keys, Scheme scheme,
                  const MarkParams& params, const TokenSeq& prompt, int length, double top_p,
                  Rng& rng) {
  TokenSeq seq = prompt;
  seq.reserve(prompt.size() + std::size_t(length));
  const int k = keys.num_indices();

  if (scheme == Scheme::kWaterMax) {
    const std::size_t chunk_len = std::size_t(params.watermax.chunk_len);
    const std::size_t target = prompt.size() + std::size_t(length);
    while (seq.size() < target) {
      // Chunk grid anchored at position 0, so detection can re-derive the
      // same per-chunk key context without knowing the prompt length.
      const std::size_t grid_start = (seq.size() / chunk_len) * chunk_len;
      const std::size_t chunk_end = std::min(grid_start + chunk_len, target);
      const std::size_t emit = chunk_end - seq.size();
      std::vector<WatermarkKey> chunk_keys(emit);
      const std::span<const TokenId> committed(seq.data(), grid_start);
      for (auto& key : chunk_keys)
        key = keys.derive(committed, 1 + int(rng.uniform_int(std::uint64_t(k))));
      const TokenSeq chunk = watermax_mark(chunk_keys, lm, seq, params.watermax, top_p, rng);
      seq.insert(seq.end(), chunk.begin(), chunk.end());
    }
    return seq;
  }

  for (int step = 0; step < length; ++step) {
    const ProbVector dist = lm.next_dist(seq, top_p);
    const int idx = 1 + int(rng.uniform_int(std::uint64_t(k)));
    const WatermarkKey key = keys.derive(seq, idx);
    const TokenId next = scheme == Scheme::kExpMin
                             ? expmin_mark(key, dist)
                             : tournament_mark(key, dist, params.tournament);
    seq.push_back(next);
  }
  return seq;
}

TokenSeq generate_plain(const NgramModel& lm, const TokenSeq& prompt, int length, double top_p,
                        Rng& rng) {
  TokenSeq seq = prompt;
  seq.reserve(prompt.size() + std::size_t(length));
  for (int step = 0; step < length; ++step) {
    const ProbVector dist = lm.next_dist(seq, top_p);
    seq.push_back(sample_token(dist, rng.uniform()));
  }
  return seq;
}

double tpr_at_fpr(const std::vector<double>& p_watermarked, const std::vector<double>& p_null,
                  double fpr) {
  if (p_watermarked.empty() || p_null.empty())
    throw std::invalid_argument("tpr_at_fpr needs nonempty p-value lists");
  if (!(fpr > 0.0) || !(fpr < 1.0)) throw std::invalid_argument("fpr must be in (0, 1)");

  std::vector<double> nulls = p_null;
  std::sort(nulls.begin(), nulls.end());
  const auto m = nulls.size();
  // Largest null count j with j/m <= fpr; the threshold sits just below
  // the (j+1)-th order statistic (or at +inf when every null qualifies).
  auto allowed = std::size_t(std::floor(fpr * double(m) + 1e-12));
  // Step back over ties: counting nulls <= nulls[allowed] must stay within
  // the budget, so the cut happens at the first index holding that value.
  std::size_t cut = allowed;  // index of the first null strictly above the threshold
  if (cut < m) {
    const double v = nulls[cut];
    while (cut > 0 && nulls[cut - 1] == v) --cut;
  }
  std::size_t tp = 0;
  if (cut >= m) {
    tp = p_watermarked.size();
  } else {
    const double upper = nulls[cut];  // threshold is any value strictly below this
    for (double p : p_watermarked)
      if (p < upper) ++tp;
  }
  return double(tp) / double(p_watermarked.size());
}

double median(std::vector<double> values) {
  if (values.empty()) return 1.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

ExperimentReport run_experiment(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  Pipeline p = build_pipeline(config);

  ExperimentReport report;
  report.scheme = scheme_name(config.scheme);
  report.key_module = key_module_name(config.key_module);
  report.attack = attack_name(config.attack.kind);

  {
    // Config echo: every effective key=value pair, salt redacted.
    std::ostringstream echo;
    echo << "scheme=" << report.scheme << '\n'
         << "key_module=" << report.key_module << '\n'
         << "k=" << config.k << '\n'
         << "b=" << config.b << '\n'
         << "window=" << config.window << '\n'
         << "top_p=" << format_double(config.top_p) << '\n'
         << "n_texts=" << config.n_texts << '\n'
         << "n_null_texts=" << config.n_null_texts << '\n'
         << "text_len=" << config.text_len << '\n'
         << "seed=" << config.seed << '\n'
         << "corpus=" << config.corpus_path << '\n'
         << "attack_kind=" << report.attack << '\n'
         << "attack_count=" << config.attack.count << '\n'
         << "attack_rate=" << format_double(config.attack.rate) << '\n'
         << "attack_seed=" << config.attack.seed << '\n'
         << "embedder_dim=" << config.embedder.dimension << '\n'
         << "embed_weighting=" << config.embed_weighting << '\n'
         << "lm_order=" << config.lm_order << '\n'
         << "lm_smoothing=" << format_double(config.lm_smoothing) << '\n'
         << "tournament_layers=" << config.mark.tournament.m << '\n'
         << "watermax_drafts=" << config.mark.watermax.n_drafts << '\n'
         << "watermax_chunk_len=" << config.mark.watermax.chunk_len << '\n'
         << "salt=<redacted>\n";
    report.config_echo = echo.str();
  }

  AttackContext attack_ctx{&p.corpus.vocab, &p.lm, &p.synonyms};
  const Rng master(config.seed);

  for (int t = 0; t < config.n_texts; ++t) {
    Rng rng = master.split(std::uint64_t(t));
    const TokenSeq prompt = sample_prompt(p.corpus.vocab, rng);
    const TokenSeq text =
        generate(p.lm, *p.keys, config.scheme, config.mark, prompt, config.text_len, config.top_p, rng);
    const DetectionReport det = detect(text, *p.keys, config.scheme, config.mark);
    report.watermarked.p_values.push_back(det.p_value);
    report.watermarked.mean_costs.push_back(det.mean_cost);
    report.watermarked.perplexities.push_back(p.lm.perplexity(text));
    report.watermarked.n_tokens.push_back(int(text.size()));

    if (config.attack.kind != AttackKind::kNone) {
      AttackSpec spec = config.attack;
      spec.seed = Rng(config.attack.seed).split(std::uint64_t(t)).seed();
      const TokenSeq hit = apply_attack(spec, text, attack_ctx);
      const DetectionReport det_a = detect(hit, *p.keys, config.scheme, config.mark);
      report.attacked.p_values.push_back(det_a.p_value);
      report.attacked.mean_costs.push_back(det_a.mean_cost);
      report.attacked.perplexities.push_back(p.lm.perplexity(hit));
      report.attacked.n_tokens.push_back(int(hit.size()));
    }
  }

  for (int t = 0; t < config.n_null_texts; ++t) {
    Rng rng = master.split(0x1000000ULL + std::uint64_t(t));
    const TokenSeq prompt = sample_prompt(p.corpus.vocab, rng);
    const TokenSeq text = generate_plain(p.lm, prompt, config.text_len, config.top_p, rng);
    const DetectionReport det = detect(text, *p.keys, config.scheme, config.mark);
    report.null_texts.p_values.push_back(det.p_value);
    report.null_texts.mean_costs.push_back(det.mean_cost);
    report.null_texts.perplexities.push_back(p.lm.perplexity(text));
    report.null_texts.n_tokens.push_back(int(text.size()));
  }

  report.watermarked.median_p = median(report.watermarked.p_values);
  report.null_texts.median_p = median(report.null_texts.p_values);
  report.attacked.median_p = median(report.attacked.p_values);

  if (!report.watermarked.p_values.empty() && !report.null_texts.p_values.empty()) {
    for (double fpr : {0.01, 0.05, 0.1}) {
      char label[24];
      std::snprintf(label, sizeof label, "tpr@%g", fpr);
      report.tpr[label] = tpr_at_fpr(report.watermarked.p_values, report.null_texts.p_values, fpr);
      if (!report.attacked.p_values.empty())
        report.tpr_attacked[label] =
            tpr_at_fpr(report.attacked.p_values, report.null_texts.p_values, fpr);
    }
  }

  auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  report.perplexity_watermarked_mean = mean_of(report.watermarked.perplexities);
  report.perplexity_null_mean = mean_of(report.null_texts.perplexities);

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["scheme"] = scheme;
  j["key_module"] = key_module;
  j["attack"] = attack;
  j["watermarked"] = condition_json(watermarked);
  j["null"] = condition_json(null_texts);
  j["attacked"] = condition_json(attacked);
  j["tpr"] = tpr;
  j["tpr_attacked"] = tpr_attacked;
  j["perplexity_watermarked_mean"] = perplexity_watermarked_mean;
  j["perplexity_null_mean"] = perplexity_null_mean;
  j["config_echo"] = config_echo;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j.dump(2) + "\n";
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out << "text_id,condition,scheme,key_module,attack,n_tokens,p_value,mean_cost,perplexity\n";
  csv_rows(out, watermarked, "watermarked", *this);
  csv_rows(out, null_texts, "null", *this);
  csv_rows(out, attacked, "attacked", *this);
  return out.str();
}

void emit_report(const ExperimentReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream json_out(out_dir + "/report.json");
    if (!json_out) throw std::runtime_error("cannot write report.json in " + out_dir);
    json_out << report.to_json();
  }
  {
    std::ofstream csv_out(out_dir + "/results.csv");
    if (!csv_out) throw std::runtime_error("cannot write results.csv in " + out_dir);
    csv_out << report.to_csv();
  }
}

}  // namespace semkey
