#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "semkey/harness.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

struct ModuleFlags {
  std::string scheme = "expmin";
  std::string key_module = "simkey";
  int k = 4;
  int b = 4;
  int window = 8;
  double top_p = 0.9;
  std::string corpus;
  std::string vocab;
  int embed_dim = 384;
  std::string embed_weighting = "idf";
  int tournament_layers = 3;
  int watermax_drafts = 8;
  int watermax_chunk_len = 16;

  void add_to(CLI::App& cmd, bool with_top_p) {
    cmd.add_option("--scheme", scheme, "Mark scheme: expmin | tournament | watermax");
    cmd.add_option("--key-module", key_module, "Key module: simkey | standard | fixed");
    cmd.add_option("--k", k, "Number of key indices");
    cmd.add_option("--b", b, "Projection bits per key");
    cmd.add_option("--window", window, "Context window in tokens");
    if (with_top_p) cmd.add_option("--top-p", top_p, "Nucleus sampling mass");
    cmd.add_option("--corpus", corpus, "Corpus file (one document per line)");
    cmd.add_option("--vocab", vocab, "Vocabulary file (detect only; unit feature weights)");
    cmd.add_option("--embed-dim", embed_dim, "Embedding dimension");
    cmd.add_option("--embed-weighting", embed_weighting, "Feature weighting: idf | none");
    cmd.add_option("--tournament-layers", tournament_layers, "Tournament knockout layers");
    cmd.add_option("--watermax-drafts", watermax_drafts, "Drafts per chunk");
    cmd.add_option("--watermax-chunk-len", watermax_chunk_len, "Chunk length in tokens");
  }

  semkey::RunConfig to_config() const {
    semkey::RunConfig cfg;
    cfg.scheme = semkey::scheme_from_name(scheme);
    cfg.key_module = semkey::key_module_from_name(key_module);
    cfg.k = k;
    cfg.b = b;
    cfg.window = window;
    cfg.top_p = top_p;
    cfg.corpus_path = corpus;
    cfg.embedder.dimension = embed_dim;
    cfg.embed_weighting = embed_weighting;
    cfg.mark.tournament.m = tournament_layers;
    cfg.mark.watermax.n_drafts = watermax_drafts;
    cfg.mark.watermax.chunk_len = watermax_chunk_len;
    cfg.salt = semkey::resolve_salt("");
    return cfg;
  }
};

int cmd_generate(const ModuleFlags& flags, int len, std::uint64_t seed, const std::string& out) {
  semkey::RunConfig cfg = flags.to_config();
  cfg.text_len = len;
  cfg.seed = seed;
  semkey::Pipeline p = semkey::build_pipeline(cfg);
  semkey::Rng rng(seed);
  const semkey::TokenSeq prompt = semkey::sample_prompt(p.corpus.vocab, rng);
  const semkey::TokenSeq text = semkey::generate(p.lm, *p.keys, cfg.scheme, cfg.mark, prompt,
                                                 cfg.text_len, cfg.top_p, rng);
  write_text_file(out, semkey::detokenize(text, p.corpus.vocab) + "\n");
  return 0;
}

int cmd_detect(const ModuleFlags& flags, const std::string& in, const std::string& out) {
  semkey::DetectionReport report;
  if (!flags.vocab.empty()) {
    if (flags.embed_weighting != "none")
      throw std::invalid_argument("--vocab supplies no corpus counts; use --embed-weighting none");
    const semkey::Vocabulary vocab = semkey::Vocabulary::load(flags.vocab);
    semkey::EmbedderConfig ecfg;
    ecfg.dimension = flags.embed_dim;
    auto embedder = semkey::make_embedder(ecfg, vocab);
    const semkey::Salt salt = semkey::resolve_salt("");
    if (salt.empty())
      throw std::invalid_argument("salt is required (set " + std::string(semkey::kSaltEnvVar) + ")");
    std::unique_ptr<semkey::KeyModule> keys;
    const semkey::TokenId pad = vocab.sentinel_id();
    switch (semkey::key_module_from_name(flags.key_module)) {
      case semkey::KeyModuleKind::kSimKey: {
        semkey::SimKeyParams params{flags.b, flags.k, salt, flags.embed_dim};
        keys = std::make_unique<semkey::SimKeyModule>(embedder, params, flags.window, pad);
        break;
      }
      case semkey::KeyModuleKind::kStandard:
        keys = std::make_unique<semkey::StandardHashKeyModule>(salt, flags.window, pad, flags.k);
        break;
      case semkey::KeyModuleKind::kFixed:
        keys = std::make_unique<semkey::FixedKeyModule>(salt, flags.k);
        break;
    }
    semkey::MarkParams mark;
    mark.tournament.m = flags.tournament_layers;
    mark.watermax.n_drafts = flags.watermax_drafts;
    mark.watermax.chunk_len = flags.watermax_chunk_len;
    const semkey::TokenSeq tokens = semkey::tokenize(read_text_file(in), vocab);
    report = semkey::detect(tokens, *keys, semkey::scheme_from_name(flags.scheme), mark);
  } else {
    semkey::Pipeline p = semkey::build_pipeline(flags.to_config());
    const semkey::TokenSeq tokens = semkey::tokenize(read_text_file(in), p.corpus.vocab);
    report = semkey::detect(tokens, *p.keys, p.config.scheme, p.config.mark);
  }
  const std::string json = report.to_json();
  if (out.empty())
    std::cout << json;
  else
    write_text_file(out, json);
  return 0;
}

int cmd_attack(const ModuleFlags& flags, const std::string& kind, int count, double rate,
               std::uint64_t seed, const std::string& table, const std::string& in,
               const std::string& out) {
  semkey::RunConfig cfg = flags.to_config();
  cfg.attack.kind = semkey::attack_from_name(kind);
  cfg.attack.count = count;
  cfg.attack.rate = rate;
  cfg.attack.seed = seed;
  cfg.synonym_table_path = table;
  if (cfg.salt.empty()) cfg.salt = semkey::salt_from_hex("00");  // attacks never use the salt
  semkey::Pipeline p = semkey::build_pipeline(cfg);
  const semkey::TokenSeq tokens = semkey::tokenize(read_text_file(in), p.corpus.vocab);
  semkey::AttackContext ctx{&p.corpus.vocab, &p.lm, &p.synonyms};
  const semkey::TokenSeq hit = semkey::apply_attack(cfg.attack, tokens, ctx);
  write_text_file(out, semkey::detokenize(hit, p.corpus.vocab) + "\n");
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
  const semkey::RunConfig cfg = semkey::parse_config_file(config_path);
  const semkey::ExperimentReport report = semkey::run_experiment(cfg);
  semkey::emit_report(report, out_dir);
  std::cout << "scheme=" << report.scheme << " key_module=" << report.key_module
            << " median_p_watermarked=" << report.watermarked.median_p
            << " median_p_null=" << report.null_texts.median_p;
  if (!report.attacked.p_values.empty())
    std::cout << " median_p_attacked=" << report.attacked.median_p;
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text watermarking toolkit: semantic keys, keyed samplers, p-value detection"};
  app.require_subcommand(1);

  ModuleFlags gen_flags, det_flags, atk_flags;

  auto* generate = app.add_subcommand("generate", "Generate a watermarked text");
  int gen_len = 64;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen_flags.add_to(*generate, true);
  generate->add_option("--len", gen_len, "Generated tokens");
  generate->add_option("--seed", gen_seed, "Experiment seed");
  generate->add_option("--out", gen_out, "Output text file")->required();

  auto* detect = app.add_subcommand("detect", "Score a text and print a detection report");
  std::string det_in, det_out;
  det_flags.add_to(*detect, false);
  detect->add_option("--in", det_in, "Input text file")->required();
  detect->add_option("--out", det_out, "Write the JSON report here instead of stdout");

  auto* attack = app.add_subcommand("attack", "Perturb a text");
  std::string atk_kind, atk_table, atk_in, atk_out;
  int atk_count = 0;
  double atk_rate = 0.0;
  std::uint64_t atk_seed = 1;
  atk_flags.add_to(*attack, false);
  attack->add_option("--kind", atk_kind, "unrelated_subst | related_subst | synonym_paraphrase")
      ->required();
  attack->add_option("--count", atk_count, "Positions to substitute");
  attack->add_option("--rate", atk_rate, "Per-token replacement probability");
  attack->add_option("--seed", atk_seed, "Attack seed");
  attack->add_option("--table", atk_table, "Synonym table file (default: derive from embedder)");
  attack->add_option("--in", atk_in, "Input text file")->required();
  attack->add_option("--out", atk_out, "Output text file")->required();

  auto* bench = app.add_subcommand("bench", "Run a configured experiment");
  std::string bench_config, bench_out_dir;
  bench->add_option("--config", bench_config, "key=value config file")->required();
  bench->add_option("--out-dir", bench_out_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen_flags, gen_len, gen_seed, gen_out);
    if (detect->parsed()) return cmd_detect(det_flags, det_in, det_out);
    if (attack->parsed())
      return cmd_attack(atk_flags, atk_kind, atk_count, atk_rate, atk_seed, atk_table, atk_in,
                        atk_out);
    if (bench->parsed()) return cmd_bench(bench_config, bench_out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
