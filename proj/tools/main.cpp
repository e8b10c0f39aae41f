#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiertopics/corpus.hpp"
#include "hiertopics/errors.hpp"
#include "hiertopics/flat.hpp"
#include "hiertopics/hartm.hpp"
#include "hiertopics/hlda.hpp"
#include "hiertopics/hpam.hpp"
#include "hiertopics/manifest.hpp"
#include "hiertopics/matrix.hpp"
#include "hiertopics/metrics.hpp"
#include "hiertopics/tuning.hpp"
#include "json.hpp"

namespace ht = hiertopics;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Flag-value parsing shared by the CLI and manifest replay.

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

std::size_t parse_count(const std::string& text, const char* what) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (errno != 0 || end == text.c_str() || *end != '\0')
    throw std::invalid_argument(std::string(what) + ": bad count: " + text);
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& text, const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (errno != 0 || end == text.c_str() || *end != '\0')
    throw std::invalid_argument(std::string(what) + ": bad number: " + text);
  return v;
}

// "lo:hi:step" (step optional, default 1) or an explicit comma list.
std::vector<std::size_t> parse_t_range(const std::string& text) {
  if (text.empty()) return {};
  std::vector<std::size_t> ts;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() < 2 || parts.size() > 3)
      throw std::invalid_argument("--t-range expects lo:hi[:step]");
    const std::size_t lo = parse_count(parts[0], "--t-range");
    const std::size_t hi = parse_count(parts[1], "--t-range");
    const std::size_t step = parts.size() == 3 ? parse_count(parts[2], "--t-range") : 1;
    if (step == 0 || lo > hi) throw std::invalid_argument("--t-range expects lo<=hi, step>=1");
    for (std::size_t t = lo; t <= hi; t += step) ts.push_back(t);
    return ts;
  }
  for (const auto& part : split(text, ',')) ts.push_back(parse_count(part, "--t-range"));
  return ts;
}

std::vector<double> parse_etas(const std::string& text) {
  std::vector<double> etas;
  for (const auto& part : split(text, ',')) etas.push_back(parse_real(part, "--etas"));
  return etas;
}

std::vector<std::size_t> parse_levels(const std::string& text) {
  std::vector<std::size_t> levels;
  for (const auto& part : split(text, ',')) levels.push_back(parse_count(part, "--levels"));
  return levels;
}

std::string join_counts(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_reals_exact(const std::vector<double>& values) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers.

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ht::DataError("cannot create output directory: " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ht::DataError("cannot write: " + path.string());
  return out;
}

void write_matrix_csv(const ht::Matrix& m, const fs::path& path) {
  auto out = open_out(path);
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", m.at(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_phi_csv(const ht::TopicWordMatrix& phi, const fs::path& path) {
  write_matrix_csv(phi.probs, path);
}

// Levels with a single topic sit at the q=1 singularity; report threshold
// stats with a +inf sentinel so the CSV keeps one row per level.
ht::LevelEntropyReport entropy_or_sentinel(const ht::TopicWordMatrix& phi, int level) {
  if (phi.topics >= 2) return ht::renyi_entropy(phi, level);
  ht::LevelEntropyReport report;
  report.level = level;
  report.topics = phi.topics;
  const ht::ThresholdStats stats = ht::threshold_stats(phi);
  report.n = stats.n;
  report.ptilde = stats.ptilde;
  report.q = 1.0;
  const double w = static_cast<double>(phi.vocab);
  report.energy =
      stats.ptilde > 0.0 ? -std::log(stats.ptilde) + 0.0 : std::numeric_limits<double>::infinity();
  report.shannon = stats.n > 0 ? std::log(static_cast<double>(stats.n) / w)
                               : -std::numeric_limits<double>::infinity();
  report.free_energy = report.energy - report.shannon;
  report.renyi = std::numeric_limits<double>::infinity();
  report.degenerate = true;
  return report;
}

void emit_entropy(const std::vector<ht::LevelEntropyReport>& reports, const fs::path& path) {
  auto out = open_out(path);
  out << ht::kLevelEntropyCsvHeader << '\n';
  std::cout << ht::kLevelEntropyCsvHeader << '\n';
  for (const auto& report : reports) {
    const std::string row = ht::level_entropy_csv_row(report);
    out << row << '\n';
    std::cout << row << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifest <-> sweep config.

ht::RunManifest manifest_for_sweep(const ht::SweepConfig& config) {
  ht::RunManifest m;
  m.command = "sweep";
  m.seed = config.base_seed;
  m.set("model", ht::to_string(config.model));
  m.set("stage", static_cast<std::int64_t>(config.stage));
  m.set("t_range", join_counts(config.t_range));
  m.set("etas", join_reals_exact(config.etas));
  m.set("restarts", static_cast<std::uint64_t>(config.restarts));
  m.set("fixed_t1", static_cast<std::uint64_t>(config.fixed_t1));
  m.set("iterations", static_cast<std::uint64_t>(config.iterations));
  m.set("burn_in", static_cast<std::uint64_t>(config.burn_in));
  m.set("alpha", config.alpha);
  m.set("tau_link", config.tau_link);
  m.set("depth", static_cast<std::uint64_t>(config.depth));
  m.set("gamma", config.gamma);
  return m;
}

ht::SweepConfig sweep_config_from_manifest(const ht::RunManifest& m) {
  ht::SweepConfig config;
  config.model = ht::sweep_model_from_string(m.get("model"));
  config.stage = static_cast<int>(m.get_i64("stage"));
  config.t_range = parse_t_range(m.get("t_range"));
  config.etas = parse_etas(m.get("etas"));
  config.restarts = m.get_u64("restarts");
  config.fixed_t1 = m.get_u64("fixed_t1");
  config.iterations = m.get_u64("iterations");
  config.burn_in = m.get_u64("burn_in");
  config.base_seed = m.seed;
  config.alpha = m.get_double("alpha");
  config.tau_link = m.get_double("tau_link");
  config.depth = m.get_u64("depth");
  config.gamma = m.get_double("gamma");
  return config;
}

// Returns true when the flag was given on the command line (beats --config).
bool given(const CLI::App* cmd, const std::string& flag) { return cmd->count(flag) > 0; }

struct ConfigLayer {
  const CLI::App* cmd = nullptr;
  ht::RunManifest manifest;
  bool loaded = false;

  void load(const std::string& path) {
    if (path.empty()) return;
    manifest = ht::read_manifest(path);
    loaded = true;
  }
  void text(const std::string& flag, const std::string& key, std::string& value) const {
    if (loaded && !given(cmd, flag) && manifest.has(key)) value = manifest.get(key);
  }
  void count(const std::string& flag, const std::string& key, std::size_t& value) const {
    if (loaded && !given(cmd, flag) && manifest.has(key)) value = manifest.get_u64(key);
  }
  void integer(const std::string& flag, const std::string& key, int& value) const {
    if (loaded && !given(cmd, flag) && manifest.has(key))
      value = static_cast<int>(manifest.get_i64(key));
  }
  void real(const std::string& flag, const std::string& key, double& value) const {
    if (loaded && !given(cmd, flag) && manifest.has(key)) value = manifest.get_double(key);
  }
  void seed_field(const std::string& flag, std::uint64_t& value) const {
    if (loaded && !given(cmd, flag)) value = manifest.seed;
  }
};

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  std::string config_path;
  std::string input;
  std::string format = "plaintext";
  std::string vocab;
  std::size_t min_count = 1;
  std::string out_dir;
};

int run_ingest(const CLI::App* cmd, IngestArgs& args) {
  ConfigLayer cfg{cmd};
  cfg.load(args.config_path);
  cfg.text("--input", "input", args.input);
  cfg.text("--format", "format", args.format);
  cfg.text("--vocab", "vocab", args.vocab);
  cfg.count("--min-count", "min_count", args.min_count);
  cfg.text("--out", "out", args.out_dir);
  if (args.input.empty() || args.out_dir.empty())
    throw std::invalid_argument("ingest: --input and --out are required");

  ht::LoadReport report;
  ht::Corpus corpus;
  if (args.format == "plaintext") {
    corpus = ht::load_plaintext(args.input, args.min_count, &report);
  } else if (args.format == "uci") {
    if (args.vocab.empty()) throw std::invalid_argument("ingest: uci format needs --vocab");
    corpus = ht::load_uci_bow(args.input, args.vocab);
  } else {
    throw std::invalid_argument("ingest: unknown format: " + args.format);
  }

  ensure_dir(args.out_dir);
  const fs::path out = args.out_dir;
  ht::write_uci_bow(corpus, out / "corpus.docword", out / "corpus.vocab");

  nlohmann::json histogram = nlohmann::json::object();
  {
    // count-of-counts: how many terms occur exactly k times corpus-wide
    std::map<std::uint64_t, std::size_t> buckets;
    for (const std::uint64_t f : corpus.term_frequencies()) ++buckets[f];
    for (const auto& [count, terms] : buckets) histogram[std::to_string(count)] = terms;
  }
  nlohmann::json stats{{"documents", corpus.num_documents()},
                       {"vocabulary", corpus.vocab_size()},
                       {"total_tokens", corpus.total_tokens},
                       {"dropped_documents", report.dropped_documents},
                       {"dropped_terms", report.dropped_terms},
                       {"term_count_histogram", histogram}};
  open_out(out / "stats.json") << stats.dump(2) << '\n';

  ht::RunManifest manifest;
  manifest.command = "ingest";
  manifest.corpus_fingerprint = ht::corpus_fingerprint(corpus);
  manifest.created_at = ht::current_utc_timestamp();
  manifest.set("input", args.input);
  manifest.set("format", args.format);
  if (!args.vocab.empty()) manifest.set("vocab", args.vocab);
  manifest.set("min_count", static_cast<std::uint64_t>(args.min_count));
  manifest.set("out", args.out_dir);
  ht::write_manifest(manifest, out / "manifest.txt");

  std::cout << "ingested " << corpus.num_documents() << " documents, vocabulary "
            << corpus.vocab_size() << ", tokens " << corpus.total_tokens << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config_path;
  std::size_t parents = 5;
  std::size_t children = 3;
  double share = 0.3;
  std::size_t docs = 2000;
  std::size_t doc_len = 80;
  std::size_t vocab = 3000;
  double noise = 0.05;
  std::uint64_t seed = 7;
  std::string out_dir;
};

int run_synth(const CLI::App* cmd, SynthArgs& args) {
  ConfigLayer cfg{cmd};
  cfg.load(args.config_path);
  cfg.count("--parents", "parents", args.parents);
  cfg.count("--children", "children", args.children);
  cfg.real("--share", "share", args.share);
  cfg.count("--docs", "docs", args.docs);
  cfg.count("--doc-len", "doc_len", args.doc_len);
  cfg.count("--vocab-size", "vocab_size", args.vocab);
  cfg.real("--noise", "noise", args.noise);
  cfg.seed_field("--seed", args.seed);
  cfg.text("--out", "out", args.out_dir);
  if (args.out_dir.empty()) throw std::invalid_argument("synth: --out is required");

  const ht::SyntheticSpec spec{static_cast<int>(args.parents), static_cast<int>(args.children),
                               args.share};
  auto [corpus, planted] =
      ht::generate_synthetic(spec, args.docs, args.doc_len, args.vocab, args.noise, args.seed);

  ensure_dir(args.out_dir);
  const fs::path out = args.out_dir;
  ht::write_uci_bow(corpus, out / "corpus.docword", out / "corpus.vocab");
  ht::write_labels_json(planted, out / "labels.json");

  ht::RunManifest manifest;
  manifest.command = "synth";
  manifest.seed = args.seed;
  manifest.corpus_fingerprint = ht::corpus_fingerprint(corpus);
  manifest.created_at = ht::current_utc_timestamp();
  manifest.set("parents", static_cast<std::uint64_t>(args.parents));
  manifest.set("children", static_cast<std::uint64_t>(args.children));
  manifest.set("share", args.share);
  manifest.set("docs", static_cast<std::uint64_t>(args.docs));
  manifest.set("doc_len", static_cast<std::uint64_t>(args.doc_len));
  manifest.set("vocab_size", static_cast<std::uint64_t>(args.vocab));
  manifest.set("noise", args.noise);
  manifest.set("out", args.out_dir);
  ht::write_manifest(manifest, out / "manifest.txt");

  std::cout << "generated " << corpus.num_documents() << " documents over "
            << planted.num_parents() << " parent / " << planted.num_children()
            << " child topics, block size " << planted.block_size << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_path;
  std::string corpus_path;
  std::string vocab_path;
  std::string model = "lda";
  std::size_t t = 10;
  std::size_t t1 = 1;
  std::size_t t2 = 1;
  std::string levels_text = "5,15";
  std::size_t depth = 3;
  double gamma = 1.0;
  double alpha = 1.0;
  double eta = 0.2;
  double tau_link = 0.5;
  double sparsing = 0.0;
  std::size_t iterations = 200;
  std::size_t burn_in = 100;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_train(const CLI::App* cmd, TrainArgs& args) {
  ConfigLayer cfg{cmd};
  cfg.load(args.config_path);
  cfg.text("--corpus", "corpus", args.corpus_path);
  cfg.text("--vocab", "vocab", args.vocab_path);
  cfg.text("--model", "model", args.model);
  cfg.count("--t", "t", args.t);
  cfg.count("--t1", "t1", args.t1);
  cfg.count("--t2", "t2", args.t2);
  cfg.text("--levels", "levels", args.levels_text);
  cfg.count("--depth", "depth", args.depth);
  cfg.real("--gamma", "gamma", args.gamma);
  cfg.real("--alpha", "alpha", args.alpha);
  cfg.real("--eta", "eta", args.eta);
  cfg.real("--tau-link", "tau_link", args.tau_link);
  cfg.real("--sparsing", "sparsing", args.sparsing);
  cfg.count("--iterations", "iterations", args.iterations);
  cfg.count("--burn-in", "burn_in", args.burn_in);
  cfg.seed_field("--seed", args.seed);
  cfg.text("--out", "out", args.out_dir);
  if (!given(cmd, "--burn-in") && !cfg.manifest.has("burn_in") && args.burn_in >= args.iterations)
    args.burn_in = args.iterations / 2;  // keep the default usable for short runs
  if (args.corpus_path.empty() || args.vocab_path.empty() || args.out_dir.empty())
    throw std::invalid_argument("train: --corpus, --vocab and --out are required");
  const bool known = args.model == "lda" || args.model == "em" || args.model == "hlda" ||
                     args.model == "hpam" || args.model == "hartm";
  if (!known) throw std::invalid_argument("train: unknown model: " + args.model);

  const ht::Corpus corpus = ht::load_uci_bow(args.corpus_path, args.vocab_path);
  ensure_dir(args.out_dir);
  const fs::path out = args.out_dir;
  std::vector<ht::LevelEntropyReport> entropy;

  if (args.model == "lda" || args.model == "em") {
    ht::FlatModelConfig config;
    config.topics = args.t;
    config.alpha = args.alpha;
    config.eta = args.eta;
    config.iterations = args.iterations;
    config.burn_in = args.burn_in;
    config.seed = args.seed;
    config.sparsing_strength = args.sparsing;
    if (args.model == "lda") {
      auto [phi, theta] = ht::lda_train(corpus, config);
      write_phi_csv(phi, out / "phi.csv");
      write_matrix_csv(theta.probs, out / "theta.csv");
      entropy.push_back(entropy_or_sentinel(phi, 1));
    } else {
      const ht::EmResult result = ht::em_train(corpus, config);
      write_phi_csv(result.phi, out / "phi.csv");
      write_matrix_csv(result.theta.probs, out / "theta.csv");
      entropy.push_back(entropy_or_sentinel(result.phi, 1));
    }
  } else if (args.model == "hpam") {
    ht::HpamConfig config;
    config.super_topics = args.t1;
    config.sub_topics = args.t2;
    config.eta = args.eta;
    config.alpha_init = args.alpha;
    config.iterations = args.iterations;
    config.burn_in = args.burn_in;
    config.seed = args.seed;
    const ht::HpamResult result = ht::hpam_train(corpus, config);
    write_phi_csv(result.phi_full, out / "phi_full.csv");
    write_phi_csv(result.phi_level2, out / "phi_level2.csv");
    write_phi_csv(result.phi_level3, out / "phi_level3.csv");
    write_matrix_csv(result.theta.probs, out / "theta.csv");
    nlohmann::json alphas{{"alpha0", result.alpha0}, {"alpha_sub", result.alpha_sub}};
    open_out(out / "alpha.json") << alphas.dump(2) << '\n';
    entropy.push_back(entropy_or_sentinel(result.phi_level2, 2));
    entropy.push_back(entropy_or_sentinel(result.phi_level3, 3));
  } else if (args.model == "hartm") {
    ht::HartmConfig config;
    config.level_topics = parse_levels(args.levels_text);
    config.tau_link = args.tau_link;
    config.seed = args.seed;
    config.em.iterations = args.iterations;
    config.em.sparsing_strength = args.sparsing;
    const ht::HartmResult result = ht::hartm_train(corpus, config);
    for (std::size_t l = 0; l < result.levels.size(); ++l) {
      const auto& level = result.levels[l];
      const std::string tag = "level" + std::to_string(l + 1);
      write_phi_csv(level.phi, out / ("phi_" + tag + ".csv"));
      write_matrix_csv(level.theta.probs, out / ("theta_" + tag + ".csv"));
      if (l > 0) ht::write_psi_csv(level.psi, out / ("psi_" + tag + ".csv"));
      entropy.push_back(entropy_or_sentinel(level.phi, static_cast<int>(l) + 1));
    }
    ht::write_hierarchy_json(result, out / "hierarchy.json");
    for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << '\n';
  } else {  // hlda
    ht::HldaConfig config;
    config.depth = static_cast<int>(args.depth);
    config.gamma = args.gamma;
    config.eta = args.eta;
    config.alpha = args.alpha;
    config.iterations = args.iterations;
    config.seed = args.seed;
    const ht::HldaResult result = ht::hlda_train(corpus, config);
    for (std::size_t l = 0; l < result.level_phi.size(); ++l) {
      const std::string tag = "level" + std::to_string(l + 1);
      write_phi_csv(result.level_phi[l], out / ("phi_" + tag + ".csv"));
      if (l >= 1) entropy.push_back(entropy_or_sentinel(result.level_phi[l], static_cast<int>(l) + 1));
    }
    ht::write_tree_json(result, corpus.vocabulary, args.eta, out / "tree.json");
  }

  emit_entropy(entropy, out / "entropy.csv");

  ht::RunManifest manifest;
  manifest.command = "train";
  manifest.seed = args.seed;
  manifest.corpus_fingerprint = ht::corpus_fingerprint(corpus);
  manifest.created_at = ht::current_utc_timestamp();
  manifest.set("corpus", args.corpus_path);
  manifest.set("vocab", args.vocab_path);
  manifest.set("model", args.model);
  manifest.set("t", static_cast<std::uint64_t>(args.t));
  manifest.set("t1", static_cast<std::uint64_t>(args.t1));
  manifest.set("t2", static_cast<std::uint64_t>(args.t2));
  manifest.set("levels", args.levels_text);
  manifest.set("depth", static_cast<std::uint64_t>(args.depth));
  manifest.set("gamma", args.gamma);
  manifest.set("alpha", args.alpha);
  manifest.set("eta", args.eta);
  manifest.set("tau_link", args.tau_link);
  manifest.set("sparsing", args.sparsing);
  manifest.set("iterations", static_cast<std::uint64_t>(args.iterations));
  manifest.set("burn_in", static_cast<std::uint64_t>(args.burn_in));
  manifest.set("out", args.out_dir);
  ht::write_manifest(manifest, out / "manifest.txt");
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string config_path;
  std::string corpus_path;
  std::string vocab_path;
  std::string model = "hpam";
  int stage = 1;
  std::string t_range_text;
  std::string etas_text = "0.2";
  std::size_t restarts = 6;
  std::size_t fixed_t1 = 0;
  std::size_t iterations = 200;
  std::size_t burn_in = 100;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  double alpha = 1.0;
  double tau_link = 0.5;
  std::size_t depth = 3;
  double gamma = 1.0;
  std::string from_dir;
  std::string out_dir;
  bool resume = false;
};

ht::SweepResult load_sweep_dir(const fs::path& dir, ht::SweepConfig* config_out) {
  const ht::RunManifest manifest = ht::read_manifest(dir / "manifest.txt");
  ht::SweepResult result;
  result.config = sweep_config_from_manifest(manifest);
  result.records = ht::read_raw_csv(dir / "raw.csv");
  result.cells = ht::aggregate_cells(result.records, result.config);
  if (config_out) *config_out = result.config;
  return result;
}

int run_sweep_cmd(const CLI::App* cmd, SweepArgs& args) {
  ConfigLayer cfg{cmd};
  cfg.load(args.config_path);
  cfg.text("--corpus", "corpus", args.corpus_path);
  cfg.text("--vocab", "vocab", args.vocab_path);
  cfg.text("--model", "model", args.model);
  cfg.integer("--stage", "stage", args.stage);
  cfg.text("--t-range", "t_range", args.t_range_text);
  cfg.text("--etas", "etas", args.etas_text);
  cfg.count("--restarts", "restarts", args.restarts);
  cfg.count("--fixed-t1", "fixed_t1", args.fixed_t1);
  cfg.count("--iterations", "iterations", args.iterations);
  cfg.count("--burn-in", "burn_in", args.burn_in);
  cfg.seed_field("--seed", args.seed);
  cfg.count("--jobs", "jobs", args.jobs);
  cfg.real("--alpha", "alpha", args.alpha);
  cfg.real("--tau-link", "tau_link", args.tau_link);
  cfg.count("--depth", "depth", args.depth);
  cfg.real("--gamma", "gamma", args.gamma);
  cfg.text("--out", "out", args.out_dir);
  if (!given(cmd, "--burn-in") && !cfg.manifest.has("burn_in") && args.burn_in >= args.iterations)
    args.burn_in = args.iterations / 2;  // keep the default usable for short runs
  if (args.out_dir.empty()) throw std::invalid_argument("sweep: --out is required");

  ht::SweepConfig config;
  if (!args.from_dir.empty()) {
    // stage 2 derived from a finished stage-1 sweep
    ht::SweepConfig stage1_config;
    const ht::SweepResult stage1 = load_sweep_dir(args.from_dir, &stage1_config);
    if (args.t_range_text.empty())
      throw std::invalid_argument("sweep: --from needs --t-range for the next level");
    const auto derived = ht::stage2_from_stage1(stage1, parse_t_range(args.t_range_text));
    config = derived.front();
    if (given(cmd, "--restarts")) config.restarts = args.restarts;
    if (given(cmd, "--iterations")) config.iterations = args.iterations;
    if (given(cmd, "--burn-in")) config.burn_in = args.burn_in;
    if (given(cmd, "--seed")) config.base_seed = args.seed;
    if (args.corpus_path.empty()) {
      const ht::RunManifest prev = ht::read_manifest(fs::path(args.from_dir) / "manifest.txt");
      args.corpus_path = prev.get("corpus");
      args.vocab_path = prev.get("vocab");
    }
  } else {
    config.model = ht::sweep_model_from_string(args.model);
    config.stage = args.stage;
    config.t_range = parse_t_range(args.t_range_text);
    config.etas = parse_etas(args.etas_text);
    config.restarts = args.restarts;
    config.fixed_t1 = args.fixed_t1;
    config.iterations = args.iterations;
    config.burn_in = args.burn_in;
    config.base_seed = args.seed;
    config.alpha = args.alpha;
    config.tau_link = args.tau_link;
    config.depth = args.depth;
    config.gamma = args.gamma;
  }
  config.validate();
  if (args.corpus_path.empty() || args.vocab_path.empty())
    throw std::invalid_argument("sweep: --corpus and --vocab are required");

  const ht::Corpus corpus = ht::load_uci_bow(args.corpus_path, args.vocab_path);
  const std::string fingerprint = ht::corpus_fingerprint(corpus);
  if (cfg.loaded && !cfg.manifest.corpus_fingerprint.empty() &&
      cfg.manifest.corpus_fingerprint != fingerprint) {
    throw ht::DataError("sweep: corpus fingerprint mismatch against config manifest (" +
                        fingerprint + " vs " + cfg.manifest.corpus_fingerprint + ")");
  }

  ensure_dir(args.out_dir);
  const fs::path out = args.out_dir;
  const fs::path raw_path = out / "raw.csv";

  std::vector<ht::RunRecord> previous;
  if (args.resume && fs::exists(raw_path)) previous = ht::read_raw_csv(raw_path);
  const std::vector<ht::RunRecord> kept = ht::complete_runs(previous, config);

  // Stream rows as they complete so an interrupted sweep can resume later.
  std::ofstream raw(raw_path);
  if (!raw) throw ht::DataError("cannot write: " + raw_path.string());
  raw << ht::kRawCsvHeader << '\n';
  for (const auto& record : kept) raw << ht::raw_csv_row(record) << '\n';
  raw.flush();
  const ht::RecordSink sink = [&raw](const ht::RunRecord& record) {
    raw << ht::raw_csv_row(record) << '\n';
    raw.flush();
  };
  const ht::SweepResult result =
      ht::run_sweep(corpus, config, args.jobs, sink, previous.empty() ? nullptr : &previous);
  raw.close();

  // Canonical row order for the final artifact (streaming order is job order).
  ht::write_raw_csv(result.records, raw_path);
  ht::write_summary_csv(result, out / "summary.csv");
  ht::write_verdict_json(result, out / "verdict.json");

  ht::RunManifest manifest = manifest_for_sweep(config);
  manifest.corpus_fingerprint = fingerprint;
  manifest.created_at = ht::current_utc_timestamp();
  manifest.set("corpus", args.corpus_path);
  manifest.set("vocab", args.vocab_path);
  manifest.set("jobs", static_cast<std::uint64_t>(args.jobs));
  manifest.set("out", args.out_dir);
  ht::write_manifest(manifest, out / "manifest.txt");

  for (const auto& analysis : result.analyses) {
    std::cout << "eta=" << analysis.eta << " verdict=" << ht::to_string(analysis.verdict.kind);
    for (const auto& level : analysis.verdict.levels) std::cout << " T=" << level.t;
    std::cout << '\n';
  }
  for (const auto& summary : result.hlda_summaries) {
    std::cout << "eta=" << summary.eta << " level-2 topics " << summary.min_count << ".."
              << summary.max_count << " mean " << summary.mean_count << '\n';
  }
  std::size_t failed = 0;
  for (const auto& cell : result.cells) failed += cell.failed ? 1 : 0;
  if (failed > 0) std::cerr << failed << " cell(s) failed\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string from_dir;
  std::string out_dir;
};

std::string eta_tag(double eta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", eta);
  return buf;
}

int run_report(ReportArgs& args) {
  if (args.from_dir.empty() || args.out_dir.empty())
    throw std::invalid_argument("report: --from and --out are required");
  ht::SweepConfig config;
  ht::SweepResult result = load_sweep_dir(args.from_dir, &config);
  // Rebuild the per-eta analyses exactly as run_sweep would.
  const ht::RunManifest manifest = ht::read_manifest(fs::path(args.from_dir) / "manifest.txt");

  ensure_dir(args.out_dir);
  const fs::path out = args.out_dir;
  const std::string corpus_name = manifest.has("corpus")
                                      ? fs::path(manifest.get("corpus")).filename().string()
                                      : manifest.corpus_fingerprint;

  auto md = open_out(out / "summary.md");
  if (config.model == ht::SweepModel::hlda) {
    md << "| corpus | eta | level-2 min | level-2 max | level-2 mean |\n";
    md << "|---|---|---|---|---|\n";
  } else {
    md << "| corpus | eta | T at minimum | mean minimum S^R |\n";
    md << "|---|---|---|---|\n";
  }

  for (const double eta : config.etas) {
    const std::string tag = eta_tag(eta);
    auto curve = open_out(out / ("curve_eta_" + tag + ".csv"));
    curve << "T,mean_renyi,std_renyi,mean_loglik\n";
    std::vector<ht::CurvePoint> points;
    char buf[128];
    for (const auto& cell : result.cells) {
      if (cell.eta != eta || cell.failed || cell.levels.empty()) continue;
      const auto& deepest = cell.levels.back();
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f", cell.t, deepest.mean_renyi,
                    deepest.std_renyi, cell.mean_loglik);
      curve << buf << '\n';
      if (std::isfinite(deepest.mean_renyi)) points.push_back({cell.t, deepest.mean_renyi});
    }
    if (config.model == ht::SweepModel::hlda) {
      // Cells carry t=0; ranges come from the per-run level-2 records.
      std::vector<std::size_t> counts;
      for (const auto& record : result.records)
        if (record.eta == eta && record.level == 2) counts.push_back(record.t);
      if (counts.empty()) continue;
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      double mean = 0.0;
      for (const std::size_t c : counts) mean += static_cast<double>(c);
      mean /= static_cast<double>(counts.size());
      std::snprintf(buf, sizeof buf, "| %s | %s | %zu | %zu | %.2f |", corpus_name.c_str(),
                    tag.c_str(), *lo, *hi, mean);
      md << buf << '\n';
      continue;
    }
    if (points.empty()) continue;
    const ht::MinimaResult minima = ht::find_minima(points);
    for (const auto& minimum : minima.minima) {
      if (!minimum.global) continue;
      std::snprintf(buf, sizeof buf, "| %s | %s | %zu | %.6f |", corpus_name.c_str(), tag.c_str(),
                    minimum.t, minimum.value);
      md << buf << '\n';
    }
  }
  std::cout << "report written to " << args.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical topic model toolkit"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand("ingest", "load a corpus and write UCI artifacts");
  ingest->add_option("--config", ingest_args.config_path, "key=value config file");
  ingest->add_option("--input", ingest_args.input, "input corpus file");
  ingest->add_option("--format", ingest_args.format, "plaintext or uci");
  ingest->add_option("--vocab", ingest_args.vocab, "vocabulary file (uci format)");
  ingest->add_option("--min-count", ingest_args.min_count, "minimum corpus-wide term count");
  ingest->add_option("--out", ingest_args.out_dir, "output directory");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a corpus with planted topics");
  synth->add_option("--config", synth_args.config_path, "key=value config file");
  synth->add_option("--parents", synth_args.parents, "level-1 topic count");
  synth->add_option("--children", synth_args.children, "children per parent");
  synth->add_option("--share", synth_args.share, "parent block token share");
  synth->add_option("--docs", synth_args.docs, "documents");
  synth->add_option("--doc-len", synth_args.doc_len, "tokens per document");
  synth->add_option("--vocab-size", synth_args.vocab, "vocabulary size");
  synth->add_option("--noise", synth_args.noise, "uniform noise share");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--out", synth_args.out_dir, "output directory");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train one model and dump its artifacts");
  train->add_option("--config", train_args.config_path, "key=value config file");
  train->add_option("--corpus", train_args.corpus_path, "UCI docword file");
  train->add_option("--vocab", train_args.vocab_path, "UCI vocabulary file");
  train->add_option("--model", train_args.model, "lda, em, hlda, hpam or hartm");
  train->add_option("--t", train_args.t, "topic count (lda/em)");
  train->add_option("--t1", train_args.t1, "hpam super-topic count");
  train->add_option("--t2", train_args.t2, "hpam sub-topic count");
  train->add_option("--levels", train_args.levels_text, "hartm per-level topic counts");
  train->add_option("--depth", train_args.depth, "hlda tree depth");
  train->add_option("--gamma", train_args.gamma, "hlda nCRP concentration");
  train->add_option("--alpha", train_args.alpha, "doc-topic smoothing / hpam alpha init");
  train->add_option("--eta", train_args.eta, "topic-word smoothing");
  train->add_option("--tau-link", train_args.tau_link, "hartm parent link weight");
  train->add_option("--sparsing", train_args.sparsing, "EM sparsing strength");
  train->add_option("--iterations", train_args.iterations, "training iterations");
  train->add_option("--burn-in", train_args.burn_in, "gibbs burn-in iterations");
  train->add_option("--seed", train_args.seed, "model seed");
  train->add_option("--out", train_args.out_dir, "output directory");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "staged grid sweep with entropy analysis");
  sweep->add_option("--config", sweep_args.config_path, "key=value config file (or manifest)");
  sweep->add_option("--corpus", sweep_args.corpus_path, "UCI docword file");
  sweep->add_option("--vocab", sweep_args.vocab_path, "UCI vocabulary file");
  sweep->add_option("--model", sweep_args.model, "hlda, hpam or hartm");
  sweep->add_option("--stage", sweep_args.stage, "1 or 2");
  sweep->add_option("--t-range", sweep_args.t_range_text, "lo:hi[:step] or comma list");
  sweep->add_option("--etas", sweep_args.etas_text, "comma list of eta values");
  sweep->add_option("--restarts", sweep_args.restarts, "runs per cell");
  sweep->add_option("--fixed-t1", sweep_args.fixed_t1, "stage-2 frozen level-1 topic count");
  sweep->add_option("--iterations", sweep_args.iterations, "iterations per run");
  sweep->add_option("--burn-in", sweep_args.burn_in, "gibbs burn-in iterations");
  sweep->add_option("--seed", sweep_args.seed, "base seed");
  sweep->add_option("--jobs", sweep_args.jobs, "worker threads");
  sweep->add_option("--alpha", sweep_args.alpha, "doc-topic smoothing / hpam alpha init");
  sweep->add_option("--tau-link", sweep_args.tau_link, "hartm parent link weight");
  sweep->add_option("--depth", sweep_args.depth, "hlda depth");
  sweep->add_option("--gamma", sweep_args.gamma, "hlda nCRP concentration");
  sweep->add_option("--from", sweep_args.from_dir, "stage-1 sweep directory to build on");
  sweep->add_option("--out", sweep_args.out_dir, "output directory");
  sweep->add_flag("--resume", sweep_args.resume, "reuse completed runs from raw.csv");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "plot-ready curves from a sweep directory");
  report->add_option("--from", report_args.from_dir, "sweep output directory");
  report->add_option("--out", report_args.out_dir, "report output directory");

  int code = 0;
  ingest->callback([&] { code = run_ingest(ingest, ingest_args); });
  synth->callback([&] { code = run_synth(synth, synth_args); });
  train->callback([&] { code = run_train(train, train_args); });
  sweep->callback([&] { code = run_sweep_cmd(sweep, sweep_args); });
  report->callback([&] { code = run_report(report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const ht::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return code;
}
