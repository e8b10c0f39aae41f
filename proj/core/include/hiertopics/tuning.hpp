#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hiertopics/corpus.hpp"

namespace hiertopics {

enum class SweepModel { hlda, hpam, hartm };

std::string to_string(SweepModel model);
SweepModel sweep_model_from_string(const std::string& name);  // throws std::invalid_argument

struct SweepConfig {
  SweepModel model = SweepModel::hpam;
  int stage = 1;
  std::vector<std::size_t> t_range;  // strictly increasing; ignored by hlda
  std::vector<double> etas;          // strictly increasing
  std::size_t restarts = 6;
  std::size_t fixed_t1 = 0;  // stage 2: level-1 topic count frozen from stage 1
  std::size_t iterations = 200;
  std::size_t burn_in = 100;  // gibbs models only
  std::uint64_t base_seed = 1;
  double alpha = 1.0;     // hpam alpha_init, hlda alpha
  double tau_link = 0.5;  // hartm
  std::size_t depth = 3;  // hlda
  double gamma = 1.0;     // hlda

  void validate() const;  // throws std::invalid_argument

  // Raw-log rows a single run emits: one per reported level.
  std::size_t rows_per_run() const;
};

// Per-run seed: base ^ mix of the cell coordinates; restarts and cells all
// land on distinct streams.
std::uint64_t sweep_seed(std::uint64_t base, SweepModel model, int stage, double eta,
                         std::size_t t, std::size_t restart);

struct RunRecord {
  SweepModel model = SweepModel::hpam;
  int stage = 1;
  double eta = 0.0;
  std::size_t t = 0;  // hlda rows: inferred topic count of the row's level
  std::size_t restart = 0;
  std::uint64_t seed = 0;
  int level = 0;
  double renyi = 0.0;  // +inf marks a level with fewer than two topics
  std::size_t n = 0;
  double ptilde = 0.0;
  double loglik = 0.0;
  std::int64_t runtime_ms = 0;
};

struct LevelStats {
  int level = 0;
  double mean_renyi = 0.0;
  double std_renyi = 0.0;  // population std over restarts
};

struct CellStats {
  double eta = 0.0;
  std::size_t t = 0;  // 0 for hlda cells
  std::vector<LevelStats> levels;
  double mean_loglik = 0.0;  // over the deepest reported level
  std::size_t runs = 0;
  bool failed = false;
  std::string error;
};

struct CurvePoint {
  std::size_t t = 0;
  double value = 0.0;
};

struct Minimum {
  std::size_t t = 0;
  double value = 0.0;  // smoothed
  bool global = false;
};

struct MinimaResult {
  std::vector<CurvePoint> smoothed;  // finite points only
  std::vector<Minimum> minima;       // sorted by t; contains the global
};

// Moving-average smoothing with an edge-truncated window, then the least
// smoothed value as the global minimum plus interior points strictly below
// every neighbor within the edge-truncated k-neighborhood. Non-finite values
// are dropped first; value ties resolve toward the smaller t. Curves shorter
// than 2k+1 report only the global minimum.
MinimaResult find_minima(std::span<const CurvePoint> curve, std::size_t window = 3,
                         std::size_t neighborhood = 2);

enum class VerdictKind { non_hierarchical, two_level, inconclusive };

std::string to_string(VerdictKind kind);

struct LevelEstimate {
  std::size_t t = 0;
  double depth = 0.0;  // median minus minimum value
};

struct StructureVerdict {
  VerdictKind kind = VerdictKind::inconclusive;
  std::vector<LevelEstimate> levels;  // qualifying minima ordered by t
  std::vector<Minimum> evidence;      // all detected minima
  double median = 0.0;
  double range = 0.0;
  double delta = 0.0;
};

// A minimum qualifies when median - value >= delta and > 0, with delta =
// delta_fraction * range of the smoothed curve. One qualifying minimum means
// a flat structure, exactly two mean a two-level hierarchy.
StructureVerdict structure_verdict(const MinimaResult& minima, double delta_fraction = 0.05);

struct EtaAnalysis {
  double eta = 0.0;
  MinimaResult minima;  // over the primary level's mean-renyi curve
  StructureVerdict verdict;
};

struct HldaEtaSummary {
  double eta = 0.0;
  std::vector<std::size_t> level2_counts;  // per restart
  std::size_t min_count = 0;
  std::size_t max_count = 0;
  double mean_count = 0.0;
};

struct SweepResult {
  SweepConfig config;
  std::vector<RunRecord> records;  // sorted by (eta, cell t, restart, level)
  std::vector<CellStats> cells;    // sorted by (eta, t)
  std::vector<EtaAnalysis> analyses;          // hpam and hartm
  std::vector<HldaEtaSummary> hlda_summaries; // hlda only
};

using RecordSink = std::function<void(const RunRecord&)>;

// Executes the (eta, T, restart) grid on a bounded worker pool and aggregates
// cells; individual failures mark their cell and the sweep continues. New
// records reach the sink in deterministic job order; records passed in
// resume are trusted as completed runs and not re-executed.
SweepResult run_sweep(const Corpus& corpus, const SweepConfig& config, std::size_t jobs = 1,
                      const RecordSink& sink = {},
                      const std::vector<RunRecord>* resume = nullptr);

// Cell statistics recomputed from raw records alone.
std::vector<CellStats> aggregate_cells(std::span<const RunRecord> records,
                                       const SweepConfig& config);

// Drops records that do not belong to the config's grid or whose
// (eta, T, restart) group is missing rows, leaving trustworthy resume input.
std::vector<RunRecord> complete_runs(std::span<const RunRecord> records,
                                     const SweepConfig& config);

enum class Stage2Strategy { best, top_k };

// Stage-2 configs fixing (eta*, T1*) at the lowest mean primary-level Renyi
// cells; best takes the single lowest, top_k the k lowest ordered by mean.
std::vector<SweepConfig> stage2_from_stage1(const SweepResult& stage1,
                                            std::span<const std::size_t> stage2_t_range,
                                            Stage2Strategy strategy = Stage2Strategy::best,
                                            std::size_t k = 3);

inline constexpr char kRawCsvHeader[] =
    "model,stage,eta,T,restart,seed,level,renyi,N,Ptilde,loglik,runtime_ms";
inline constexpr char kSummaryCsvHeader[] =
    "model,stage,eta,T,mean_renyi_l1,std_renyi_l1,mean_renyi_l2,std_renyi_l2,mean_loglik";

std::string raw_csv_row(const RunRecord& record);
std::string summary_csv_row(const CellStats& cell, const SweepConfig& config);

void write_raw_csv(std::span<const RunRecord> records, const std::filesystem::path& path);
std::vector<RunRecord> read_raw_csv(const std::filesystem::path& path);  // throws DataError

void write_summary_csv(const SweepResult& result, const std::filesystem::path& path);

// {"verdicts": [{kind, eta, levels: [{T, depth}], config_refs}, ...]}
void write_verdict_json(const SweepResult& result, const std::filesystem::path& path);

}  // namespace hiertopics
