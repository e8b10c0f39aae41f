#include "hiertopics/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "hiertopics/errors.hpp"
#include "hiertopics/hartm.hpp"
#include "hiertopics/hlda.hpp"
#include "hiertopics/hpam.hpp"
#include "hiertopics/metrics.hpp"
#include "hiertopics/rng.hpp"
#include "json.hpp"

namespace hiertopics {

std::string to_string(SweepModel model) {
  switch (model) {
    case SweepModel::hlda:
      return "hlda";
    case SweepModel::hpam:
      return "hpam";
    case SweepModel::hartm:
      return "hartm";
  }
  throw std::invalid_argument("unknown sweep model");
}

SweepModel sweep_model_from_string(const std::string& name) {
  if (name == "hlda") return SweepModel::hlda;
  if (name == "hpam") return SweepModel::hpam;
  if (name == "hartm") return SweepModel::hartm;
  throw std::invalid_argument("unknown sweep model: " + name);
}

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::non_hierarchical:
      return "non-hierarchical";
    case VerdictKind::two_level:
      return "two-level";
    case VerdictKind::inconclusive:
      return "inconclusive";
  }
  throw std::invalid_argument("unknown verdict kind");
}

void SweepConfig::validate() const {
  if (stage != 1 && stage != 2) throw std::invalid_argument("sweep: stage must be 1 or 2");
  if (etas.empty()) throw std::invalid_argument("sweep: eta list is empty");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0) || !std::isfinite(etas[i]))
      throw std::invalid_argument("sweep: eta must be finite and > 0");
    if (i > 0 && etas[i] <= etas[i - 1])
      throw std::invalid_argument("sweep: eta list must strictly increase");
  }
  if (restarts < 1) throw std::invalid_argument("sweep: restarts must be >= 1");
  if (iterations < 1) throw std::invalid_argument("sweep: iterations must be >= 1");
  if (burn_in >= iterations) throw std::invalid_argument("sweep: burn_in must be < iterations");
  if (!(alpha > 0.0)) throw std::invalid_argument("sweep: alpha must be > 0");
  if (!(tau_link >= 0.0) || !std::isfinite(tau_link))
    throw std::invalid_argument("sweep: tau_link must be finite and >= 0");
  if (model == SweepModel::hlda) {
    if (stage != 1) throw std::invalid_argument("sweep: hlda has no stage 2");
    if (depth < 2) throw std::invalid_argument("sweep: hlda depth must be >= 2");
    if (!(gamma > 0.0)) throw std::invalid_argument("sweep: gamma must be > 0");
    return;
  }
  if (t_range.empty()) throw std::invalid_argument("sweep: T range is empty");
  for (std::size_t i = 0; i < t_range.size(); ++i) {
    if (t_range[i] < 1) throw std::invalid_argument("sweep: T must be >= 1");
    if (i > 0 && t_range[i] <= t_range[i - 1])
      throw std::invalid_argument("sweep: T range must strictly increase");
  }
  if (stage == 2 && fixed_t1 < 1)
    throw std::invalid_argument("sweep: stage 2 requires the stage-1 topic count");
}

std::size_t SweepConfig::rows_per_run() const {
  if (model == SweepModel::hlda) return depth - 1;
  return static_cast<std::size_t>(stage);
}

std::uint64_t sweep_seed(std::uint64_t base, SweepModel model, int stage, double eta,
                         std::size_t t, std::size_t restart) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(model) + 0x243f6a8885a308d3ull);
  h = mix64(h ^ static_cast<std::uint64_t>(stage));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(eta));
  h = mix64(h ^ static_cast<std::uint64_t>(t));
  h = mix64(h ^ static_cast<std::uint64_t>(restart));
  return base ^ h;
}

MinimaResult find_minima(std::span<const CurvePoint> curve, std::size_t window,
                         std::size_t neighborhood) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("find_minima: window must be odd");
  if (neighborhood < 1) throw std::invalid_argument("find_minima: neighborhood must be >= 1");
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].t <= curve[i - 1].t)
      throw std::invalid_argument("find_minima: curve must be sorted by T");

  MinimaResult out;
  std::vector<double> raw;
  for (const auto& point : curve) {
    if (!std::isfinite(point.value)) continue;  // degenerate sentinel
    out.smoothed.push_back(point);
    raw.push_back(point.value);
  }
  const std::size_t n = raw.size();
  if (n == 0) return out;

  const std::size_t half = (window - 1) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += raw[j];
    out.smoothed[i].value = sum / static_cast<double>(hi - lo + 1);
  }

  std::size_t global = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (out.smoothed[i].value < out.smoothed[global].value) global = i;

  std::set<std::size_t> picks{global};
  if (n >= 2 * neighborhood + 1) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const std::size_t lo = i > neighborhood ? i - neighborhood : 0;
      const std::size_t hi = std::min(n - 1, i + neighborhood);
      bool lowest = true;
      for (std::size_t j = lo; j <= hi && lowest; ++j)
        if (j != i && !(out.smoothed[i].value < out.smoothed[j].value)) lowest = false;
      if (lowest) picks.insert(i);
    }
  }
  for (const std::size_t i : picks)
    out.minima.push_back({out.smoothed[i].t, out.smoothed[i].value, i == global});
  return out;
}

StructureVerdict structure_verdict(const MinimaResult& minima, double delta_fraction) {
  StructureVerdict verdict;
  verdict.evidence = minima.minima;
  if (minima.smoothed.empty() || minima.minima.empty()) return verdict;

  std::vector<double> values;
  values.reserve(minima.smoothed.size());
  for (const auto& point : minima.smoothed) values.push_back(point.value);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  verdict.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  verdict.range = values.back() - values.front();
  verdict.delta = delta_fraction * verdict.range;

  for (const auto& minimum : minima.minima) {
    const double depth = verdict.median - minimum.value;
    if (depth > 0.0 && depth >= verdict.delta) verdict.levels.push_back({minimum.t, depth});
  }
  if (verdict.levels.size() == 1)
    verdict.kind = VerdictKind::non_hierarchical;
  else if (verdict.levels.size() == 2)
    verdict.kind = VerdictKind::two_level;
  else
    verdict.kind = VerdictKind::inconclusive;
  return verdict;
}

namespace {

struct Job {
  double eta = 0.0;
  std::size_t t = 0;  // 0 for hlda
  std::size_t restart = 0;
  std::uint64_t seed = 0;
};

std::vector<Job> build_jobs(const SweepConfig& config) {
  std::vector<Job> jobs;
  const std::vector<std::size_t> ts =
      config.model == SweepModel::hlda ? std::vector<std::size_t>{0} : config.t_range;
  for (const double eta : config.etas)
    for (const std::size_t t : ts)
      for (std::size_t r = 0; r < config.restarts; ++r)
        jobs.push_back(
            {eta, t, r, sweep_seed(config.base_seed, config.model, config.stage, eta, t, r)});
  return jobs;
}

void fill_entropy(RunRecord& record, const TopicWordMatrix& phi, int level) {
  record.level = level;
  try {
    const LevelEntropyReport report = renyi_entropy(phi, level);
    record.renyi = report.renyi;
    record.n = report.n;
    record.ptilde = report.ptilde;
  } catch (const std::invalid_argument&) {
    // Fewer than two topics on this level: no entropy is defined.
    record.renyi = std::numeric_limits<double>::infinity();
    record.n = 0;
    record.ptilde = 0.0;
  }
}

std::vector<RunRecord> run_one(const Corpus& corpus, const SweepConfig& config, const Job& job) {
  RunRecord base;
  base.model = config.model;
  base.stage = config.stage;
  base.eta = job.eta;
  base.t = job.t;
  base.restart = job.restart;
  base.seed = job.seed;

  std::vector<RunRecord> rows;
  switch (config.model) {
    case SweepModel::hpam: {
      HpamConfig hc;
      hc.super_topics = config.stage == 1 ? job.t : config.fixed_t1;
      hc.sub_topics = config.stage == 1 ? 1 : job.t;
      hc.eta = job.eta;
      hc.alpha_init = config.alpha;
      hc.iterations = config.iterations;
      hc.burn_in = config.burn_in;
      hc.alpha_optimize_interval = std::min<std::size_t>(25, config.iterations);
      hc.seed = job.seed;
      const HpamResult result = hpam_train(corpus, hc);
      base.loglik = result.ll_trace.back();
      RunRecord row = base;
      fill_entropy(row, result.phi_level2, 2);
      rows.push_back(row);
      if (config.stage == 2) {
        row = base;
        fill_entropy(row, result.phi_level3, 3);
        rows.push_back(row);
      }
      break;
    }
    case SweepModel::hartm: {
      HartmConfig ac;
      ac.level_topics = config.stage == 1 ? std::vector<std::size_t>{job.t}
                                          : std::vector<std::size_t>{config.fixed_t1, job.t};
      ac.tau_link = config.tau_link;
      ac.seed = job.seed;
      ac.em.iterations = config.iterations;
      const HartmResult result = hartm_train(corpus, ac);
      for (std::size_t l = 0; l < result.levels.size(); ++l) {
        RunRecord row = base;
        row.loglik = result.levels[l].ll_trace.back();
        fill_entropy(row, result.levels[l].phi, static_cast<int>(l + 1));
        rows.push_back(row);
      }
      break;
    }
    case SweepModel::hlda: {
      HldaConfig lc;
      lc.depth = static_cast<int>(config.depth);
      lc.gamma = config.gamma;
      lc.eta = job.eta;
      lc.alpha = config.alpha;
      lc.iterations = config.iterations;
      lc.seed = job.seed;
      const HldaResult result = hlda_train(corpus, lc);
      base.loglik = result.ll_trace.back();
      for (std::size_t depth_l = 1; depth_l < static_cast<std::size_t>(lc.depth); ++depth_l) {
        RunRecord row = base;
        row.t = result.level_topics[depth_l];
        fill_entropy(row, result.level_phi[depth_l], static_cast<int>(depth_l + 1));
        rows.push_back(row);
      }
      break;
    }
  }
  return rows;
}

std::size_t cell_t(const RunRecord& record) {
  return record.model == SweepModel::hlda ? 0 : record.t;
}

using GroupKey = std::tuple<std::uint64_t, std::size_t, std::size_t>;  // eta bits, t, restart

GroupKey group_key(double eta, std::size_t t, std::size_t restart) {
  return {std::bit_cast<std::uint64_t>(eta), t, restart};
}

std::set<int> expected_levels(const SweepConfig& config) {
  std::set<int> levels;
  switch (config.model) {
    case SweepModel::hpam:
      levels.insert(2);
      if (config.stage == 2) levels.insert(3);
      break;
    case SweepModel::hartm:
      levels.insert(1);
      if (config.stage == 2) levels.insert(2);
      break;
    case SweepModel::hlda:
      for (std::size_t l = 2; l <= config.depth; ++l) levels.insert(static_cast<int>(l));
      break;
  }
  return levels;
}

}  // namespace

std::vector<RunRecord> complete_runs(std::span<const RunRecord> records,
                                     const SweepConfig& config) {
  const std::set<int> levels = expected_levels(config);
  std::map<GroupKey, std::vector<RunRecord>> groups;
  for (const RunRecord& record : records) {
    if (record.model != config.model || record.stage != config.stage) continue;
    if (std::find(config.etas.begin(), config.etas.end(), record.eta) == config.etas.end())
      continue;
    if (record.restart >= config.restarts) continue;
    const std::size_t t = cell_t(record);
    if (config.model != SweepModel::hlda &&
        std::find(config.t_range.begin(), config.t_range.end(), t) == config.t_range.end())
      continue;
    if (record.seed !=
        sweep_seed(config.base_seed, config.model, config.stage, record.eta, t, record.restart))
      continue;
    groups[group_key(record.eta, t, record.restart)].push_back(record);
  }
  std::vector<RunRecord> kept;
  for (auto& [key, rows] : groups) {
    if (rows.size() != config.rows_per_run()) continue;
    std::set<int> seen;
    for (const RunRecord& row : rows) seen.insert(row.level);
    if (seen != levels) continue;
    for (const RunRecord& row : rows) kept.push_back(row);
  }
  return kept;
}

std::vector<CellStats> aggregate_cells(std::span<const RunRecord> records,
                                       const SweepConfig& config) {
  std::map<std::pair<std::uint64_t, std::size_t>,
           std::map<std::pair<std::size_t, int>, const RunRecord*>>
      grid;
  for (const RunRecord& record : records)
    grid[{std::bit_cast<std::uint64_t>(record.eta), cell_t(record)}][{record.restart,
                                                                      record.level}] = &record;

  const std::vector<std::size_t> ts =
      config.model == SweepModel::hlda ? std::vector<std::size_t>{0} : config.t_range;
  std::vector<CellStats> cells;
  for (const double eta : config.etas) {
    for (const std::size_t t : ts) {
      CellStats cell;
      cell.eta = eta;
      cell.t = t;
      const auto it = grid.find({std::bit_cast<std::uint64_t>(eta), t});
      if (it == grid.end()) {
        cell.failed = true;
        cell.error = "no completed runs";
        cells.push_back(std::move(cell));
        continue;
      }
      std::set<int> levels;
      std::set<std::size_t> restarts;
      for (const auto& [key, record] : it->second) {
        restarts.insert(key.first);
        levels.insert(key.second);
      }
      cell.runs = restarts.size();
      if (cell.runs != config.restarts) {
        cell.failed = true;
        cell.error = "incomplete cell";
      }
      for (const int level : levels) {
        std::vector<double> values;
        for (std::size_t r = 0; r < config.restarts; ++r) {
          const auto row = it->second.find({r, level});
          if (row != it->second.end()) values.push_back(row->second->renyi);
        }
        LevelStats stats;
        stats.level = level;
        double sum = 0.0;
        for (const double v : values) sum += v;
        stats.mean_renyi = sum / static_cast<double>(values.size());
        double sq = 0.0;
        for (const double v : values) sq += (v - stats.mean_renyi) * (v - stats.mean_renyi);
        stats.std_renyi = std::isfinite(stats.mean_renyi)
                              ? std::sqrt(sq / static_cast<double>(values.size()))
                              : std::numeric_limits<double>::quiet_NaN();
        cell.levels.push_back(stats);
      }
      const int deepest = *levels.rbegin();
      double ll_sum = 0.0;
      std::size_t ll_count = 0;
      for (std::size_t r = 0; r < config.restarts; ++r) {
        const auto row = it->second.find({r, deepest});
        if (row != it->second.end()) {
          ll_sum += row->second->loglik;
          ++ll_count;
        }
      }
      cell.mean_loglik = ll_count > 0 ? ll_sum / static_cast<double>(ll_count)
                                      : std::numeric_limits<double>::quiet_NaN();
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

SweepResult run_sweep(const Corpus& corpus, const SweepConfig& config, std::size_t jobs,
                      const RecordSink& sink, const std::vector<RunRecord>* resume) {
  config.validate();
  corpus.validate();

  SweepResult result;
  result.config = config;
  const std::vector<Job> job_list = build_jobs(config);

  std::map<GroupKey, std::vector<RunRecord>> reuse;
  if (resume != nullptr) {
    for (const RunRecord& record : complete_runs(*resume, config))
      reuse[group_key(record.eta, cell_t(record), record.restart)].push_back(record);
  }

  struct Outcome {
    std::vector<RunRecord> records;
    std::string error;
    bool failed = false;
    bool reused = false;
    bool ready = false;
  };
  std::vector<Outcome> outcomes(job_list.size());

  auto execute = [&](std::size_t i) {
    const Job& job = job_list[i];
    Outcome outcome;
    const auto hit = reuse.find(group_key(job.eta, job.t, job.restart));
    if (hit != reuse.end()) {
      outcome.records = hit->second;
      outcome.reused = true;
      return outcome;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome.records = run_one(corpus, config, job);
    } catch (const std::exception& err) {
      outcome.failed = true;
      outcome.error = err.what();
      return outcome;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    for (RunRecord& record : outcome.records) record.runtime_ms = elapsed;
    return outcome;
  };

  auto flush = [&](const Outcome& outcome) {
    if (sink && !outcome.reused && !outcome.failed)
      for (const RunRecord& record : outcome.records) sink(record);
  };

  if (jobs <= 1 || job_list.size() <= 1) {
    for (std::size_t i = 0; i < job_list.size(); ++i) {
      outcomes[i] = execute(i);
      flush(outcomes[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::condition_variable ready_cv;
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(jobs, job_list.size());
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= job_list.size()) return;
          Outcome outcome = execute(i);
          {
            const std::lock_guard<std::mutex> guard(mutex);
            outcomes[i] = std::move(outcome);
            outcomes[i].ready = true;
          }
          ready_cv.notify_all();
        }
      });
    }
    // This thread is the only writer of the sink, in job order.
    for (std::size_t i = 0; i < job_list.size(); ++i) {
      std::unique_lock<std::mutex> lock(mutex);
      ready_cv.wait(lock, [&] { return outcomes[i].ready; });
      lock.unlock();
      flush(outcomes[i]);
    }
    for (std::thread& worker : pool) worker.join();
  }

  std::map<std::pair<std::uint64_t, std::size_t>, std::string> failures;
  for (std::size_t i = 0; i < job_list.size(); ++i) {
    if (outcomes[i].failed) {
      auto& message = failures[{std::bit_cast<std::uint64_t>(job_list[i].eta), job_list[i].t}];
      if (message.empty()) message = outcomes[i].error;
    } else {
      for (RunRecord& record : outcomes[i].records)
        result.records.push_back(std::move(record));
    }
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return std::tuple(a.eta, cell_t(a), a.restart, a.level, a.t) <
                     std::tuple(b.eta, cell_t(b), b.restart, b.level, b.t);
            });

  result.cells = aggregate_cells(result.records, config);
  for (CellStats& cell : result.cells) {
    const auto failure = failures.find({std::bit_cast<std::uint64_t>(cell.eta), cell.t});
    if (failure != failures.end()) {
      cell.failed = true;
      cell.error = failure->second;
    }
  }

  if (config.model == SweepModel::hlda) {
    for (const double eta : config.etas) {
      HldaEtaSummary summary;
      summary.eta = eta;
      for (std::size_t r = 0; r < config.restarts; ++r)
        for (const RunRecord& record : result.records)
          if (record.eta == eta && record.restart == r && record.level == 2)
            summary.level2_counts.push_back(record.t);
      if (!summary.level2_counts.empty()) {
        summary.min_count =
            *std::min_element(summary.level2_counts.begin(), summary.level2_counts.end());
        summary.max_count =
            *std::max_element(summary.level2_counts.begin(), summary.level2_counts.end());
        double sum = 0.0;
        for (const std::size_t count : summary.level2_counts)
          sum += static_cast<double>(count);
        summary.mean_count = sum / static_cast<double>(summary.level2_counts.size());
      }
      result.hlda_summaries.push_back(std::move(summary));
    }
  } else {
    for (const double eta : config.etas) {
      EtaAnalysis analysis;
      analysis.eta = eta;
      std::vector<CurvePoint> curve;
      for (const CellStats& cell : result.cells) {
        if (cell.eta != eta || cell.failed || cell.levels.empty()) continue;
        curve.push_back({cell.t, cell.levels.back().mean_renyi});
      }
      analysis.minima = find_minima(curve);
      analysis.verdict = structure_verdict(analysis.minima);
      result.analyses.push_back(std::move(analysis));
    }
  }
  return result;
}

std::vector<SweepConfig> stage2_from_stage1(const SweepResult& stage1,
                                            std::span<const std::size_t> stage2_t_range,
                                            Stage2Strategy strategy, std::size_t k) {
  if (stage1.config.model == SweepModel::hlda)
    throw std::invalid_argument("stage2_from_stage1: hlda has no stage 2");
  if (stage1.config.stage != 1)
    throw std::invalid_argument("stage2_from_stage1: input must be a stage-1 result");
  if (stage2_t_range.empty())
    throw std::invalid_argument("stage2_from_stage1: stage-2 T range is empty");

  struct Candidate {
    double mean = 0.0;
    std::size_t t = 0;
    double eta = 0.0;
  };
  std::vector<Candidate> candidates;
  for (const CellStats& cell : stage1.cells) {
    if (cell.failed || cell.levels.empty()) continue;
    const double mean = cell.levels.back().mean_renyi;
    if (!std::isfinite(mean)) continue;
    candidates.push_back({mean, cell.t, cell.eta});
  }
  if (candidates.empty())
    throw std::runtime_error("stage2_from_stage1: no usable stage-1 cells");
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tuple(a.mean, a.t, a.eta) < std::tuple(b.mean, b.t, b.eta);
  });

  const std::size_t count = strategy == Stage2Strategy::best ? 1 : std::min(k, candidates.size());
  std::vector<SweepConfig> configs;
  for (std::size_t i = 0; i < count; ++i) {
    SweepConfig config = stage1.config;
    config.stage = 2;
    config.fixed_t1 = candidates[i].t;
    config.etas = {candidates[i].eta};
    config.t_range.assign(stage2_t_range.begin(), stage2_t_range.end());
    configs.push_back(std::move(config));
  }
  return configs;
}

namespace {

std::string format_metric(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

// Raw-log doubles round-trip exactly so means recomputed from the log match
// the reported ones.
std::string format_raw(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

std::string raw_csv_row(const RunRecord& record) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%zu,%zu,%llu,%d,%s,%zu,%s,%s,%lld",
                to_string(record.model).c_str(), record.stage, record.eta, record.t,
                record.restart, static_cast<unsigned long long>(record.seed), record.level,
                format_raw(record.renyi).c_str(), record.n, format_raw(record.ptilde).c_str(),
                format_raw(record.loglik).c_str(), static_cast<long long>(record.runtime_ms));
  return buf;
}

std::string summary_csv_row(const CellStats& cell, const SweepConfig& config) {
  const LevelStats* first = cell.levels.empty() ? nullptr : &cell.levels.front();
  const LevelStats* second = cell.levels.size() > 1 ? &cell.levels[1] : nullptr;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%.6g,%zu,%s,%s,%s,%s,%s",
                to_string(config.model).c_str(), config.stage, cell.eta, cell.t,
                format_metric(first ? first->mean_renyi : nan).c_str(),
                format_metric(first ? first->std_renyi : nan).c_str(),
                format_metric(second ? second->mean_renyi : nan).c_str(),
                format_metric(second ? second->std_renyi : nan).c_str(),
                format_metric(cell.levels.empty() ? nan : cell.mean_loglik).c_str());
  return buf;
}

void write_raw_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write raw log: " + path.string());
  out << kRawCsvHeader << '\n';
  for (const RunRecord& record : records) out << raw_csv_row(record) << '\n';
}

std::vector<RunRecord> read_raw_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read raw log: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRawCsvHeader)
    throw DataError("raw log missing header: " + path.string());
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (fields.size() != 12)
      throw DataError("raw log row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields");
    try {
      RunRecord record;
      record.model = sweep_model_from_string(fields[0]);
      record.stage = std::stoi(fields[1]);
      record.eta = std::stod(fields[2]);
      record.t = std::stoull(fields[3]);
      record.restart = std::stoull(fields[4]);
      record.seed = std::stoull(fields[5]);
      record.level = std::stoi(fields[6]);
      record.renyi = std::stod(fields[7]);
      record.n = std::stoull(fields[8]);
      record.ptilde = std::stod(fields[9]);
      record.loglik = std::stod(fields[10]);
      record.runtime_ms = std::stoll(fields[11]);
      records.push_back(record);
    } catch (const std::exception&) {
      throw DataError("raw log parse error at line " + std::to_string(line_no));
    }
  }
  return records;
}

void write_summary_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write summary: " + path.string());
  out << kSummaryCsvHeader << '\n';
  for (const CellStats& cell : result.cells) out << summary_csv_row(cell, result.config) << '\n';
}

void write_verdict_json(const SweepResult& result, const std::filesystem::path& path) {
  nlohmann::json j;
  j["verdicts"] = nlohmann::json::array();
  for (const EtaAnalysis& analysis : result.analyses) {
    nlohmann::json entry;
    entry["kind"] = to_string(analysis.verdict.kind);
    entry["eta"] = analysis.eta;
    entry["levels"] = nlohmann::json::array();
    for (const LevelEstimate& level : analysis.verdict.levels)
      entry["levels"].push_back({{"T", level.t}, {"depth", level.depth}});
    entry["evidence"] = nlohmann::json::array();
    for (const Minimum& minimum : analysis.verdict.evidence)
      entry["evidence"].push_back(
          {{"T", minimum.t}, {"value", minimum.value}, {"global", minimum.global}});
    entry["config_refs"] = {{"model", to_string(result.config.model)},
                            {"stage", result.config.stage},
                            {"base_seed", result.config.base_seed},
                            {"restarts", result.config.restarts}};
    j["verdicts"].push_back(std::move(entry));
  }
  if (result.config.model == SweepModel::hlda) {
    j["hlda_ranges"] = nlohmann::json::array();
    for (const HldaEtaSummary& summary : result.hlda_summaries)
      j["hlda_ranges"].push_back({{"eta", summary.eta},
                                  {"counts", summary.level2_counts},
                                  {"min", summary.min_count},
                                  {"max", summary.max_count},
                                  {"mean", summary.mean_count}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write verdict: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hiertopics
