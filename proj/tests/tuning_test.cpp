#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "hiertopics/corpus.hpp"
#include "hiertopics/errors.hpp"
#include "hiertopics/tuning.hpp"
#include "json.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<hiertopics::CurvePoint> make_curve(std::size_t first_t,
                                               const std::vector<double>& values) {
  std::vector<hiertopics::CurvePoint> curve;
  for (std::size_t i = 0; i < values.size(); ++i) curve.push_back({first_t + i, values[i]});
  return curve;
}

bool same_ignoring_runtime(const hiertopics::RunRecord& a, const hiertopics::RunRecord& b) {
  return a.model == b.model && a.stage == b.stage && a.eta == b.eta && a.t == b.t &&
         a.restart == b.restart && a.seed == b.seed && a.level == b.level && a.renyi == b.renyi &&
         a.n == b.n && a.ptilde == b.ptilde && a.loglik == b.loglik;
}

hiertopics::Corpus tiny_corpus(std::uint64_t seed) {
  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 20, 15, 60, 0.1, seed);
  return corpus;
}

}  // namespace

TEST_CASE("sweep config validation rejects malformed grids") {
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hpam;
  config.t_range = {2, 4, 6};
  config.etas = {0.2, 0.5};
  CHECK_NOTHROW(config.validate());
  CHECK(config.rows_per_run() == 1);

  auto bad = config;
  bad.etas = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.etas = {0.5, 0.2};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.t_range = {4, 4};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.stage = 3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.stage = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // fixed_t1 missing
  bad.fixed_t1 = 5;
  CHECK_NOTHROW(bad.validate());
  CHECK(bad.rows_per_run() == 2);

  hiertopics::SweepConfig lda;
  lda.model = hiertopics::SweepModel::hlda;
  lda.etas = {0.01};
  lda.depth = 4;
  CHECK_NOTHROW(lda.validate());
  CHECK(lda.rows_per_run() == 3);
  lda.stage = 2;
  CHECK_THROWS_AS(lda.validate(), std::invalid_argument);
}

TEST_CASE("model names round trip and reject unknowns") {
  using hiertopics::SweepModel;
  CHECK(hiertopics::to_string(SweepModel::hlda) == "hlda");
  CHECK(hiertopics::sweep_model_from_string("hartm") == SweepModel::hartm);
  CHECK_THROWS_AS(hiertopics::sweep_model_from_string("lda"), std::invalid_argument);
}

TEST_CASE("the seed schedule never shares a seed across cells") {
  std::set<std::uint64_t> seeds;
  std::size_t total = 0;
  for (const auto model :
       {hiertopics::SweepModel::hpam, hiertopics::SweepModel::hartm, hiertopics::SweepModel::hlda})
    for (const int stage : {1, 2})
      for (const double eta : {0.2, 0.5, 1.0})
        for (std::size_t t = 2; t <= 30; t += 2)
          for (std::size_t r = 0; r < 6; ++r) {
            seeds.insert(hiertopics::sweep_seed(42, model, stage, eta, t, r));
            ++total;
          }
  CHECK(seeds.size() == total);
  CHECK(hiertopics::sweep_seed(1, hiertopics::SweepModel::hpam, 1, 0.2, 4, 0) ==
        hiertopics::sweep_seed(1, hiertopics::SweepModel::hpam, 1, 0.2, 4, 0));
}

TEST_CASE("a v shaped curve yields its dip as the global minimum") {
  const std::vector<hiertopics::CurvePoint> curve{{2, 5.0}, {4, 3.0}, {6, 4.0}};
  const auto result = hiertopics::find_minima(curve, 1, 1);
  REQUIRE(result.minima.size() == 1);
  CHECK(result.minima[0].t == 4);
  CHECK(result.minima[0].global);
  CHECK(result.minima[0].value == 3.0);
}

TEST_CASE("a monotone curve has its global at the smallest T and no interior minima") {
  const auto curve = make_curve(2, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0});
  const auto result = hiertopics::find_minima(curve);
  REQUIRE(result.minima.size() == 1);
  CHECK(result.minima[0].t == 2);
  CHECK(result.minima[0].global);
}

TEST_CASE("a two dip curve is recovered at the planted depths") {
  const auto curve = make_curve(
      2, {5.0, 4.2, 3.4, 2.6, 3.0, 3.6, 4.2, 4.6, 5.0, 5.2, 5.0, 4.6, 4.2, 3.8, 4.4, 4.8, 5.2,
          5.6, 6.0});
  const auto result = hiertopics::find_minima(curve);
  REQUIRE(result.minima.size() == 2);
  CHECK(result.minima[0].t == 5);
  CHECK(result.minima[0].global);
  CHECK(result.minima[1].t == 15);
  CHECK(!result.minima[1].global);

  const auto verdict = hiertopics::structure_verdict(result);
  CHECK(verdict.kind == hiertopics::VerdictKind::two_level);
  REQUIRE(verdict.levels.size() == 2);
  CHECK(verdict.levels[0].t == 5);
  CHECK(verdict.levels[1].t == 15);
}

TEST_CASE("short curves report only the global minimum") {
  const std::vector<hiertopics::CurvePoint> curve{{2, 5.0}, {4, 3.0}};
  const auto result = hiertopics::find_minima(curve, 1);
  REQUIRE(result.minima.size() == 1);
  CHECK(result.minima[0].t == 4);

  // Smoothing a two point curve averages both points; ties resolve to smaller T.
  const auto smoothed = hiertopics::find_minima(curve);
  REQUIRE(smoothed.minima.size() == 1);
  CHECK(smoothed.minima[0].t == 2);
}

TEST_CASE("infinite sentinels are excluded from minima detection") {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<hiertopics::CurvePoint> curve{{2, 5.0}, {3, inf}, {4, 3.0},
                                                  {5, 4.0},  {6, 5.0}, {7, 6.0}};
  const auto result = hiertopics::find_minima(curve, 1, 1);
  CHECK(result.smoothed.size() == 5);
  REQUIRE(!result.minima.empty());
  for (const auto& minimum : result.minima) CHECK(minimum.t != 3);
  CHECK(result.minima[0].t == 4);
  CHECK(result.minima[0].global);
}

TEST_CASE("minima locations are invariant under vertical shifts") {
  const auto base = make_curve(2, {5.0, 4.0, 3.0, 3.5, 4.5, 5.5, 5.0, 4.0, 4.8, 5.2});
  auto shifted = base;
  for (auto& point : shifted) point.value += 10.0;
  const auto first = hiertopics::find_minima(base);
  const auto second = hiertopics::find_minima(shifted);
  REQUIRE(first.minima.size() == second.minima.size());
  for (std::size_t i = 0; i < first.minima.size(); ++i) {
    CHECK(first.minima[i].t == second.minima[i].t);
    CHECK(first.minima[i].global == second.minima[i].global);
    CHECK(std::abs(second.minima[i].value - first.minima[i].value - 10.0) < 1e-9);
  }
}

TEST_CASE("find_minima rejects malformed input") {
  const std::vector<hiertopics::CurvePoint> unsorted{{4, 1.0}, {2, 2.0}};
  CHECK_THROWS_AS(hiertopics::find_minima(unsorted), std::invalid_argument);
  const std::vector<hiertopics::CurvePoint> fine{{2, 1.0}, {4, 2.0}};
  CHECK_THROWS_AS(hiertopics::find_minima(fine, 2), std::invalid_argument);
  CHECK_THROWS_AS(hiertopics::find_minima(fine, 3, 0), std::invalid_argument);
}

TEST_CASE("a single dip gives a non hierarchical verdict") {
  const std::vector<hiertopics::CurvePoint> curve{{2, 5.0}, {4, 3.0}, {6, 4.0}};
  const auto verdict = hiertopics::structure_verdict(hiertopics::find_minima(curve, 1, 1));
  CHECK(verdict.kind == hiertopics::VerdictKind::non_hierarchical);
  REQUIRE(verdict.levels.size() == 1);
  CHECK(verdict.levels[0].t == 4);
}

TEST_CASE("flat and many dip curves give inconclusive verdicts") {
  const auto flat = make_curve(2, std::vector<double>(12, 4.0));
  const auto flat_verdict = hiertopics::structure_verdict(hiertopics::find_minima(flat));
  CHECK(flat_verdict.kind == hiertopics::VerdictKind::inconclusive);
  CHECK(flat_verdict.levels.empty());

  const auto three_dips =
      make_curve(2, {5.0, 4.0, 3.0, 4.0, 5.0, 5.0, 5.0, 4.0, 3.0, 4.0, 5.0, 5.0, 5.0, 4.0, 3.0,
                     4.0, 5.0, 5.0});
  const auto verdict = hiertopics::structure_verdict(hiertopics::find_minima(three_dips, 1, 1));
  CHECK(verdict.levels.size() >= 3);
  CHECK(verdict.kind == hiertopics::VerdictKind::inconclusive);
}

TEST_CASE("a sweep covers every cell with exactly R runs") {
  const auto corpus = tiny_corpus(3);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hpam;
  config.etas = {0.2, 0.5};
  config.t_range.clear();
  for (std::size_t t = 2; t <= 30; t += 2) config.t_range.push_back(t);
  config.restarts = 6;
  config.iterations = 3;
  config.burn_in = 1;
  config.base_seed = 9;
  const auto result = hiertopics::run_sweep(corpus, config);

  CHECK(result.cells.size() == 2 * 15);
  CHECK(result.records.size() == 2 * 15 * 6);
  std::set<std::uint64_t> seeds;
  for (const auto& record : result.records) seeds.insert(record.seed);
  CHECK(seeds.size() == result.records.size());
  for (const auto& cell : result.cells) {
    CHECK(cell.runs == 6);
    CHECK(!cell.failed);
    REQUIRE(cell.levels.size() == 1);
    CHECK(cell.levels[0].level == 2);
  }
  CHECK(result.analyses.size() == 2);
}

TEST_CASE("identical sweep invocations agree record for record") {
  const auto corpus = tiny_corpus(5);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hartm;
  config.etas = {1.0};
  config.t_range = {2, 3, 4};
  config.restarts = 1;
  config.iterations = 20;
  config.burn_in = 1;
  config.base_seed = 31;
  const auto first = hiertopics::run_sweep(corpus, config);
  const auto second = hiertopics::run_sweep(corpus, config);
  REQUIRE(first.records.size() == second.records.size());
  for (std::size_t i = 0; i < first.records.size(); ++i)
    CHECK(same_ignoring_runtime(first.records[i], second.records[i]));
  REQUIRE(first.cells.size() == second.cells.size());
  for (std::size_t i = 0; i < first.cells.size(); ++i) {
    CHECK(first.cells[i].levels[0].mean_renyi == second.cells[i].levels[0].mean_renyi);
    CHECK(first.cells[i].mean_loglik == second.cells[i].mean_loglik);
  }
}

TEST_CASE("a worker pool reproduces the sequential sweep") {
  const auto corpus = tiny_corpus(11);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hpam;
  config.etas = {0.3};
  config.t_range = {2, 4, 6};
  config.restarts = 2;
  config.iterations = 4;
  config.burn_in = 1;
  config.base_seed = 17;
  std::vector<hiertopics::RunRecord> sequential_rows;
  const auto sequential = hiertopics::run_sweep(
      corpus, config, 1, [&](const hiertopics::RunRecord& r) { sequential_rows.push_back(r); });
  std::vector<hiertopics::RunRecord> pooled_rows;
  const auto pooled = hiertopics::run_sweep(
      corpus, config, 3, [&](const hiertopics::RunRecord& r) { pooled_rows.push_back(r); });
  REQUIRE(sequential_rows.size() == pooled_rows.size());
  for (std::size_t i = 0; i < sequential_rows.size(); ++i)
    CHECK(same_ignoring_runtime(sequential_rows[i], pooled_rows[i]));
  REQUIRE(sequential.records.size() == pooled.records.size());
  for (std::size_t i = 0; i < sequential.records.size(); ++i)
    CHECK(same_ignoring_runtime(sequential.records[i], pooled.records[i]));
}

TEST_CASE("block corpora give finite monotone curves and an edge verdict") {
  // Uniform block topics keep the above-threshold count independent of T, so
  // the T*ln(rho) term makes the entropy curve rise monotonically; the global
  // minimum sits at the smallest T and yields a single qualifying dip.
  hiertopics::SyntheticSpec spec{4, 2, 0.35};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 250, 50, 600, 0.05, 13);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hartm;
  config.etas = {1.0};
  config.t_range = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  config.restarts = 3;
  config.iterations = 80;
  config.burn_in = 1;
  config.base_seed = 7;
  const auto result = hiertopics::run_sweep(corpus, config);
  REQUIRE(result.analyses.size() == 1);
  const auto& analysis = result.analyses[0];
  for (const auto& point : analysis.minima.smoothed) CHECK(std::isfinite(point.value));
  for (std::size_t i = 1; i < analysis.minima.smoothed.size(); ++i)
    CHECK(analysis.minima.smoothed[i].value > analysis.minima.smoothed[i - 1].value);
  REQUIRE(analysis.minima.minima.size() == 1);
  CHECK(analysis.minima.minima[0].t == 2);
  CHECK(analysis.minima.minima[0].global);
  CHECK(analysis.verdict.kind == hiertopics::VerdictKind::non_hierarchical);
  REQUIRE(analysis.verdict.levels.size() == 1);
  CHECK(analysis.verdict.levels[0].t == 2);
}

TEST_CASE("reported means equal the arithmetic mean of the raw log") {
  const auto corpus = tiny_corpus(23);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hpam;
  config.etas = {0.2};
  config.t_range = {2, 4};
  config.restarts = 4;
  config.iterations = 3;
  config.burn_in = 1;
  config.base_seed = 29;
  const auto result = hiertopics::run_sweep(corpus, config);
  const auto path = temp_file("hiertopics_rawlog_roundtrip.csv");
  hiertopics::write_raw_csv(result.records, path);
  const auto replayed = hiertopics::read_raw_csv(path);
  std::filesystem::remove(path);
  REQUIRE(replayed.size() == result.records.size());
  const auto cells = hiertopics::aggregate_cells(replayed, config);
  REQUIRE(cells.size() == result.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(std::abs(cells[i].levels[0].mean_renyi - result.cells[i].levels[0].mean_renyi) <
          1e-12);
    CHECK(std::abs(cells[i].levels[0].std_renyi - result.cells[i].levels[0].std_renyi) < 1e-12);
    CHECK(std::abs(cells[i].mean_loglik - result.cells[i].mean_loglik) < 1e-12);
  }
}

TEST_CASE("raw csv round trips every field exactly") {
  const auto corpus = tiny_corpus(37);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hlda;
  config.etas = {0.05};
  config.restarts = 2;
  config.iterations = 10;
  config.burn_in = 1;
  config.depth = 3;
  config.base_seed = 41;
  const auto result = hiertopics::run_sweep(corpus, config);
  const auto path = temp_file("hiertopics_rawlog_exact.csv");
  hiertopics::write_raw_csv(result.records, path);
  const auto replayed = hiertopics::read_raw_csv(path);
  std::filesystem::remove(path);
  REQUIRE(replayed.size() == result.records.size());
  for (std::size_t i = 0; i < replayed.size(); ++i) {
    CHECK(replayed[i].eta == result.records[i].eta);
    CHECK(replayed[i].seed == result.records[i].seed);
    CHECK(replayed[i].renyi == result.records[i].renyi);
    CHECK(replayed[i].ptilde == result.records[i].ptilde);
    CHECK(replayed[i].loglik == result.records[i].loglik);
    CHECK(replayed[i].runtime_ms == result.records[i].runtime_ms);
  }

  std::ofstream bad(path);
  bad << "not,a,header\n";
  bad.close();
  CHECK_THROWS_AS(hiertopics::read_raw_csv(path), hiertopics::DataError);
  std::filesystem::remove(path);
}

TEST_CASE("hlda sweeps report topic count ranges instead of verdicts") {
  const auto corpus = tiny_corpus(43);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hlda;
  config.etas = {0.05, 0.5};
  config.restarts = 3;
  config.iterations = 12;
  config.burn_in = 1;
  config.depth = 3;
  config.gamma = 1.0;
  config.base_seed = 47;
  const auto result = hiertopics::run_sweep(corpus, config);
  CHECK(result.analyses.empty());
  REQUIRE(result.hlda_summaries.size() == 2);
  for (const auto& summary : result.hlda_summaries) {
    CHECK(summary.level2_counts.size() == 3);
    CHECK(summary.min_count >= 1);
    CHECK(summary.max_count >= summary.min_count);
    CHECK(summary.mean_count >= static_cast<double>(summary.min_count));
  }
  CHECK(result.records.size() == 2 * 3 * 2);  // etas x restarts x (depth-1)
  REQUIRE(result.cells.size() == 2);
  CHECK(result.cells[0].t == 0);
  CHECK(result.cells[0].levels.size() == 2);
}

TEST_CASE("resume reuses complete runs and reruns partial ones") {
  const auto corpus = tiny_corpus(53);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hartm;
  config.stage = 2;
  config.fixed_t1 = 2;
  config.etas = {1.0};
  config.t_range = {3, 4};
  config.restarts = 2;
  config.iterations = 15;
  config.burn_in = 1;
  config.base_seed = 59;
  const auto fresh = hiertopics::run_sweep(corpus, config);
  REQUIRE(fresh.records.size() == 8);  // 2 cells x 2 restarts x 2 rows

  std::vector<hiertopics::RunRecord> truncated(fresh.records.begin(),
                                               fresh.records.begin() + 5);
  const auto kept = hiertopics::complete_runs(truncated, config);
  CHECK(kept.size() == 4);

  std::vector<hiertopics::RunRecord> appended;
  const auto resumed = hiertopics::run_sweep(
      corpus, config, 1, [&](const hiertopics::RunRecord& r) { appended.push_back(r); },
      &truncated);
  CHECK(appended.size() == 4);  // two re-run jobs, two rows each
  REQUIRE(resumed.records.size() == fresh.records.size());
  for (std::size_t i = 0; i < fresh.records.size(); ++i)
    CHECK(same_ignoring_runtime(fresh.records[i], resumed.records[i]));

  // Foreign records are ignored rather than trusted.
  auto foreign = fresh.records;
  foreign[0].seed ^= 1;
  const auto filtered = hiertopics::complete_runs(foreign, config);
  CHECK(filtered.size() == fresh.records.size() - 2);
}

TEST_CASE("stage two configs freeze the best stage one cells") {
  hiertopics::SweepResult stage1;
  stage1.config.model = hiertopics::SweepModel::hpam;
  stage1.config.stage = 1;
  stage1.config.t_range = {5, 10, 15};
  stage1.config.etas = {0.2, 0.5};
  stage1.config.restarts = 6;
  auto cell = [](double eta, std::size_t t, double mean) {
    hiertopics::CellStats c;
    c.eta = eta;
    c.t = t;
    c.levels.push_back({2, mean, 0.1});
    c.runs = 6;
    return c;
  };
  stage1.cells = {cell(0.2, 5, 3.0), cell(0.2, 10, 2.5), cell(0.2, 15, 4.0),
                  cell(0.5, 10, 2.7)};

  const std::vector<std::size_t> t2{2, 4, 6};
  const auto best = hiertopics::stage2_from_stage1(stage1, t2);
  REQUIRE(best.size() == 1);
  CHECK(best[0].stage == 2);
  CHECK(best[0].fixed_t1 == 10);
  CHECK(best[0].etas == std::vector<double>{0.2});
  CHECK(best[0].t_range == t2);

  const auto top3 =
      hiertopics::stage2_from_stage1(stage1, t2, hiertopics::Stage2Strategy::top_k, 3);
  REQUIRE(top3.size() == 3);
  CHECK(top3[0].fixed_t1 == 10);
  CHECK(top3[0].etas[0] == 0.2);
  CHECK(top3[1].fixed_t1 == 10);
  CHECK(top3[1].etas[0] == 0.5);
  CHECK(top3[2].fixed_t1 == 5);

  CHECK_THROWS_AS(hiertopics::stage2_from_stage1(stage1, {}), std::invalid_argument);
  auto lda = stage1;
  lda.config.model = hiertopics::SweepModel::hlda;
  CHECK_THROWS_AS(hiertopics::stage2_from_stage1(lda, t2), std::invalid_argument);
}

TEST_CASE("summary rows freeze the reporting format") {
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hpam;
  config.stage = 1;
  hiertopics::CellStats cell;
  cell.eta = 0.2;
  cell.t = 4;
  cell.levels.push_back({2, 5.25, 0.5});
  cell.mean_loglik = -100.125;
  CHECK(hiertopics::summary_csv_row(cell, config) ==
        "hpam,1,0.2,4,5.250000,0.500000,nan,nan,-100.125000");
  cell.levels.push_back({3, std::numeric_limits<double>::infinity(), 0.0});
  CHECK(hiertopics::summary_csv_row(cell, config) ==
        "hpam,1,0.2,4,5.250000,0.500000,inf,0.000000,-100.125000");
}

TEST_CASE("verdict json records kinds levels and hlda ranges") {
  const auto corpus = tiny_corpus(61);
  hiertopics::SweepConfig config;
  config.model = hiertopics::SweepModel::hartm;
  config.etas = {1.0};
  config.t_range = {2, 3, 4, 5, 6};
  config.restarts = 2;
  config.iterations = 25;
  config.burn_in = 1;
  config.base_seed = 67;
  const auto result = hiertopics::run_sweep(corpus, config);
  const auto path = temp_file("hiertopics_verdict_test.json");
  hiertopics::write_verdict_json(result, path);
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  std::filesystem::remove(path);
  REQUIRE(j["verdicts"].size() == 1);
  CHECK(j["verdicts"][0].contains("kind"));
  CHECK(j["verdicts"][0]["config_refs"]["model"] == "hartm");

  hiertopics::SweepConfig lda;
  lda.model = hiertopics::SweepModel::hlda;
  lda.etas = {0.1};
  lda.restarts = 2;
  lda.iterations = 8;
  lda.burn_in = 1;
  lda.base_seed = 71;
  const auto lda_result = hiertopics::run_sweep(corpus, lda);
  hiertopics::write_verdict_json(lda_result, path);
  std::ifstream lin(path);
  nlohmann::json lj;
  lin >> lj;
  std::filesystem::remove(path);
  CHECK(lj["verdicts"].empty());
  REQUIRE(lj["hlda_ranges"].size() == 1);
  CHECK(lj["hlda_ranges"][0]["counts"].size() == 2);
}
