#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sde/backends.hpp"
#include "sde/json_io.hpp"
#include "sde/pipeline.hpp"

namespace sde {

struct JudgeScores {
  int conformity = 0;
  int artistic_quality = 0;
  int understandability = 0;

  bool operator==(const JudgeScores&) const = default;
};

/// One structured request to the judge model; integer scores in [0, 100].
JudgeScores judge_scores(std::string_view paper_text, std::string_view scene_or_prompt,
                         std::string_view image_ref, TextClient& judge, std::uint64_t seed = 0);

/// 100 * (largest group of identical hashes) / n over n runs of `run`.
double reproducibility(const std::function<std::string()>& run, std::size_t n);

enum class Strategy { sde, raw_prompt };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view text);

struct SampleRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string error;  // set when !ok
  JudgeScores scores;
  double reproducibility = 0.0;
  double time_s = 0.0;              // wall clock of one generation
  double backend_latency_s = 0.0;   // sum of reported backend latencies in that generation
  std::string scene_hash;

  bool operator==(const SampleRecord&) const = default;
};

struct EvalReport {
  std::string strategy;
  double theme_conformity = 0.0;
  double artistic_quality = 0.0;
  double understandability = 0.0;
  double image_reproducibility = 0.0;
  double computation_time_s = 0.0;
  std::size_t n_samples = 0;   // successful samples the means are taken over
  std::size_t n_failures = 0;
  std::vector<SampleRecord> per_sample;

  bool operator==(const EvalReport&) const = default;
};

void to_json(json& j, const JudgeScores& s);
void from_json(const json& j, JudgeScores& s);
void to_json(json& j, const SampleRecord& r);
void from_json(const json& j, SampleRecord& r);
void to_json(json& j, const EvalReport& r);
void from_json(const json& j, EvalReport& r);

// Schema check for report documents; empty when valid.
std::vector<std::string> check_report_json(const json& report);

struct BenchmarkOptions {
  std::size_t n_repro = 3;
  std::uint64_t seed = 0;
  std::optional<std::string> template_id;
  PipelineConfig config;
};

/// Runs `strategy` over every text, times one generation, asks the judge for
/// scores and measures reproducibility over n_repro more runs. Failures are
/// recorded per sample; throws only when the corpus is empty or every sample
/// failed.
EvalReport benchmark(const std::vector<std::string>& corpus, Strategy strategy,
                     const Backends& backends, const BenchmarkOptions& options = {});

/// Fixed-width table with the five metric rows.
std::string render_table(const EvalReport& report);

}  // namespace sde
