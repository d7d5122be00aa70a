#include "sde/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "sde/composition.hpp"
#include "sde/hashing.hpp"

namespace sde {

namespace {

using Clock = std::chrono::steady_clock;

// Adds up the latency every backend call reports.
struct LatencyMeter {
  std::atomic<std::int64_t> total_ms{0};
};

class MeteredText final : public TextClient {
 public:
  MeteredText(std::shared_ptr<TextClient> inner, std::shared_ptr<LatencyMeter> meter)
      : inner_(std::move(inner)), meter_(std::move(meter)) {}
  TextResponse complete(const TextRequest& request) override {
    auto r = inner_->complete(request);
    meter_->total_ms += r.latency_ms;
    return r;
  }

 private:
  std::shared_ptr<TextClient> inner_;
  std::shared_ptr<LatencyMeter> meter_;
};

class MeteredImage final : public ImageClient {
 public:
  MeteredImage(std::unique_ptr<ImageClient> inner, std::shared_ptr<LatencyMeter> meter)
      : inner_(std::move(inner)), meter_(std::move(meter)) {}
  ImageResult generate(const ImageRequest& request) override {
    auto r = inner_->generate(request);
    meter_->total_ms += r.latency_ms;
    return r;
  }

 private:
  std::unique_ptr<ImageClient> inner_;
  std::shared_ptr<LatencyMeter> meter_;
};

Backends metered(const Backends& base, const std::shared_ptr<LatencyMeter>& meter) {
  Backends b;
  if (base.text) b.text = std::make_shared<MeteredText>(base.text, meter);
  if (base.image) {
    b.image = [inner = base.image, meter](const SceneGraph& scene, const CompositionTemplate& tmpl,
                                          const std::filesystem::path& dir)
        -> std::unique_ptr<ImageClient> {
      return std::make_unique<MeteredImage>(inner(scene, tmpl, dir), meter);
    };
  }
  return b;
}

std::optional<std::string> check_scores(const json& reply) {
  if (!reply.is_object()) return "expected a JSON object";
  for (const char* key : {"conformity", "artistic_quality", "understandability"}) {
    if (!reply.contains(key)) return std::string("missing \"") + key + "\"";
    const auto& v = reply[key];
    if (!v.is_number()) return std::string("\"") + key + "\" must be a number";
    double d = v.get<double>();
    if (d != static_cast<double>(static_cast<long long>(d))) {
      return std::string("\"") + key + "\" must be an integer";
    }
    if (d < 0 || d > 100) return std::string("\"") + key + "\" must be within 0..100";
  }
  return std::nullopt;
}

struct Generation {
  std::string hash;
  std::string prompt;
  std::string image_ref;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Generation generate_once(const std::string& text, Strategy strategy, const Backends& backends,
                         const BenchmarkOptions& options, const std::vector<CompositionTemplate>& library) {
  if (strategy == Strategy::sde) {
    Pipeline pipeline(options.config, backends);
    auto r = pipeline.art_image_creation(text, options.template_id, options.seed);
    return {scene_hash(r.scene), r.prompt, r.image_ref};
  }
  // The text goes to the image model verbatim; the stub image backend still
  // needs a scene, so it gets an empty one.
  const auto& tmpl = options.template_id ? find_template(library, *options.template_id)
                                         : library.front();
  SceneGraph placeholder;
  placeholder.canvas = options.config.canvas;
  placeholder.template_id = tmpl.id;
  placeholder.seed = options.seed;
  auto dir = options.config.runs_dir / ("raw-" + new_uuid());
  if (!backends.image) throw Error(ErrorCode::BackendError, "no image backend configured");
  auto client = backends.image(placeholder, tmpl, dir);
  ImageRequest req{text, placeholder.canvas.width_px, placeholder.canvas.height_px, options.seed};
  auto result = image_generate(*client, req);
  auto bytes = read_file(result.image_ref);
  return {sha256_hex(bytes.empty() ? result.image_ref : bytes), text, result.image_ref};
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v);
  return buf;
}

}  // namespace

JudgeScores judge_scores(std::string_view paper_text, std::string_view scene_or_prompt,
                         std::string_view image_ref, TextClient& judge, std::uint64_t seed) {
  TextRequest req;
  req.task = TextTask::judge;
  req.seed = seed;
  req.system =
      "You grade an illustration made for a research paper. Reply with JSON only: "
      "{\"conformity\": int, \"artistic_quality\": int, \"understandability\": int}, each 0-100.";
  req.user = "Paper text:\n" + std::string(paper_text) + "\n\nImage description:\n" +
             std::string(scene_or_prompt) + "\n\nImage: " + std::string(image_ref) +
             "\n\nScore conformity to the paper's theme, artistic quality, and understandability.";
  req.context = {{"image_ref", image_ref}};
  auto reply = complete_structured(judge, req, check_scores);
  return {reply["conformity"].get<int>(), reply["artistic_quality"].get<int>(),
          reply["understandability"].get<int>()};
}

double reproducibility(const std::function<std::string()>& run, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::BadArgument, "reproducibility needs at least 2 runs");
  std::map<std::string, std::size_t> groups;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) largest = std::max(largest, ++groups[run()]);
  return 100.0 * static_cast<double>(largest) / static_cast<double>(n);
}

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::sde ? "sde" : "raw_prompt";
}

std::optional<Strategy> strategy_from_string(std::string_view text) {
  if (text == "sde") return Strategy::sde;
  if (text == "raw" || text == "raw_prompt") return Strategy::raw_prompt;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const JudgeScores& s) {
  j = json{{"artistic_quality", s.artistic_quality},
           {"conformity", s.conformity},
           {"understandability", s.understandability}};
}

void from_json(const json& j, JudgeScores& s) {
  s.conformity = j.at("conformity").get<int>();
  s.artistic_quality = j.at("artistic_quality").get<int>();
  s.understandability = j.at("understandability").get<int>();
}

void to_json(json& j, const SampleRecord& r) {
  j = json{{"index", r.index}, {"ok", r.ok}};
  if (r.ok) {
    j["scores"] = r.scores;
    j["reproducibility"] = r.reproducibility;
    j["time_s"] = r.time_s;
    j["backend_latency_s"] = r.backend_latency_s;
    j["scene_hash"] = r.scene_hash;
  } else {
    j["error"] = r.error;
  }
}

void from_json(const json& j, SampleRecord& r) {
  r = {};
  r.index = j.at("index").get<std::size_t>();
  r.ok = j.at("ok").get<bool>();
  if (r.ok) {
    r.scores = j.at("scores").get<JudgeScores>();
    r.reproducibility = j.at("reproducibility").get<double>();
    r.time_s = j.at("time_s").get<double>();
    r.backend_latency_s = j.at("backend_latency_s").get<double>();
    r.scene_hash = j.at("scene_hash").get<std::string>();
  } else {
    r.error = j.at("error").get<std::string>();
  }
}

void to_json(json& j, const EvalReport& r) {
  j = json{{"artistic_quality", r.artistic_quality},
           {"computation_time_s", r.computation_time_s},
           {"image_reproducibility", r.image_reproducibility},
           {"n_failures", r.n_failures},
           {"n_samples", r.n_samples},
           {"per_sample", r.per_sample},
           {"strategy", r.strategy},
           {"theme_conformity", r.theme_conformity},
           {"understandability", r.understandability}};
}

void from_json(const json& j, EvalReport& r) {
  r.strategy = j.at("strategy").get<std::string>();
  r.theme_conformity = j.at("theme_conformity").get<double>();
  r.artistic_quality = j.at("artistic_quality").get<double>();
  r.understandability = j.at("understandability").get<double>();
  r.image_reproducibility = j.at("image_reproducibility").get<double>();
  r.computation_time_s = j.at("computation_time_s").get<double>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.n_failures = j.at("n_failures").get<std::size_t>();
  r.per_sample = j.at("per_sample").get<std::vector<SampleRecord>>();
}

std::vector<std::string> check_report_json(const json& report) {
  std::vector<std::string> problems;
  if (!report.is_object()) return {"report must be an object"};
  auto number_in = [&](const char* key, double lo, double hi) {
    if (!report.contains(key) || !report[key].is_number()) {
      problems.push_back(std::string(key) + " must be a number");
      return;
    }
    double v = report[key].get<double>();
    if (v < lo || v > hi) problems.push_back(std::string(key) + " out of range");
  };
  for (const char* key : {"theme_conformity", "artistic_quality", "understandability",
                          "image_reproducibility"}) {
    number_in(key, 0.0, 100.0);
  }
  number_in("computation_time_s", 0.0, std::numeric_limits<double>::infinity());
  if (!report.contains("n_samples") || !report["n_samples"].is_number_unsigned() ||
      report["n_samples"].get<std::size_t>() < 1) {
    problems.emplace_back("n_samples must be an integer >= 1");
  }
  if (!report.contains("n_failures") || !report["n_failures"].is_number_unsigned()) {
    problems.emplace_back("n_failures must be a non-negative integer");
  }
  if (!report.contains("strategy") || !report["strategy"].is_string() ||
      !strategy_from_string(report["strategy"].get<std::string>())) {
    problems.emplace_back("strategy must be sde or raw_prompt");
  }
  if (!report.contains("per_sample") || !report["per_sample"].is_array()) {
    problems.emplace_back("per_sample must be an array");
  } else {
    for (const auto& s : report["per_sample"]) {
      try {
        (void)s.get<SampleRecord>();
      } catch (const json::exception& e) {
        problems.push_back(std::string("per_sample entry: ") + e.what());
      }
    }
  }
  return problems;
}

EvalReport benchmark(const std::vector<std::string>& corpus, Strategy strategy,
                     const Backends& backends, const BenchmarkOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "benchmark corpus is empty");
  if (options.n_repro < 2) throw Error(ErrorCode::BadArgument, "n_repro must be at least 2");
  if (!backends.text) throw Error(ErrorCode::BadArgument, "benchmark needs a judge text backend");
  const auto library = options.config.library.empty() ? builtin_templates() : options.config.library;

  EvalReport report;
  report.strategy = std::string(to_string(strategy));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    SampleRecord sample;
    sample.index = i;
    try {
      auto meter = std::make_shared<LatencyMeter>();
      auto timed = metered(backends, meter);
      auto start = Clock::now();
      auto gen = generate_once(corpus[i], strategy, timed, options, library);
      sample.time_s = std::chrono::duration<double>(Clock::now() - start).count();
      sample.backend_latency_s = static_cast<double>(meter->total_ms.load()) / 1000.0;
      sample.scene_hash = gen.hash;
      sample.scores = judge_scores(corpus[i], gen.prompt, gen.image_ref, *backends.text, options.seed);
      sample.reproducibility = reproducibility(
          [&] { return generate_once(corpus[i], strategy, backends, options, library).hash; },
          options.n_repro);
      sample.ok = true;
    } catch (const std::exception& e) {
      sample = {};
      sample.index = i;
      sample.error = e.what();
    }
    report.per_sample.push_back(std::move(sample));
  }

  double n = 0;
  for (const auto& s : report.per_sample) {
    if (!s.ok) {
      ++report.n_failures;
      continue;
    }
    ++n;
    report.theme_conformity += s.scores.conformity;
    report.artistic_quality += s.scores.artistic_quality;
    report.understandability += s.scores.understandability;
    report.image_reproducibility += s.reproducibility;
    report.computation_time_s += s.time_s;
  }
  if (n == 0) {
    throw Error(ErrorCode::BackendError,
                "every benchmark sample failed; first error: " + report.per_sample.front().error);
  }
  report.n_samples = static_cast<std::size_t>(n);
  report.theme_conformity /= n;
  report.artistic_quality /= n;
  report.understandability /= n;
  report.image_reproducibility /= n;
  report.computation_time_s /= n;
  return report;
}

std::string render_table(const EvalReport& report) {
  char line[128];
  std::string out;
  std::snprintf(line, sizeof line, "%-24s %12s\n", "Metric", report.strategy.c_str());
  out += line;
  out += std::string(37, '-') + "\n";
  auto row = [&](const char* label, const std::string& value) {
    std::snprintf(line, sizeof line, "%-24s %12s\n", label, value.c_str());
    out += line;
  };
  row("Theme Conformity", percent(report.theme_conformity));
  row("Artistic Quality", percent(report.artistic_quality));
  row("Understandability", percent(report.understandability));
  row("Image Reproducibility", percent(report.image_reproducibility));
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.3f s", report.computation_time_s);
  row("Computation Time", secs);
  out += std::string(37, '-') + "\n";
  std::snprintf(line, sizeof line, "samples: %zu, failures: %zu\n", report.n_samples,
                report.n_failures);
  out += line;
  return out;
}

}  // namespace sde
