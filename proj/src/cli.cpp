#include "sde/cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "sde/composition.hpp"
#include "sde/evaluation.hpp"
#include "sde/pipeline.hpp"
#include "sde/service.hpp"

namespace sde {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + path.string());
}

Backends make_backends(const std::string& kind) {
  if (kind == "stub") return stub_backends();
  auto text = backend_config_from_env("TEXT");
  auto image = backend_config_from_env("IMAGE");
  auto problems = check_config(text);
  auto more = check_config(image);
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) throw Error(ErrorCode::BadArgument, "backend config: " + problems.front());
  return live_backends(text, image);
}

HttpService* g_service = nullptr;

extern "C" void stop_service(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic draw engine: text to scene graph to image prompt", "sde"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // run
  auto* run = app.add_subcommand("run", "Run all six stages on one input text");
  std::string input, backend = "stub", out_scene, out_svg, out_prompt, runs_dir = "runs";
  std::optional<std::string> template_id;
  std::uint64_t seed = 0;
  run->add_option("--input", input, "Input text file")->required();
  run->add_option("--template", template_id, "Composition template id (default: automatic)");
  run->add_option("--backend", backend, "live or stub")
      ->check(CLI::IsMember({"live", "stub"}))
      ->capture_default_str();
  run->add_option("--seed", seed, "Seed")->capture_default_str();
  run->add_option("--out-scene", out_scene, "Write the canonical scene JSON here");
  run->add_option("--out-svg", out_svg, "Write the debug SVG here");
  run->add_option("--out-prompt", out_prompt, "Write the compiled prompt here");
  run->add_option("--runs-dir", runs_dir, "Directory for run artifacts")->capture_default_str();

  // templates list
  auto* templates = app.add_subcommand("templates", "Composition templates");
  templates->require_subcommand(1);
  auto* templates_list = templates->add_subcommand("list", "Print the builtin template ids");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Benchmark a strategy over a text corpus");
  std::string corpus_dir, strategy_name = "sde", report_path;
  std::size_t repeats = 3;
  evaluate->add_option("--corpus", corpus_dir, "Directory of .txt inputs")->required();
  evaluate->add_option("--strategy", strategy_name, "sde or raw")
      ->check(CLI::IsMember({"sde", "raw", "raw_prompt"}))
      ->capture_default_str();
  evaluate->add_option("--repeats", repeats, "Reproducibility runs per text (>= 2)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}))
      ->capture_default_str();
  evaluate->add_option("--report", report_path, "Write the JSON report here");
  evaluate->add_option("--backend", backend, "live or stub")
      ->check(CLI::IsMember({"live", "stub"}))
      ->capture_default_str();
  evaluate->add_option("--seed", seed, "Seed")->capture_default_str();
  evaluate->add_option("--runs-dir", runs_dir, "Directory for run artifacts")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1", sessions_dir = "sessions", allow_origin;
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--sessions-dir", sessions_dir, "Session storage")->capture_default_str();
  serve->add_option("--runs-dir", runs_dir, "Directory for run artifacts")->capture_default_str();
  serve->add_option("--allow-origin", allow_origin, "Enable CORS for this origin");
  serve->add_option("--backend", backend, "live or stub")
      ->check(CLI::IsMember({"live", "stub"}))
      ->capture_default_str();

  // session show
  auto* session = app.add_subcommand("session", "Inspect stored sessions");
  session->require_subcommand(1);
  auto* session_show = session->add_subcommand("show", "Print a stored session as JSON");
  std::string session_id;
  session_show->add_option("id", session_id, "Session id")->required();
  session_show->add_option("--sessions-dir", sessions_dir, "Session storage")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("sde");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* sub : {run, templates, evaluate, serve, session}) {
      if (sub->parsed()) failing = sub;
    }
    err << failing->help();
    return 1;
  }

  try {
    if (run->parsed()) {
      auto text = read_text(input);
      PipelineConfig config;
      config.runs_dir = runs_dir;
      Pipeline pipeline(config, make_backends(backend));
      auto result = pipeline.art_image_creation(text, template_id, seed);
      const auto& tmpl = find_template(pipeline.library(), result.scene.template_id);
      auto scene_text = serialize_scene(result.scene);
      if (!out_scene.empty()) write_text(out_scene, scene_text + "\n");
      if (!out_svg.empty()) write_text(out_svg, render_debug_svg(result.scene, tmpl));
      if (!out_prompt.empty()) write_text(out_prompt, result.prompt);
      out << "scene_hash " << scene_hash(result.scene) << "\n";
      out << "template " << tmpl.id << "\n";
      out << "image " << result.image_ref << "\n";
      if (out_prompt.empty()) out << "\n" << result.prompt;
    } else if (templates_list->parsed()) {
      for (const auto& t : builtin_templates()) out << t.id << "\n";
    } else if (evaluate->parsed()) {
      if (!fs::is_directory(corpus_dir)) throw UsageError("corpus is not a directory: " + corpus_dir);
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(corpus_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      std::vector<std::string> corpus;
      for (const auto& f : files) corpus.push_back(read_text(f));
      BenchmarkOptions options;
      options.n_repro = repeats;
      options.seed = seed;
      options.config.runs_dir = runs_dir;
      auto report = benchmark(corpus, *strategy_from_string(strategy_name), make_backends(backend), options);
      if (!report_path.empty()) write_text(report_path, json(report).dump(2) + "\n");
      out << render_table(report);
    } else if (serve->parsed()) {
      PipelineConfig config;
      config.sessions_dir = sessions_dir;
      config.runs_dir = runs_dir;
      auto pipeline = std::make_shared<Pipeline>(config, make_backends(backend));
      HttpService service(pipeline, allow_origin);
      int bound = service.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::BadArgument, "cannot bind " + host + ":" + std::to_string(port));
      out << "listening on http://" << host << ":" << bound << std::endl;
      g_service = &service;
      std::signal(SIGINT, stop_service);
      std::signal(SIGTERM, stop_service);
      service.run();
      g_service = nullptr;
    } else if (session_show->parsed()) {
      SessionStore store(sessions_dir);
      out << json(store.load(session_id)).dump(2) << "\n";
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) err << "  " << v.path << ": " << v.rule << " " << v.message << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace sde
