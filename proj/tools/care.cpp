#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "care/care.hpp"
#include "care/server/client.hpp"
#include "care/server/hub.hpp"
#include "care/server/ws_server.hpp"

namespace fs = std::filesystem;
using namespace care;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  return file;
}

SafetyFilter load_safety(const std::string& dir, double threshold, int profanity_max) {
  SafetyConfig cfg;
  cfg.lexicon_path = dir;
  cfg.classifier_threshold = threshold;
  cfg.profanity_max = profanity_max;
  return SafetyFilter::load(cfg);
}

std::string resolve_safety_dir(const std::string& flag, const std::string& model_dir) {
  if (!flag.empty()) return flag;
  if (!model_dir.empty() && fs::is_directory(fs::path(model_dir) / "safety")) {
    return (fs::path(model_dir) / "safety").string();
  }
  throw LexiconMissing("no --safety-dir given and the model bundle has no safety/ directory");
}

// ---- label ------------------------------------------------------------------

struct LabelArgs {
  std::string corpus, model, out;
  bool preserve = false;
  double threshold = 0.5;
};

int run_label(const LabelArgs& a) {
  const ModelBundle bundle = load_bundle(a.model);
  const auto labeled = auto_label(load_corpus(a.corpus), bundle.predictor, a.preserve, a.threshold);
  std::ofstream file;
  write_corpus(open_out(a.out, file), labeled);
  std::cerr << "labeled " << labeled.size() << " conversations\n";
  return 0;
}

// ---- split ------------------------------------------------------------------

struct SplitArgs {
  std::string corpus, out;
  SplitSpec spec;
  int min_rating = 0;
};

int run_split(const SplitArgs& a) {
  try {
    a.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("split ratios", e.what());
  }
  auto convs = load_corpus(a.corpus);
  if (a.min_rating > 0) convs = filter_high_quality(convs, a.min_rating);
  const CorpusSplit parts = split(convs, a.spec);
  fs::create_directories(a.out);
  save_corpus(fs::path(a.out) / "train.jsonl", parts.train);
  save_corpus(fs::path(a.out) / "dev.jsonl", parts.dev);
  save_corpus(fs::path(a.out) / "test.jsonl", parts.test);
  std::ofstream(fs::path(a.out) / "manifest.json", std::ios::binary)
      << split_manifest(parts, a.spec).dump(2) << "\n";
  std::cout << "train " << parts.train.size() << ", dev " << parts.dev.size() << ", test "
            << parts.test.size() << " -> " << a.out << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, out, safety_dir;
  TrainOptions opt;
  int min_rating = 0;
};

int run_train(TrainArgs a) {
  if (a.min_rating > 0) a.opt.min_rating = a.min_rating;
  const ModelBundle m = train_models(load_corpus(a.corpus), a.opt);
  std::optional<fs::path> lex;
  if (!a.safety_dir.empty()) lex = a.safety_dir;
  save_bundle(a.out, m.predictor, m.index, lex);
  std::cout << "vocab " << m.predictor.vocabulary().size() << ", index entries "
            << m.index.entries().size() << " -> " << a.out << "\n";
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvalArgs {
  std::string model, test, format = "tsv";
  double threshold = 0.5;
  std::size_t max_chars = 200;
  std::size_t context_len = kMaxContext;
};

int run_evaluate(const EvalArgs& a) {
  const ModelBundle bundle = load_bundle(a.model);
  const auto test = load_corpus(a.test);
  std::vector<TrainingInstance> instances;
  for (Strategy s : kAllStrategies) {
    auto part = build_instances(test, s, a.context_len);
    instances.insert(instances.end(), part.begin(), part.end());
  }
  const auto cls = evaluate(bundle.predictor, instances, a.threshold);
  GenerationConfig gcfg;
  gcfg.max_chars = a.max_chars;
  const GenEvalResult gen = evaluate_generation(bundle.index, bundle.predictor, test, gcfg);
  for (const auto& w : gen.warnings) std::cerr << "warning: " << w << "\n";
  if (a.format == "json") {
    std::cout << Json{{"classifier", classifier_json(cls)}, {"generation", generation_json(gen)}}.dump(2)
              << "\n";
  } else {
    write_classifier_tsv(std::cout, cls);
    std::cout << "\n";
    write_generation_tsv(std::cout, gen);
  }
  return 0;
}

// ---- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string model, safety_dir, log_dir, static_dir, port_file;
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  std::size_t min_utterances = 5;
  double threshold = 0.5;
  int pipeline_delay_ms = 0;
};

int run_serve(const ServeArgs& a) {
  // Block termination signals before any thread starts, then wait for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  PipelineConfig pcfg;
  pcfg.min_utterances = a.min_utterances;
  pcfg.confidence_threshold = a.threshold;
  SuggestionEngine engine(load_bundle(a.model), load_safety(resolve_safety_dir(a.safety_dir, a.model), 0.3, 0),
                          pcfg);
  const int delay = a.pipeline_delay_ms;
  server::HubConfig hcfg;
  hcfg.min_utterances = a.min_utterances;
  if (!a.log_dir.empty()) hcfg.log_dir = a.log_dir;
  server::SessionHub hub(
      [engine, delay](const Conversation& c) {
        if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        return engine(c);
      },
      hcfg);
  server::ServerConfig scfg;
  scfg.address = a.host;
  scfg.port = a.port;
  if (!a.static_dir.empty()) scfg.static_dir = a.static_dir;
  server::WsServer srv(hub, scfg);
  srv.start();
  std::cout << "listening on http://" << srv.address() << ":" << srv.port() << std::endl;
  if (!a.port_file.empty()) std::ofstream(a.port_file) << srv.port() << "\n";

  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "shutting down" << std::endl;
  srv.stop();
  hub.drain();
  return 0;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::vector<std::string> scripts;
  std::string host = "127.0.0.1", session, name = "seeker";
  unsigned short port = 8080;
  int reply_wait_ms = 30000;
  bool auto_counselor = false;
};

int run_simulate(const SimulateArgs& a) {
  if (!a.session.empty() && a.scripts.size() != 1) {
    throw CLI::ValidationError("--session", "only valid with a single --script");
  }
  for (const auto& path : a.scripts) {
    const server::SeekerScript script = server::load_seeker_script(path);
    const std::string session =
        a.session.empty() ? server::create_remote_session(a.host, a.port, script.category) : a.session;
    std::cout << "scenario " << script.scenario_id << " in session " << session << std::endl;

    std::atomic<bool> stop{false};
    std::thread counselor;
    if (a.auto_counselor) {
      counselor = std::thread([&] {
        try {
          server::run_auto_counselor(a.host, a.port, session, stop);
        } catch (const std::exception& e) {
          std::cerr << "auto counselor: " << e.what() << "\n";
        }
      });
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    const auto frames = server::run_scripted_seeker(a.host, a.port, session, script,
                                                    std::chrono::milliseconds(a.reply_wait_ms), a.name);
    stop = true;
    if (counselor.joinable()) counselor.join();
    for (const Json& f : frames) {
      if (f.value("type", "") != "message") continue;
      const Json& p = f["payload"];
      std::cout << "  [" << p.value("index", 0) << "] " << p.value("role", "") << ": "
                << p.value("text", "") << "\n";
    }
  }
  return 0;
}

// ---- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string logs, format = "table", out;
};

int run_analyze(const AnalyzeArgs& a) {
  const AnalysisReport report = analyze(load_log_dir(a.logs));
  std::ofstream file;
  std::ostream& os = open_out(a.out, file);
  if (a.format == "json") {
    os << to_json(report).dump(2) << "\n";
  } else {
    print_table(os, report);
  }
  return 0;
}

// ---- check-safety -----------------------------------------------------------

struct SafetyArgs {
  std::string input = "-", safety_dir, model;
  double threshold = 0.3;
  int profanity_max = 0;
};

int run_check_safety(const SafetyArgs& a) {
  const SafetyFilter filter = load_safety(resolve_safety_dir(a.safety_dir, a.model), a.threshold, a.profanity_max);
  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.input != "-") {
    file.open(a.input);
    if (!file) throw IoError("cannot open " + a.input);
    in = &file;
  }
  std::size_t total = 0, blocked = 0;
  std::string line;
  while (std::getline(*in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++total;
    const SafetyVerdict v = filter.check(line);
    if (v.allowed) {
      std::cout << "allow\t\t" << line << "\n";
      continue;
    }
    ++blocked;
    std::string reasons;
    for (SafetyReason r : v.reasons) {
      if (!reasons.empty()) reasons += ',';
      reasons += to_string(r);
    }
    std::cout << "block\t" << reasons << "\t" << line << "\n";
  }
  std::cerr << blocked << " of " << total << " lines blocked\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counseling strategy suggestions for peer-support practice chats", "care"};
  app.set_config("--config", "", "TOML file with default flag values; command-line flags win");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Assign strategy labels with a trained model");
  label_cmd->add_option("--corpus", label.corpus, "Input corpus (JSONL)")->required()->check(CLI::ExistingFile);
  label_cmd->add_option("--model", label.model, "Model bundle directory [env CARE_MODEL_DIR]")
      ->envname("CARE_MODEL_DIR");
  label_cmd->add_option("--out", label.out, "Output corpus (JSONL, '-' for stdout)")->default_str("-");
  label_cmd->add_flag("--preserve-labels", label.preserve, "Keep existing non-empty labels");
  label_cmd->add_option("--threshold", label.threshold, "Probability a label must exceed")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  SplitArgs sp;
  auto* split_cmd = app.add_subcommand("split", "Split a corpus into train/dev/test by conversation");
  split_cmd->add_option("--corpus", sp.corpus, "Input corpus (JSONL)")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out", sp.out, "Output directory")->required();
  split_cmd->add_option("--seed", sp.spec.seed, "Shuffle seed")->capture_default_str();
  split_cmd->add_option("--train-ratio", sp.spec.train_ratio)->capture_default_str();
  split_cmd->add_option("--dev-ratio", sp.spec.dev_ratio)->capture_default_str();
  split_cmd->add_option("--test-ratio", sp.spec.test_ratio)->capture_default_str();
  split_cmd->add_option("--min-rating", sp.min_rating, "Drop conversations rated below this (0 keeps all)")
      ->capture_default_str()
      ->check(CLI::Range(0, 5));

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train strategy classifiers and the response index");
  train_cmd->add_option("--corpus", tr.corpus, "Labeled training corpus (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, "Bundle output directory [env CARE_MODEL_DIR]")
      ->envname("CARE_MODEL_DIR");
  train_cmd->add_option("--seed", tr.opt.hyper.seed, "Training seed")->capture_default_str();
  train_cmd->add_option("--epochs", tr.opt.hyper.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--learning-rate", tr.opt.hyper.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--l2", tr.opt.hyper.l2)->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--context-len", tr.opt.context_len)->capture_default_str()->check(CLI::Range(1, 5));
  train_cmd->add_flag("!--no-downsample", tr.opt.downsample, "Keep every negative instance");
  train_cmd->add_option("--min-rating", tr.min_rating, "Train only on conversations rated at least this")
      ->capture_default_str()
      ->check(CLI::Range(0, 5));
  train_cmd->add_option("--safety-dir", tr.safety_dir, "Lexicon directory to copy into the bundle")
      ->check(CLI::ExistingDirectory);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Classifier and generation metrics on a test corpus");
  eval_cmd->add_option("--model", ev.model, "Model bundle directory [env CARE_MODEL_DIR]")
      ->envname("CARE_MODEL_DIR");
  eval_cmd->add_option("--test", ev.test, "Labeled test corpus (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--format", ev.format)->capture_default_str()->check(CLI::IsMember({"tsv", "json"}));
  eval_cmd->add_option("--threshold", ev.threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--max-chars", ev.max_chars)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--context-len", ev.context_len)->capture_default_str()->check(CLI::Range(1, 5));

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the chat server");
  serve_cmd->add_option("--model", sv.model, "Model bundle directory [env CARE_MODEL_DIR]")
      ->envname("CARE_MODEL_DIR");
  serve_cmd->add_option("--safety-dir", sv.safety_dir, "Lexicon directory (default: bundle safety/)");
  serve_cmd->add_option("--log-dir", sv.log_dir, "Event log directory [env CARE_LOG_DIR]")
      ->envname("CARE_LOG_DIR");
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  serve_cmd->add_option("--static-dir", sv.static_dir, "Serve web client files from here")
      ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--port-file", sv.port_file, "Write the bound port here once listening");
  serve_cmd->add_option("--min-utterances", sv.min_utterances)->capture_default_str()->check(CLI::PositiveNumber);
  serve_cmd->add_option("--threshold", sv.threshold, "Strategy probability a suggestion must exceed")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  serve_cmd->add_option("--pipeline-delay-ms", sv.pipeline_delay_ms, "Artificial suggestion latency")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Replay seeker scripts against a running server");
  sim_cmd->add_option("--script", sim.scripts, "Seeker script (JSON); repeatable")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--host", sim.host)->capture_default_str();
  sim_cmd->add_option("--port", sim.port)->capture_default_str();
  sim_cmd->add_option("--session", sim.session, "Join this session instead of creating one");
  sim_cmd->add_option("--name", sim.name)->capture_default_str();
  sim_cmd->add_option("--reply-wait-ms", sim.reply_wait_ms, "Wait this long for a counselor reply")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--auto-counselor", sim.auto_counselor,
                    "Also connect a bot counselor that sends the top suggestion");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Usage report from session event logs");
  analyze_cmd->add_option("--logs", an.logs, "Directory of <session>.jsonl logs [env CARE_LOG_DIR]")
      ->envname("CARE_LOG_DIR");
  analyze_cmd->add_option("--format", an.format)->capture_default_str()->check(CLI::IsMember({"table", "json"}));
  analyze_cmd->add_option("--out", an.out, "Write the report here instead of stdout");

  SafetyArgs sa;
  auto* safety_cmd = app.add_subcommand("check-safety", "Run the safety filter over each line of a file");
  safety_cmd->add_option("--input", sa.input, "Text file, one candidate per line ('-' for stdin)")
      ->capture_default_str();
  safety_cmd->add_option("--safety-dir", sa.safety_dir, "Lexicon directory (default: bundle safety/)");
  safety_cmd->add_option("--model", sa.model, "Model bundle whose safety/ to use [env CARE_MODEL_DIR]")
      ->envname("CARE_MODEL_DIR");
  safety_cmd->add_option("--threshold", sa.threshold, "Classifier score that blocks")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  safety_cmd->add_option("--profanity-max", sa.profanity_max, "Profanity hits tolerated")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  auto need = [&](const std::string& v, const char* flag, CLI::App* cmd) {
    if (!v.empty()) return true;
    std::cerr << cmd->get_name() << ": " << flag << " is required\n" << cmd->help();
    return false;
  };

  try {
    if (*label_cmd) return need(label.model, "--model", label_cmd) ? run_label(label) : kExitUsage;
    if (*split_cmd) return run_split(sp);
    if (*train_cmd) return need(tr.out, "--out", train_cmd) ? run_train(tr) : kExitUsage;
    if (*eval_cmd) return need(ev.model, "--model", eval_cmd) ? run_evaluate(ev) : kExitUsage;
    if (*serve_cmd) return need(sv.model, "--model", serve_cmd) ? run_serve(sv) : kExitUsage;
    if (*sim_cmd) return run_simulate(sim);
    if (*analyze_cmd) return need(an.logs, "--logs", analyze_cmd) ? run_analyze(an) : kExitUsage;
    if (*safety_cmd) return run_check_safety(sa);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
