// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "care/server/client.hpp"
#include "care/server/hub.hpp"
#include "care/server/ws_server.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace care;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;
using testing_support::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::map<std::string, std::string> files_under(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out[std::filesystem::relative(e.path(), root).string()] = detail::read_file(e.path());
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> violation_fixtures() {
  std::ifstream in(testing_support::fixture("safety/violations.tsv"));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

std::vector<std::string> benign_fixtures() {
  std::ifstream in(testing_support::fixture("safety/benign.txt"));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// ---- Pipeline rules --------------------------------------------------------

Outcome pipeline_rules() {
  const auto t0 = Clock::now();
  Outcome o;
  const auto& world = testing_support::synthetic_world();
  const SafetyFilter safety = testing_support::default_safety();
  const auto unsafe = violation_fixtures();
  const RetrievalGenerator retrieval(world.bundle.index);

  Rng rng(2024);
  // Probability values chosen to exercise ties and the 0.5 boundary.
  const std::vector<double> palette = {0.0, 0.2, 0.5, 0.5, 0.5000001, 0.51, 0.7, 0.7, 0.8, 0.9, 0.9, 1.0};
  synthetic::Options sopt;
  std::size_t nonempty = 0, short_convs = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Conversation conv = synthetic::make_conversation(
        kAllStrategies[rng.below(kStrategyCount)], "acc-" + std::to_string(trial), rng, sopt);
    conv.utterances.resize(rng.below(conv.utterances.size() + 1));
    const bool too_short = conv.utterances.size() < 5;
    short_convs += too_short;

    // Half the time the trained model, otherwise random probabilities.
    StrategyProbabilities fixed;
    for (double& v : fixed) v = palette[rng.below(palette.size())];
    const bool use_trained = rng.below(2) == 0;
    const StrategyBackend predictor =
        use_trained ? StrategyBackend(world.bundle.predictor)
                    : StrategyBackend([fixed](const Context&) { return fixed; });

    // Seed unsafe and duplicate responses into the generator.
    const std::uint64_t mode = rng.below(4);
    const std::string bad = unsafe[rng.below(unsafe.size())].second;
    const ResponseBackend generator([&, mode, bad](const Context& ctx, Strategy s) -> std::optional<std::string> {
      if (mode == 1 && ordinal(s) % 2 == 0) return bad;
      if (mode == 2) return ordinal(s) % 2 ? std::string("I hear you.") : std::string("  i HEAR   you. ");
      if (mode == 3 && ordinal(s) % 3 == 0) return std::nullopt;
      return retrieval.generate(ctx, s);
    });

    const SuggestionSet out = suggest(conv, predictor, generator, safety);
    if (too_short) {
      o.check(out.items.empty(), "short conversation got suggestions");
      continue;
    }
    nonempty += !out.items.empty();
    o.check(out.items.size() <= 3, "more than three items");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < out.items.size(); ++i) {
      const Suggestion& s = out.items[i];
      o.check(s.probability > 0.5, "probability not above 0.5");
      if (i > 0) o.check(out.items[i - 1].probability >= s.probability, "not in descending order");
      o.check(seen.insert(normalize_text(s.text)).second, "duplicate normalized text");
      o.check(safety.allows(s.text), "unsafe text: " + s.text);
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < 60.0, "runtime under 60 s");
  o.note("1000 conversations, " + std::to_string(short_convs) + " short, " + std::to_string(nonempty) +
         " non-empty sets, " + fmt(secs, 1) + " s");
  if (!o.pass && o.notes.size() > 6) o.notes.resize(6);
  return o;
}

// ---- Classifier -------------------------------------------------------------

Outcome classifier_check() {
  const auto t0 = Clock::now();
  Outcome o;
  const auto corpus = synthetic::make_corpus();
  const CorpusSplit split = care::split(corpus, SplitSpec{});
  std::size_t min_instances = SIZE_MAX;
  const TrainOptions opt;
  for (Strategy s : kAllStrategies) {
    std::size_t pos = 0;
    for (const auto& inst : build_instances(corpus, s)) pos += inst.label;
    min_instances = std::min(min_instances, pos);
  }
  o.check(min_instances >= 200, "at least 200 instances per strategy");

  const ModelBundle m1 = train_models(split.train, opt);
  const ModelBundle m2 = train_models(split.train, opt);
  std::vector<TrainingInstance> test;
  for (Strategy s : kAllStrategies) {
    auto inst = build_instances(split.test, s);
    test.insert(test.end(), inst.begin(), inst.end());
  }
  const auto metrics = evaluate(m1.predictor, test);
  double worst = 1.0;
  std::string per;
  for (Strategy s : kAllStrategies) {
    worst = std::min(worst, metrics[s].f1);
    o.check(metrics[s].f1 >= 0.90, std::string(to_string(s)) + " F1 " + fmt(metrics[s].f1));
    per += std::string(per.empty() ? "" : " ") + std::string(to_string(s)) + "=" + fmt(metrics[s].f1);
  }
  TempDir a("acc-bundle"), b("acc-bundle");
  save_bundle(a.path(), m1.predictor, m1.index);
  save_bundle(b.path(), m2.predictor, m2.index);
  o.check(files_under(a.path()) == files_under(b.path()), "same-seed bundles are byte-identical");
  const double secs = seconds_since(t0);
  o.check(secs < 120.0, "runtime under 120 s");
  o.note(std::to_string(min_instances) + "+ positives per strategy; min F1 " + fmt(worst) + "; " + fmt(secs, 1) +
         " s");
  o.note("F1 " + per);
  return o;
}

// ---- Strategy consistency ---------------------------------------------------

Outcome consistency_check() {
  Outcome o;
  const auto& w = testing_support::synthetic_world();
  const GenEvalResult res = evaluate_generation(w.bundle.index, w.bundle.predictor, w.split.test);
  o.check(res.rows.size() == kStrategyCount + 1, "a row for every strategy plus overall");
  std::string per;
  for (const auto& row : res.rows) {
    const double need = row.strategy ? 0.90 : 0.85;
    o.check(row.positive_rate >= need, row_label(row) + " positive_rate " + fmt(row.positive_rate));
    per += std::string(per.empty() ? "" : " ") + row_label(row) + "=" + fmt(row.positive_rate);
  }
  o.note(per);
  return o;
}

// ---- Metric oracles ---------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  Rng rng(99);
  const std::vector<std::string> vocab = {"the", "cat", "sat", "on", "mat", "a", "dog"};
  std::size_t cases = 0;
  for (int t = 0; t < 500; ++t) {
    auto words = [&](std::size_t max) {
      std::string s;
      const std::size_t n = 1 + rng.below(max);
      for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + rng.pick(vocab);
      return s;
    };
    const std::string c = words(10), r = words(10);
    const auto ct = oracle::split_words(c), rt = oracle::split_words(r);
    for (std::size_t n : {1u, 2u}) {
      const double m = static_cast<double>(oracle::ngram_matches_by_marking(ct, rt, n));
      const double tc = static_cast<double>(oracle::ngram_total(ct, n));
      const double tr = static_cast<double>(oracle::ngram_total(rt, n));
      const double p = tc > 0 && tr > 0 ? m / tc : 0.0, rc = tc > 0 && tr > 0 ? m / tr : 0.0;
      const PRF got = rouge_n(c, r, n);
      o.check(std::abs(got.precision - p) <= 1e-9 && std::abs(got.recall - rc) <= 1e-9 &&
                  std::abs(got.f1 - oracle::f1(p, rc)) <= 1e-9,
              "ROUGE-" + std::to_string(n) + " '" + c + "' vs '" + r + "'");
    }
    const double l = static_cast<double>(oracle::token_lcs_by_enumeration(ct, rt));
    o.check(std::abs(rouge_l(c, r).f1 - oracle::f1(l / ct.size(), l / rt.size())) <= 1e-9, "ROUGE-L " + c);
    o.check(std::abs(bleu(c, r) - oracle::bleu_from_definition(ct, rt, 4)) <= 1e-9, "BLEU " + c);

    auto chars = [&](std::size_t max) {
      std::string s;
      const std::size_t n = rng.below(max + 1);
      for (std::size_t i = 0; i < n; ++i) s += static_cast<char>('a' + rng.below(4));
      return s;
    };
    const std::string x = chars(12), y = chars(12);
    o.check(lcs_chars(x, y) == oracle::lcs_by_enumeration(x, y), "lcs_chars '" + x + "' '" + y + "'");

    const std::size_t n1 = 1 + rng.below(4);
    const std::size_t n2 = 1 + rng.below(8 - n1);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n1; ++i) a.push_back(static_cast<double>(rng.below(6)));
    for (std::size_t i = 0; i < n2; ++i) b.push_back(static_cast<double>(rng.below(6)));
    const auto got = mann_whitney_u(a, b);
    const auto want = oracle::mann_whitney_by_permutation(a, b);
    o.check(got.u == want.u && std::abs(got.p - want.p) <= 1e-9, "Mann-Whitney");
    ++cases;
  }
  // Closed-form cases.
  o.check(std::abs(rouge_n("the cat sat", "the cat ran", 1).f1 - 2.0 / 3.0) <= 1e-9, "ROUGE-1 hand count");
  o.check(lcs_chars("ABCBDAB", "BDCABA") == 4, "lcs ABCBDAB/BDCABA");
  const auto sep = mann_whitney_u(std::vector<int>{1, 2, 3}, std::vector<int>{10, 11, 12});
  o.check(sep.u == 0.0 && std::abs(sep.p - 0.1) <= 1e-9, "complete separation U=0, p=0.1");
  const auto ea = edit_analysis("hi", "hi there friend");
  o.check(ea.lcs == 2 && std::abs(ea.ratio_vs_sent - 2.0 / 15.0) <= 1e-9, "edit analysis hi / hi there friend");
  if (o.notes.size() > 6) o.notes.resize(6);
  o.note(std::to_string(cases) + " random cases per metric");
  return o;
}

// ---- Telemetry fixture ------------------------------------------------------

Outcome telemetry_fixture() {
  Outcome o;
  const auto events = load_events(testing_support::fixture("telemetry/fixture-1.jsonl"));
  const ChatReport r = analyze_session(events);
  // Expected values worked out by hand from the fixture.
  const std::string clicked = "Making a plan is a great first step.";
  const std::string edited = "Making a plan is a great first step, well done.";
  o.check(r.counselor_messages == 4, "4 counselor messages");
  o.check(r.assistance_rate == 3.0 / 4.0, "assistance rate 3/4");
  o.check(r.click_through_rate == 2.0 / 3.0, "click-through 2/3");
  o.check(r.unmodified_fraction == 1.0 / 2.0, "unmodified 1/2");
  o.check(r.panel_open_fraction == 21.0 / 22.0, "panel open 21/22");
  o.check(r.lcs_ratio_vs_suggestion == std::vector<double>{1.0}, "LCS ratio vs suggestion [1]");
  o.check(r.lcs_ratio_vs_sent ==
              std::vector<double>{static_cast<double>(clicked.size()) / static_cast<double>(edited.size())},
          "LCS ratio vs sent [36/47]");

  TempDir logs("acc-logs");
  std::filesystem::copy_file(testing_support::fixture("telemetry/fixture-1.jsonl"), logs / "fixture-1.jsonl");
  const std::string a = to_json(analyze(load_log_dir(logs.path()))).dump(2);
  const std::string b = to_json(analyze(load_log_dir(logs.path()))).dump(2);
  o.check(a == b, "report bytes stable in-process");

  // The CLI, run twice, must print identical bytes.
  const std::string cli = CARE_CLI_PATH;
  if (!cli.empty()) {
    auto run = [&] {
      std::string out;
      FILE* p = ::popen((cli + " analyze --format json --logs '" + logs.path().string() + "'").c_str(), "r");
      char buf[4096];
      std::size_t n;
      while (p && (n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
      if (p) ::pclose(p);
      return out;
    };
    const std::string c1 = run(), c2 = run();
    o.check(!c1.empty() && c1 == c2, "`analyze` output byte-stable across runs");
    o.check(c1 == a + "\n", "`analyze` JSON matches the library report");
  }
  o.note("assist 0.750, ctr 0.667, unmodified 0.500, lcs vs sent " + fmt(r.lcs_ratio_vs_sent.empty() ? 0 : r.lcs_ratio_vs_sent[0], 4));
  return o;
}

// ---- Safety -----------------------------------------------------------------

Outcome safety_recall() {
  Outcome o;
  const SafetyFilter f = testing_support::default_safety();
  const auto bad = violation_fixtures();
  std::size_t blocked = 0;
  for (const auto& [reason, text] : bad) {
    const SafetyVerdict v = f.check(text);
    const bool ok = !v.allowed;
    blocked += ok;
    o.check(ok, "not blocked: " + text);
  }
  const auto good = benign_fixtures();
  std::size_t allowed = 0;
  for (const auto& t : good) allowed += f.allows(t);
  const double rate = static_cast<double>(allowed) / static_cast<double>(good.size());
  o.check(rate >= 0.95, "benign allow rate " + fmt(rate));
  o.check(!bad.empty() && !good.empty(), "fixtures present");
  o.note(std::to_string(blocked) + "/" + std::to_string(bad.size()) + " violations blocked, " +
         std::to_string(allowed) + "/" + std::to_string(good.size()) + " benign allowed");
  return o;
}

// ---- Server protocol --------------------------------------------------------

struct Harness {
  Harness(server::Suggester sg, server::HubConfig cfg = {}) : hub(std::move(sg), std::move(cfg)) {
    server::ServerConfig sc;
    sc.port = 0;
    srv = std::make_unique<server::WsServer>(hub, sc);
    srv->start();
  }
  ~Harness() {
    srv->stop();
    hub.drain();
  }
  unsigned short port() const { return srv->port(); }

  server::SessionHub hub;
  std::unique_ptr<server::WsServer> srv;
};

std::size_t count_type(const std::vector<Json>& fs, std::string_view type) {
  return static_cast<std::size_t>(
      std::count_if(fs.begin(), fs.end(), [&](const Json& f) { return f.value("type", "") == type; }));
}

Outcome server_protocol() {
  Outcome o;
  using server::Role;
  namespace frame = server::frame;
  const auto& w = testing_support::synthetic_world();
  const SuggestionEngine engine(w.bundle, testing_support::default_safety());
  const std::string host = "127.0.0.1";

  // Two clients: join, chat, typing, counselor-only suggestions, clicks.
  {
    Harness h([&](const Conversation& c) { return engine(c); });
    const std::string id = server::create_remote_session(host, h.port(), Category::anxiety());
    server::ChatClient seeker, counselor;
    seeker.connect(host, h.port(), id, Role::Seeker, "sam");
    counselor.connect(host, h.port(), id, Role::Counselor, "pat");
    o.check(seeker.wait_for(frame::kJoined, 5s).has_value() && counselor.wait_for(frame::kJoined, 5s).has_value(),
            "both clients joined");
    const std::vector<std::string> lines = {
        "hi, i am new here and wanted to talk about my upcoming exam", "Hello and welcome, I am glad you are here.",
        "my heart is racing and i cannot breathe when i think about my upcoming exam", "I hear you.",
        "i am shaking and panicking about my upcoming exam"};
    for (std::size_t i = 0; i < lines.size(); ++i) {
      (i % 2 == 0 ? seeker : counselor).say(lines[i]);
      o.check(seeker.wait_for(frame::kMessage, 5s, i).has_value() &&
                  counselor.wait_for(frame::kMessage, 5s, i).has_value(),
              "message " + std::to_string(i) + " fanned out to both");
      if (i < 4) o.check(count_type(counselor.frames(), frame::kSuggestions) == 0, "no suggestions before utterance 5");
    }
    const auto sug = counselor.wait_for(frame::kSuggestions, 10s);
    o.check(sug && (*sug)["payload"]["for_utterance_index"] == 4, "suggestions for index 4 reach the counselor");
    o.check(sug && !(*sug)["payload"]["items"].empty(), "suggestion set is non-empty");
    counselor.send(frame::kTyping, Json{{"is_typing", true}});
    counselor.send(frame::kTyping, Json{{"is_typing", false}});
    const auto t2 = seeker.wait_for(frame::kTyping, 5s, 1);
    const auto typing = seeker.frames_of(frame::kTyping);
    o.check(t2 && typing.size() == 2 && typing[0]["payload"]["is_typing"] == true &&
                typing[1]["payload"]["is_typing"] == false,
            "typing frames reach the seeker in order");
    if (sug && !(*sug)["payload"]["items"].empty()) {
      counselor.send(frame::kSuggestionClick, Json{{"suggestion_id", (*sug)["payload"]["items"][0]["id"]}});
      counselor.send(frame::kSuggestionClick, Json{{"suggestion_id", "0-0"}});
      const auto err = counselor.wait_for(frame::kError, 5s);
      o.check(err && (*err)["payload"]["code"] == "UnknownSuggestion", "unknown suggestion id rejected");
    }
    std::this_thread::sleep_for(200ms);
    o.check(seeker.frames_of(frame::kSuggestions).empty(), "seeker never receives suggestions");
  }

  // Stale suppression: a slow first job must not publish after the transcript moved on.
  {
    std::promise<void> release;
    std::shared_future<void> gate = release.get_future().share();
    std::atomic<int> calls{0};
    Harness h([&](const Conversation& c) {
      if (calls++ == 0) gate.wait();
      return engine(c);
    });
    const std::string id = server::create_remote_session(host, h.port(), Category::anxiety());
    server::ChatClient seeker, counselor;
    seeker.connect(host, h.port(), id, Role::Seeker, "sam");
    counselor.connect(host, h.port(), id, Role::Counselor, "pat");
    seeker.wait_for(frame::kJoined, 5s);
    counselor.wait_for(frame::kJoined, 5s);
    for (int i = 0; i < 5; ++i) {
      (i % 2 == 0 ? seeker : counselor).say("i feel so lonely dealing with my partner " + std::to_string(i));
      counselor.wait_for(frame::kMessage, 5s, static_cast<std::size_t>(i));
    }
    const auto deadline = Clock::now() + 5s;
    while (calls.load() == 0 && Clock::now() < deadline) std::this_thread::sleep_for(1ms);
    counselor.say("I am here with you.");
    seeker.say("nobody cares about me and i feel alone with my partner");
    counselor.wait_for(frame::kMessage, 5s, 6);
    release.set_value();
    const bool got = counselor.wait_until(
        [](const std::vector<Json>& fs) {
          for (const Json& f : fs) {
            if (f.value("type", "") == frame::kSuggestions && f["payload"]["for_utterance_index"] == 6) return true;
          }
          return false;
        },
        10s);
    h.hub.drain();
    bool stale = false;
    for (const Json& f : counselor.frames_of(frame::kSuggestions)) {
      stale = stale || f["payload"]["for_utterance_index"] == 4;
    }
    o.check(got, "fresh suggestions for index 6 delivered");
    o.check(!stale, "stale set for index 4 suppressed");
  }

  // Fan-out with a 5 s pipeline delay.
  {
    Harness h([&](const Conversation& c) {
      std::this_thread::sleep_for(5s);
      return engine(c);
    });
    const std::string id = server::create_remote_session(host, h.port(), Category::anxiety());
    server::ChatClient seeker, counselor;
    seeker.connect(host, h.port(), id, Role::Seeker, "sam");
    counselor.connect(host, h.port(), id, Role::Counselor, "pat");
    seeker.wait_for(frame::kJoined, 5s);
    counselor.wait_for(frame::kJoined, 5s);
    double worst_ms = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      const auto t0 = Clock::now();
      (i % 2 == 0 ? seeker : counselor).say("message number " + std::to_string(i));
      const bool both = seeker.wait_for(frame::kMessage, 5s, i).has_value() &&
                        counselor.wait_for(frame::kMessage, 5s, i).has_value();
      worst_ms = std::max(worst_ms, seconds_since(t0) * 1000.0);
      o.check(both, "message " + std::to_string(i) + " delivered while the pipeline is busy");
    }
    o.check(worst_ms < 1000.0, "fan-out latency under 1 s with a 5 s pipeline (worst " + fmt(worst_ms, 0) + " ms)");
    o.note("fan-out worst " + fmt(worst_ms, 0) + " ms under 5 s pipeline delay");
  }

  // Four scripted scenarios against the auto counselor.
  {
    Harness h([&](const Conversation& c) { return engine(c); });
    std::size_t scenarios = 0;
    for (const char* name : {"anxiety_1.json", "anxiety_2.json", "relationship_1.json", "relationship_2.json"}) {
      const auto script = server::load_seeker_script(testing_support::source_dir() / "data/scripts" / name);
      const std::string id = server::create_remote_session(host, h.port(), script.category);
      std::atomic<bool> stop{false};
      auto bot = std::async(std::launch::async, [&] {
        server::AutoCounselorOptions opt;
        opt.suggestion_wait = 10s;
        return server::run_auto_counselor(host, h.port(), id, stop, opt);
      });
      const auto deadline = Clock::now() + 5s;
      while (!h.hub.snapshot(id)->counselor_name && Clock::now() < deadline) std::this_thread::sleep_for(5ms);
      server::run_scripted_seeker(host, h.port(), id, script, 15s);
      stop = true;
      const auto counselor_frames = bot.get();
      h.hub.drain();

      const Conversation t = h.hub.snapshot(id)->transcript;
      o.check(t.size() == script.turns.size() * 2, std::string(name) + " transcript complete");
      bool alternates = true;
      for (std::size_t i = 0; i < t.size(); ++i) {
        alternates = alternates && t.utterances[i].speaker == (i % 2 == 0 ? Speaker::Seeker : Speaker::Counselor);
      }
      o.check(alternates, std::string(name) + " alternates seeker/counselor");
      std::optional<std::size_t> first;
      std::size_t nonempty = 0;
      for (const Json& f : counselor_frames) {
        if (f.value("type", "") != frame::kSuggestions) continue;
        const std::size_t idx = f["payload"]["for_utterance_index"].get<std::size_t>();
        if (!first) first = idx;
        nonempty += !f["payload"]["items"].empty();
      }
      o.check(first == 4u, std::string(name) + " first suggestions at utterance 5");
      o.check(nonempty > 0, std::string(name) + " shows non-empty suggestions");
      scenarios += first == 4u && nonempty > 0 && t.size() == script.turns.size() * 2;
    }
    o.note(std::to_string(scenarios) + "/4 scripted scenarios complete with suggestions from utterance 5");
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pipeline rule conformance", pipeline_rules},
      {"classifier separable-corpus check", classifier_check},
      {"strategy consistency", consistency_check},
      {"metric oracles", metric_oracles},
      {"telemetry fixture", telemetry_fixture},
      {"safety recall", safety_recall},
      {"server protocol", server_protocol},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt(seconds_since(t0), 1) << " s)";
    for (const auto& n : o.notes) std::cout << "\n    " << n;
    std::cout << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
