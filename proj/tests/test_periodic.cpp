#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcpshield/gateway/config.hpp"
#include "mcpshield/judge/rule_backend.hpp"
#include "mcpshield/periodic/drift.hpp"
#include "mcpshield/periodic/history.hpp"
#include "mcpshield/protocol/canonical.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using namespace mcpshield;
using nlohmann::json;
using periodic::History;
using periodic::InvocationRecord;

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Independent trigger oracle: enumerate the trigger lengths by repeated
// addition (baseline + k, baseline + 2k, ...) instead of the production
// modulo test, then check membership.
// ---------------------------------------------------------------------------
namespace oracle {

bool is_trigger_length(std::size_t len, int baseline, int k) {
  if (baseline < 1 || k < 1) return false;
  for (std::size_t t = static_cast<std::size_t>(baseline + k); t <= len;
       t += static_cast<std::size_t>(k)) {
    if (t == len) return true;
  }
  return false;
}

}  // namespace oracle

namespace {

InvocationRecord record(std::uint64_t seq, std::string tool = "lookup",
                        std::string fingerprint = "fp-a",
                        std::string output = "ok: 21C") {
  InvocationRecord r;
  r.seq = seq;
  r.tool_name = std::move(tool);
  r.args_digest = protocol::sha256_hex("{}");
  r.output_summary = std::move(output);
  r.manifest_fingerprint = std::move(fingerprint);
  r.timestamp_ms = 1700000000000ull + seq;
  return r;
}

History history_of_length(std::size_t len) {
  History h;
  h.server_id = "srv";
  for (std::size_t i = 1; i <= len; ++i) h.append(record(i));
  return h;
}

gateway::ShieldConfig drift_config(int baseline = 5, int k = 3,
                                   int threshold = 4) {
  auto config = gateway::ShieldConfig::defaults();
  config.post_baseline = baseline;
  config.post_k = k;
  config.post_threshold = threshold;
  return config;
}

judge::Judge rule_judge() {
  return judge::Judge(std::make_unique<judge::RuleBackend>(0), 0);
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() /
               ("mcpshield-periodic-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("trigger decisions match the enumeration oracle exhaustively") {
  for (int baseline = 1; baseline <= 10; ++baseline) {
    for (int k = 1; k <= 10; ++k) {
      History h;
      h.server_id = "srv";
      for (std::size_t len = 1; len <= 100; ++len) {
        h.append(record(len));
        CAPTURE(baseline);
        CAPTURE(k);
        CAPTURE(len);
        // Fresh watermark: pure length question.
        h.last_assessed_seq = 0;
        REQUIRE(periodic::should_trigger(h, baseline, k) ==
                oracle::is_trigger_length(len, baseline, k));
        // Spent watermark: never fires twice for one window.
        h.last_assessed_seq = len;
        REQUIRE_FALSE(periodic::should_trigger(h, baseline, k));
      }
    }
  }
}

TEST_CASE("degenerate window parameters never trigger") {
  auto h = history_of_length(50);
  CHECK_FALSE(periodic::should_trigger(h, 0, 3));
  CHECK_FALSE(periodic::should_trigger(h, 5, 0));
  CHECK_FALSE(periodic::should_trigger(h, -1, 3));
  CHECK_FALSE(periodic::should_trigger(h, 5, -2));
}

TEST_CASE("the default cadence fires at 8, 11, 14 and each window only once") {
  History h;
  h.server_id = "srv";
  std::vector<std::size_t> fired;
  for (std::size_t len = 1; len <= 20; ++len) {
    h.append(record(len));
    if (periodic::should_trigger(h, 5, 3)) {
      fired.push_back(len);
      // What run_stage3 does after judging: spend the window.
      h.last_assessed_seq = h.records.size();
      // Asking again without new records must be a no.
      CHECK_FALSE(periodic::should_trigger(h, 5, 3));
    }
  }
  CHECK(fired == std::vector<std::size_t>{8, 11, 14, 17, 20});
}

TEST_CASE("drift payloads compare the baseline prefix against the tail") {
  History h;
  h.server_id = "srv";
  for (std::size_t i = 1; i <= 11; ++i) {
    h.append(record(i, "tool-" + std::to_string(i)));
  }

  auto payload = periodic::build_drift_payload(h, drift_config());
  CHECK(payload.server_id == "srv");

  // Baseline covers records 1..5, the recent window 9..11; with every tool
  // name unique the histograms must be disjoint.
  std::set<std::string> base_tools, recent_tools;
  for (const auto& [name, count] : payload.baseline_summary.tool_histogram) {
    base_tools.insert(name);
    CHECK(count == 1);
  }
  for (const auto& [name, count] : payload.recent_summary.tool_histogram) {
    recent_tools.insert(name);
  }
  CHECK(base_tools ==
        std::set<std::string>{"tool-1", "tool-2", "tool-3", "tool-4", "tool-5"});
  CHECK(recent_tools == std::set<std::string>{"tool-9", "tool-10", "tool-11"});

  CHECK(payload.baseline_summary.output_lengths.size() == 5);
  CHECK(payload.recent_summary.output_lengths.size() == 3);
}

TEST_CASE("a history shorter than one full comparison refuses to summarize") {
  auto h = history_of_length(7);  // needs 5+3
  CHECK_THROWS_AS(periodic::build_drift_payload(h, drift_config()),
                  std::invalid_argument);
  auto enough = history_of_length(8);
  CHECK_NOTHROW(periodic::build_drift_payload(enough, drift_config()));
}

TEST_CASE("deltas capture exactly what changed between the windows") {
  History h;
  h.server_id = "srv";
  // Baseline: one tool, fingerprint fp-a, no events, ten-char outputs.
  for (std::uint64_t i = 1; i <= 5; ++i) {
    auto r = record(i, "lookup", "fp-a", "0123456789");
    r.domains_contacted = {"api.example.com"};
    r.event_kinds = {{"net_connect", 1}};
    h.append(r);
  }
  // Middle filler so the windows are disjoint.
  for (std::uint64_t i = 6; i <= 8; ++i) h.append(record(i, "lookup", "fp-a"));
  // Recent: new fingerprint, new domain, new event kind, longer outputs,
  // and one error.
  for (std::uint64_t i = 9; i <= 11; ++i) {
    auto r = record(i, "lookup", "fp-b", std::string(25, 'x'));
    r.domains_contacted = {"api.example.com", "telemetry.evil.invalid"};
    r.event_kinds = {{"net_connect", 1}, {"process_spawn", 1}};
    r.output_error = (i == 9);
    h.append(r);
  }

  auto payload = periodic::build_drift_payload(h, drift_config());
  const auto& d = payload.deltas;
  CHECK(d.manifest_changed);
  CHECK(d.new_domains == std::set<std::string>{"telemetry.evil.invalid"});
  CHECK(d.new_event_kinds == std::set<std::string>{"process_spawn"});
  CHECK(d.tool_count_delta == 0);
  // Baseline had zero errors, recent has 1/3.
  CHECK(d.error_rate_delta == doctest::Approx(1.0 / 3.0));
  // Mean output length went from 10 to 25.
  CHECK(d.output_length_shift == doctest::Approx(1.5));

  // Output digests are the real hashes of the summaries.
  REQUIRE(payload.recent_summary.output_digests.size() == 3);
  CHECK(payload.recent_summary.output_digests[0] ==
        protocol::sha256_hex(std::string(25, 'x')));
}

TEST_CASE("fingerprint variety inside one window already counts as change") {
  History h;
  h.server_id = "srv";
  for (std::uint64_t i = 1; i <= 11; ++i) {
    h.append(record(i, "lookup", i == 3 ? "fp-odd" : "fp-a"));
  }
  auto payload = periodic::build_drift_payload(h, drift_config());
  CHECK(payload.deltas.manifest_changed);
}

TEST_CASE("sample outputs are the tail of each window, capped at three") {
  History h;
  h.server_id = "srv";
  for (std::uint64_t i = 1; i <= 11; ++i) {
    h.append(record(i, "lookup", "fp-a", "out-" + std::to_string(i)));
  }

  auto config = drift_config();
  auto payload = periodic::build_drift_payload(h, config);
  CHECK(payload.baseline_summary.sample_outputs ==
        std::vector<std::string>{"out-3", "out-4", "out-5"});
  CHECK(payload.recent_summary.sample_outputs ==
        std::vector<std::string>{"out-9", "out-10", "out-11"});

  // Excluding outputs drops the samples but keeps the numeric features.
  config.post_include_output = false;
  auto without = periodic::build_drift_payload(h, config);
  CHECK(without.baseline_summary.sample_outputs.empty());
  CHECK(without.recent_summary.sample_outputs.empty());
  CHECK(without.recent_summary.output_lengths.size() == 3);
}

TEST_CASE("stage 3 maps scores onto outcomes with an inclusive threshold") {
  // Stable behavior: score 1, stays silent.
  {
    auto h = history_of_length(8);
    auto j = rule_judge();
    auto decision = periodic::run_stage3(j, h, drift_config());
    CHECK(decision.outcome == periodic::Stage3Decision::Outcome::no_drift);
    CHECK(decision.verdict.drift_score == 1);
    CHECK(h.last_assessed_seq == 8);
  }

  // Cosmetic change: logged, not rejected.
  {
    History h;
    h.server_id = "srv";
    for (std::uint64_t i = 1; i <= 8; ++i) {
      auto r = record(i);
      if (i > 5) r.domains_contacted = {"cdn.example.com"};
      h.append(r);
    }
    auto j = rule_judge();
    auto decision = periodic::run_stage3(j, h, drift_config());
    CHECK(decision.outcome == periodic::Stage3Decision::Outcome::drift_logged);
    CHECK(decision.verdict.drift_score == 2);
  }

  // Manifest swap: score 4 meets threshold 4 exactly and rejects.
  {
    History h;
    h.server_id = "srv";
    for (std::uint64_t i = 1; i <= 8; ++i) {
      h.append(record(i, "lookup", i > 5 ? "fp-b" : "fp-a"));
    }
    auto j = rule_judge();
    auto decision = periodic::run_stage3(j, h, drift_config());
    CHECK(decision.outcome ==
          periodic::Stage3Decision::Outcome::rejected_for_drift);
    CHECK(decision.verdict.drift_score == 4);

    // The same evidence under a stricter threshold is only logged.
    History again;
    again.server_id = "srv";
    for (std::uint64_t i = 1; i <= 8; ++i) {
      again.append(record(i, "lookup", i > 5 ? "fp-b" : "fp-a"));
    }
    auto j2 = rule_judge();
    auto lax = periodic::run_stage3(j2, again, drift_config(5, 3, 5));
    CHECK(lax.outcome == periodic::Stage3Decision::Outcome::drift_logged);
  }
}

TEST_CASE("a failing judge rejects for drift and still spends the window") {
  struct BrokenBackend : judge::JudgeBackend {
    const char* name() const override { return "broken"; }
    judge::BackendReply complete(const judge::JudgeRequest&) override {
      throw std::runtime_error("offline");
    }
  };

  auto h = history_of_length(8);
  judge::Judge j(std::make_unique<BrokenBackend>(), 0);
  auto decision = periodic::run_stage3(j, h, drift_config());
  CHECK(decision.outcome ==
        periodic::Stage3Decision::Outcome::rejected_for_drift);
  CHECK(decision.verdict.drift_score == 5);
  CHECK(decision.verdict.reason == "judge_failure");
  CHECK(h.last_assessed_seq == 8);
  CHECK_FALSE(periodic::should_trigger(h, 5, 3));
}

// ---------------------------------------------------------------------------
// History integrity and persistence.
// ---------------------------------------------------------------------------

TEST_CASE("appends must be strictly consecutive") {
  History h;
  h.server_id = "srv";
  h.append(record(1));
  h.append(record(2));
  CHECK_THROWS_AS(h.append(record(2)), periodic::HistoryError);
  CHECK_THROWS_AS(h.append(record(4)), periodic::HistoryError);
  CHECK_THROWS_AS(h.append(record(0)), periodic::HistoryError);
  h.append(record(3));
  CHECK(h.records.size() == 3);
}

TEST_CASE("history survives a round trip through its JSONL file") {
  fs::path dir = scratch_dir("roundtrip");
  fs::path file = dir / "history.jsonl";

  std::vector<InvocationRecord> originals;
  for (std::uint64_t i = 1; i <= 9; ++i) {
    auto r = record(i, "tool-" + std::to_string(i % 3), "fp-a",
                    "output " + std::to_string(i));
    r.event_kinds = {{"file_write", static_cast<int>(i)}};
    r.domains_contacted = {"api.example.com"};
    r.output_error = (i % 4 == 0);
    originals.push_back(r);
    periodic::append_history_line(r, file);
  }

  auto loaded = periodic::load_history("srv", file);
  CHECK(loaded.server_id == "srv");
  REQUIRE(loaded.records.size() == originals.size());
  for (std::size_t i = 0; i < originals.size(); ++i) {
    CHECK(loaded.records[i].to_json() == originals[i].to_json());
  }
  CHECK(loaded.last_assessed_seq == 0);  // the watermark is not persisted
}

TEST_CASE("loading an absent file is an empty history, not an error") {
  fs::path dir = scratch_dir("absent");
  auto loaded = periodic::load_history("srv", dir / "never-written.jsonl");
  CHECK(loaded.server_id == "srv");
  CHECK(loaded.records.empty());
}

TEST_CASE("corrupt history lines are refused with their line number") {
  fs::path dir = scratch_dir("corrupt");

  // Not JSON at all.
  {
    fs::path file = dir / "garbage.jsonl";
    periodic::append_history_line(record(1), file);
    std::ofstream(file, std::ios::app) << "this is not json\n";
    CHECK_THROWS_WITH_AS(periodic::load_history("srv", file),
                         doctest::Contains(":2"), periodic::HistoryError);
  }

  // Valid JSON with a field of the wrong type.
  {
    fs::path file = dir / "badfield.jsonl";
    periodic::append_history_line(record(1), file);
    json bad = record(2).to_json();
    bad["output_error"] = "yes";
    std::ofstream(file, std::ios::app) << bad.dump() << "\n";
    CHECK_THROWS_AS(periodic::load_history("srv", file), periodic::HistoryError);
  }

  // A gap in the sequence.
  {
    fs::path file = dir / "gap.jsonl";
    periodic::append_history_line(record(1), file);
    periodic::append_history_line(record(3), file);
    CHECK_THROWS_AS(periodic::load_history("srv", file), periodic::HistoryError);
  }
}
