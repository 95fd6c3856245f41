#include "mcpshield/gateway/gateway.hpp"
#include "mcpshield/harness/eval.hpp"
#include "mcpshield/harness/fixtures.hpp"
#include "mcpshield/probing/probing.hpp"
#include "mcpshield/protocol/canonical.hpp"
#include "mcpshield/protocol/connection.hpp"
#include "mcpshield/protocol/framing.hpp"
#include "mcpshield/protocol/transport.hpp"
#include "mcpshield/signatures/signatures.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
namespace gateway = mcpshield::gateway;
namespace harness = mcpshield::harness;
namespace probing = mcpshield::probing;
namespace protocol = mcpshield::protocol;
namespace signatures = mcpshield::signatures;

// Config assembly shared by gate/probe/eval: a base profile or file, then
// first-class flags, then free-form --set overrides, then the API key from
// the environment (never from argv, which is visible to every local user).
struct ConfigCli {
  std::string config_file;
  std::string profile = "default";
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
};

void attach_config_flags(CLI::App* cmd, ConfigCli& c) {
  cmd->add_option("--config", c.config_file, "Config file (key=value lines)");
  cmd->add_option("--profile", c.profile, "Base profile: default|monitoring|passthrough")
      ->check(CLI::IsMember({"default", "monitoring", "passthrough"}))
      ->capture_default_str();
  cmd->add_option("--set", c.sets, "Override any config key (key=value, repeatable)");

  static const std::pair<const char*, const char*> kFlags[] = {
      {"--pre-mock-count", "pre_mock_count"},
      {"--pre-tool-limit", "pre_tool_limit"},
      {"--pre-deny-ratio", "pre_deny_ratio"},
      {"--post-k", "post_k"},
      {"--post-baseline", "post_baseline"},
      {"--post-threshold", "post_threshold"},
      {"--allowed-domains", "allowed_domains"},
      {"--trace-mode", "trace_mode"},
      {"--tool-timeout-seconds", "tool_timeout_seconds"},
      {"--judge", "judge_backend"},
      {"--judge-endpoint", "judge_endpoint"},
      {"--judge-model", "judge_model"},
      {"--judge-seed", "judge_seed"},
  };
  for (const auto& [flag, key] : kFlags) {
    std::string key_copy = key;
    cmd->add_option_function<std::string>(
        flag, [&c, key_copy](const std::string& v) { c.flag_values[key_copy] = v; },
        "Sets config key " + key_copy);
  }
}

gateway::ShieldConfig build_config(const ConfigCli& c) {
  gateway::ShieldConfig cfg;
  if (!c.config_file.empty()) {
    cfg = gateway::load_config_file(c.config_file);
  } else if (c.profile == "monitoring") {
    cfg = gateway::ShieldConfig::monitoring_profile();
  } else if (c.profile == "passthrough") {
    cfg = gateway::ShieldConfig::passthrough_profile();
  }
  for (const auto& [key, value] : c.flag_values) cfg.apply_kv(key, value);
  for (const auto& kv : c.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw gateway::ConfigError("--set expects key=value: " + kv);
    cfg.apply_kv(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (const char* key = std::getenv("MCPSHIELD_JUDGE_API_KEY")) cfg.judge_api_key = key;
  cfg.validate();
  return cfg;
}

std::unique_ptr<protocol::Connection> connect_server(const std::vector<std::string>& argv) {
  return std::make_unique<protocol::Connection>(protocol::StdioTransport::spawn(argv));
}

void write_report(const std::string& path, const json& body) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << body.dump(2) << "\n";
}

// Serves the agent side: JSON-RPC frames on our stdin/stdout, every tools/*
// request funneled through the gateway. Runs until the agent closes stdin.
int run_gate_loop(gateway::Gateway& gw, const std::string& server_id) {
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    protocol::RpcEnvelope request;
    try {
      request = protocol::frame_read(line);
    } catch (const protocol::FramingError& e) {
      std::cout << protocol::frame_write(
                       protocol::RpcEnvelope::make_error(json(), -32700, e.what()))
                << std::flush;
      continue;
    }
    if (request.kind != protocol::RpcEnvelope::Kind::request || request.is_notification()) {
      continue;
    }

    protocol::RpcEnvelope reply;
    if (request.method == "initialize") {
      reply = protocol::RpcEnvelope::make_response(
          request.id, json{{"protocolVersion", "2024-11-05"},
                           {"serverInfo", json{{"name", "mcpshield-gateway"}, {"version", "0.1.0"}}},
                           {"capabilities", json{{"tools", json::object()}}}});
    } else if (request.method == "tools/list") {
      auto listed = gw.proxy_tools_list(server_id);
      if (listed.manifest) {
        json tools = json::array();
        for (const auto& t : listed.manifest->tools) tools.push_back(t.to_json());
        reply = protocol::RpcEnvelope::make_response(request.id, json{{"tools", tools}});
      } else {
        reply = protocol::RpcEnvelope::make_error(
            request.id, -32000, "refused by mcpshield: " + listed.refusal->reason);
      }
    } else if (request.method == "tools/call") {
      const json& p = request.payload;
      if (!p.is_object() || !p.contains("name") || !p["name"].is_string()) {
        reply = protocol::RpcEnvelope::make_error(request.id, -32602, "tools/call requires a name");
      } else {
        auto outcome = gw.guarded_call(server_id, p["name"].get<std::string>(),
                                       p.value("arguments", json::object()));
        if (outcome.result) {
          reply = protocol::RpcEnvelope::make_response(request.id, outcome.result->to_json());
        } else {
          // Refusals stay inside the tool-result shape so agent frameworks
          // surface them instead of crashing the session.
          auto refused = protocol::ToolResult::make_text(
              "MCPShield refusal: " + outcome.refusal->to_json().dump(), /*is_error=*/true);
          reply = protocol::RpcEnvelope::make_response(request.id, refused.to_json());
        }
      }
    } else {
      reply = protocol::RpcEnvelope::make_error(request.id, -32601,
                                                "method not supported: " + request.method);
    }
    std::cout << protocol::frame_write(reply) << std::flush;
  }
  return 0;
}

int cmd_gate(const ConfigCli& ccli, const std::string& server_id, const std::string& state_dir,
             const std::vector<std::string>& server_argv) {
  auto config = build_config(ccli);
  gateway::Gateway gw(config, state_dir, harness::make_judge(config));
  gw.attach_server(server_id, connect_server(server_argv));

  const auto& state = gw.admit_server(server_id);
  if (state.phase == gateway::TrustPhase::Rejected) {
    std::cerr << "server rejected at "
              << (state.rejected_stage ? gateway::rejection_stage_name(*state.rejected_stage)
                                       : "admission")
              << ": " << state.rejection_reason << "\n";
    // The agent loop still runs: every call gets a structured refusal, which
    // is more useful to the caller than a dead socket.
  } else {
    std::cerr << "server admitted; fingerprint " << state.manifest_fingerprint << "\n";
  }
  return run_gate_loop(gw, server_id);
}

int cmd_probe(const ConfigCli& ccli, const std::string& server_id, const std::string& report_path,
              const std::vector<std::string>& server_argv) {
  auto config = build_config(ccli);
  auto judge = harness::make_judge(config);
  auto conn = connect_server(server_argv);
  conn->initialize();
  auto manifest = conn->list_tools(server_id);

  auto decision = probing::run_stage1(*conn, manifest, config, *judge);
  json body{{"decision", decision.to_json()},
            {"fingerprint", protocol::fingerprint(manifest)},
            {"usage", judge->usage_snapshot().to_json()}};
  write_report(report_path, body);
  std::cout << body.dump(2) << "\n";
  std::cerr << (decision.trusted() ? "stage1: trusted\n" : "stage1: rejected\n");
  return decision.trusted() ? 0 : 2;
}

int cmd_eval(const ConfigCli& ccli, const std::string& state_dir, const std::string& report_path,
             harness::SuiteOptions options, double max_asr, double max_benign_deny) {
  auto config = build_config(ccli);
  auto specs = harness::default_suite(options.seed);
  auto report = harness::run_suite(config, specs, options, state_dir);

  std::cout << report.to_table();
  write_report(report_path, report.to_json());

  bool ok = report.asr <= max_asr && report.benign_deny_rate <= max_benign_deny;
  if (!ok) {
    std::cerr << "thresholds exceeded: asr " << report.asr << " (max " << max_asr
              << "), benign deny rate " << report.benign_deny_rate << " (max " << max_benign_deny
              << ")\n";
  }
  return ok ? 0 : 2;
}

int cmd_sig_export(const std::string& state_dir, const std::string& out_path) {
  signatures::SignatureRegistry registry;
  auto path = std::filesystem::path(state_dir) / "signatures.json";
  if (std::filesystem::exists(path)) {
    auto report = registry.import_file(path);
    for (const auto& [index, reason] : report.skipped) {
      std::cerr << "skipping record " << index << ": " << reason << "\n";
    }
  }
  registry.export_file(out_path);
  std::cout << "exported " << registry.all().size() << " signature(s) to " << out_path << "\n";
  return 0;
}

int cmd_sig_import(const std::string& state_dir, const std::string& in_path) {
  signatures::SignatureRegistry registry;
  auto path = std::filesystem::path(state_dir) / "signatures.json";
  if (std::filesystem::exists(path)) registry.import_file(path);

  auto report = registry.import_file(in_path);
  for (const auto& [index, reason] : report.skipped) {
    std::cerr << "skipping record " << index << ": " << reason << "\n";
  }
  std::filesystem::create_directories(path.parent_path());
  registry.export_file(path);
  std::cout << "imported " << report.imported << " signature(s), skipped "
            << report.skipped.size() << "; denylist now holds " << registry.all().size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcpshield: a guarded gateway between an agent and untrusted MCP tool servers"};
  app.require_subcommand(1);

  // gate
  auto* gate = app.add_subcommand("gate", "Proxy an agent session through the full three-stage gate");
  ConfigCli gate_cfg;
  std::string gate_id = "server";
  std::string gate_state = "mcpshield-state";
  std::vector<std::string> gate_argv;
  attach_config_flags(gate, gate_cfg);
  gate->add_option("--server-id", gate_id, "Local name for the server")->capture_default_str();
  gate->add_option("--state-dir", gate_state, "Audit/workspace/signature directory")
      ->capture_default_str();
  gate->add_option("server", gate_argv, "Server command (after --)")->required()->expected(-1);

  // probe
  auto* probe = app.add_subcommand("probe", "Run pre-invocation mock probing only, print the verdict");
  ConfigCli probe_cfg;
  std::string probe_id = "server";
  std::string probe_report;
  std::vector<std::string> probe_argv;
  attach_config_flags(probe, probe_cfg);
  probe->add_option("--server-id", probe_id, "Local name for the server")->capture_default_str();
  probe->add_option("--report", probe_report, "Write the decision JSON here too");
  probe->add_option("server", probe_argv, "Server command (after --)")->required()->expected(-1);

  // eval
  auto* eval = app.add_subcommand("eval", "Drive the attack-fixture suite and score detection");
  ConfigCli eval_cfg;
  std::string eval_state = "mcpshield-eval";
  std::string eval_report;
  harness::SuiteOptions eval_options;
  double max_asr = 0.0;
  double max_benign_deny = 0.0;
  attach_config_flags(eval, eval_cfg);
  eval->add_option("--state-dir", eval_state, "Root for per-run gateway state")
      ->capture_default_str();
  eval->add_option("--report", eval_report, "Write the full suite report JSON here");
  eval->add_option("--seed", eval_options.seed, "Suite seed")->capture_default_str();
  eval->add_option("--repeats", eval_options.repeats, "Independent repeats per fixture")
      ->capture_default_str();
  eval->add_option("--steps", eval_options.steps, "Benign call budget per fixture")
      ->capture_default_str();
  eval->add_flag("--overhead", eval_options.measure_overhead,
                 "Also measure defended-vs-passthrough cost on the benign fixtures");
  eval->add_option("--max-asr", max_asr, "Fail (exit 2) when ASR exceeds this")
      ->capture_default_str();
  eval->add_option("--max-benign-deny", max_benign_deny,
                   "Fail (exit 2) when the benign deny rate exceeds this")
      ->capture_default_str();

  // sig-export / sig-import
  auto* sig_export = app.add_subcommand("sig-export", "Export this gateway's signature denylist");
  std::string se_state = "mcpshield-state";
  std::string se_out = "signatures.export.json";
  sig_export->add_option("--state-dir", se_state, "Gateway state directory")->capture_default_str();
  sig_export->add_option("--out", se_out, "Destination file")->capture_default_str();

  auto* sig_import = app.add_subcommand("sig-import", "Merge a shared signature file into the denylist");
  std::string si_state = "mcpshield-state";
  std::string si_in;
  sig_import->add_option("--state-dir", si_state, "Gateway state directory")->capture_default_str();
  sig_import->add_option("--in", si_in, "Signature file to merge")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gate->parsed()) return cmd_gate(gate_cfg, gate_id, gate_state, gate_argv);
    if (probe->parsed()) return cmd_probe(probe_cfg, probe_id, probe_report, probe_argv);
    if (eval->parsed()) {
      return cmd_eval(eval_cfg, eval_state, eval_report, eval_options, max_asr, max_benign_deny);
    }
    if (sig_export->parsed()) return cmd_sig_export(se_state, se_out);
    if (sig_import->parsed()) return cmd_sig_import(si_state, si_in);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
