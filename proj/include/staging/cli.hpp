#pragma once

// The `staging` command: stage, count, mine, replay, serve.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "staging/enumerate.hpp"
#include "staging/fd.hpp"
#include "staging/interaction.hpp"
#include "staging/reduce.hpp"
#include "staging/service.hpp"
#include "staging/site_dialog.hpp"
#include "staging/site_io.hpp"

namespace staging {

enum class OutputFormat { Text, Json };

/// Exit codes. Rejections and trace mismatches are outcomes, not failures.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitRejected = 2;

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  long ttl_seconds = 30 * 60;
  std::size_t cache_cap = 1024;
  std::size_t state_cap = 1'000'000;
  bool no_cache = false;
  std::vector<std::string> sites;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json token_list(const auto& toks) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : toks) a.push_back(t.text());
  return a;
}

inline std::string brace(const std::set<Token>& s) {
  std::string out = "{";
  for (const auto& t : s) {
    if (out.size() > 1) out += ", ";
    out += t.text();
  }
  return out + "}";
}

inline int cmd_stage(const std::string& script, const std::vector<std::string>& utterances,
                     OutputFormat fmt, std::ostream& out) {
  DialogNode cur = parse_script(script);
  nlohmann::json steps = nlohmann::json::array();
  bool all = true;
  if (utterances.empty()) {
    if (fmt == OutputFormat::Text) out << render_script(cur) << "\n";
  }
  for (const auto& text : utterances) {
    auto utt = parse_utterance(text);
    auto r = apply_utterance(cur, utt);
    all = all && r.accepted;
    cur = r.result;
    if (fmt == OutputFormat::Text) {
      out << render_script(cur) << "\n";
    } else {
      steps.push_back({{"utterance", render_utterance(utt)}, {"accepted", r.accepted}, {"state", render_script(cur)}});
    }
  }
  if (fmt == OutputFormat::Json)
    out << nlohmann::json{{"initial", render_script(parse_script(script))}, {"steps", steps}, {"accepted", all}}.dump() << "\n";
  return all ? kExitOk : kExitRejected;
}

struct CountArgs {
  std::string script;
  std::string site;
  bool multi_token = false;
  bool browsing = false;
  std::size_t state_cap = 1'000'000;
};

inline int cmd_count(const CountArgs& a, OutputFormat fmt, std::ostream& out) {
  nlohmann::json j;
  std::string text;
  if (!a.script.empty()) {
    EnumerationOptions opts;
    opts.multi_token = a.multi_token;
    opts.state_cap = a.state_cap;
    auto e = enumerate_sequences(parse_script(a.script), opts);
    j = {{"count", e.count}, {"closed_form", false}};
    text = std::to_string(e.count);
  } else {
    auto tree = load_site_file(a.site);
    if (a.browsing) {
      EnumerationOptions opts;
      opts.multi_token = a.multi_token;
      opts.state_cap = a.state_cap;
      auto e = enumerate_sequences(site_to_dialog(tree, DialogMode::Browsing), opts);
      j = {{"count", e.count}, {"closed_form", false}, {"leaves", tree.leaf_count()}};
      text = std::to_string(e.count);
    } else {
      auto c = count_sequences(tree, a.multi_token, a.state_cap);
      j = {{"count", c.count}, {"closed_form", c.closed_form}, {"leaves", c.leaves}};
      text = std::to_string(c.count);
      if (c.closed_form) {
        j["facets"] = c.facets;
        text += " (closed form: " + std::to_string(c.leaves) + " leaves x " + std::to_string(c.facets) + "!)";
      }
    }
  }
  if (fmt == OutputFormat::Json)
    out << j.dump() << "\n";
  else
    out << text << "\n";
  return kExitOk;
}

inline int cmd_mine(const std::string& site, OutputFormat fmt, std::ostream& out) {
  auto fds = mine_fds(load_site_file(site));
  if (fmt == OutputFormat::Json) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& fd : fds) a.push_back({{"lhs", token_list(fd.lhs)}, {"rhs", token_list(fd.rhs)}});
    out << nlohmann::json{{"dependencies", a}}.dump() << "\n";
    return kExitOk;
  }
  for (const auto& fd : fds) out << brace(fd.lhs) << " -> " << brace(fd.rhs) << "\n";
  out << fds.size() << (fds.size() == 1 ? " dependency" : " dependencies") << "\n";
  return kExitOk;
}

inline Utterance trace_utterance(const nlohmann::json& u) {
  if (u.is_string()) return parse_utterance(u.get<std::string>());
  std::vector<Token> toks;
  for (const auto& t : u) toks.emplace_back(t.get<std::string>());
  return Utterance(std::move(toks));
}

// A trace names either a "script" (staged directly) or a "site" document
// (path relative to the trace) driven through a session.
inline int cmd_replay(const std::string& path, OutputFormat fmt, std::ostream& out) {
  auto trace = nlohmann::json::parse(read_file(path));
  const auto& steps = trace.at("steps");

  std::optional<DialogNode> dialog;
  std::optional<InteractionManager> mgr;
  std::string session;
  if (trace.contains("script")) {
    dialog = parse_script(trace["script"].get<std::string>());
  } else {
    auto site = std::filesystem::path(path).parent_path() / trace.at("site").get<std::string>();
    ManagerConfig cfg;
    cfg.seed = 0;
    mgr.emplace(cfg);
    session = mgr->create_session(mgr->ingest_site(read_file(site.string()))).session;
  }

  bool ok = true;
  nlohmann::json report = nlohmann::json::array();
  for (const auto& step : steps) {
    auto utt = trace_utterance(step.at("utterance"));
    bool accepted;
    std::string state;
    std::optional<std::string> completed;
    if (dialog) {
      auto r = apply_utterance(*dialog, utt);
      accepted = r.accepted;
      dialog = r.result;
      state = render_script(*dialog);
    } else {
      auto r = mgr->submit_input(session, utt);
      accepted = !r.rejected;
      state = r.dialog;
      completed = r.completed;
    }

    std::vector<std::string> diffs;
    if (auto e = step.find("expect"); e != step.end()) {
      if (e->contains("accepted") && (*e)["accepted"].get<bool>() != accepted)
        diffs.push_back(std::string("accepted: expected ") + ((*e)["accepted"].get<bool>() ? "true" : "false"));
      if (e->contains("state") && render_script(parse_script((*e)["state"].get<std::string>())) != state)
        diffs.push_back("state: expected " + (*e)["state"].get<std::string>());
      if (e->contains("completed") && (*e)["completed"].get<std::string>() != completed.value_or(""))
        diffs.push_back("completed: expected " + (*e)["completed"].get<std::string>());
    }
    ok = ok && diffs.empty();

    if (fmt == OutputFormat::Json) {
      nlohmann::json s{{"utterance", render_utterance(utt)}, {"accepted", accepted}, {"state", state}, {"ok", diffs.empty()}};
      if (completed) s["completed"] = *completed;
      if (!diffs.empty()) s["mismatches"] = diffs;
      report.push_back(s);
    } else {
      out << (diffs.empty() ? "ok   " : "FAIL ") << render_utterance(utt) << (accepted ? " -> " : " rejected, ")
          << state;
      if (completed) out << " (" << *completed << ")";
      out << "\n";
      for (const auto& d : diffs) out << "       " << d << "\n";
    }
  }
  if (fmt == OutputFormat::Json) out << nlohmann::json{{"steps", report}, {"ok", ok}}.dump() << "\n";
  return ok ? kExitOk : kExitRejected;
}

inline int cmd_serve(const ServeConfig& c, std::ostream& out, std::ostream& err) {
  ManagerConfig mc;
  mc.session_ttl = std::chrono::seconds(c.ttl_seconds);
  mc.cache_cap = c.cache_cap;
  mc.cache_enabled = !c.no_cache;
  mc.state_cap = c.state_cap;
  InteractionManager mgr(mc);
  for (const auto& s : c.sites) out << mgr.ingest_site(read_file(s)) << " " << s << "\n";

  Service svc(mgr);
  int port = c.port == 0 ? svc.bind_any(c.host) : (svc.server().bind_to_port(c.host, c.port) ? c.port : -1);
  if (port < 0) {
    err << "error: cannot listen on " << c.host << ":" << c.port << "\n";
    return kExitError;
  }
  out << "listening on " << c.host << ":" << port << std::endl;
  return svc.serve_bound() ? kExitOk : kExitError;
}

}  // namespace detail

/// Entry point shared by the binary and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Stage dialogs and serve out-of-turn interaction over sites."};
  app.name("staging");
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::string script;
  std::vector<std::string> utterances;
  auto* stage = app.add_subcommand("stage", "Stage a dialog script with utterances, one post-state per line");
  stage->add_option("script", script, "Dialog script")->required();
  stage->add_option("utterances", utterances, "Utterances, each in token syntax");

  detail::CountArgs count_args;
  auto* count = app.add_subcommand("count", "Count input sequences that complete a script or site");
  auto* o_script = count->add_option("--script", count_args.script, "Dialog script");
  auto* o_site = count->add_option("--site", count_args.site, "Site document")->check(CLI::ExistingFile);
  o_script->excludes(o_site);
  count->add_flag("--multi-token", count_args.multi_token, "Allow several tokens per turn");
  count->add_flag("--browsing", count_args.browsing, "Count top-down browsing sequences (site only)");
  count->add_option("--state-cap", count_args.state_cap, "Abort enumeration past this many states");

  std::string mine_site;
  auto* mine = app.add_subcommand("mine", "Mine functional dependencies from a site");
  mine->add_option("site", mine_site, "Site document")->required()->check(CLI::ExistingFile);

  std::string trace;
  auto* replay = app.add_subcommand("replay", "Replay a JSON trace and check its expectations");
  replay->add_option("trace", trace, "Trace file")->required()->check(CLI::ExistingFile);

  ServeConfig sc;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", sc.host, "Listen address")->envname("STAGING_HOST");
  serve->add_option("--port", sc.port, "Listen port (0 picks a free one)")->envname("STAGING_PORT")->check(CLI::Range(0, 65535));
  serve->add_option("--ttl", sc.ttl_seconds, "Idle session lifetime in seconds")->envname("STAGING_SESSION_TTL")->check(CLI::PositiveNumber);
  serve->add_option("--cache-cap", sc.cache_cap, "Specialization cache entries per site")->envname("STAGING_CACHE_CAP")->check(CLI::PositiveNumber);
  serve->add_option("--state-cap", sc.state_cap, "Enumeration state cap")->envname("STAGING_STATE_CAP");
  serve->add_flag("--no-cache", sc.no_cache, "Disable the specialization cache");
  serve->add_option("--site", sc.sites, "Site document to ingest at startup")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitError;
  }
  if (count->parsed() && count_args.script.empty() && count_args.site.empty()) {
    err << "error: count needs --script or --site\n\n" << count->help();
    return kExitError;
  }
  if (count->parsed() && count_args.browsing && count_args.site.empty()) {
    err << "error: --browsing applies to --site only\n";
    return kExitError;
  }

  auto fmt = format == "json" ? OutputFormat::Json : OutputFormat::Text;
  try {
    if (stage->parsed()) return detail::cmd_stage(script, utterances, fmt, out);
    if (count->parsed()) return detail::cmd_count(count_args, fmt, out);
    if (mine->parsed()) return detail::cmd_mine(mine_site, fmt, out);
    if (replay->parsed()) return detail::cmd_replay(trace, fmt, out);
    if (serve->parsed()) return detail::cmd_serve(sc, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace staging
