// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "staging/cli.hpp"
#include "staging/enumerate.hpp"
#include "staging/fd.hpp"
#include "staging/interaction.hpp"
#include "staging/reduce.hpp"
#include "staging/service.hpp"
#include "staging/site_dialog.hpp"
#include "staging/slice.hpp"
#include "support/consistency.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace staging;
using namespace staging::testing;
using Ms = std::chrono::duration<double, std::milli>;

namespace {

struct Verdict {
  bool ok = true;
  std::vector<std::string> notes;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

template <class F>
double time_ms(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return Ms(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_ms(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f ms", ms);
  return buf;
}

std::vector<std::string> read_lines(const std::string& rel) {
  std::istringstream in(read_data(rel));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

Verdict breakfast() {
  Verdict v;
  auto script = parse_script(kBreakfast);
  auto golden = read_lines("golden/breakfast.txt");
  reduce(script, Token("c1"));  // warm-up
  ReductionOutcome r{false, script, Utterance(Token("c1"))};
  double best = 1e9;
  for (int i = 0; i < 50; ++i) best = std::min(best, time_ms([&] { r = reduce(script, Token("c1")); }));
  v.check(r.accepted, "c1 accepted");
  v.check(r.result == parse_script("C[C[c2] PE[C[e1 e2] C[b1 b2]]]"), "c1 structure, got " + render_script(r.result));
  v.check(golden.size() == 2 && render_script(r.result) == golden[0], "c1 golden");
  auto r2 = reduce(r.result, Token("c2"));
  v.check(r2.accepted && r2.result == parse_script("PE[C[e1 e2] C[b1 b2]]"), "c2 restores PE, got " + render_script(r2.result));
  v.check(golden.size() == 2 && render_script(r2.result) == golden[1], "c2 golden");
  v.check(best < 1.0, "c1 under 1 ms");
  v.note("c1 staged in " + fmt_ms(best));
  return v;
}

Verdict congress_trace() {
  Verdict v;
  auto golden = read_lines("golden/congress_trace.txt");
  v.check(golden.size() == 3, "golden has three states");
  DialogNode cur = site_to_dialog(mini_congress(), DialogMode::OutOfTurn);
  v.check(cur == parse_script(kMiniCongressDialog), "site dialog matches the staged script");
  const char* steps[] = {"d", "s", "ga"};
  for (std::size_t i = 0; i < 3 && i < golden.size(); ++i) {
    auto r = reduce(cur, Token(steps[i]));
    v.check(r.accepted, std::string(steps[i]) + " accepted");
    cur = r.result;
    auto got = render_script(cur);
    v.check(got == golden[i], std::string(steps[i]) + " -> " + got + ", golden " + golden[i]);
    v.check(is_simplified(cur), std::string(steps[i]) + " state simplified");
    if (i == 0) {
      auto toks = prompt_tokens(cur);
      auto has = [&](const char* t) { return std::find(toks.begin(), toks.end(), Token(t)) != toks.end(); };
      v.check(!has("ak") && has("al"), "d removes Alaska and keeps Alabama");
    }
    if (i == 1) {
      auto toks = prompt_tokens(cur);
      v.check(std::find(toks.begin(), toks.end(), Token("al")) == toks.end(), "s removes Alabama");
    }
  }
  v.check(cur.is_theta(), "ga yields THETA");
  return v;
}

Verdict counting() {
  Verdict v;
  EnumerationOptions multi;
  multi.multi_token = true;
  std::uint64_t m = 0, s = 0, browse = 0;
  SequenceCount c;
  double t_enum = time_ms([&] {
    m = enumerate_sequences(parse_script("PE[a b c]"), multi).count;
    s = enumerate_sequences(parse_script("PE[a b c]")).count;
  });
  auto site = uniform_540();
  double t_closed = time_ms([&] { c = count_sequences(site, false); });
  double t_browse = time_ms([&] { browse = enumerate_sequences(site_to_dialog(site, DialogMode::Browsing)).count; });
  v.check(m == 13, "multi-token PE[a b c] = 13, got " + std::to_string(m));
  v.check(s == 6, "single-token PE[a b c] = 6, got " + std::to_string(s));
  v.check(site.leaf_count() == 540 && site.depth() == 4, "site is 540 leaves at depth 4");
  v.check(c.closed_form && c.count == 12960, "out-of-turn count 12960, got " + std::to_string(c.count));
  v.check(browse == 540, "browsing count 540, got " + std::to_string(browse));
  v.check(browse && c.count / browse == 24 && c.count % browse == 0, "ratio 24");
  v.check(t_enum < 5000 && t_browse < 5000, "enumeration under 5 s");
  v.check(t_closed < 50, "closed form immediate");
  v.note("enumeration " + fmt_ms(t_enum + t_browse) + ", closed form " + fmt_ms(t_closed));
  return v;
}

Verdict nested_pe() {
  Verdict v;
  auto nested = parse_script("PE[PE[a b] PE[c d]]");
  auto flat = parse_script("PE[a b c d]");
  auto cabd = parse_utterance("c a b d");
  // One token per turn, as a user would type them.
  auto run = [](DialogNode d, const Utterance& u) {
    for (const auto& t : u) {
      auto r = reduce(d, t);
      if (!r.accepted) return false;
      d = r.result;
    }
    return d.is_theta();
  };
  v.check(!run(nested, cabd), "nested rejects <c a b d>");
  v.check(run(flat, cabd), "flat accepts <c a b d>");
  std::vector<Token> toks{Token("a"), Token("b"), Token("c"), Token("d")};
  auto perms = completing_permutations(flat, toks);
  v.check(perms == 24, "flat accepts all 24 orders, got " + std::to_string(perms));
  v.note("flat " + std::to_string(perms) + "/24, nested " + std::to_string(completing_permutations(nested, toks)) + "/24");
  return v;
}

// Reflection agrees with trying every token, on random scripts and on the
// states they pass through.
std::uint64_t reflection_discrepancies(int scripts, std::uint64_t& states) {
  ScriptGen gen(2024);
  std::mt19937_64 rng(99);
  std::uint64_t bad = 0;
  for (int i = 0; i < scripts; ++i) {
    DialogNode d = gen.script();
    auto ptoks = prompt_tokens(d);
    std::set<Token> universe(ptoks.begin(), ptoks.end());
    universe.insert(Token("never"));
    for (;;) {
      ++states;
      auto want = brute_force_valid(d, universe);
      if (valid_tokens(d) != want) ++bad;
      if (want.empty()) break;
      auto it = want.begin();
      std::advance(it, static_cast<long>(rng() % want.size()));
      d = reduce(d, *it).result;
    }
  }
  return bad;
}

struct FuzzStats {
  std::uint64_t turns = 0;
  std::uint64_t rejected = 0;
  std::uint64_t identity_failures = 0;
  std::uint64_t replays = 0;
  std::uint64_t replay_failures = 0;
  std::vector<std::string> log;  // canonical responses in order
};

std::string without_session(const InteractionResponse& r) {
  auto j = r.to_json();
  j.erase("session");
  return j.dump();
}

std::string snapshot_text(const Snapshot& s) {
  std::string out = render_script(s.dialog) + "|" + site_to_json(s.site).dump() + "|";
  for (const auto& t : s.input_so_far) out += t.text() + ",";
  return out;
}

FuzzStats fuzz(bool cache, int turns, std::uint64_t seed) {
  ManagerConfig cfg;
  cfg.seed = seed;
  cfg.cache_enabled = cache;
  cfg.cache_cap = 64;  // small enough that eviction happens during the run
  InteractionManager mgr(cfg);

  std::vector<std::string> sites{mgr.ingest_site(read_data("sites/mini_congress.xml")),
                                 mgr.ingest_site(read_data("sites/votesmart_mini.json"))};
  SiteGen gen(seed);
  for (int i = 0; i < 6; ++i) sites.push_back(mgr.ingest_site(site_to_json(gen.tree()).dump()));

  struct Live {
    std::string token;
    std::string site;
    std::vector<Utterance> accepted;
  };
  std::mt19937_64 rng(seed ^ 0x5eed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  FuzzStats st;
  std::vector<Live> live;
  auto open = [&] {
    auto site = sites[pick(sites.size())];
    auto r = mgr.create_session(site);
    st.log.push_back(r.canonical());
    live.push_back({r.session, site, {}});
  };
  for (int i = 0; i < 4; ++i) open();

  while (st.turns < static_cast<std::uint64_t>(turns)) {
    auto roll = pick(100);
    Live& s = live[pick(live.size())];
    if (roll < 6) {
      open();
    } else if (roll < 14) {
      if (s.accepted.empty()) continue;
      auto n = 1 + pick(s.accepted.size());
      auto r = mgr.step_back(s.token, n);
      s.accepted.erase(s.accepted.end() - static_cast<long>(n), s.accepted.end());
      st.log.push_back(r.canonical());
    } else if (roll < 20) {
      // Replay the accepted turns on a fresh session.
      auto fresh = mgr.create_session(s.site);
      st.log.push_back(fresh.canonical());
      InteractionResponse last = fresh;
      for (const auto& u : s.accepted) last = mgr.submit_input(fresh.session, u);
      ++st.replays;
      if (without_session(last) != without_session(mgr.current(s.token)) ||
          snapshot_text(mgr.state(fresh.session)) != snapshot_text(mgr.state(s.token)))
        ++st.replay_failures;
    } else {
      auto snap = mgr.state(s.token);
      auto universe = snap.site.token_universe();
      auto offered = mgr.reflect(s.token);
      std::vector<Token> toks;
      auto from = [&](const std::set<Token>& pool) {
        auto it = pool.begin();
        std::advance(it, static_cast<long>(pick(pool.size())));
        return *it;
      };
      int n = roll < 85 ? 1 : 2 + static_cast<int>(pick(2));
      for (int k = 0; k < n; ++k) {
        auto r = pick(10);
        if (r == 0 || universe.empty())
          toks.emplace_back("zz" + std::to_string(pick(3)));
        else if (r < 6 && !offered.empty())
          toks.push_back(from(offered));
        else
          toks.push_back(from(universe));
      }
      Utterance u(toks);
      auto before = mgr.current(s.token);
      auto r = mgr.submit_input(s.token, u);
      ++st.turns;
      st.log.push_back(r.canonical());
      if (r.rejected) {
        ++st.rejected;
        auto j = r.to_json();
        j.erase("rejected");
        if (j.dump() != before.canonical() || snapshot_text(mgr.state(s.token)) != snapshot_text(snap))
          ++st.identity_failures;
      } else {
        s.accepted.push_back(u);
      }
      if (r.completed && pick(2) == 0) {
        live.erase(live.begin() + (&s - live.data()));
        open();
      }
    }
  }
  return st;
}

Verdict properties() {
  Verdict v;

  std::uint64_t states = 0;
  auto refl = reflection_discrepancies(600, states);
  v.check(refl == 0, "(a) reflection discrepancies: " + std::to_string(refl));
  v.note("(a) reflection: 600 scripts, " + std::to_string(states) + " states, " + std::to_string(refl) +
         " discrepancies");

  const int kTurns = 10'000;
  auto on = fuzz(true, kTurns, 7);
  auto off = fuzz(false, kTurns, 7);
  v.check(on.identity_failures == 0 && off.identity_failures == 0, "(b) rejection is identity");
  v.check(on.replay_failures == 0 && off.replay_failures == 0, "(b) replay determinism");
  v.note("(b) fuzz: " + std::to_string(on.turns) + " turns, " + std::to_string(on.rejected) + " rejected, " +
         std::to_string(on.identity_failures) + " identity failures, " + std::to_string(on.replays) +
         " replays, " + std::to_string(on.replay_failures) + " replay failures");

  SiteGen gen(11);
  const int kTrees = 300;
  std::uint64_t comm_checks = 0, comm_bad = 0, cons_trees = 0, cons_seqs = 0;
  std::string example;
  for (int i = 0; i < kTrees; ++i) {
    auto t = gen.tree();
    std::vector<Token> u(t.token_universe().begin(), t.token_universe().end());
    for (std::size_t x = 0; x < u.size(); ++x) {
      auto ta = prune_site(t, u[x]).tree;
      auto tb_all = path_set(t);
      for (std::size_t y = 0; y < u.size(); ++y) {
        if (x == y || !ta.in_universe(u[y])) continue;
        ++comm_checks;
        auto ab = path_signature(path_set(prune_site(ta, u[y]).tree));
        auto ba = path_signature(path_set(prune_site(prune_site(t, u[y]).tree, u[x]).tree));
        auto expect = path_signature(prune_paths(prune_paths(tb_all, u[x]), u[y]));
        if (ab != ba || ab != expect) ++comm_bad;
      }
    }
    auto rep = check_consistency(t);
    if (rep.discrepancies) {
      ++cons_trees;
      cons_seqs += rep.discrepancies;
      if (example.empty()) example = render_script(site_to_dialog(t, DialogMode::OutOfTurn)) + ": " + rep.example;
    }
  }
  v.check(comm_bad == 0, "(c) prune commutativity");
  v.check(cons_trees == 0, "(c) dialog/site consistency");
  v.note("(c) commutativity: " + std::to_string(comm_checks) + " pairs over " + std::to_string(kTrees) +
         " trees, " + std::to_string(comm_bad) + " discrepancies");
  v.note("(c) consistency: " + std::to_string(cons_trees) + "/" + std::to_string(kTrees) +
         " trees disagree (" + std::to_string(cons_seqs) + " sequences)");
  if (!example.empty()) v.note("(c) first: " + example);

  std::uint64_t diff = 0;
  for (std::size_t i = 0; i < std::min(on.log.size(), off.log.size()); ++i) diff += on.log[i] != off.log[i];
  v.check(on.log.size() == off.log.size() && diff == 0, "(d) cache transparency");
  v.note("(d) cache on/off: " + std::to_string(on.log.size()) + " responses, " + std::to_string(diff) + " differ");
  return v;
}

Verdict fd_collapse() {
  Verdict v;
  auto t = votesmart_mini();
  auto fds = mine_fds(t);
  std::set<Token> lhs{Token("washington d.c.")};
  std::set<Token> rhs{Token("house"), Token("democrat"), Token("district at large")};
  bool found = false;
  for (const auto& fd : fds) found = found || (fd.lhs == lhs && fd.rhs == rhs);
  v.check(found, "{washington d.c.} -> {house, democrat, district at large} mined");

  ManagerConfig cfg;
  cfg.seed = 3;
  InteractionManager mgr(cfg);
  auto tok = mgr.create_session(mgr.ingest_site(read_data("sites/votesmart_mini.json"))).session;
  auto r = mgr.submit_input(tok, Utterance(Token("washington d.c.")));
  v.check(!r.rejected, "accepted");
  v.check(r.completed == "pages/washington-dc/house/democrat/district-at-large.html",
          "completed in one turn, got " + r.completed.value_or("nothing"));
  v.note(std::to_string(fds.size()) + " dependencies mined");
  return v;
}

Verdict service() {
  Verdict v;
  ManagerConfig cfg;
  cfg.seed = 5;
  InteractionManager mgr(cfg);
  Service svc(mgr);
  int port = svc.bind_any("127.0.0.1");
  std::thread th([&] { svc.serve_bound(); });
  svc.server().wait_until_ready();

  nlohmann::json final;
  double ms = time_ms([&] {
    httplib::Client cli("127.0.0.1", port);
    auto ingest = cli.Post("/sites", read_data("sites/mini_congress.xml"), "application/xml");
    if (!ingest || ingest->status != 201) return;
    auto id = nlohmann::json::parse(ingest->body)["site_id"];
    auto sess = cli.Post("/sessions", nlohmann::json{{"site_id", id}}.dump(), "application/json");
    if (!sess || sess->status != 201) return;
    std::string tok = nlohmann::json::parse(sess->body)["session"];
    for (const char* u : {"d", "s"}) {
      auto r = cli.Post("/sessions/" + tok + "/input", nlohmann::json{{"utterance", {u}}}.dump(), "application/json");
      if (!r || r->status != 200) return;
    }
    // The click: the label is taken from the options the server offered.
    auto cur = cli.Get("/sessions/" + tok);
    if (!cur) return;
    auto opts = nlohmann::json::parse(cur->body)["options"];
    if (opts.size() != 1 || opts[0]["label"] != "ga") return;
    auto r = cli.Post("/sessions/" + tok + "/input", nlohmann::json{{"utterance", {opts[0]["label"]}}}.dump(),
                      "application/json");
    if (r && r->status == 200) final = nlohmann::json::parse(r->body);
  });
  svc.stop();
  th.join();

  v.check(final.is_object(), "HTTP flow ran");
  v.check(final.value("completed", "") == "pages/ga/senate/democrat.html", "final response carries the leaf page");
  v.check(ms < 1000, "under 1 s");
  v.note("wall " + fmt_ms(ms));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion all[] = {
      {"breakfast restructuring", breakfast},
      {"mini-congress golden trace", congress_trace},
      {"sequence counting", counting},
      {"nested partial evaluators", nested_pe},
      {"property suite", properties},
      {"functional dependencies and collapse", fd_collapse},
      {"service integration", service},
  };
  int failed = 0;
  for (const auto& c : all) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.ok = false;
      v.note(std::string("exception: ") + e.what());
    }
    std::cout << (v.ok ? "PASS " : "FAIL ") << c.name << "\n";
    for (const auto& n : v.notes) std::cout << "     " << n << "\n";
    std::cout.flush();
    failed += !v.ok;
  }
  return failed ? 1 : 0;
}
