#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "staging/fd.hpp"
#include "staging/reduce.hpp"
#include "staging/site_dialog.hpp"
#include "staging/site_io.hpp"
#include "staging/slice.hpp"

namespace staging {

using Clock = std::chrono::steady_clock;

class InteractionError : public std::runtime_error {
public:
  enum class Code { BadRequest, InvalidSite, UnknownSite, UnknownSession, SessionExpired };
  InteractionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

private:
  Code code_;
};

inline std::string_view to_string(InteractionError::Code c) {
  switch (c) {
    case InteractionError::Code::BadRequest: return "bad_request";
    case InteractionError::Code::InvalidSite: return "invalid_site";
    case InteractionError::Code::UnknownSite: return "unknown_site";
    case InteractionError::Code::UnknownSession: return "unknown_session";
    case InteractionError::Code::SessionExpired: return "session_expired";
  }
  return "error";
}

/// Ten decimal digits.
class SessionToken {
public:
  explicit SessionToken(std::string v) : value_(std::move(v)) {
    if (!is_valid(value_)) throw std::invalid_argument("session token must be ten decimal digits");
  }

  static bool is_valid(std::string_view v) {
    return v.size() == 10 && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; });
  }

  template <class Rng>
  static SessionToken generate(Rng& rng) {
    std::uniform_int_distribution<std::uint64_t> dist(0, 9'999'999'999ULL);
    char buf[11];
    std::snprintf(buf, sizeof buf, "%010llu", static_cast<unsigned long long>(dist(rng)));
    return SessionToken(buf);
  }

  const std::string& value() const noexcept { return value_; }
  friend auto operator<=>(const SessionToken&, const SessionToken&) = default;

private:
  std::string value_;
};

struct ManagerConfig {
  std::chrono::seconds session_ttl{30 * 60};
  std::size_t cache_cap = 1024;  // per site
  bool cache_enabled = true;
  std::size_t state_cap = 1'000'000;
  std::optional<std::uint64_t> seed;  // fixed seed makes session tokens reproducible
  std::function<Clock::time_point()> clock = [] { return Clock::now(); };
};

struct InteractionResponse {
  std::string session;
  std::vector<Token> options;
  std::vector<Token> input_so_far;
  std::optional<std::string> completed;
  std::optional<std::set<Token>> valid_tokens;
  std::string dialog;
  bool rejected = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["session"] = session;
    j["options"] = nlohmann::json::array();
    for (const auto& o : options) j["options"].push_back({{"label", o.text()}, {"kind", "link"}});
    j["input_so_far"] = nlohmann::json::array();
    for (const auto& t : input_so_far) j["input_so_far"].push_back(t.text());
    if (completed) j["completed"] = *completed;
    if (valid_tokens) {
      j["valid_tokens"] = nlohmann::json::array();
      for (const auto& t : *valid_tokens) j["valid_tokens"].push_back(t.text());
    }
    j["dialog"] = dialog;
    if (rejected) j["rejected"] = true;
    return j;
  }

  // Keys come out sorted, so equal responses dump to equal bytes.
  std::string canonical() const { return to_json().dump(); }
};

struct SiteState {
  SiteTree site;
  DialogNode dialog;
};

/// Intermediate states keyed by the token set that produced them. Pruning
/// commutes, so a state reached by a subset of the wanted tokens can be
/// finished off with the remainder.
class SpecializationCache {
public:
  using Key = std::vector<Token>;  // sorted, distinct

  struct Hit {
    SiteState state;
    Key key;
    std::set<Token> remainder;
  };

  explicit SpecializationCache(std::size_t cap) : cap_(std::max<std::size_t>(cap, 1)) {}

  static Key make_key(const std::set<Token>& tokens) { return {tokens.begin(), tokens.end()}; }

  void insert(const std::string& site_id, const std::set<Token>& tokens, SiteState state) {
    std::lock_guard lock(mu_);
    auto& entries = sites_[site_id];
    auto key = make_key(tokens);
    auto it = entries.find(key);
    if (it != entries.end()) {
      it->second.state = std::move(state);
      it->second.used = ++tick_;
      return;
    }
    if (entries.size() >= cap_) evict(entries);
    entries.emplace(std::move(key), Entry{std::move(state), ++tick_});
  }

  /// Exact hit, or else the entry whose key is the largest subset of `tokens`
  /// (ties go to the lexicographically smallest key).
  std::optional<Hit> lookup(const std::string& site_id, const std::set<Token>& tokens) {
    std::lock_guard lock(mu_);
    auto s = sites_.find(site_id);
    if (s == sites_.end()) return std::nullopt;
    auto& entries = s->second;
    auto key = make_key(tokens);
    Entries::iterator best = entries.end();
    if (auto it = entries.find(key); it != entries.end()) {
      best = it;
    } else {
      for (auto it = entries.begin(); it != entries.end(); ++it) {
        if (it->first.size() >= key.size()) continue;
        if (!std::includes(key.begin(), key.end(), it->first.begin(), it->first.end())) continue;
        if (best == entries.end() || it->first.size() > best->first.size()) best = it;
      }
    }
    if (best == entries.end()) return std::nullopt;
    best->second.used = ++tick_;
    std::set<Token> rest;
    std::set_difference(key.begin(), key.end(), best->first.begin(), best->first.end(),
                        std::inserter(rest, rest.end()));
    return Hit{best->second.state, best->first, std::move(rest)};
  }

  std::size_t size(const std::string& site_id) const {
    std::lock_guard lock(mu_);
    auto s = sites_.find(site_id);
    return s == sites_.end() ? 0 : s->second.size();
  }

  std::size_t cap() const noexcept { return cap_; }

private:
  struct Entry {
    SiteState state;
    std::uint64_t used;
  };
  using Entries = std::map<Key, Entry>;

  // Least recently used goes first; the pristine entry (empty key) is kept.
  void evict(Entries& entries) {
    auto victim = entries.end();
    for (auto it = entries.begin(); it != entries.end(); ++it) {
      if (it->first.empty()) continue;
      if (victim == entries.end() || it->second.used < victim->second.used) victim = it;
    }
    if (victim != entries.end()) entries.erase(victim);
  }

  std::size_t cap_;
  mutable std::mutex mu_;
  std::uint64_t tick_ = 0;
  std::map<std::string, Entries> sites_;
};

struct SiteRecord {
  std::string id;
  SiteTree pristine;
  std::vector<FunctionalDependency> fds;
  DialogNode pristine_dialog;
};

struct Snapshot {
  SiteTree site;
  DialogNode dialog;
  std::vector<Token> input_so_far;
};

struct Session {
  Session(SessionToken tok, std::shared_ptr<const SiteRecord> rec, Clock::time_point now)
      : token(std::move(tok)), record(std::move(rec)), site_state(record->pristine),
        dialog_state(record->pristine_dialog), created(now), last_active(now) {}

  SessionToken token;
  std::shared_ptr<const SiteRecord> record;
  SiteTree site_state;
  DialogNode dialog_state;
  std::vector<Token> input_so_far;
  std::vector<Snapshot> history;
  Clock::time_point created;
  Clock::time_point last_active;
  std::mutex mu;
};

/// 64-bit FNV-1a of the document bytes, as 16 hex digits.
inline std::string content_id(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Sessions over ingested sites. Every input, whether a link click or text
/// supplied out of turn, goes through submit_input.
class InteractionManager {
public:
  explicit InteractionManager(ManagerConfig cfg = {})
      : cfg_(std::move(cfg)), cache_(cfg_.cache_cap),
        rng_(cfg_.seed ? *cfg_.seed : std::random_device{}()) {}

  const ManagerConfig& config() const noexcept { return cfg_; }
  SpecializationCache& cache() noexcept { return cache_; }

  std::string ingest_site(std::string_view document) {
    std::string id = content_id(document);
    {
      std::shared_lock lock(sites_mu_);
      if (auto it = sites_.find(id); it != sites_.end()) {
        if (it->second.document != document)
          throw InteractionError(InteractionError::Code::InvalidSite, "site id collision");
        return id;
      }
    }
    SiteTree tree = [&] {
      try {
        return load_site(document);
      } catch (const SiteError& e) {
        throw InteractionError(InteractionError::Code::InvalidSite, e.what());
      }
    }();
    auto rec = std::make_shared<SiteRecord>(SiteRecord{id, tree, mine_fds(tree), site_to_dialog(tree, DialogMode::OutOfTurn)});
    {
      std::unique_lock lock(sites_mu_);
      if (sites_.contains(id)) return id;
      sites_.emplace(id, Stored{std::string(document), rec});
    }
    cache_.insert(id, {}, SiteState{rec->pristine, rec->pristine_dialog});
    return id;
  }

  struct SiteInfo {
    std::string id;
    std::string name;
    std::size_t leaves;
    std::size_t depth;
  };

  std::vector<SiteInfo> sites() const {
    std::shared_lock lock(sites_mu_);
    std::vector<SiteInfo> out;
    for (const auto& [id, s] : sites_)
      out.push_back({id, s.record->pristine.name(), s.record->pristine.leaf_count(), s.record->pristine.depth()});
    return out;
  }

  std::shared_ptr<const SiteRecord> site(const std::string& id) const {
    std::shared_lock lock(sites_mu_);
    auto it = sites_.find(id);
    if (it == sites_.end())
      throw InteractionError(InteractionError::Code::UnknownSite, "unknown site '" + id + "'");
    return it->second.record;
  }

  InteractionResponse create_session(const std::string& site_id) {
    auto rec = site(site_id);
    auto now = cfg_.clock();
    std::lock_guard lock(sessions_mu_);
    // Idle sessions are swept at most once per interval; lookups expire them too.
    if (now - last_purge_ >= std::min<Clock::duration>(cfg_.session_ttl, std::chrono::seconds(60)))
      purge_locked(now);
    std::optional<SessionToken> tok;
    do {
      tok = SessionToken::generate(rng_);
    } while (sessions_.contains(tok->value()));
    auto s = std::make_shared<Session>(*tok, rec, now);
    sessions_.emplace(tok->value(), s);
    return respond(*s);
  }

  InteractionResponse current(const std::string& token) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    return respond(*s);
  }

  InteractionResponse submit_input(const std::string& token, const Utterance& utt) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    const SiteRecord& rec = *s->record;

    // Repeated words in one utterance count once.
    std::vector<Token> said;
    for (const auto& t : utt)
      if (std::find(said.begin(), said.end(), t) == said.end()) said.push_back(t);
    for (const auto& t : said)
      if (!s->site_state.in_universe(t)) return respond(*s, true);

    std::set<Token> consumed(s->input_so_far.begin(), s->input_so_far.end());
    std::set<Token> fresh = expand_input({said.begin(), said.end()}, rec.fds);
    for (const auto& t : consumed) fresh.erase(t);
    std::vector<Token> implied;
    for (const auto& t : fresh)
      if (std::find(said.begin(), said.end(), t) == said.end()) implied.push_back(t);
    // Implied facets are filled top-down.
    std::stable_sort(implied.begin(), implied.end(), [&](const Token& a, const Token& b) {
      return rec.pristine.depth_of(a).value_or(0) < rec.pristine.depth_of(b).value_or(0);
    });
    std::vector<Token> ordered = said;
    ordered.insert(ordered.end(), implied.begin(), implied.end());
    for (const auto& t : ordered)
      if (!s->site_state.in_universe(t)) return respond(*s, true);

    if (!apply_utterance(s->dialog_state, Utterance(ordered)).accepted) return respond(*s, true);

    std::set<Token> key = consumed;
    key.insert(fresh.begin(), fresh.end());
    SiteState next = advance(*s, key, fresh);

    s->history.push_back(Snapshot{s->site_state, s->dialog_state, s->input_so_far});
    s->site_state = std::move(next.site);
    s->dialog_state = std::move(next.dialog);
    s->input_so_far.insert(s->input_so_far.end(), ordered.begin(), ordered.end());
    return respond(*s);
  }

  /// Legal inputs now: the dialog's valid tokens plus anything they imply.
  std::set<Token> reflect(const std::string& token) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    return reflect_locked(*s);
  }

  InteractionResponse reflect_response(const std::string& token) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    auto r = respond(*s);
    r.valid_tokens = reflect_locked(*s);
    return r;
  }

  InteractionResponse step_back(const std::string& token, std::size_t n) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    if (n == 0 || n > s->history.size())
      throw InteractionError(InteractionError::Code::BadRequest,
                             "cannot go back " + std::to_string(n) + " turns; " +
                                 std::to_string(s->history.size()) + " recorded");
    Snapshot snap = s->history[s->history.size() - n];
    s->history.erase(s->history.end() - static_cast<std::ptrdiff_t>(n), s->history.end());
    s->site_state = std::move(snap.site);
    s->dialog_state = std::move(snap.dialog);
    s->input_so_far = std::move(snap.input_so_far);
    return respond(*s);
  }

  /// Copy of the session's current state, for inspection.
  Snapshot state(const std::string& token) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    return Snapshot{s->site_state, s->dialog_state, s->input_so_far};
  }

  std::size_t history_size(const std::string& token) {
    auto s = acquire(token);
    std::lock_guard lock(s->mu);
    return s->history.size();
  }

  std::size_t session_count() {
    std::lock_guard lock(sessions_mu_);
    purge_locked(cfg_.clock());
    return sessions_.size();
  }

private:
  struct Stored {
    std::string document;
    std::shared_ptr<const SiteRecord> record;
  };

  std::shared_ptr<Session> acquire(const std::string& token) {
    if (!SessionToken::is_valid(token))
      throw InteractionError(InteractionError::Code::UnknownSession, "malformed session token");
    auto now = cfg_.clock();
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(token);
    if (it == sessions_.end())
      throw InteractionError(InteractionError::Code::UnknownSession, "unknown session " + token);
    if (now - it->second->last_active > cfg_.session_ttl) {
      sessions_.erase(it);
      throw InteractionError(InteractionError::Code::SessionExpired, "session " + token + " expired");
    }
    it->second->last_active = now;
    return it->second;
  }

  void purge_locked(Clock::time_point now) {
    last_purge_ = now;
    std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_active > cfg_.session_ttl; });
  }

  // New state for the token set `key`, reusing the largest cached subset.
  SiteState advance(const Session& s, const std::set<Token>& key, const std::set<Token>& fresh) {
    const std::string& id = s.record->id;
    SiteTree base = s.site_state;
    std::set<Token> todo = fresh;
    if (cfg_.cache_enabled) {
      if (auto hit = cache_.lookup(id, key)) {
        if (hit->remainder.empty()) return hit->state;
        base = std::move(hit->state.site);
        todo = std::move(hit->remainder);
      }
    }
    for (const auto& t : todo) base = prune_site(base, t).tree;
    SiteState out{base, site_to_dialog(base, DialogMode::OutOfTurn)};
    if (cfg_.cache_enabled) cache_.insert(id, key, out);
    return out;
  }

  std::set<Token> reflect_locked(const Session& s) {
    if (s.dialog_state.is_theta()) return {};
    std::set<Token> out = valid_tokens(s.dialog_state);
    std::set<Token> lhs = out;
    for (const auto& fd : s.record->fds) {
      if (!std::includes(lhs.begin(), lhs.end(), fd.lhs.begin(), fd.lhs.end())) continue;
      for (const auto& t : fd.rhs)
        if (s.site_state.in_universe(t)) out.insert(t);
    }
    return out;
  }

  InteractionResponse respond(const Session& s, bool rejected = false) {
    InteractionResponse r;
    r.session = s.token.value();
    r.input_so_far = s.input_so_far;
    r.dialog = render_script(s.dialog_state);
    r.rejected = rejected;
    if (s.dialog_state.is_theta()) {
      r.completed = s.site_state.single_page();
    } else {
      r.options = solicitation(s.dialog_state);
    }
    return r;
  }

  ManagerConfig cfg_;
  SpecializationCache cache_;

  mutable std::shared_mutex sites_mu_;
  std::map<std::string, Stored> sites_;

  std::mutex sessions_mu_;
  std::mt19937_64 rng_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  Clock::time_point last_purge_{};
};

}  // namespace staging
