#pragma once

// JSON over HTTP in front of an InteractionManager.

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "staging/interaction.hpp"

namespace staging {

inline int http_status(InteractionError::Code c) {
  switch (c) {
    case InteractionError::Code::BadRequest:
    case InteractionError::Code::InvalidSite: return 400;
    case InteractionError::Code::UnknownSite:
    case InteractionError::Code::UnknownSession: return 404;
    case InteractionError::Code::SessionExpired: return 410;
  }
  return 500;
}

class Service {
public:
  explicit Service(InteractionManager& mgr) : mgr_(mgr) { routes(); }

  httplib::Server& server() noexcept { return svr_; }

  bool listen(const std::string& host, int port) { return svr_.listen(host, port); }

  /// Binds an ephemeral port and serves from the calling thread.
  int bind_any(const std::string& host) { return svr_.bind_to_any_port(host); }
  bool serve_bound() { return svr_.listen_after_bind(); }

  void stop() { svr_.stop(); }

private:
  static void send(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, std::string_view code, const std::string& msg) {
    send(res, status, {{"error", code}, {"message", msg}});
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw InteractionError(InteractionError::Code::BadRequest, "request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::parse_error& e) {
      throw InteractionError(InteractionError::Code::BadRequest, std::string("invalid JSON body: ") + e.what());
    }
  }

  // Accepts ["d","s"] or a single string split like typed text.
  static Utterance utterance_from(const nlohmann::json& body) {
    auto it = body.find("utterance");
    if (it == body.end()) throw InteractionError(InteractionError::Code::BadRequest, "missing 'utterance'");
    try {
      if (it->is_string()) return parse_utterance(it->get<std::string>());
      if (!it->is_array()) throw InteractionError(InteractionError::Code::BadRequest, "'utterance' must be an array of strings");
      std::vector<Token> toks;
      for (const auto& t : *it) {
        if (!t.is_string()) throw InteractionError(InteractionError::Code::BadRequest, "'utterance' must be an array of strings");
        toks.emplace_back(t.get<std::string>());
      }
      return Utterance(std::move(toks));
    } catch (const std::invalid_argument& e) {
      throw InteractionError(InteractionError::Code::BadRequest, e.what());
    }
  }

  template <class F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const InteractionError& e) {
        fail(res, http_status(e.code()), to_string(e.code()), e.what());
      } catch (const nlohmann::json::exception& e) {
        fail(res, 400, "bad_request", e.what());
      }
    };
  }

  void routes() {
    svr_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    svr_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    svr_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send(res, 200, {{"status", "ok"}});
    });

    svr_.Post("/sites", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 201, {{"site_id", mgr_.ingest_site(req.body)}});
    }));

    svr_.Get("/sites", guarded([this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& s : mgr_.sites())
        list.push_back({{"site_id", s.id}, {"name", s.name}, {"leaves", s.leaves}, {"depth", s.depth}});
      send(res, 200, {{"sites", list}});
    }));

    svr_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      auto id = body.find("site_id");
      if (id == body.end() || !id->is_string())
        throw InteractionError(InteractionError::Code::BadRequest, "missing 'site_id'");
      send(res, 201, mgr_.create_session(id->get<std::string>()).to_json());
    }));

    svr_.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, mgr_.current(req.matches[1]).to_json());
    }));

    svr_.Post(R"(/sessions/([^/]+)/input)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto utt = utterance_from(parse_body(req));
      send(res, 200, mgr_.submit_input(req.matches[1], utt).to_json());
    }));

    svr_.Get(R"(/sessions/([^/]+)/reflect)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& t : mgr_.reflect(req.matches[1])) list.push_back(t.text());
      send(res, 200, {{"valid_tokens", list}});
    }));

    svr_.Post(R"(/sessions/([^/]+)/back)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::size_t n = 1;
      if (!req.body.empty()) {
        auto body = parse_body(req);
        if (auto it = body.find("n"); it != body.end()) {
          if (!it->is_number_integer() || it->get<long long>() < 1)
            throw InteractionError(InteractionError::Code::BadRequest, "'n' must be a positive integer");
          n = it->get<std::size_t>();
        }
      }
      send(res, 200, mgr_.step_back(req.matches[1], n).to_json());
    }));

    svr_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) fail(res, res.status, "not_found", "no such endpoint");
    });
  }

  InteractionManager& mgr_;
  httplib::Server svr_;
};

}  // namespace staging
