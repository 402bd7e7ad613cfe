#include "cardless/gateway/http_api.hpp"

#include <httplib.h>
#include <json.hpp>

#include "cardless/token_codec.hpp"

namespace cardless::gateway {
namespace {

using nlohmann::json;
using protocol::ApprovalDecision;

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

// Parsed JSON object body, or nullopt after writing a 400.
std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    error(res, 400, "body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

std::string bearer(const httplib::Request& req) {
  const std::string header = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) return {};
  return header.substr(prefix.size());
}

json counterparty_json(const protocol::Counterparty& c) {
  return {{"kind", protocol::counterparty_kind_name(c.kind)}, {"id", c.id}, {"category", c.category}};
}

json approval_json(const protocol::ApprovalQuery& q) {
  return {{"session_id", q.session_id},
          {"counterparty", counterparty_json(q.counterparty)},
          {"amount", q.amount_minor},
          {"masked_pan", q.masked_pan},
          {"requested_at", q.requested_at}};
}

json events_json(const std::vector<protocol::Event>& events) {
  json out = json::array();
  for (const auto& ev : events) out.push_back(protocol::event_to_json(ev));
  return out;
}

json session_json(const protocol::PaymentSession& s, const std::vector<protocol::Event>& events) {
  return {{"session_id", s.session_id},
          {"outcome", protocol::outcome_text(s.outcome)},
          {"phase", static_cast<int>(s.phase)},
          {"amount", s.amount_minor},
          {"counterparty", counterparty_json(s.counterparty)},
          {"events", events_json(events)}};
}

}  // namespace

GatewayServer::GatewayServer(protocol::PaymentSystem& system,
                             std::shared_ptr<const protocol::FraudScorer> scorer,
                             const Clock& clock, GatewayOptions options)
    : system_(system),
      scorer_(std::move(scorer)),
      clock_(clock),
      options_(options),
      sessions_(clock, options.limits),
      server_(std::make_unique<httplib::Server>()) {
  const std::size_t workers = options_.worker_threads;
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  server_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        error(res, 500, "internal error");
      });
  routes();
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void GatewayServer::run() { server_->listen_after_bind(); }

void GatewayServer::start() {
  runner_ = std::thread([this] { run(); });
  server_->wait_until_ready();
}

void GatewayServer::stop() {
  broker_.shutdown();
  server_->stop();
  if (runner_.joinable()) runner_.join();
  drain();
}

void GatewayServer::interrupt() { server_->stop(); }

void GatewayServer::drain() {
  std::vector<std::future<void>> tasks;
  {
    std::lock_guard lock(tasks_mu_);
    tasks.swap(tasks_);
  }
  for (auto& t : tasks) t.wait();
}

void GatewayServer::spawn(const std::string& session_id) {
  std::lock_guard lock(tasks_mu_);
  std::erase_if(tasks_, [](std::future<void>& f) {
    return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
  });
  tasks_.push_back(std::async(std::launch::async, [this, session_id] {
    try {
      system_.process(session_id, scorer_.get(), broker_);
    } catch (const std::exception&) {
      // The session stays open; its trace shows where it stopped.
    }
  }));
}

void GatewayServer::routes() {
  auto& srv = *server_;

  // Resolves the caller's account or writes the 401/429 response.
  auto authorize = [this](const httplib::Request& req,
                          httplib::Response& res) -> std::optional<std::string> {
    AuthResult auth = sessions_.authorize(bearer(req));
    if (auth.status == AuthStatus::ok) return auth.account_id;
    if (auth.status == AuthStatus::over_cap) {
      error(res, 429, "request cap reached");
    } else {
      error(res, 401, "unauthorized");
    }
    return std::nullopt;
  };

  srv.Post("/api/login", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    Credentials creds;
    if ((*body)["username"].is_string()) creds.username = (*body)["username"];
    if ((*body)["password"].is_string()) creds.password = (*body)["password"];
    try {
      std::string account = system_.authenticate(creds);
      reply(res, 200, {{"token", sessions_.open(account)}});
    } catch (const protocol::AuthenticationError&) {
      error(res, 401, "invalid credentials");
    }
  });

  srv.Post("/api/cards", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    auto account = authorize(req, res);
    if (!account) return;
    auto body = parse_body(req, res);
    if (!body) return;
    protocol::CardPolicy policy;
    try {
      if (body->contains("usage")) {
        policy.usage = protocol::parse_usage(body->at("usage").get<std::string>());
        if (!policy.usage) throw std::invalid_argument("unknown usage");
      }
      if (body->contains("limit")) policy.limit_minor_units = body->at("limit").get<std::int64_t>();
      if (body->contains("valid_for_seconds")) {
        policy.valid_for_seconds = body->at("valid_for_seconds").get<std::int64_t>();
      }
      int network = body->contains("network") ? body->at("network").get<int>()
                                              : system_.config().default_network;
      if (network < 0 || network > 255) throw std::invalid_argument("network out of range");
      policy.networks_allowed.insert(static_cast<protocol::NetworkId>(network));
    } catch (const std::exception&) {
      error(res, 400, "malformed card request");
      return;
    }
    auto result = system_.issue_card(*account, policy);
    if (!result.delivered()) {
      reply(res, 422, {{"request_id", result.request_id},
                       {"outcome", protocol::outcome_text(result.outcome)},
                       {"reason", protocol::reason_name(result.reason)}});
      return;
    }
    const auto& card = *result.card;
    reply(res, 201, {{"request_id", result.request_id},
                     {"card_id", card.card_id},
                     {"masked_pan", card.masked_pan},
                     {"sealed_card", base64_encode(card.sealed.serialize())},
                     {"qr_payload", card.qr_payload}});
  });

  srv.Get("/api/cards", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    auto account = authorize(req, res);
    if (!account) return;
    json cards = json::array();
    for (const auto& c : system_.cards_of(*account)) {
      cards.push_back({{"card_id", c.card_id},
                       {"masked_pan", c.masked_pan},
                       {"usage", protocol::usage_name(c.usage)},
                       {"limit", c.limit_minor},
                       {"spent", c.spent_minor},
                       {"expires_at", c.expires_at},
                       {"state", protocol::card_state_name(c.state)},
                       {"network", c.network},
                       {"qr_payload", c.qr_payload}});
    }
    reply(res, 200, {{"cards", cards}});
  });

  srv.Get("/api/approvals", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    auto account = authorize(req, res);
    if (!account) return;
    auto hold = options_.long_poll_hold;
    if (req.has_param("wait")) {
      try {
        double secs = std::stod(req.get_param_value("wait"));
        if (secs < 0) throw std::invalid_argument("negative wait");
        hold = std::min(hold, std::chrono::milliseconds(static_cast<std::int64_t>(secs * 1000)));
      } catch (const std::exception&) {
        error(res, 400, "wait must be a non-negative number of seconds");
        return;
      }
    }
    json items = json::array();
    for (const auto& q : broker_.wait_pending(*account, hold)) items.push_back(approval_json(q));
    reply(res, 200, {{"approvals", items}});
  });

  srv.Post(R"(/api/approvals/([A-Za-z0-9-]+))",
           [this, authorize](const httplib::Request& req, httplib::Response& res) {
             auto account = authorize(req, res);
             if (!account) return;
             auto body = parse_body(req, res);
             if (!body) return;
             const std::string session_id = req.matches[1];
             const json decision_field = body->value("decision", json());
             const json pin_field = body->value("pin", json());
             if (!decision_field.is_string() || !pin_field.is_string()) {
               error(res, 400, "decision and pin are required");
               return;
             }
             ApprovalDecision decision;
             if (decision_field == "approve") {
               decision = ApprovalDecision::approve;
             } else if (decision_field == "decline") {
               decision = ApprovalDecision::decline;
             } else {
               error(res, 400, "decision must be approve or decline");
               return;
             }
             bool pending = false;
             for (const auto& q : broker_.pending(*account)) pending |= q.session_id == session_id;
             if (!pending) {
               // Distinguishes "already answered" from "never existed".
               auto r = broker_.resolve(*account, session_id, decision);
               if (r == Resolution::already_resolved) {
                 error(res, 409, "approval already resolved");
               } else {
                 error(res, 404, "no such pending approval");
               }
               return;
             }
             if (!system_.verify_pin(*account, pin_field.get<std::string>())) {
               error(res, 403, "pin rejected");
               return;
             }
             switch (broker_.resolve(*account, session_id, decision)) {
               case Resolution::accepted:
                 reply(res, 200, {{"status", "acknowledged"}, {"session_id", session_id}});
                 return;
               case Resolution::already_resolved:
                 error(res, 409, "approval already resolved");
                 return;
               case Resolution::not_found:
                 error(res, 404, "no such pending approval");
                 return;
             }
           });

  srv.Get(R"(/api/sessions/([A-Za-z0-9-]+)/trace)",
          [this, authorize](const httplib::Request& req, httplib::Response& res) {
            auto account = authorize(req, res);
            if (!account) return;
            auto s = system_.session(req.matches[1]);
            if (!s || s->account_id != *account) {
              error(res, 404, "no such session");
              return;
            }
            json body = session_json(*s, s->events);
            body["reason"] = protocol::reason_name(s->reason);
            reply(res, 200, body);
          });

  srv.Post("/sim/present", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    protocol::Counterparty cp;
    std::int64_t amount = 0;
    Bytes token_bytes;
    try {
      token_bytes = token::qr_parse(body->at("qr_payload").get<std::string>());
      amount = body->at("amount").get<std::int64_t>();
      const json& c = body->at("counterparty");
      if (c.is_string()) {
        cp.id = c.get<std::string>();
      } else {
        auto kind = protocol::parse_counterparty_kind(c.value("kind", "merchant"));
        if (!kind) throw std::invalid_argument("unknown counterparty kind");
        cp.kind = *kind;
        cp.id = c.at("id").get<std::string>();
        cp.category = c.value("category", "");
      }
      if (cp.id.empty()) throw std::invalid_argument("counterparty id required");
      if (cp.category.empty()) cp.category = cp.kind == protocol::CounterpartyKind::atm ? "cash" : "retail";
      if (amount <= 0) throw std::invalid_argument("amount must be positive");
    } catch (const std::exception& e) {
      error(res, 400, std::string("malformed presentation: ") + e.what());
      return;
    }
    std::string session_id = system_.present_card(token_bytes, cp, amount);
    auto s = system_.session(session_id);
    if (!s->terminal()) spawn(session_id);
    reply(res, 202, {{"session_id", session_id}});
  });

  srv.Get(R"(/sim/sessions/([A-Za-z0-9-]+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto s = system_.session(id);
            if (!s) {
              error(res, 404, "no such session");
              return;
            }
            reply(res, 200, session_json(*s, system_.counterparty_view(id)));
          });
}

}  // namespace cardless::gateway
