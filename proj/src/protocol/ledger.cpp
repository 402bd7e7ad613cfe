#include "cardless/protocol/ledger.hpp"

#include <stdexcept>

namespace cardless::protocol {
namespace {

using nlohmann::json;

std::string b64(ByteView bytes) { return base64_encode(bytes); }

Bytes unb64(const json& j, const char* key) {
  return base64_decode(j.at(key).get<std::string>());
}

json credentials_to_json(const gateway::CredentialRecord& c) {
  return {{"username", c.username},
          {"salt", b64(c.salt)},
          {"password_digest", b64(c.password_digest)},
          {"pin_digest", b64(c.pin_digest)},
          {"iterations", c.iterations}};
}

gateway::CredentialRecord credentials_from_json(const json& j) {
  gateway::CredentialRecord c;
  c.username = j.at("username").get<std::string>();
  Bytes salt = unb64(j, "salt");
  if (salt.size() != c.salt.size()) throw std::invalid_argument("salt must be 16 bytes");
  std::copy(salt.begin(), salt.end(), c.salt.begin());
  c.password_digest = unb64(j, "password_digest");
  c.pin_digest = unb64(j, "pin_digest");
  c.iterations = j.at("iterations").get<int>();
  return c;
}

json record_to_json(const fraud::TransactionRecord& r) {
  return {{"timestamp", r.timestamp},
          {"amount", r.amount_minor},
          {"category", r.category},
          {"channel", static_cast<int>(r.channel)},
          {"approved", r.approved}};
}

fraud::TransactionRecord record_from_json(const json& j) {
  fraud::TransactionRecord r;
  r.timestamp = j.at("timestamp").get<std::int64_t>();
  r.amount_minor = j.at("amount").get<std::int64_t>();
  r.category = j.at("category").get<std::string>();
  int channel = j.at("channel").get<int>();
  if (channel < 0 || channel > 2) throw std::invalid_argument("channel out of range");
  r.channel = static_cast<fraud::Channel>(channel);
  r.approved = j.at("approved").get<bool>();
  return r;
}

json policy_to_json(const CardPolicy& p) {
  return {{"usage", p.usage ? json(std::string(usage_name(*p.usage))) : json(nullptr)},
          {"limit", p.limit_minor_units},
          {"valid_for", p.valid_for_seconds},
          {"networks", p.networks_allowed}};
}

CardPolicy policy_from_json(const json& j) {
  CardPolicy p;
  if (!j.at("usage").is_null()) {
    p.usage = parse_usage(j.at("usage").get<std::string>());
    if (!p.usage) throw std::invalid_argument("unknown usage");
  }
  p.limit_minor_units = j.at("limit").get<std::int64_t>();
  p.valid_for_seconds = j.at("valid_for").get<std::int64_t>();
  p.networks_allowed = j.at("networks").get<std::set<NetworkId>>();
  return p;
}

json counterparty_to_json(const Counterparty& c) {
  return {{"kind", counterparty_kind_name(c.kind)}, {"id", c.id}, {"category", c.category}};
}

Counterparty counterparty_from_json(const json& j) {
  Counterparty c;
  auto kind = parse_counterparty_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown counterparty kind");
  c.kind = *kind;
  c.id = j.at("id").get<std::string>();
  c.category = j.at("category").get<std::string>();
  return c;
}

Event event_from_json(const json& j) {
  Event ev;
  ev.timestamp = j.at("timestamp").get<std::int64_t>();
  auto actor = parse_actor(j.at("actor").get<std::string>());
  if (!actor) throw std::invalid_argument("unknown actor");
  ev.actor = *actor;
  int phase = j.at("phase").get<int>();
  if (phase < 1 || phase > static_cast<int>(Phase::terminal)) {
    throw std::invalid_argument("phase out of range");
  }
  ev.phase = static_cast<Phase>(phase);
  for (const auto& pair : j.at("detail")) {
    ev.detail.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  }
  ev.counterparty_visible = j.at("visible").get<bool>();
  return ev;
}

Outcome outcome_from_json(const json& j) {
  auto o = parse_outcome(j.get<std::string>());
  if (!o) throw std::invalid_argument("unknown outcome");
  return *o;
}

DeclineReason reason_from_json(const json& j) {
  auto r = parse_reason(j.get<std::string>());
  if (!r) throw std::invalid_argument("unknown decline reason");
  return *r;
}

crypto::Ciphertext ciphertext_from_json(const json& j, const char* key) {
  return crypto::Ciphertext::parse(unb64(j, key));
}

}  // namespace

json detail_to_json(const Detail& detail) {
  json out = json::array();
  for (const auto& [k, v] : detail) out.push_back(json::array({k, v}));
  return out;
}

json event_to_json(const Event& ev) {
  return {{"timestamp", ev.timestamp},
          {"actor", actor_name(ev.actor)},
          {"phase", static_cast<int>(ev.phase)},
          {"detail", detail_to_json(ev.detail)},
          {"visible", ev.counterparty_visible}};
}

std::string_view event_kind(const LedgerEvent& ev) {
  return std::visit(
      [](const auto& e) -> std::string_view {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, ledger::AccountOpened>) return "account_opened";
        else if constexpr (std::is_same_v<T, ledger::TransactionRecorded>) return "transaction_recorded";
        else if constexpr (std::is_same_v<T, ledger::IssuanceOpened>) return "issuance_opened";
        else if constexpr (std::is_same_v<T, ledger::IssuanceStep>) return "issuance_step";
        else if constexpr (std::is_same_v<T, ledger::CardIssued>) return "card_issued";
        else if constexpr (std::is_same_v<T, ledger::IssuanceClosed>) return "issuance_closed";
        else if constexpr (std::is_same_v<T, ledger::SessionOpened>) return "session_opened";
        else if constexpr (std::is_same_v<T, ledger::SessionStep>) return "session_step";
        else if constexpr (std::is_same_v<T, ledger::SessionScored>) return "session_scored";
        else if constexpr (std::is_same_v<T, ledger::HoldPlaced>) return "hold_placed";
        else if constexpr (std::is_same_v<T, ledger::HoldReleased>) return "hold_released";
        else if constexpr (std::is_same_v<T, ledger::SessionApproved>) return "session_approved";
        else if constexpr (std::is_same_v<T, ledger::Settled>) return "settled";
        else if constexpr (std::is_same_v<T, ledger::CardRetired>) return "card_retired";
        else return "session_closed";
      },
      ev);
}

json to_json(const LedgerEvent& ev) {
  json j = std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, ledger::AccountOpened>) {
          return {{"account", e.account_id},
                  {"credentials", credentials_to_json(e.credentials)},
                  {"balance", e.balance_minor}};
        } else if constexpr (std::is_same_v<T, ledger::TransactionRecorded>) {
          return {{"account", e.account_id}, {"record", record_to_json(e.record)}};
        } else if constexpr (std::is_same_v<T, ledger::IssuanceOpened>) {
          return {{"request", e.request_id}, {"account", e.account_id}, {"timestamp", e.timestamp}};
        } else if constexpr (std::is_same_v<T, ledger::IssuanceStep>) {
          return {{"request", e.request_id}, {"event", event_to_json(e.event)}};
        } else if constexpr (std::is_same_v<T, ledger::CardIssued>) {
          return {{"request", e.request_id},
                  {"card", e.card_id},
                  {"account", e.account_id},
                  {"sealed_pan", b64(e.sealed_pan)},
                  {"policy", policy_to_json(e.policy)},
                  {"issued_at", e.issued_at},
                  {"expires_at", e.expires_at},
                  {"network", e.network},
                  {"token", b64(e.token)},
                  {"spent", b64(e.spent.serialize())}};
        } else if constexpr (std::is_same_v<T, ledger::IssuanceClosed>) {
          return {{"request", e.request_id},
                  {"outcome", outcome_text(e.outcome)},
                  {"reason", reason_name(e.reason)}};
        } else if constexpr (std::is_same_v<T, ledger::SessionOpened>) {
          return {{"session", e.session_id},
                  {"token_id", e.token_id},
                  {"counterparty", counterparty_to_json(e.counterparty)},
                  {"amount", e.amount_minor},
                  {"card", e.card_id},
                  {"account", e.account_id}};
        } else if constexpr (std::is_same_v<T, ledger::SessionStep>) {
          return {{"session", e.session_id}, {"event", event_to_json(e.event)}};
        } else if constexpr (std::is_same_v<T, ledger::SessionScored>) {
          return {{"session", e.session_id}, {"score", e.score}};
        } else if constexpr (std::is_same_v<T, ledger::Settled>) {
          return {{"session", e.session_id}, {"spent_after", b64(e.spent_after.serialize())}};
        } else if constexpr (std::is_same_v<T, ledger::CardRetired>) {
          return {{"card", e.card_id}};
        } else if constexpr (std::is_same_v<T, ledger::SessionClosed>) {
          return {{"session", e.session_id},
                  {"outcome", outcome_text(e.outcome)},
                  {"reason", reason_name(e.reason)}};
        } else {
          // HoldPlaced, HoldReleased, SessionApproved
          return {{"session", e.session_id}};
        }
      },
      ev);
  j["kind"] = event_kind(ev);
  return j;
}

LedgerEvent ledger_event_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "account_opened") {
      return ledger::AccountOpened{j.at("account").get<std::string>(),
                                   credentials_from_json(j.at("credentials")),
                                   j.at("balance").get<std::int64_t>()};
    }
    if (kind == "transaction_recorded") {
      return ledger::TransactionRecorded{j.at("account").get<std::string>(),
                                         record_from_json(j.at("record"))};
    }
    if (kind == "issuance_opened") {
      return ledger::IssuanceOpened{j.at("request").get<std::string>(),
                                    j.at("account").get<std::string>(),
                                    j.at("timestamp").get<std::int64_t>()};
    }
    if (kind == "issuance_step") {
      return ledger::IssuanceStep{j.at("request").get<std::string>(), event_from_json(j.at("event"))};
    }
    if (kind == "card_issued") {
      return ledger::CardIssued{j.at("request").get<std::string>(),
                                j.at("card").get<std::string>(),
                                j.at("account").get<std::string>(),
                                unb64(j, "sealed_pan"),
                                policy_from_json(j.at("policy")),
                                j.at("issued_at").get<std::int64_t>(),
                                j.at("expires_at").get<std::int64_t>(),
                                j.at("network").get<NetworkId>(),
                                unb64(j, "token"),
                                ciphertext_from_json(j, "spent")};
    }
    if (kind == "issuance_closed") {
      return ledger::IssuanceClosed{j.at("request").get<std::string>(),
                                    outcome_from_json(j.at("outcome")),
                                    reason_from_json(j.at("reason"))};
    }
    if (kind == "session_opened") {
      return ledger::SessionOpened{j.at("session").get<std::string>(),
                                   j.at("token_id").get<std::string>(),
                                   counterparty_from_json(j.at("counterparty")),
                                   j.at("amount").get<std::int64_t>(),
                                   j.at("card").get<std::string>(),
                                   j.at("account").get<std::string>()};
    }
    if (kind == "session_step") {
      return ledger::SessionStep{j.at("session").get<std::string>(), event_from_json(j.at("event"))};
    }
    if (kind == "session_scored") {
      return ledger::SessionScored{j.at("session").get<std::string>(), j.at("score").get<double>()};
    }
    if (kind == "hold_placed") return ledger::HoldPlaced{j.at("session").get<std::string>()};
    if (kind == "hold_released") return ledger::HoldReleased{j.at("session").get<std::string>()};
    if (kind == "session_approved") {
      return ledger::SessionApproved{j.at("session").get<std::string>()};
    }
    if (kind == "settled") {
      return ledger::Settled{j.at("session").get<std::string>(),
                             ciphertext_from_json(j, "spent_after")};
    }
    if (kind == "card_retired") return ledger::CardRetired{j.at("card").get<std::string>()};
    if (kind == "session_closed") {
      return ledger::SessionClosed{j.at("session").get<std::string>(),
                                   outcome_from_json(j.at("outcome")),
                                   reason_from_json(j.at("reason"))};
    }
    throw std::invalid_argument("unknown event kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed event: ") + e.what());
  }
}

}  // namespace cardless::protocol
