#include "cardless/protocol/types.hpp"

namespace cardless::protocol {
namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table,
                           std::string_view name) {
  for (const auto& [value, text] : table) {
    if (text == name) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table,
                         Enum value) {
  for (const auto& [v, text] : table) {
    if (v == value) return text;
  }
  return "unknown";
}

constexpr std::array<std::pair<Usage, std::string_view>, 2> kUsages{{
    {Usage::one_time, "one_time"},
    {Usage::multi_use, "multi_use"},
}};

constexpr std::array<std::pair<CardState, std::string_view>, 3> kCardStates{{
    {CardState::issued, "issued"},
    {CardState::active, "active"},
    {CardState::retired, "retired"},
}};

constexpr std::array<std::pair<Actor, std::string_view>, 5> kActors{{
    {Actor::user, "user"},
    {Actor::bank, "bank"},
    {Actor::network, "network"},
    {Actor::merchant, "merchant"},
    {Actor::atm, "atm"},
}};

constexpr std::array<std::pair<Outcome, std::string_view>, 6> kOutcomes{{
    {Outcome::pending, "pending"},
    {Outcome::payment_completed, "Payment completed successfully!"},
    {Outcome::user_approval_failed, "User approval failed!"},
    {Outcome::fraudulent_transaction, "Fraudulent transaction!"},
    {Outcome::fraud_detection_failed, "Fraud detection failed!"},
    {Outcome::card_generate_failed, "Virtual card generate failed!"},
}};

constexpr std::array<std::pair<DeclineReason, std::string_view>, 15> kReasons{{
    {DeclineReason::none, "none"},
    {DeclineReason::invalid_policy, "invalid_policy"},
    {DeclineReason::registry_exhausted, "registry_exhausted"},
    {DeclineReason::token_format, "token_format"},
    {DeclineReason::token_authenticity, "token_authenticity"},
    {DeclineReason::token_expired, "token_expired"},
    {DeclineReason::card_retired, "card_retired"},
    {DeclineReason::model_unavailable, "model_unavailable"},
    {DeclineReason::fraud_score, "fraud_score"},
    {DeclineReason::card_inactive, "card_inactive"},
    {DeclineReason::card_in_use, "card_in_use"},
    {DeclineReason::limit_exceeded, "limit_exceeded"},
    {DeclineReason::insufficient_balance, "insufficient_balance"},
    {DeclineReason::user_declined, "user_declined"},
    {DeclineReason::approval_timeout, "approval_timeout"},
}};

constexpr std::array<std::pair<CounterpartyKind, std::string_view>, 2> kCounterpartyKinds{{
    {CounterpartyKind::merchant, "merchant"},
    {CounterpartyKind::atm, "atm"},
}};

}  // namespace

std::string_view usage_name(Usage u) { return name_of(kUsages, u); }
std::optional<Usage> parse_usage(std::string_view name) { return lookup(kUsages, name); }

bool CardPolicy::is_valid() const {
  return usage.has_value() && limit_minor_units > 0 && valid_for_seconds > 0 &&
         !networks_allowed.empty();
}

std::string_view card_state_name(CardState s) { return name_of(kCardStates, s); }

std::string_view actor_name(Actor a) { return name_of(kActors, a); }
std::optional<Actor> parse_actor(std::string_view name) { return lookup(kActors, name); }

std::string_view outcome_text(Outcome o) { return name_of(kOutcomes, o); }
std::optional<Outcome> parse_outcome(std::string_view text) { return lookup(kOutcomes, text); }

std::string_view reason_name(DeclineReason r) { return name_of(kReasons, r); }
std::optional<DeclineReason> parse_reason(std::string_view name) { return lookup(kReasons, name); }

std::string_view counterparty_kind_name(CounterpartyKind k) {
  return name_of(kCounterpartyKinds, k);
}
std::optional<CounterpartyKind> parse_counterparty_kind(std::string_view name) {
  return lookup(kCounterpartyKinds, name);
}

}  // namespace cardless::protocol
