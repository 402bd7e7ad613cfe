#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cardless/card_numbering.hpp"
#include "cardless/crypto/paillier.hpp"
#include "cardless/fraud/features.hpp"
#include "cardless/gateway/credentials.hpp"

namespace cardless::protocol {

enum class Usage { one_time, multi_use };
std::string_view usage_name(Usage u);
std::optional<Usage> parse_usage(std::string_view name);

using NetworkId = std::uint8_t;

struct CardPolicy {
  std::optional<Usage> usage;
  std::int64_t limit_minor_units = 0;
  std::int64_t valid_for_seconds = 0;
  std::set<NetworkId> networks_allowed;

  // Usage present, positive limit and validity, at least one network.
  bool is_valid() const;
};

enum class CardState { issued, active, retired };
std::string_view card_state_name(CardState s);

struct VirtualCard {
  std::string card_id;
  card::PanParts pan;
  CardPolicy policy;
  std::int64_t issued_at = 0;
  std::int64_t expires_at = 0;
  CardState state = CardState::issued;
  crypto::Ciphertext spent;  // encrypted cumulative settled spend
  std::string owner;
  NetworkId network = 0;
  std::string token_id;  // hex
  std::int64_t held_minor = 0;
};

// 1-5 issuance, 6-11 payment, 12 terminal.
enum class Phase : int {
  card_request = 1,
  network_request = 2,
  network_response = 3,
  bank_sealing = 4,
  user_delivery = 5,
  presentation = 6,
  authorization = 7,
  user_confirmation = 8,
  acceptance = 9,
  counterparty_notice = 10,
  user_notice = 11,
  terminal = 12,
};

enum class Actor { user, bank, network, merchant, atm };
std::string_view actor_name(Actor a);
std::optional<Actor> parse_actor(std::string_view name);

enum class Outcome {
  pending,
  payment_completed,
  user_approval_failed,
  fraudulent_transaction,
  fraud_detection_failed,
  card_generate_failed,
};

inline constexpr std::array<Outcome, 5> kTerminalOutcomes{
    Outcome::payment_completed, Outcome::user_approval_failed, Outcome::fraudulent_transaction,
    Outcome::fraud_detection_failed, Outcome::card_generate_failed};

// Verbatim terminal strings; "pending" for Outcome::pending.
std::string_view outcome_text(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view text);

enum class DeclineReason {
  none,
  invalid_policy,
  registry_exhausted,
  token_format,
  token_authenticity,
  token_expired,
  card_retired,
  model_unavailable,
  fraud_score,
  card_inactive,
  card_in_use,
  limit_exceeded,
  insufficient_balance,
  user_declined,
  approval_timeout,
};
std::string_view reason_name(DeclineReason r);
std::optional<DeclineReason> parse_reason(std::string_view name);

using Detail = std::vector<std::pair<std::string, std::string>>;

struct Event {
  std::int64_t timestamp = 0;
  Actor actor = Actor::bank;
  Phase phase = Phase::terminal;
  Detail detail;
  bool counterparty_visible = false;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class CounterpartyKind { merchant, atm };

struct Counterparty {
  CounterpartyKind kind = CounterpartyKind::merchant;
  std::string id;
  std::string category;

  fraud::Channel channel() const {
    return kind == CounterpartyKind::atm ? fraud::Channel::atm : fraud::Channel::merchant;
  }
  Actor actor() const { return kind == CounterpartyKind::atm ? Actor::atm : Actor::merchant; }
  friend bool operator==(const Counterparty&, const Counterparty&) = default;
};
std::string_view counterparty_kind_name(CounterpartyKind k);
std::optional<CounterpartyKind> parse_counterparty_kind(std::string_view name);

struct PaymentSession {
  std::string session_id;
  std::string token_id;  // hex; empty when the token could not be parsed
  Counterparty counterparty;
  std::int64_t amount_minor = 0;
  Phase phase = Phase::presentation;
  std::optional<double> fraud_score;
  std::vector<Event> events;
  Outcome outcome = Outcome::pending;
  DeclineReason reason = DeclineReason::none;

  // Bank-side linkage; never shown to the counterparty.
  std::string card_id;
  std::string account_id;
  bool approved = false;
  bool hold_active = false;

  bool terminal() const { return outcome != Outcome::pending; }
};

struct Account {
  std::string account_id;
  gateway::CredentialRecord credentials;
  std::int64_t balance_minor = 0;
  std::int64_t held_minor = 0;
  std::vector<fraud::TransactionRecord> history;
};

}  // namespace cardless::protocol
