#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cardless/crypto/paillier.hpp"
#include "cardless/protocol/types.hpp"

// Every state change of the payment system is one LedgerEvent. Applying the
// same event sequence to a fresh system with the same keys rebuilds the same
// state.
namespace cardless::protocol {

namespace ledger {

struct AccountOpened {
  std::string account_id;
  gateway::CredentialRecord credentials;
  std::int64_t balance_minor = 0;
};

struct TransactionRecorded {
  std::string account_id;
  fraud::TransactionRecord record;
};

struct IssuanceOpened {
  std::string request_id;
  std::string account_id;
  std::int64_t timestamp = 0;
};

struct IssuanceStep {
  std::string request_id;
  Event event;
};

// PAN is stored sealed under the vault storage key with the card id as AAD.
struct CardIssued {
  std::string request_id;
  std::string card_id;
  std::string account_id;
  Bytes sealed_pan;
  CardPolicy policy;
  std::int64_t issued_at = 0;
  std::int64_t expires_at = 0;
  NetworkId network = 0;
  Bytes token;
  crypto::Ciphertext spent;
};

struct IssuanceClosed {
  std::string request_id;
  Outcome outcome = Outcome::pending;  // pending means delivered
  DeclineReason reason = DeclineReason::none;
};

struct SessionOpened {
  std::string session_id;
  std::string token_id;
  Counterparty counterparty;
  std::int64_t amount_minor = 0;
  std::string card_id;
  std::string account_id;
};

struct SessionStep {
  std::string session_id;
  Event event;
};

struct SessionScored {
  std::string session_id;
  double score = 0.0;
};

struct HoldPlaced {
  std::string session_id;
};

struct HoldReleased {
  std::string session_id;
};

struct SessionApproved {
  std::string session_id;
};

struct Settled {
  std::string session_id;
  crypto::Ciphertext spent_after;
};

struct CardRetired {
  std::string card_id;
};

struct SessionClosed {
  std::string session_id;
  Outcome outcome = Outcome::pending;
  DeclineReason reason = DeclineReason::none;
};

}  // namespace ledger

using LedgerEvent =
    std::variant<ledger::AccountOpened, ledger::TransactionRecorded, ledger::IssuanceOpened,
                 ledger::IssuanceStep, ledger::CardIssued, ledger::IssuanceClosed,
                 ledger::SessionOpened, ledger::SessionStep, ledger::SessionScored,
                 ledger::HoldPlaced, ledger::HoldReleased, ledger::SessionApproved,
                 ledger::Settled, ledger::CardRetired, ledger::SessionClosed>;

std::string_view event_kind(const LedgerEvent& ev);

// JSON object {"kind": ..., fields...}. Binary fields are base-64.
nlohmann::json to_json(const LedgerEvent& ev);
// Throws std::invalid_argument on unknown kinds or malformed fields.
LedgerEvent ledger_event_from_json(const nlohmann::json& j);

nlohmann::json detail_to_json(const Detail& detail);
nlohmann::json event_to_json(const Event& ev);

}  // namespace cardless::protocol
