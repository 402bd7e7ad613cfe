#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardless/card_numbering.hpp"
#include "cardless/common/clock.hpp"
#include "cardless/common/random.hpp"
#include "cardless/crypto/paillier.hpp"
#include "cardless/crypto/envelope.hpp"
#include "cardless/fraud/model.hpp"
#include "cardless/gateway/credentials.hpp"
#include "cardless/protocol/ledger.hpp"
#include "cardless/protocol/types.hpp"

namespace cardless::protocol {

// Bank and network secrets. The network key authenticates tokens, the vault
// key seals stored and delivered cards, the homomorphic pair keeps spend.
struct KeyRing {
  Bytes network_key;
  Bytes vault_key;
  crypto::HeKeyPair he;

  static KeyRing generate(RandomSource& rng, unsigned he_bits);
};

nlohmann::json keyring_to_json(const KeyRing& keys);
KeyRing keyring_from_json(const nlohmann::json& j);

struct EngineConfig {
  std::string iin = "444433";
  NetworkId default_network = 1;
  std::chrono::seconds approval_timeout{120};
  int hash_iterations = gateway::kDefaultHashIterations;
  int pan_attempts = 16;
};

class ModelUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Probability that a candidate transaction is fraudulent.
class FraudScorer {
 public:
  virtual ~FraudScorer() = default;
  // Throws ModelUnavailable when no verdict can be produced.
  virtual double score(std::span<const fraud::TransactionRecord> history,
                       const fraud::TransactionRecord& txn) const = 0;
  virtual double threshold() const { return 0.5; }
};

class ModelScorer final : public FraudScorer {
 public:
  explicit ModelScorer(fraud::FraudModel model) : model_(std::move(model)) {}
  double score(std::span<const fraud::TransactionRecord> history,
               const fraud::TransactionRecord& txn) const override;
  double threshold() const override { return model_.threshold(); }
  const fraud::FraudModel& model() const { return model_; }

 private:
  fraud::FraudModel model_;
};

class ConstantScorer final : public FraudScorer {
 public:
  explicit ConstantScorer(double p) : p_(p) {}
  double score(std::span<const fraud::TransactionRecord>,
               const fraud::TransactionRecord&) const override {
    return p_;
  }

 private:
  double p_;
};

enum class ApprovalDecision { approve, decline, timeout };
std::string_view decision_name(ApprovalDecision d);

struct ApprovalQuery {
  std::string session_id;
  std::string account_id;
  Counterparty counterparty;
  std::int64_t amount_minor = 0;
  std::string masked_pan;
  std::int64_t requested_at = 0;
};

// Phase 8: asks the cardholder. May block; must return timeout rather than
// wait past `timeout`.
class ApprovalSource {
 public:
  virtual ~ApprovalSource() = default;
  virtual ApprovalDecision request(const ApprovalQuery& query, std::chrono::seconds timeout) = 0;
};

class AuthenticationError : public std::runtime_error {
 public:
  AuthenticationError() : std::runtime_error("authentication failed") {}
};

class SessionError : public std::runtime_error {
 public:
  enum class Kind { not_found, wrong_state, busy };
  SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct IssuedCard {
  std::string card_id;
  crypto::SealedCard sealed;  // under user_delivery_key(owner), AAD card id
  Bytes token;
  std::string qr_payload;
  std::string masked_pan;
};

struct IssuanceResult {
  std::string request_id;
  Outcome outcome = Outcome::pending;  // pending on delivery
  DeclineReason reason = DeclineReason::none;
  std::vector<Event> events;
  std::optional<IssuedCard> card;

  bool delivered() const { return card.has_value(); }
};

struct CardSummary {
  std::string card_id;
  std::string masked_pan;
  Usage usage = Usage::one_time;
  std::int64_t limit_minor = 0;
  std::int64_t spent_minor = 0;
  std::int64_t expires_at = 0;
  CardState state = CardState::active;
  NetworkId network = 0;
  std::string qr_payload;
};

struct Conservation {
  std::int64_t debited = 0;   // sum of balance decrements
  std::int64_t credited = 0;  // sum of counterparty credits
  std::int64_t approved = 0;  // sum of completed session amounts
  std::int64_t residual() const {
    return (debited - credited) + (debited - approved);
  }
};

using LedgerSink = std::function<void(const LedgerEvent&)>;

// The bank, card network and their shared ledger. Thread-safe: state lives
// behind one mutex and every mutation is an emitted LedgerEvent applied
// under that mutex, so the sink sees events in apply order. Approval waits
// run without the lock.
class PaymentSystem {
 public:
  PaymentSystem(KeyRing keys, EngineConfig config, const Clock& clock,
                std::unique_ptr<RandomSource> rng);

  PaymentSystem(const PaymentSystem&) = delete;
  PaymentSystem& operator=(const PaymentSystem&) = delete;

  void set_sink(LedgerSink sink);
  const EngineConfig& config() const { return config_; }
  const KeyRing& keys() const { return keys_; }

  // Accounts. Throws std::invalid_argument for duplicate usernames or bad
  // credentials material.
  std::string open_account(const std::string& username, const std::string& password,
                           const std::string& pin, std::int64_t balance_minor);
  // Rows must be time-ordered and not earlier than the existing history.
  void import_history(const std::string& account_id,
                      std::span<const fraud::TransactionRecord> rows);
  // Returns the account id; throws AuthenticationError.
  std::string authenticate(const gateway::Credentials& credentials) const;
  bool verify_pin(const std::string& account_id, std::string_view pin) const;
  std::optional<std::string> account_of_user(const std::string& username) const;

  // Phases 1-5.
  IssuanceResult request_card(const gateway::Credentials& credentials, const CardPolicy& policy);
  IssuanceResult issue_card(const std::string& account_id, const CardPolicy& policy);

  // Phase 6 and token validation. Always returns the session id; token
  // failures close the session immediately.
  std::string present_card(ByteView token_bytes, const Counterparty& counterparty,
                           std::int64_t amount_minor);
  // Phases 7-8. `scorer` null means the fraud subsystem is unreachable.
  PaymentSession adjudicate(const std::string& session_id, const FraudScorer* scorer,
                            ApprovalSource& approvals);
  // Phases 9-11. Requires an approved session.
  PaymentSession settle(const std::string& session_id);
  // adjudicate, then settle when approved.
  PaymentSession process(const std::string& session_id, const FraudScorer* scorer,
                         ApprovalSource& approvals);

  std::optional<PaymentSession> session(const std::string& session_id) const;
  std::vector<Event> session_trace(const std::string& session_id) const;
  std::vector<Event> counterparty_view(const std::string& session_id) const;
  std::vector<PaymentSession> sessions() const;
  std::vector<IssuanceResult> issuances() const;

  std::int64_t balance(const std::string& account_id) const;
  std::vector<CardSummary> cards_of(const std::string& account_id) const;
  std::vector<std::string> card_ids() const;
  std::optional<CardSummary> card(const std::string& card_id) const;
  std::int64_t spent(const std::string& card_id) const;
  std::int64_t limit(const std::string& card_id) const;
  Bytes user_delivery_key(const std::string& account_id) const;
  std::vector<fraud::TransactionRecord> history(const std::string& account_id) const;
  std::vector<std::string> registry_active() const;
  std::vector<std::string> registry_retired() const;
  Conservation conservation() const;
  std::map<std::string, std::int64_t> credits() const;
  std::size_t events_applied() const;

  // SHA-256 over a canonical dump of all state, lower-case hex.
  std::string state_digest() const;

  // Replays one event. Throws std::invalid_argument if it does not fit the
  // current state.
  void apply(const LedgerEvent& ev);

  static std::unique_ptr<PaymentSystem> replay(KeyRing keys, EngineConfig config,
                                               const Clock& clock,
                                               std::span<const LedgerEvent> events);

 private:
  struct CardRecord {
    VirtualCard card;
    Bytes sealed_pan;
    Bytes token;
  };
  struct IssuanceRecord {
    IssuanceResult result;
    std::string account_id;
  };

  void emit(LedgerEvent ev);
  void apply_locked(const LedgerEvent& ev);
  void session_event(const std::string& session_id, Actor actor, Phase phase, Detail detail,
                     bool visible);
  void close_session(const std::string& session_id, Outcome outcome, DeclineReason reason);
  void record_attempt(const PaymentSession& s, bool approved);
  void issuance_event(const std::string& request_id, Actor actor, Phase phase, Detail detail);
  IssuanceResult fail_issuance(const std::string& request_id, DeclineReason reason);
  IssuanceResult issue_locked(const std::string& account_id, const CardPolicy& policy);
  std::int64_t decrypt_spent(const VirtualCard& card) const;
  PaymentSession& session_ref(const std::string& session_id);
  Account& account_ref(const std::string& account_id);
  CardRecord& card_ref(const std::string& card_id);
  CardSummary summarize(const CardRecord& rec) const;
  std::string dump_state() const;

  KeyRing keys_;
  EngineConfig config_;
  const Clock& clock_;
  std::unique_ptr<RandomSource> rng_;
  Bytes storage_key_;

  mutable std::mutex mu_;
  LedgerSink sink_;
  std::map<std::string, Account> accounts_;
  std::map<std::string, std::string> users_;
  std::map<std::string, CardRecord> cards_;
  std::map<std::string, std::string> card_by_pan_;
  card::PanRegistry registry_;
  std::map<std::string, PaymentSession> sessions_;
  std::map<std::string, IssuanceRecord> issuances_;
  std::map<std::string, std::int64_t> credits_;
  std::map<std::string, bool> in_flight_;
  Conservation conservation_;
  std::uint64_t next_account_ = 1;
  std::uint64_t next_card_ = 1;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_request_ = 1;
  std::size_t applied_ = 0;
};

}  // namespace cardless::protocol
