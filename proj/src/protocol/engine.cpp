#include "cardless/protocol/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "cardless/crypto/envelope.hpp"
#include "cardless/crypto/primitives.hpp"
#include "cardless/fraud/features.hpp"
#include "cardless/token_codec.hpp"

namespace cardless::protocol {
namespace {

std::string format_id(const char* prefix, std::uint64_t n, int width) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%0*llu", prefix, width, static_cast<unsigned long long>(n));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join_networks(const std::set<NetworkId>& ids) {
  std::string out;
  for (NetworkId id : ids) {
    if (!out.empty()) out += ',';
    out += std::to_string(id);
  }
  return out;
}

DeclineReason reason_for(token::TokenError::Kind kind) {
  switch (kind) {
    case token::TokenError::Kind::authenticity:
      return DeclineReason::token_authenticity;
    case token::TokenError::Kind::expired:
      return DeclineReason::token_expired;
    default:
      return DeclineReason::token_format;
  }
}

std::int64_t candidate_time(const std::vector<fraud::TransactionRecord>& history,
                            std::int64_t t) {
  if (!history.empty()) t = std::max(t, history.back().timestamp);
  return t;
}

// Clears the in-flight mark of a session on every exit path.
class InFlightGuard {
 public:
  InFlightGuard(std::map<std::string, bool>& marks, std::string id)
      : marks_(marks), id_(std::move(id)) {
    marks_[id_] = true;
  }
  ~InFlightGuard() { marks_.erase(id_); }
  InFlightGuard(const InFlightGuard&) = delete;
  InFlightGuard& operator=(const InFlightGuard&) = delete;

 private:
  std::map<std::string, bool>& marks_;
  std::string id_;
};

}  // namespace

KeyRing KeyRing::generate(RandomSource& rng, unsigned he_bits) {
  KeyRing keys;
  keys.network_key = rng.bytes(crypto::kSymmetricKeyBytes);
  keys.vault_key = rng.bytes(crypto::kSymmetricKeyBytes);
  keys.he = crypto::he_keygen(he_bits, rng);
  return keys;
}

nlohmann::json keyring_to_json(const KeyRing& keys) {
  return {
      {"network_key", base64_encode(keys.network_key)},
      {"vault_key", base64_encode(keys.vault_key)},
      {"he_bits", keys.he.modulus_bits},
      {"he_p", keys.he.secret_key.p().get_str(16)},
      {"he_q", keys.he.secret_key.q().get_str(16)},
  };
}

KeyRing keyring_from_json(const nlohmann::json& j) {
  KeyRing keys;
  keys.network_key = base64_decode(j.at("network_key").get<std::string>());
  keys.vault_key = base64_decode(j.at("vault_key").get<std::string>());
  if (keys.network_key.size() != crypto::kSymmetricKeyBytes ||
      keys.vault_key.size() != crypto::kSymmetricKeyBytes) {
    throw std::invalid_argument("key file: symmetric keys must be 32 bytes");
  }
  mpz_class p(j.at("he_p").get<std::string>(), 16);
  mpz_class q(j.at("he_q").get<std::string>(), 16);
  crypto::SecretKey sk(p, q);
  keys.he = crypto::HeKeyPair{sk.public_key(), sk, j.at("he_bits").get<unsigned>()};
  return keys;
}

double ModelScorer::score(std::span<const fraud::TransactionRecord> history,
                          const fraud::TransactionRecord& txn) const {
  return fraud::predict_proba(model_, fraud::extract_features(history, txn));
}

std::string_view decision_name(ApprovalDecision d) {
  switch (d) {
    case ApprovalDecision::approve:
      return "approved";
    case ApprovalDecision::decline:
      return "declined";
    case ApprovalDecision::timeout:
      return "timeout";
  }
  return "timeout";
}

PaymentSystem::PaymentSystem(KeyRing keys, EngineConfig config, const Clock& clock,
                             std::unique_ptr<RandomSource> rng)
    : keys_(std::move(keys)), config_(std::move(config)), clock_(clock), rng_(std::move(rng)) {
  if (keys_.network_key.size() != crypto::kSymmetricKeyBytes ||
      keys_.vault_key.size() != crypto::kSymmetricKeyBytes) {
    throw std::invalid_argument("network and vault keys must be 32 bytes");
  }
  storage_key_ = crypto::derive_key(keys_.vault_key, "storage");
}

void PaymentSystem::set_sink(LedgerSink sink) {
  std::lock_guard lock(mu_);
  sink_ = std::move(sink);
}

void PaymentSystem::emit(LedgerEvent ev) {
  apply_locked(ev);
  ++applied_;
  if (sink_) sink_(ev);
}

void PaymentSystem::apply(const LedgerEvent& ev) {
  std::lock_guard lock(mu_);
  try {
    apply_locked(ev);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string(event_kind(ev)) + ": " + e.what());
  }
  ++applied_;
}

std::unique_ptr<PaymentSystem> PaymentSystem::replay(KeyRing keys, EngineConfig config,
                                                     const Clock& clock,
                                                     std::span<const LedgerEvent> events) {
  auto system = std::make_unique<PaymentSystem>(std::move(keys), std::move(config), clock,
                                                std::make_unique<SystemRandom>());
  for (const auto& ev : events) system->apply(ev);
  return system;
}

Account& PaymentSystem::account_ref(const std::string& account_id) {
  auto it = accounts_.find(account_id);
  if (it == accounts_.end()) throw std::invalid_argument("unknown account " + account_id);
  return it->second;
}

PaymentSystem::CardRecord& PaymentSystem::card_ref(const std::string& card_id) {
  auto it = cards_.find(card_id);
  if (it == cards_.end()) throw std::invalid_argument("unknown card " + card_id);
  return it->second;
}

PaymentSession& PaymentSystem::session_ref(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw SessionError(SessionError::Kind::not_found, "unknown session " + session_id);
  }
  return it->second;
}

void PaymentSystem::apply_locked(const LedgerEvent& ev) {
  std::visit(
      [this](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, ledger::AccountOpened>) {
          if (accounts_.count(e.account_id) || users_.count(e.credentials.username)) {
            throw std::invalid_argument("account already exists: " + e.account_id);
          }
          Account acct;
          acct.account_id = e.account_id;
          acct.credentials = e.credentials;
          acct.balance_minor = e.balance_minor;
          accounts_.emplace(e.account_id, std::move(acct));
          users_[e.credentials.username] = e.account_id;
          ++next_account_;
        } else if constexpr (std::is_same_v<T, ledger::TransactionRecorded>) {
          auto& history = account_ref(e.account_id).history;
          auto pos = std::upper_bound(
              history.begin(), history.end(), e.record.timestamp,
              [](std::int64_t t, const fraud::TransactionRecord& r) { return t < r.timestamp; });
          history.insert(pos, e.record);
        } else if constexpr (std::is_same_v<T, ledger::IssuanceOpened>) {
          if (issuances_.count(e.request_id)) {
            throw std::invalid_argument("duplicate issuance " + e.request_id);
          }
          IssuanceRecord rec;
          rec.result.request_id = e.request_id;
          rec.account_id = e.account_id;
          issuances_.emplace(e.request_id, std::move(rec));
          ++next_request_;
        } else if constexpr (std::is_same_v<T, ledger::IssuanceStep>) {
          auto it = issuances_.find(e.request_id);
          if (it == issuances_.end()) throw std::invalid_argument("unknown issuance");
          it->second.result.events.push_back(e.event);
        } else if constexpr (std::is_same_v<T, ledger::CardIssued>) {
          if (cards_.count(e.card_id)) throw std::invalid_argument("duplicate card " + e.card_id);
          Account& owner = account_ref(e.account_id);
          auto sealed = crypto::SealedCard::parse(e.sealed_pan);
          Bytes pan_bytes = crypto::open_card(sealed, storage_key_, to_bytes(e.card_id));
          std::string pan = to_string(pan_bytes);
          if (!registry_.is_active(pan) &&
              registry_.register_unique(pan) != card::Registration::accepted) {
            throw std::invalid_argument("card " + e.card_id + " reuses a registered PAN");
          }
          CardRecord rec;
          rec.card.card_id = e.card_id;
          rec.card.pan = card::split_pan(pan);
          rec.card.policy = e.policy;
          rec.card.issued_at = e.issued_at;
          rec.card.expires_at = e.expires_at;
          rec.card.state = CardState::active;
          rec.card.spent = e.spent;
          rec.card.owner = owner.account_id;
          rec.card.network = e.network;
          rec.card.token_id = hex_encode(ByteView(e.token).subspan(5, token::kTokenIdBytes));
          rec.sealed_pan = e.sealed_pan;
          rec.token = e.token;
          card_by_pan_[pan] = e.card_id;
          cards_.emplace(e.card_id, std::move(rec));
          auto it = issuances_.find(e.request_id);
          if (it != issuances_.end()) {
            IssuedCard issued;
            issued.card_id = e.card_id;
            issued.token = e.token;
            issued.qr_payload = token::qr_payload(e.token);
            issued.masked_pan = card::split_pan(pan).masked();
            it->second.result.card = std::move(issued);
          }
          ++next_card_;
        } else if constexpr (std::is_same_v<T, ledger::IssuanceClosed>) {
          auto it = issuances_.find(e.request_id);
          if (it == issuances_.end()) throw std::invalid_argument("unknown issuance");
          it->second.result.outcome = e.outcome;
          it->second.result.reason = e.reason;
        } else if constexpr (std::is_same_v<T, ledger::SessionOpened>) {
          if (sessions_.count(e.session_id)) {
            throw std::invalid_argument("duplicate session " + e.session_id);
          }
          PaymentSession s;
          s.session_id = e.session_id;
          s.token_id = e.token_id;
          s.counterparty = e.counterparty;
          s.amount_minor = e.amount_minor;
          s.card_id = e.card_id;
          s.account_id = e.account_id;
          s.phase = Phase::presentation;
          sessions_.emplace(e.session_id, std::move(s));
          ++next_session_;
        } else if constexpr (std::is_same_v<T, ledger::SessionStep>) {
          auto& s = session_ref(e.session_id);
          if (s.terminal()) throw std::invalid_argument("session already closed");
          if (!s.events.empty() && (e.event.phase <= s.events.back().phase ||
                                    e.event.timestamp < s.events.back().timestamp)) {
            throw std::invalid_argument("session events out of order");
          }
          s.events.push_back(e.event);
          // The session waits in the phase after the last completed one.
          int next = std::min(static_cast<int>(e.event.phase) + 1,
                              static_cast<int>(Phase::terminal));
          s.phase = static_cast<Phase>(next);
        } else if constexpr (std::is_same_v<T, ledger::SessionScored>) {
          session_ref(e.session_id).fraud_score = e.score;
        } else if constexpr (std::is_same_v<T, ledger::HoldPlaced>) {
          auto& s = session_ref(e.session_id);
          if (s.hold_active) throw std::invalid_argument("hold already placed");
          account_ref(s.account_id).held_minor += s.amount_minor;
          card_ref(s.card_id).card.held_minor += s.amount_minor;
          s.hold_active = true;
        } else if constexpr (std::is_same_v<T, ledger::HoldReleased>) {
          auto& s = session_ref(e.session_id);
          if (!s.hold_active) throw std::invalid_argument("no hold to release");
          account_ref(s.account_id).held_minor -= s.amount_minor;
          card_ref(s.card_id).card.held_minor -= s.amount_minor;
          s.hold_active = false;
        } else if constexpr (std::is_same_v<T, ledger::SessionApproved>) {
          session_ref(e.session_id).approved = true;
        } else if constexpr (std::is_same_v<T, ledger::Settled>) {
          auto& s = session_ref(e.session_id);
          if (!s.hold_active || !s.approved) throw std::invalid_argument("settle without hold");
          Account& acct = account_ref(s.account_id);
          CardRecord& rec = card_ref(s.card_id);
          acct.held_minor -= s.amount_minor;
          acct.balance_minor -= s.amount_minor;
          rec.card.held_minor -= s.amount_minor;
          rec.card.spent = e.spent_after;
          s.hold_active = false;
          credits_[s.counterparty.id] += s.amount_minor;
          conservation_.debited += s.amount_minor;
          conservation_.credited += s.amount_minor;
        } else if constexpr (std::is_same_v<T, ledger::CardRetired>) {
          CardRecord& rec = card_ref(e.card_id);
          if (rec.card.state == CardState::retired) throw std::invalid_argument("already retired");
          std::string pan = rec.card.pan.pan();
          if (registry_.is_active(pan)) registry_.retire(pan);
          rec.card.state = CardState::retired;
        } else if constexpr (std::is_same_v<T, ledger::SessionClosed>) {
          auto& s = session_ref(e.session_id);
          if (s.outcome != Outcome::pending) throw std::invalid_argument("outcome already set");
          s.outcome = e.outcome;
          s.reason = e.reason;
          s.phase = Phase::terminal;
          if (e.outcome == Outcome::payment_completed) conservation_.approved += s.amount_minor;
        }
      },
      ev);
}

std::string PaymentSystem::open_account(const std::string& username, const std::string& password,
                                        const std::string& pin, std::int64_t balance_minor) {
  if (balance_minor < 0) throw std::invalid_argument("negative opening balance");
  std::lock_guard lock(mu_);
  if (users_.count(username)) throw std::invalid_argument("username already registered");
  auto record =
      gateway::make_credential_record(username, password, pin, config_.hash_iterations, *rng_);
  std::string id = format_id("acct", next_account_, 4);
  emit(ledger::AccountOpened{id, std::move(record), balance_minor});
  return id;
}

void PaymentSystem::import_history(const std::string& account_id,
                                   std::span<const fraud::TransactionRecord> rows) {
  std::lock_guard lock(mu_);
  const auto& history = account_ref(account_id).history;
  std::int64_t last = history.empty() ? INT64_MIN : history.back().timestamp;
  for (const auto& r : rows) {
    if (r.timestamp < last) throw fraud::OrderingError("history rows must be time-ordered");
    last = r.timestamp;
  }
  for (const auto& r : rows) emit(ledger::TransactionRecorded{account_id, r});
}

std::string PaymentSystem::authenticate(const gateway::Credentials& credentials) const {
  std::optional<gateway::CredentialRecord> stored;
  {
    std::lock_guard lock(mu_);
    auto it = users_.find(credentials.username);
    if (it != users_.end()) stored = accounts_.at(it->second).credentials;
  }
  auto verdict = gateway::verify_user(credentials, stored ? &*stored : nullptr,
                                      config_.hash_iterations);
  if (verdict != gateway::Verification::verified) throw AuthenticationError();
  std::lock_guard lock(mu_);
  return users_.at(credentials.username);
}

bool PaymentSystem::verify_pin(const std::string& account_id, std::string_view pin) const {
  gateway::CredentialRecord stored;
  {
    std::lock_guard lock(mu_);
    auto it = accounts_.find(account_id);
    if (it == accounts_.end()) return false;
    stored = it->second.credentials;
  }
  return gateway::verify_pin(stored, pin);
}

std::optional<std::string> PaymentSystem::account_of_user(const std::string& username) const {
  std::lock_guard lock(mu_);
  auto it = users_.find(username);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

void PaymentSystem::issuance_event(const std::string& request_id, Actor actor, Phase phase,
                                   Detail detail) {
  emit(ledger::IssuanceStep{request_id, Event{clock_.now(), actor, phase, std::move(detail), false}});
}

IssuanceResult PaymentSystem::fail_issuance(const std::string& request_id, DeclineReason reason) {
  issuance_event(request_id, Actor::bank, Phase::terminal,
                 {{"outcome", std::string(outcome_text(Outcome::card_generate_failed))},
                  {"reason", std::string(reason_name(reason))}});
  emit(ledger::IssuanceClosed{request_id, Outcome::card_generate_failed, reason});
  return issuances_.at(request_id).result;
}

IssuanceResult PaymentSystem::request_card(const gateway::Credentials& credentials,
                                           const CardPolicy& policy) {
  std::string account_id = authenticate(credentials);
  return issue_card(account_id, policy);
}

IssuanceResult PaymentSystem::issue_card(const std::string& account_id, const CardPolicy& policy) {
  std::lock_guard lock(mu_);
  account_ref(account_id);
  return issue_locked(account_id, policy);
}

IssuanceResult PaymentSystem::issue_locked(const std::string& account_id,
                                           const CardPolicy& policy) {
  const std::int64_t now = clock_.now();
  std::string request_id = format_id("req", next_request_, 4);
  emit(ledger::IssuanceOpened{request_id, account_id, now});

  issuance_event(request_id, Actor::user, Phase::card_request,
                 {{"usage", policy.usage ? std::string(usage_name(*policy.usage)) : ""},
                  {"limit", std::to_string(policy.limit_minor_units)},
                  {"valid_for", std::to_string(policy.valid_for_seconds)},
                  {"networks", join_networks(policy.networks_allowed)}});
  if (!policy.is_valid()) return fail_issuance(request_id, DeclineReason::invalid_policy);

  const NetworkId network = *policy.networks_allowed.begin();
  issuance_event(request_id, Actor::bank, Phase::network_request,
                 {{"request", request_id}, {"network", std::to_string(network)}});

  card::PanParts pan;
  try {
    pan = card::issue_pan(config_.iin, *rng_, registry_, config_.pan_attempts);
  } catch (const card::RegistryError&) {
    issuance_event(request_id, Actor::network, Phase::network_response,
                   {{"status", "exhausted"}});
    return fail_issuance(request_id, DeclineReason::registry_exhausted);
  }

  std::string card_id = format_id("card", next_card_, 4);
  issuance_event(request_id, Actor::network, Phase::network_response,
                 {{"status", "generated"}, {"card", card_id}});

  const std::string digits = pan.pan();
  const std::int64_t expires_at = now + policy.valid_for_seconds;
  Bytes sealed_pan =
      crypto::seal_card(to_bytes(digits), storage_key_, *rng_, to_bytes(card_id)).serialize();
  Bytes token_bytes =
      token::encode_token(to_bytes(digits), keys_.network_key, network, expires_at, now, *rng_);
  auto spent = crypto::he_encrypt(keys_.he.public_key, std::uint64_t{0}, *rng_);
  emit(ledger::CardIssued{request_id, card_id, account_id, sealed_pan, policy, now, expires_at,
                          network, token_bytes, spent});

  nlohmann::json payload = {
      {"card_id", card_id},
      {"pan", digits},
      {"usage", usage_name(*policy.usage)},
      {"limit", policy.limit_minor_units},
      {"issued_at", now},
      {"expires_at", expires_at},
      {"network", network},
      {"qr_payload", token::qr_payload(token_bytes)},
  };
  Bytes delivery_key = crypto::derive_key(keys_.vault_key, "delivery/" + account_id);
  auto sealed = crypto::seal_card(to_bytes(payload.dump()), delivery_key, *rng_, to_bytes(card_id));
  issuance_event(request_id, Actor::bank, Phase::bank_sealing,
                 {{"card", card_id}, {"sealed_bytes", std::to_string(sealed.serialize().size())}});
  issuance_event(request_id, Actor::user, Phase::user_delivery,
                 {{"card", card_id}, {"token_id", cards_.at(card_id).card.token_id}});
  emit(ledger::IssuanceClosed{request_id, Outcome::pending, DeclineReason::none});

  IssuanceResult result = issuances_.at(request_id).result;
  result.card->sealed = std::move(sealed);
  return result;
}

void PaymentSystem::session_event(const std::string& session_id, Actor actor, Phase phase,
                                  Detail detail, bool visible) {
  std::int64_t now = clock_.now();
  const auto& s = sessions_.at(session_id);
  if (!s.events.empty()) now = std::max(now, s.events.back().timestamp);
  emit(ledger::SessionStep{session_id, Event{now, actor, phase, std::move(detail), visible}});
}

void PaymentSystem::close_session(const std::string& session_id, Outcome outcome,
                                  DeclineReason reason) {
  session_event(session_id, Actor::network, Phase::terminal,
                {{"outcome", std::string(outcome_text(outcome))}}, true);
  emit(ledger::SessionClosed{session_id, outcome, reason});
}

void PaymentSystem::record_attempt(const PaymentSession& s, bool approved) {
  if (s.account_id.empty()) return;
  const auto& history = accounts_.at(s.account_id).history;
  fraud::TransactionRecord rec;
  rec.timestamp = candidate_time(history, clock_.now());
  rec.amount_minor = s.amount_minor;
  rec.category = s.counterparty.category;
  rec.channel = s.counterparty.channel();
  rec.approved = approved;
  emit(ledger::TransactionRecorded{s.account_id, rec});
}

std::string PaymentSystem::present_card(ByteView token_bytes, const Counterparty& counterparty,
                                        std::int64_t amount_minor) {
  if (amount_minor <= 0) throw std::invalid_argument("amount must be positive");
  std::lock_guard lock(mu_);
  const std::int64_t now = clock_.now();

  std::string token_id;
  std::string card_id;
  std::string account_id;
  std::optional<DeclineReason> failure;
  std::string token_status = "valid";
  std::string card_status;
  try {
    auto tok = token::decode_token(token_bytes, keys_.network_key, now);
    token_id = tok.token_id_hex();
    auto pan = to_string(token::open_card_ref(tok, keys_.network_key));
    auto it = card_by_pan_.find(pan);
    if (it == card_by_pan_.end() || cards_.at(it->second).card.token_id != token_id ||
        cards_.at(it->second).card.network != tok.network_id) {
      failure = DeclineReason::token_authenticity;
      token_status = "unknown";
    } else {
      const auto& card = cards_.at(it->second).card;
      card_id = card.card_id;
      account_id = card.owner;
      card_status = std::string(card_state_name(card.state));
      if (card.state == CardState::retired) failure = DeclineReason::card_retired;
    }
  } catch (const token::TokenError& err) {
    failure = reason_for(err.kind());
    token_status = err.kind() == token::TokenError::Kind::format         ? "malformed"
                   : err.kind() == token::TokenError::Kind::authenticity ? "forged"
                                                                          : "expired";
  } catch (const crypto::CryptoError&) {
    failure = DeclineReason::token_authenticity;
    token_status = "forged";
  }

  std::string session_id = format_id("sess", next_session_, 6);
  emit(ledger::SessionOpened{session_id, token_id, counterparty, amount_minor, card_id, account_id});
  session_event(session_id, counterparty.actor(), Phase::presentation,
                {{"token_id", token_id},
                 {"amount", std::to_string(amount_minor)},
                 {"counterparty", counterparty.id}},
                true);
  if (failure) {
    Detail detail{{"token", token_status}};
    if (!card_status.empty()) detail.emplace_back("card", card_status);
    session_event(session_id, Actor::network, Phase::authorization, std::move(detail), false);
    record_attempt(sessions_.at(session_id), false);
    close_session(session_id, Outcome::fraudulent_transaction, *failure);
  }
  return session_id;
}

std::int64_t PaymentSystem::decrypt_spent(const VirtualCard& card) const {
  return static_cast<std::int64_t>(crypto::he_decrypt_u64(keys_.he.secret_key, card.spent));
}

PaymentSession PaymentSystem::adjudicate(const std::string& session_id, const FraudScorer* scorer,
                                         ApprovalSource& approvals) {
  std::unique_lock lock(mu_);
  if (in_flight_.count(session_id)) {
    throw SessionError(SessionError::Kind::busy, "session " + session_id + " is being processed");
  }
  {
    const auto& s = session_ref(session_id);
    if (s.terminal() || s.phase != Phase::authorization) {
      throw SessionError(SessionError::Kind::wrong_state,
                         "session " + session_id + " is not awaiting authorization");
    }
  }
  InFlightGuard guard(in_flight_, session_id);
  const PaymentSession s = sessions_.at(session_id);
  const CardRecord& rec = cards_.at(s.card_id);
  const Account& acct = accounts_.at(s.account_id);
  const std::int64_t now = clock_.now();

  auto decline = [&](Detail detail, Outcome outcome, DeclineReason reason) {
    session_event(session_id, Actor::bank, Phase::authorization, std::move(detail), false);
    record_attempt(sessions_.at(session_id), false);
    close_session(session_id, outcome, reason);
    return sessions_.at(session_id);
  };

  Detail detail{{"token", "valid"}, {"auth", "ok"}};
  if (rec.card.state == CardState::retired) {
    detail.back().second = "card_retired";
    return decline(std::move(detail), Outcome::fraudulent_transaction, DeclineReason::card_retired);
  }
  if (now >= rec.card.expires_at) {
    detail.back().second = "card_expired";
    return decline(std::move(detail), Outcome::fraudulent_transaction,
                   DeclineReason::token_expired);
  }

  // Fraud score on the account history as of now.
  fraud::TransactionRecord candidate;
  candidate.timestamp = candidate_time(acct.history, now);
  candidate.amount_minor = s.amount_minor;
  candidate.category = s.counterparty.category;
  candidate.channel = s.counterparty.channel();
  std::optional<double> score;
  if (scorer != nullptr) {
    try {
      score = scorer->score(acct.history, candidate);
    } catch (const ModelUnavailable&) {
    } catch (const fraud::ModelError&) {
    }
  }
  if (!score) {
    detail.emplace_back("fraud_score", "unavailable");
    return decline(std::move(detail), Outcome::fraud_detection_failed,
                   DeclineReason::model_unavailable);
  }
  emit(ledger::SessionScored{session_id, *score});
  detail.emplace_back("fraud_score", format_double(*score));
  if (fraud::classify_probability(*score, scorer->threshold()) == fraud::Verdict::fraud) {
    return decline(std::move(detail), Outcome::fraudulent_transaction,
                   DeclineReason::fraud_score);
  }

  // Funds: card limit (encrypted running spend plus open holds) and balance.
  std::optional<DeclineReason> funds;
  if (rec.card.policy.usage == Usage::one_time && rec.card.held_minor > 0) {
    funds = DeclineReason::card_in_use;
  } else if (decrypt_spent(rec.card) + rec.card.held_minor + s.amount_minor >
             rec.card.policy.limit_minor_units) {
    funds = DeclineReason::limit_exceeded;
  } else if (s.amount_minor > acct.balance_minor - acct.held_minor) {
    funds = DeclineReason::insufficient_balance;
  }
  if (funds) {
    detail.emplace_back("funds", std::string(reason_name(*funds)));
    return decline(std::move(detail), Outcome::user_approval_failed, *funds);
  }
  detail.emplace_back("funds", "ok");
  session_event(session_id, Actor::bank, Phase::authorization, std::move(detail), false);
  emit(ledger::HoldPlaced{session_id});

  ApprovalQuery query;
  query.session_id = session_id;
  query.account_id = s.account_id;
  query.counterparty = s.counterparty;
  query.amount_minor = s.amount_minor;
  query.masked_pan = rec.card.pan.masked();
  query.requested_at = clock_.now();

  lock.unlock();
  ApprovalDecision decision = ApprovalDecision::timeout;
  try {
    decision = approvals.request(query, config_.approval_timeout);
  } catch (const std::exception&) {
    decision = ApprovalDecision::timeout;
  }
  lock.lock();

  session_event(session_id, Actor::user, Phase::user_confirmation,
                {{"approval", std::string(decision_name(decision))}}, false);
  if (decision == ApprovalDecision::approve) {
    emit(ledger::SessionApproved{session_id});
    return sessions_.at(session_id);
  }
  emit(ledger::HoldReleased{session_id});
  record_attempt(sessions_.at(session_id), false);
  close_session(session_id, Outcome::user_approval_failed,
                decision == ApprovalDecision::decline ? DeclineReason::user_declined
                                                      : DeclineReason::approval_timeout);
  return sessions_.at(session_id);
}

PaymentSession PaymentSystem::settle(const std::string& session_id) {
  std::lock_guard lock(mu_);
  const PaymentSession s = session_ref(session_id);
  if (s.terminal() || !s.approved || !s.hold_active || s.phase != Phase::acceptance) {
    throw SessionError(SessionError::Kind::wrong_state,
                       "session " + session_id + " is not approved for settlement");
  }
  const CardRecord& rec = cards_.at(s.card_id);
  const auto& pk = keys_.he.public_key;
  auto spent_after =
      crypto::he_add(pk, rec.card.spent, crypto::he_encrypt(pk, static_cast<std::uint64_t>(s.amount_minor), *rng_));

  session_event(session_id, Actor::network, Phase::acceptance, {{"order", "accepted"}}, false);
  emit(ledger::Settled{session_id, std::move(spent_after)});
  if (rec.card.policy.usage == Usage::one_time) emit(ledger::CardRetired{s.card_id});
  session_event(session_id, s.counterparty.actor(), Phase::counterparty_notice,
                {{"token_id", s.token_id},
                 {"amount", std::to_string(s.amount_minor)},
                 {"payment", "received"}},
                true);
  session_event(session_id, Actor::user, Phase::user_notice,
                {{"card", s.card_id}, {"amount", std::to_string(s.amount_minor)}}, false);
  record_attempt(sessions_.at(session_id), true);
  close_session(session_id, Outcome::payment_completed, DeclineReason::none);
  return sessions_.at(session_id);
}

PaymentSession PaymentSystem::process(const std::string& session_id, const FraudScorer* scorer,
                                      ApprovalSource& approvals) {
  {
    std::lock_guard lock(mu_);
    const auto& s = session_ref(session_id);
    if (s.terminal()) return s;
  }
  PaymentSession s = adjudicate(session_id, scorer, approvals);
  if (s.terminal()) return s;
  return settle(session_id);
}

std::optional<PaymentSession> PaymentSystem::session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::vector<Event> PaymentSystem::session_trace(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw SessionError(SessionError::Kind::not_found, "unknown session " + session_id);
  }
  return it->second.events;
}

std::vector<Event> PaymentSystem::counterparty_view(const std::string& session_id) const {
  std::vector<Event> out;
  for (auto& ev : session_trace(session_id)) {
    if (ev.counterparty_visible) out.push_back(std::move(ev));
  }
  return out;
}

std::vector<PaymentSession> PaymentSystem::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<PaymentSession> out;
  out.reserve(sessions_.size());
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

std::vector<IssuanceResult> PaymentSystem::issuances() const {
  std::lock_guard lock(mu_);
  std::vector<IssuanceResult> out;
  for (const auto& [id, rec] : issuances_) out.push_back(rec.result);
  return out;
}

std::int64_t PaymentSystem::balance(const std::string& account_id) const {
  std::lock_guard lock(mu_);
  auto it = accounts_.find(account_id);
  if (it == accounts_.end()) throw std::invalid_argument("unknown account " + account_id);
  return it->second.balance_minor;
}

CardSummary PaymentSystem::summarize(const CardRecord& rec) const {
  CardSummary out;
  out.card_id = rec.card.card_id;
  out.masked_pan = rec.card.pan.masked();
  out.usage = *rec.card.policy.usage;
  out.limit_minor = rec.card.policy.limit_minor_units;
  out.spent_minor = decrypt_spent(rec.card);
  out.expires_at = rec.card.expires_at;
  out.state = rec.card.state;
  out.network = rec.card.network;
  out.qr_payload = token::qr_payload(rec.token);
  return out;
}

std::vector<CardSummary> PaymentSystem::cards_of(const std::string& account_id) const {
  std::lock_guard lock(mu_);
  std::vector<CardSummary> out;
  for (const auto& [id, rec] : cards_) {
    if (rec.card.owner == account_id) out.push_back(summarize(rec));
  }
  return out;
}

std::vector<std::string> PaymentSystem::card_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, rec] : cards_) out.push_back(id);
  return out;
}

std::optional<CardSummary> PaymentSystem::card(const std::string& card_id) const {
  std::lock_guard lock(mu_);
  auto it = cards_.find(card_id);
  if (it == cards_.end()) return std::nullopt;
  return summarize(it->second);
}

std::int64_t PaymentSystem::spent(const std::string& card_id) const {
  std::lock_guard lock(mu_);
  auto it = cards_.find(card_id);
  if (it == cards_.end()) throw std::invalid_argument("unknown card " + card_id);
  return decrypt_spent(it->second.card);
}

std::int64_t PaymentSystem::limit(const std::string& card_id) const {
  std::lock_guard lock(mu_);
  auto it = cards_.find(card_id);
  if (it == cards_.end()) throw std::invalid_argument("unknown card " + card_id);
  return it->second.card.policy.limit_minor_units;
}

Bytes PaymentSystem::user_delivery_key(const std::string& account_id) const {
  return crypto::derive_key(keys_.vault_key, "delivery/" + account_id);
}

std::vector<fraud::TransactionRecord> PaymentSystem::history(const std::string& account_id) const {
  std::lock_guard lock(mu_);
  auto it = accounts_.find(account_id);
  if (it == accounts_.end()) throw std::invalid_argument("unknown account " + account_id);
  return it->second.history;
}

std::vector<std::string> PaymentSystem::registry_active() const {
  return registry_.active_snapshot();
}

std::vector<std::string> PaymentSystem::registry_retired() const {
  return registry_.retired_snapshot();
}

Conservation PaymentSystem::conservation() const {
  std::lock_guard lock(mu_);
  return conservation_;
}

std::map<std::string, std::int64_t> PaymentSystem::credits() const {
  std::lock_guard lock(mu_);
  return credits_;
}

std::size_t PaymentSystem::events_applied() const {
  std::lock_guard lock(mu_);
  return applied_;
}

std::string PaymentSystem::dump_state() const {
  std::ostringstream out;
  auto dump_event = [&out](const Event& ev) {
    out << "  event " << ev.timestamp << ' ' << actor_name(ev.actor) << ' '
        << static_cast<int>(ev.phase) << ' ' << (ev.counterparty_visible ? 1 : 0);
    for (const auto& [k, v] : ev.detail) out << ' ' << k << '=' << v;
    out << '\n';
  };

  out << "counters " << next_account_ << ' ' << next_card_ << ' ' << next_session_ << ' '
      << next_request_ << '\n';
  for (const auto& [id, a] : accounts_) {
    out << "account " << id << ' ' << a.credentials.username << ' ' << a.balance_minor << ' '
        << a.held_minor << ' ' << hex_encode(a.credentials.salt) << ' '
        << hex_encode(a.credentials.password_digest) << ' '
        << hex_encode(a.credentials.pin_digest) << ' ' << a.credentials.iterations << '\n';
    for (const auto& r : a.history) {
      out << "  txn " << r.timestamp << ' ' << r.amount_minor << ' ' << r.category << ' '
          << static_cast<int>(r.channel) << ' ' << (r.approved ? 1 : 0) << '\n';
    }
  }
  for (const auto& [id, rec] : cards_) {
    const auto& c = rec.card;
    out << "card " << id << ' ' << c.pan.pan() << ' ' << card_state_name(c.state) << ' '
        << usage_name(*c.policy.usage) << ' ' << c.policy.limit_minor_units << ' '
        << c.policy.valid_for_seconds << ' ' << join_networks(c.policy.networks_allowed) << ' '
        << c.issued_at << ' ' << c.expires_at << ' ' << static_cast<int>(c.network) << ' '
        << c.owner << ' ' << c.held_minor << ' ' << c.token_id << ' '
        << hex_encode(c.spent.serialize()) << ' ' << hex_encode(rec.sealed_pan) << ' '
        << hex_encode(rec.token) << '\n';
  }
  for (const auto& pan : registry_.active_snapshot()) out << "active " << pan << '\n';
  for (const auto& pan : registry_.retired_snapshot()) out << "retired " << pan << '\n';
  for (const auto& [id, rec] : issuances_) {
    const auto& r = rec.result;
    out << "issuance " << id << ' ' << rec.account_id << ' ' << outcome_text(r.outcome) << ' '
        << reason_name(r.reason) << ' ' << (r.card ? r.card->card_id : "-") << '\n';
    for (const auto& ev : r.events) dump_event(ev);
  }
  for (const auto& [id, s] : sessions_) {
    out << "session " << id << ' ' << s.token_id << ' ' << counterparty_kind_name(s.counterparty.kind)
        << ' ' << s.counterparty.id << ' ' << s.counterparty.category << ' ' << s.amount_minor
        << ' ' << static_cast<int>(s.phase) << ' '
        << (s.fraud_score ? format_double(*s.fraud_score) : "-") << ' ' << outcome_text(s.outcome)
        << ' ' << reason_name(s.reason) << ' ' << s.card_id << ' ' << s.account_id << ' '
        << s.approved << ' ' << s.hold_active << '\n';
    for (const auto& ev : s.events) dump_event(ev);
  }
  for (const auto& [who, amount] : credits_) out << "credit " << who << ' ' << amount << '\n';
  out << "conservation " << conservation_.debited << ' ' << conservation_.credited << ' '
      << conservation_.approved << '\n';
  return out.str();
}

std::string PaymentSystem::state_digest() const {
  std::lock_guard lock(mu_);
  std::string dump = dump_state();
  return hex_encode(crypto::sha256(to_bytes(dump)));
}

}  // namespace cardless::protocol
