#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cardless/fraud/model.hpp"
#include "cardless/protocol/engine.hpp"

// Scenario files (YAML) are documented in docs/scenario_format.md.
namespace cardless::sim {

class ScenarioError : public std::runtime_error {
 public:
  // `line` is 1-based; 0 when unknown.
  ScenarioError(std::string path, std::size_t line, const std::string& message);
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

struct ModelSpec {
  enum class Kind { none, constant, trained, file };
  Kind kind = Kind::trained;
  double probability = 0.0;  // constant
  std::uint64_t seed = 7;    // trained
  std::size_t n = 10000;
  double fraud_rate = 0.1;
  double separation = 2.0;
  fraud::TrainOptions train{0.5, 1000, 1e-4, 0.5};
  std::string path;  // file
};

struct AccountSpec {
  std::string id;
  std::string username;
  std::string password;
  std::string pin;
  std::int64_t balance = 0;
  bool generated_history = false;
};

struct CardSpec {
  std::string id;
  std::string account;
  protocol::CardPolicy policy;
  std::int64_t at = 0;
};

enum class TokenMode { valid, tampered };
enum class Label { legit, fraud };

struct TrafficSpec {
  std::int64_t at = 0;
  std::string card;
  protocol::Counterparty counterparty;
  std::int64_t amount = 0;
  Label label = Label::legit;
  std::optional<protocol::ApprovalDecision> approval;
  TokenMode token = TokenMode::valid;
};

struct GeneratedSpec {
  std::size_t legit = 0;
  std::size_t fraud = 0;
  double separation = 2.0;
  std::int64_t spacing = 600;
};

struct ApprovalPolicy {
  protocol::ApprovalDecision legit = protocol::ApprovalDecision::approve;
  protocol::ApprovalDecision fraud = protocol::ApprovalDecision::decline;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  std::int64_t start_time = 1'700'000'000;
  unsigned he_bits = 512;
  int hash_iterations = 1000;
  std::int64_t approval_timeout = 120;
  ModelSpec model;
  ApprovalPolicy approvals;
  std::vector<AccountSpec> accounts;
  std::vector<CardSpec> cards;
  std::vector<TrafficSpec> traffic;
  std::optional<GeneratedSpec> generated;
};

// `source` names the document in error messages.
Scenario parse_scenario(const std::string& yaml, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

struct SessionOutcome {
  std::string id;  // session id, or issuance request id
  std::optional<Label> label;
  protocol::Outcome outcome = protocol::Outcome::pending;
  protocol::DeclineReason reason = protocol::DeclineReason::none;
  std::optional<double> fraud_score;
  std::vector<protocol::Event> events;
};

struct RunMetrics {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t sessions = 0;
  // Fraud label against the "Fraudulent transaction!" outcome.
  fraud::ConfusionMatrix confusion;
  std::map<protocol::Outcome, std::size_t> outcomes;
  std::int64_t conservation_residual = 0;
  std::string log_digest;
  std::string state_digest;
  std::string replay_digest;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<SessionOutcome> sessions;
  std::vector<std::string> log_lines;
  std::vector<std::string> pans;  // every PAN issued during the run
  bool limit_safe = true;         // spent <= limit held after every settlement
};

// `seed` overrides the file's seed; `model` overrides its model section.
RunResult run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt,
                       const fraud::FraudModel* model = nullptr);

// Digest of every session and issuance event, ordered by
// (timestamp, id, phase, position).
std::string log_digest(const std::vector<SessionOutcome>& sessions);

}  // namespace cardless::sim
