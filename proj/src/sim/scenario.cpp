#include "cardless/sim/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <yaml-cpp/yaml.h>

#include "cardless/crypto/primitives.hpp"
#include "cardless/gateway/event_log.hpp"
#include "cardless/sim/dataset.hpp"

namespace cardless::sim {
namespace {

using protocol::ApprovalDecision;

std::string describe(const std::string& path, std::size_t line, const std::string& message) {
  std::string out = path;
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  return out + ": " + message;
}

// Typed access to a YAML tree with path-and-line errors.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path,
                         const std::string& message) const {
    std::size_t line = 0;
    if (node.IsDefined()) {
      auto mark = node.Mark();
      if (mark.line >= 0) line = static_cast<std::size_t>(mark.line) + 1;
    }
    throw ScenarioError(source_ + ":" + path, line, message);
  }

  template <typename T>
  T get(const YAML::Node& node, const std::string& path, const char* type) const {
    if (!node.IsScalar()) fail(node, path, std::string("expected ") + type);
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, path, std::string("expected ") + type);
    }
  }

  std::string str(const YAML::Node& node, const std::string& path) const {
    return get<std::string>(node, path, "string");
  }
  std::int64_t integer(const YAML::Node& node, const std::string& path) const {
    return get<std::int64_t>(node, path, "integer");
  }
  double real(const YAML::Node& node, const std::string& path) const {
    return get<double>(node, path, "number");
  }

  const YAML::Node& required(const YAML::Node& map, const YAML::Node& child, const std::string& path,
                             const std::string& key) const {
    if (!child.IsDefined() || child.IsNull()) fail(map, path, "missing required key '" + key + "'");
    return child;
  }

  void keys(const YAML::Node& map, const std::string& path,
            std::initializer_list<std::string_view> allowed) const {
    if (!map.IsMap()) fail(map, path, "expected a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(kv.first, path + "." + key, "unknown key");
      }
    }
  }

  void sequence(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence()) fail(node, path, "expected a sequence");
  }

 private:
  std::string source_;
};

ApprovalDecision parse_decision(const Reader& r, const YAML::Node& node, const std::string& path) {
  std::string s = r.str(node, path);
  if (s == "approve") return ApprovalDecision::approve;
  if (s == "decline") return ApprovalDecision::decline;
  if (s == "timeout") return ApprovalDecision::timeout;
  r.fail(node, path, "expected approve, decline or timeout");
}

Label parse_label(const Reader& r, const YAML::Node& node, const std::string& path) {
  std::string s = r.str(node, path);
  if (s == "legit") return Label::legit;
  if (s == "fraud") return Label::fraud;
  r.fail(node, path, "expected legit or fraud");
}

ModelSpec parse_model(const Reader& r, const YAML::Node& node, const std::string& path) {
  r.keys(node, path, {"kind", "probability", "seed", "n", "fraud_rate", "separation", "lr",
                      "epochs", "l2", "threshold", "path"});
  ModelSpec m;
  const std::string kind = r.str(r.required(node, node["kind"], path, "kind"), path + ".kind");
  if (kind == "none") {
    m.kind = ModelSpec::Kind::none;
  } else if (kind == "constant") {
    m.kind = ModelSpec::Kind::constant;
    m.probability = r.real(r.required(node, node["probability"], path, "probability"),
                           path + ".probability");
    if (!(m.probability > 0.0 && m.probability < 1.0)) {
      r.fail(node["probability"], path + ".probability", "must lie in (0, 1)");
    }
  } else if (kind == "trained") {
    m.kind = ModelSpec::Kind::trained;
    if (node["seed"]) m.seed = r.get<std::uint64_t>(node["seed"], path + ".seed", "unsigned integer");
    if (node["n"]) m.n = r.get<std::size_t>(node["n"], path + ".n", "unsigned integer");
    if (node["fraud_rate"]) m.fraud_rate = r.real(node["fraud_rate"], path + ".fraud_rate");
    if (node["separation"]) m.separation = r.real(node["separation"], path + ".separation");
    if (node["lr"]) m.train.learning_rate = r.real(node["lr"], path + ".lr");
    if (node["epochs"]) m.train.epochs = static_cast<int>(r.integer(node["epochs"], path + ".epochs"));
    if (node["l2"]) m.train.l2 = r.real(node["l2"], path + ".l2");
    if (node["threshold"]) m.train.threshold = r.real(node["threshold"], path + ".threshold");
  } else if (kind == "file") {
    m.kind = ModelSpec::Kind::file;
    m.path = r.str(r.required(node, node["path"], path, "path"), path + ".path");
  } else {
    r.fail(node["kind"], path + ".kind", "expected none, constant, trained or file");
  }
  return m;
}

protocol::CardPolicy parse_policy(const Reader& r, const YAML::Node& node, const std::string& path) {
  protocol::CardPolicy p;
  if (node["usage"]) {
    std::string u = r.str(node["usage"], path + ".usage");
    p.usage = protocol::parse_usage(u);
    if (!p.usage) r.fail(node["usage"], path + ".usage", "expected one_time or multi_use");
  }
  if (node["limit"]) p.limit_minor_units = r.integer(node["limit"], path + ".limit");
  if (node["valid_for"]) p.valid_for_seconds = r.integer(node["valid_for"], path + ".valid_for");
  if (node["networks"]) {
    r.sequence(node["networks"], path + ".networks");
    for (std::size_t i = 0; i < node["networks"].size(); ++i) {
      std::string np = path + ".networks[" + std::to_string(i) + "]";
      auto id = r.integer(node["networks"][i], np);
      if (id < 0 || id > 255) r.fail(node["networks"][i], np, "network id must fit in a byte");
      p.networks_allowed.insert(static_cast<protocol::NetworkId>(id));
    }
  }
  return p;
}

protocol::Counterparty parse_counterparty(const Reader& r, const YAML::Node& node,
                                          const std::string& path) {
  r.keys(node, path, {"kind", "id", "category"});
  protocol::Counterparty c;
  if (node["kind"]) {
    auto kind = protocol::parse_counterparty_kind(r.str(node["kind"], path + ".kind"));
    if (!kind) r.fail(node["kind"], path + ".kind", "expected merchant or atm");
    c.kind = *kind;
  }
  c.id = r.str(r.required(node, node["id"], path, "id"), path + ".id");
  c.category = node["category"] ? r.str(node["category"], path + ".category")
                                : (c.kind == protocol::CounterpartyKind::atm ? "cash" : "retail");
  return c;
}

Scenario parse_tree(const Reader& r, const YAML::Node& root) {
  r.keys(root, "$", {"name", "seed", "start_time", "he_bits", "hash_iterations", "approval_timeout",
                     "model", "approval_policy", "accounts", "cards", "traffic", "generate"});
  Scenario sc;
  sc.name = r.str(r.required(root, root["name"], "$", "name"), "$.name");
  if (root["seed"]) sc.seed = r.get<std::uint64_t>(root["seed"], "$.seed", "unsigned integer");
  if (root["start_time"]) sc.start_time = r.integer(root["start_time"], "$.start_time");
  if (root["he_bits"]) {
    sc.he_bits = r.get<unsigned>(root["he_bits"], "$.he_bits", "unsigned integer");
    if (sc.he_bits != 256 && sc.he_bits != 512 && sc.he_bits != 1024 && sc.he_bits != 2048) {
      r.fail(root["he_bits"], "$.he_bits", "expected 256, 512, 1024 or 2048");
    }
  }
  if (root["hash_iterations"]) {
    sc.hash_iterations = static_cast<int>(r.integer(root["hash_iterations"], "$.hash_iterations"));
    if (sc.hash_iterations < 1) r.fail(root["hash_iterations"], "$.hash_iterations", "must be >= 1");
  }
  if (root["approval_timeout"]) {
    sc.approval_timeout = r.integer(root["approval_timeout"], "$.approval_timeout");
  }
  if (root["model"]) sc.model = parse_model(r, root["model"], "$.model");

  if (auto ap = root["approval_policy"]) {
    r.keys(ap, "$.approval_policy", {"legit", "fraud"});
    if (ap["legit"]) sc.approvals.legit = parse_decision(r, ap["legit"], "$.approval_policy.legit");
    if (ap["fraud"]) sc.approvals.fraud = parse_decision(r, ap["fraud"], "$.approval_policy.fraud");
  }

  std::set<std::string> account_ids, usernames, card_ids;
  if (auto accounts = root["accounts"]) {
    r.sequence(accounts, "$.accounts");
    for (std::size_t i = 0; i < accounts.size(); ++i) {
      const std::string path = "$.accounts[" + std::to_string(i) + "]";
      const YAML::Node n = accounts[i];
      r.keys(n, path, {"id", "username", "password", "pin", "balance", "history"});
      AccountSpec a;
      a.id = r.str(r.required(n, n["id"], path, "id"), path + ".id");
      a.username = n["username"] ? r.str(n["username"], path + ".username") : a.id;
      a.password = r.str(r.required(n, n["password"], path, "password"), path + ".password");
      a.pin = r.str(r.required(n, n["pin"], path, "pin"), path + ".pin");
      if (!gateway::is_valid_pin(a.pin)) r.fail(n["pin"], path + ".pin", "PIN must be six digits");
      a.balance = r.integer(r.required(n, n["balance"], path, "balance"), path + ".balance");
      if (a.balance < 0) r.fail(n["balance"], path + ".balance", "must be non-negative");
      if (n["history"]) {
        std::string h = r.str(n["history"], path + ".history");
        if (h != "generated" && h != "empty") {
          r.fail(n["history"], path + ".history", "expected generated or empty");
        }
        a.generated_history = h == "generated";
      }
      if (!account_ids.insert(a.id).second) r.fail(n["id"], path + ".id", "duplicate account id");
      if (!usernames.insert(a.username).second) r.fail(n, path + ".username", "duplicate username");
      sc.accounts.push_back(std::move(a));
    }
  }

  if (auto cards = root["cards"]) {
    r.sequence(cards, "$.cards");
    for (std::size_t i = 0; i < cards.size(); ++i) {
      const std::string path = "$.cards[" + std::to_string(i) + "]";
      const YAML::Node n = cards[i];
      r.keys(n, path, {"id", "account", "at", "policy"});
      CardSpec c;
      c.id = r.str(r.required(n, n["id"], path, "id"), path + ".id");
      c.account = r.str(r.required(n, n["account"], path, "account"), path + ".account");
      if (!account_ids.count(c.account)) r.fail(n["account"], path + ".account", "unknown account");
      if (n["at"]) c.at = r.integer(n["at"], path + ".at");
      if (n["policy"] && !n["policy"].IsNull()) {
        r.keys(n["policy"], path + ".policy", {"usage", "limit", "valid_for", "networks"});
        c.policy = parse_policy(r, n["policy"], path + ".policy");
      }
      if (!card_ids.insert(c.id).second) r.fail(n["id"], path + ".id", "duplicate card id");
      sc.cards.push_back(std::move(c));
    }
  }

  if (auto traffic = root["traffic"]) {
    r.sequence(traffic, "$.traffic");
    for (std::size_t i = 0; i < traffic.size(); ++i) {
      const std::string path = "$.traffic[" + std::to_string(i) + "]";
      const YAML::Node n = traffic[i];
      r.keys(n, path, {"at", "card", "counterparty", "amount", "label", "approval", "token"});
      TrafficSpec t;
      t.at = r.integer(r.required(n, n["at"], path, "at"), path + ".at");
      t.card = r.str(r.required(n, n["card"], path, "card"), path + ".card");
      if (!card_ids.count(t.card)) r.fail(n["card"], path + ".card", "unknown card");
      t.counterparty = parse_counterparty(
          r, r.required(n, n["counterparty"], path, "counterparty"), path + ".counterparty");
      t.amount = r.integer(r.required(n, n["amount"], path, "amount"), path + ".amount");
      if (t.amount <= 0) r.fail(n["amount"], path + ".amount", "must be positive");
      if (n["label"]) t.label = parse_label(r, n["label"], path + ".label");
      if (n["approval"]) t.approval = parse_decision(r, n["approval"], path + ".approval");
      if (n["token"]) {
        std::string mode = r.str(n["token"], path + ".token");
        if (mode == "valid") {
          t.token = TokenMode::valid;
        } else if (mode == "tampered") {
          t.token = TokenMode::tampered;
        } else {
          r.fail(n["token"], path + ".token", "expected valid or tampered");
        }
      }
      sc.traffic.push_back(std::move(t));
    }
  }

  if (auto gen = root["generate"]) {
    r.keys(gen, "$.generate", {"legit", "fraud", "separation", "spacing"});
    GeneratedSpec g;
    if (gen["legit"]) g.legit = r.get<std::size_t>(gen["legit"], "$.generate.legit", "unsigned integer");
    if (gen["fraud"]) g.fraud = r.get<std::size_t>(gen["fraud"], "$.generate.fraud", "unsigned integer");
    if (gen["separation"]) {
      g.separation = r.real(gen["separation"], "$.generate.separation");
      if (g.separation < 0) r.fail(gen["separation"], "$.generate.separation", "must be >= 0");
    }
    if (gen["spacing"]) g.spacing = r.integer(gen["spacing"], "$.generate.spacing");
    sc.generated = g;
  }
  return sc;
}

// Phase 8 stand-in: answers from a per-session script. A timeout advances
// the logical clock by the full approval window.
class ScriptedApprovals final : public protocol::ApprovalSource {
 public:
  explicit ScriptedApprovals(ManualClock& clock) : clock_(clock) {}
  void script(const std::string& session_id, ApprovalDecision d) { answers_[session_id] = d; }
  ApprovalDecision request(const protocol::ApprovalQuery& q, std::chrono::seconds timeout) override {
    auto it = answers_.find(q.session_id);
    ApprovalDecision d = it == answers_.end() ? ApprovalDecision::timeout : it->second;
    if (d == ApprovalDecision::timeout) clock_.advance(timeout.count());
    return d;
  }

 private:
  ManualClock& clock_;
  std::map<std::string, ApprovalDecision> answers_;
};

std::unique_ptr<protocol::FraudScorer> make_scorer(const ModelSpec& spec,
                                                   const fraud::FraudModel* override_model) {
  if (override_model) return std::make_unique<protocol::ModelScorer>(*override_model);
  switch (spec.kind) {
    case ModelSpec::Kind::none:
      return nullptr;
    case ModelSpec::Kind::constant:
      return std::make_unique<protocol::ConstantScorer>(spec.probability);
    case ModelSpec::Kind::trained: {
      auto data = gen_dataset(spec.seed, spec.n, spec.fraud_rate, spec.separation);
      return std::make_unique<protocol::ModelScorer>(fraud::train(data, spec.train));
    }
    case ModelSpec::Kind::file: {
      std::ifstream in(spec.path);
      if (!in) throw std::runtime_error("cannot read model file " + spec.path);
      std::stringstream buf;
      buf << in.rdbuf();
      return std::make_unique<protocol::ModelScorer>(fraud::FraudModel::parse(buf.str()));
    }
  }
  return nullptr;
}

std::string format_index(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, i);
  return buf;
}

}  // namespace

ScenarioError::ScenarioError(std::string path, std::size_t line, const std::string& message)
    : std::runtime_error(describe(path, line, message)), path_(std::move(path)), line_(line) {}

Scenario parse_scenario(const std::string& yaml, const std::string& source) {
  Reader reader(source);
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(source, 1, "scenario must be a mapping");
  return parse_tree(reader, root);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), 0, "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario sc = parse_scenario(buf.str(), path.string());
  if (sc.model.kind == ModelSpec::Kind::file && std::filesystem::path(sc.model.path).is_relative()) {
    sc.model.path = (path.parent_path() / sc.model.path).string();
  }
  return sc;
}

std::string log_digest(const std::vector<SessionOutcome>& sessions) {
  struct Row {
    std::int64_t ts;
    std::string id;
    int phase;
    std::size_t pos;
    const protocol::Event* ev;
  };
  std::vector<Row> rows;
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      const auto& ev = s.events[i];
      rows.push_back({ev.timestamp, s.id, static_cast<int>(ev.phase), i, &ev});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.ts, a.id, a.phase, a.pos) < std::tie(b.ts, b.id, b.phase, b.pos);
  });
  std::string text;
  for (const auto& r : rows) {
    text += std::to_string(r.ts) + '|' + r.id + '|' + std::to_string(r.phase) + '|' +
            std::string(protocol::actor_name(r.ev->actor)) + '|' +
            (r.ev->counterparty_visible ? "1" : "0");
    for (const auto& [k, v] : r.ev->detail) text += '|' + k + '=' + v;
    text += '\n';
  }
  return hex_encode(crypto::sha256(to_bytes(text)));
}

RunResult run_scenario(const Scenario& sc, std::optional<std::uint64_t> seed_override,
                       const fraud::FraudModel* model) {
  const std::uint64_t seed = seed_override.value_or(sc.seed);
  ManualClock clock(sc.start_time);
  SeededRandom key_rng(derive_seed(seed, "keys"));
  protocol::KeyRing keys = protocol::KeyRing::generate(key_rng, sc.he_bits);
  protocol::EngineConfig config;
  config.hash_iterations = sc.hash_iterations;
  config.approval_timeout = std::chrono::seconds(sc.approval_timeout);

  protocol::PaymentSystem system(keys, config, clock,
                                 std::make_unique<SeededRandom>(derive_seed(seed, "engine")));
  gateway::MemoryLog log(clock);
  system.set_sink([&log](const protocol::LedgerEvent& ev) { log.append(ev); });

  auto scorer = make_scorer(sc.model, model);
  ScriptedApprovals approvals(clock);
  RunResult result;

  auto advance_to = [&clock, &sc](std::int64_t offset) {
    clock.set(std::max(clock.now(), sc.start_time + offset));
  };
  auto decision_for = [&sc](Label label, std::optional<ApprovalDecision> override_decision) {
    if (override_decision) return *override_decision;
    return label == Label::fraud ? sc.approvals.fraud : sc.approvals.legit;
  };
  auto record_issuance = [&result](const protocol::IssuanceResult& issued) {
    if (issued.delivered()) return;
    SessionOutcome o;
    o.id = issued.request_id;
    o.outcome = issued.outcome;
    o.reason = issued.reason;
    o.events = issued.events;
    result.sessions.push_back(std::move(o));
  };
  auto run_payment = [&](ByteView token, const protocol::Counterparty& cp, std::int64_t amount,
                         Label label, std::optional<ApprovalDecision> approval) {
    std::string sid = system.present_card(token, cp, amount);
    approvals.script(sid, decision_for(label, approval));
    protocol::PaymentSession s = system.process(sid, scorer.get(), approvals);
    if (!s.card_id.empty() && system.spent(s.card_id) > system.limit(s.card_id)) {
      result.limit_safe = false;
    }
    SessionOutcome o;
    o.id = sid;
    o.label = label;
    o.outcome = s.outcome;
    o.reason = s.reason;
    o.fraud_score = s.fraud_score;
    o.events = s.events;
    result.sessions.push_back(std::move(o));
  };

  std::map<std::string, std::string> account_of;
  for (const auto& a : sc.accounts) {
    std::string id = system.open_account(a.username, a.password, a.pin, a.balance);
    account_of[a.id] = id;
    if (a.generated_history) {
      SeededRandom hist_rng(derive_seed(seed, "history/" + a.id));
      auto ex = generate_example(hist_rng, false, 0.0, clock.now());
      system.import_history(id, ex.history);
    }
  }

  std::map<std::string, Bytes> tokens;
  std::vector<CardSpec> cards = sc.cards;
  std::stable_sort(cards.begin(), cards.end(),
                   [](const CardSpec& a, const CardSpec& b) { return a.at < b.at; });
  for (const auto& c : cards) {
    advance_to(c.at);
    auto issued = system.issue_card(account_of.at(c.account), c.policy);
    record_issuance(issued);
    if (issued.delivered()) tokens[c.id] = issued.card->token;
  }

  std::vector<TrafficSpec> traffic = sc.traffic;
  std::stable_sort(traffic.begin(), traffic.end(),
                   [](const TrafficSpec& a, const TrafficSpec& b) { return a.at < b.at; });
  for (const auto& t : traffic) {
    advance_to(t.at);
    auto it = tokens.find(t.card);
    if (it == tokens.end()) {
      throw ScenarioError(sc.name + ":$.traffic", 0, "card '" + t.card + "' was never issued");
    }
    Bytes token = it->second;
    if (t.token == TokenMode::tampered) token.back() ^= 0x01;
    run_payment(token, t.counterparty, t.amount, t.label, t.approval);
  }

  if (sc.generated) {
    const GeneratedSpec& g = *sc.generated;
    SeededRandom rng(derive_seed(seed, "traffic"));
    std::vector<Label> labels(g.legit, Label::legit);
    labels.insert(labels.end(), g.fraud, Label::fraud);
    std::shuffle(labels.begin(), labels.end(), rng);
    const std::int64_t base = clock.now() - sc.start_time + g.spacing;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      advance_to(base + static_cast<std::int64_t>(i) * g.spacing);
      const bool is_fraud = labels[i] == Label::fraud;
      auto ex = generate_example(rng, is_fraud, g.separation, clock.now());
      std::string username = format_index("gen", i + 1);
      std::string password = hex_encode(rng.bytes(12));
      std::string pin = std::to_string(100000 + rng.uniform(900000));
      std::string account = system.open_account(username, password, pin, 1'000'000'000);
      system.import_history(account, ex.history);
      protocol::CardPolicy policy{protocol::Usage::multi_use, 1'000'000'000, 30 * 86400,
                                  {system.config().default_network}};
      auto issued = system.issue_card(account, policy);
      record_issuance(issued);
      if (!issued.delivered()) continue;
      protocol::Counterparty cp;
      cp.kind = ex.candidate.channel == fraud::Channel::atm ? protocol::CounterpartyKind::atm
                                                            : protocol::CounterpartyKind::merchant;
      cp.id = (cp.kind == protocol::CounterpartyKind::atm ? "atm-" : "m-") + ex.candidate.category;
      cp.category = ex.candidate.category;
      run_payment(issued.card->token, cp, ex.candidate.amount_minor, labels[i], std::nullopt);
    }
  }

  RunMetrics& m = result.metrics;
  m.scenario = sc.name;
  m.seed = seed;
  m.sessions = result.sessions.size();
  for (auto o : protocol::kTerminalOutcomes) m.outcomes[o] = 0;
  for (const auto& s : result.sessions) {
    ++m.outcomes[s.outcome];
    if (!s.label) continue;
    const bool flagged = s.outcome == protocol::Outcome::fraudulent_transaction;
    if (*s.label == Label::fraud) {
      flagged ? ++m.confusion.true_positive : ++m.confusion.false_negative;
    } else {
      flagged ? ++m.confusion.false_positive : ++m.confusion.true_negative;
    }
  }
  m.conservation_residual = system.conservation().residual();
  m.log_digest = log_digest(result.sessions);
  m.state_digest = system.state_digest();

  result.log_lines = log.lines();
  auto records = gateway::parse_log(log.text());
  std::vector<protocol::LedgerEvent> events;
  events.reserve(records.size());
  for (auto& r : records) events.push_back(std::move(r.event));
  m.replay_digest = protocol::PaymentSystem::replay(keys, config, clock, events)->state_digest();

  result.pans = system.registry_active();
  auto retired = system.registry_retired();
  result.pans.insert(result.pans.end(), retired.begin(), retired.end());
  return result;
}

}  // namespace cardless::sim
