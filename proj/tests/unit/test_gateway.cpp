#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cardless/common/clock.hpp"
#include "cardless/gateway/approvals.hpp"
#include "cardless/gateway/credentials.hpp"
#include "cardless/gateway/event_log.hpp"
#include "cardless/gateway/http_api.hpp"
#include "cardless/gateway/sessions.hpp"
#include "cardless/protocol/engine.hpp"

using namespace cardless;
using namespace cardless::gateway;
using nlohmann::json;
using protocol::ApprovalDecision;
using namespace std::chrono_literals;

namespace {

constexpr std::int64_t kStart = 1'700'000'000;

const protocol::KeyRing& shared_keys() {
  static const protocol::KeyRing keys = [] {
    SeededRandom rng(6060);
    return protocol::KeyRing::generate(rng, 256);
  }();
  return keys;
}

protocol::ApprovalQuery query(const std::string& session, const std::string& account) {
  protocol::ApprovalQuery q;
  q.session_id = session;
  q.account_id = account;
  q.amount_minor = 100;
  return q;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cardless-tests";
  std::filesystem::create_directories(dir);
  auto p = dir / (name + "-" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("credential records") {
  SeededRandom rng(1);
  auto rec = make_credential_record("alice", "s3cret-pass", "246810", 1000, rng);
  CHECK(rec.username == "alice");
  CHECK(rec.password_digest.size() == kDigestBytes);
  CHECK(rec.pin_digest.size() == kDigestBytes);
  CHECK(verify_user({"alice", "s3cret-pass"}, &rec) == Verification::verified);
  CHECK(verify_user({"alice", "s3cret-pasS"}, &rec) == Verification::rejected);
  CHECK(verify_user({"bob", "s3cret-pass"}, &rec) == Verification::rejected);
  CHECK(verify_user({"bob", "s3cret-pass"}, nullptr, 1000) == Verification::rejected);
  CHECK(verify_pin(rec, "246810"));
  CHECK_FALSE(verify_pin(rec, "246811"));
  CHECK_FALSE(verify_pin(rec, "24681"));
  CHECK(is_valid_pin("000000"));
  CHECK_FALSE(is_valid_pin("12345a"));
  CHECK_FALSE(is_valid_pin("1234567"));
  CHECK_THROWS_AS(make_credential_record("", "pw", "123456", 1000, rng), std::invalid_argument);
  CHECK_THROWS_AS(make_credential_record("u", "", "123456", 1000, rng), std::invalid_argument);
  CHECK_THROWS_AS(make_credential_record("u", "pw", "12 456", 1000, rng), std::invalid_argument);

  // Digests are salted: same secrets, different records.
  auto again = make_credential_record("alice", "s3cret-pass", "246810", 1000, rng);
  CHECK(again.salt != rec.salt);
  CHECK(again.password_digest != rec.password_digest);
  // Nothing in the record spells out a secret.
  const std::string raw = to_string(rec.password_digest) + to_string(rec.pin_digest);
  CHECK(raw.find("s3cret-pass") == std::string::npos);
  CHECK(raw.find("246810") == std::string::npos);
}

TEST_CASE("bearer sessions") {
  ManualClock clock(kStart);
  SessionStore store(clock, {std::chrono::seconds(1800), 5});
  const std::string token = store.open("acct-0001");
  CHECK(std::regex_match(token, std::regex("^[A-Za-z0-9_-]{43}$")));
  CHECK(store.open("acct-0001") != token);

  auto ok = store.authorize(token);
  CHECK(ok.status == AuthStatus::ok);
  CHECK(ok.account_id == "acct-0001");
  CHECK(store.authorize("forged-token").status == AuthStatus::unknown);
  CHECK(store.authorize("").status == AuthStatus::unknown);

  clock.advance(1799);
  CHECK(store.authorize(token).status == AuthStatus::ok);  // refreshes the idle timer
  clock.advance(1799);
  CHECK(store.authorize(token).status == AuthStatus::ok);
  CHECK(store.authorize(token).status == AuthStatus::ok);
  CHECK(store.authorize(token).status == AuthStatus::ok);
  CHECK(store.authorize(token).status == AuthStatus::over_cap);

  const std::string idle = store.open("acct-0002");
  clock.advance(1801);
  CHECK(store.authorize(idle).status == AuthStatus::expired);
  CHECK(store.authorize(idle).status == AuthStatus::unknown);

  const std::string revoked = store.open("acct-0003");
  store.revoke(revoked);
  CHECK(store.authorize(revoked).status == AuthStatus::unknown);
}

TEST_CASE("approval broker") {
  ApprovalBroker broker;

  SUBCASE("decision reaches the waiting adjudication") {
    auto waiting = std::async(std::launch::async, [&] { return broker.request(query("s1", "a1"), 10s); });
    auto pending = broker.wait_pending("a1", 5000ms);
    REQUIRE(pending.size() == 1);
    CHECK(pending[0].session_id == "s1");
    CHECK(broker.pending("a2").empty());
    CHECK(broker.resolve("a2", "s1", ApprovalDecision::approve) == Resolution::not_found);
    CHECK(broker.resolve("a1", "s1", ApprovalDecision::decline) == Resolution::accepted);
    CHECK(waiting.get() == ApprovalDecision::decline);
    CHECK(broker.resolve("a1", "s1", ApprovalDecision::approve) == Resolution::already_resolved);
    CHECK(broker.resolve("a2", "s1", ApprovalDecision::approve) == Resolution::not_found);
    CHECK(broker.resolve("a1", "s9", ApprovalDecision::approve) == Resolution::not_found);
    // A closed session never opens a second query.
    CHECK(broker.request(query("s1", "a1"), 10s) == ApprovalDecision::timeout);
  }
  SUBCASE("concurrent duplicate resolutions: exactly one wins") {
    for (int round = 0; round < 50; ++round) {
      const std::string sid = "race-" + std::to_string(round);
      auto waiting = std::async(std::launch::async, [&] { return broker.request(query(sid, "a1"), 10s); });
      REQUIRE(broker.wait_pending("a1", 5000ms).size() == 1);
      std::atomic<int> accepted{0}, rejected{0};
      std::vector<std::thread> threads;
      for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
          auto d = t % 2 ? ApprovalDecision::approve : ApprovalDecision::decline;
          auto r = broker.resolve("a1", sid, d);
          if (r == Resolution::accepted) ++accepted;
          if (r == Resolution::already_resolved) ++rejected;
        });
      }
      for (auto& th : threads) th.join();
      waiting.get();
      REQUIRE(accepted.load() == 1);
      REQUIRE(rejected.load() == 7);
    }
  }
  SUBCASE("timeout") {
    auto t0 = std::chrono::steady_clock::now();
    CHECK(broker.request(query("s2", "a1"), 1s) == ApprovalDecision::timeout);
    CHECK(std::chrono::steady_clock::now() - t0 >= 900ms);
    CHECK(broker.resolve("a1", "s2", ApprovalDecision::approve) == Resolution::already_resolved);
  }
  SUBCASE("long poll returns empty after the hold") {
    auto t0 = std::chrono::steady_clock::now();
    CHECK(broker.wait_pending("a1", 200ms).empty());
    CHECK(std::chrono::steady_clock::now() - t0 >= 150ms);
  }
  SUBCASE("shutdown releases waiters") {
    auto waiting = std::async(std::launch::async, [&] { return broker.request(query("s3", "a1"), 60s); });
    REQUIRE(broker.wait_pending("a1", 5000ms).size() == 1);
    broker.shutdown();
    CHECK(waiting.get() == ApprovalDecision::timeout);
    CHECK(broker.wait_pending("a1", 60000ms).empty());
  }
}

TEST_CASE("event log format") {
  ManualClock clock(kStart);
  const auto path = temp_path("events.jsonl");

  SUBCASE("missing and empty logs") {
    CHECK(read_log(path).empty());
    CHECK(parse_log("").empty());
    CHECK(parse_log("\n\n").empty());
  }
  SUBCASE("append, read back, continue numbering") {
    {
      EventLog log(path, clock);
      CHECK(log.append(protocol::ledger::HoldPlaced{"sess-000001"}) == 1);
      clock.advance(5);
      CHECK(log.append(protocol::ledger::SessionApproved{"sess-000001"}) == 2);
    }
    auto records = read_log(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].seq == 1);
    CHECK(records[1].timestamp == kStart + 5);
    CHECK(protocol::event_kind(records[1].event) == "session_approved");
    {
      EventLog log(path, clock, records.back().seq);
      CHECK(log.append(protocol::ledger::HoldReleased{"sess-000001"}) == 3);
    }
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    auto j = json::parse(first);
    CHECK(j.at("seq") == 1);
    CHECK(j.at("timestamp") == kStart);
    CHECK(j.at("kind") == "hold_placed");
    CHECK(j.at("payload").at("session") == "sess-000001");
    CHECK(read_log(path).size() == 3);
  }
  SUBCASE("truncated final line names the last good seq") {
    std::string text;
    for (std::uint64_t s = 1; s <= 3; ++s) {
      text += format_record({s, kStart, protocol::ledger::HoldPlaced{"sess-" + std::to_string(s)}}) + "\n";
    }
    const std::string cut = text.substr(0, text.size() - 12);
    try {
      parse_log(cut);
      FAIL("truncation not detected");
    } catch (const LogError& e) {
      CHECK(e.line() == 3);
      CHECK(e.last_good_seq() == 2);
      CHECK(std::string(e.what()) == "truncated record at line 3 after seq 2");
    }
  }
  SUBCASE("corrupt or out-of-order lines halt with their line number") {
    const std::string good = format_record({1, kStart, protocol::ledger::HoldPlaced{"a"}}) + "\n";
    try {
      parse_log(good + "{not json}\n" + good);
      FAIL("corruption not detected");
    } catch (const LogError& e) {
      CHECK(e.line() == 2);
      CHECK(e.last_good_seq() == 1);
    }
    try {
      parse_log(good + good);
      FAIL("repeated seq accepted");
    } catch (const LogError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_log(R"({"seq":1,"timestamp":0,"kind":"nonsense","payload":{}})" "\n"), LogError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("persisted log replays to the live state") {
  ManualClock clock(kStart);
  const auto path = temp_path("replay.jsonl");
  protocol::EngineConfig config;
  config.hash_iterations = 1000;
  std::string live_digest;
  std::string account;
  {
    protocol::PaymentSystem live(shared_keys(), config, clock, std::make_unique<SeededRandom>(3));
    EventLog log(path, clock);
    live.set_sink([&log](const protocol::LedgerEvent& ev) { log.append(ev); });
    account = live.open_account("alice", "pw-alice", "135790", 10000);
    auto card = live.issue_card(account, {protocol::Usage::one_time, 5000, 3600, {1}});
    protocol::ConstantScorer scorer(0.1);
    struct Yes final : protocol::ApprovalSource {
      ApprovalDecision request(const protocol::ApprovalQuery&, std::chrono::seconds) override {
        return ApprovalDecision::approve;
      }
    } yes;
    protocol::Counterparty shop{protocol::CounterpartyKind::merchant, "m-1", "books"};
    clock.advance(30);
    auto s = live.process(live.present_card(card.card->token, shop, 2500), &scorer, yes);
    REQUIRE(s.outcome == protocol::Outcome::payment_completed);
    live_digest = live.state_digest();
  }
  auto records = read_log(path);
  std::vector<protocol::LedgerEvent> events;
  for (auto& r : records) events.push_back(r.event);
  auto rebuilt = protocol::PaymentSystem::replay(shared_keys(), config, clock, events);
  CHECK(rebuilt->state_digest() == live_digest);
  CHECK(rebuilt->balance(account) == 7500);
  CHECK(rebuilt->registry_retired().size() == 1);
  CHECK(rebuilt->registry_active().empty());

  // No cleartext PAN or secret in the persisted text.
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  CHECK(text.find(rebuilt->registry_retired()[0]) == std::string::npos);
  CHECK(text.find("pw-alice") == std::string::npos);
  CHECK(text.find("135790") == std::string::npos);
  std::filesystem::remove(path);
}

namespace {

// Gateway on an ephemeral loopback port with two accounts.
struct Server {
  ManualClock clock{kStart};
  std::unique_ptr<protocol::PaymentSystem> system;
  std::unique_ptr<GatewayServer> gateway;
  int port = -1;
  std::vector<std::string> bodies;  // every response body seen by the client helpers
  std::mutex bodies_mu;

  explicit Server(GatewayOptions options = {}, std::chrono::seconds approval_timeout = 30s) {
    protocol::EngineConfig config;
    config.hash_iterations = 1000;
    config.approval_timeout = approval_timeout;
    system = std::make_unique<protocol::PaymentSystem>(shared_keys(), config, clock,
                                                       std::make_unique<SeededRandom>(11));
    system->open_account("alice", "alice-password", "135790", 100000);
    system->open_account("bob", "bob-password", "864209", 100000);
    options.worker_threads = 16;
    gateway = std::make_unique<GatewayServer>(
        *system, std::make_shared<protocol::ConstantScorer>(0.2), clock, options);
    port = gateway->bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    gateway->start();
  }
  ~Server() { gateway->stop(); }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }

  struct Reply {
    int status = 0;
    json body;
    std::string raw;
  };

  Reply record(const httplib::Result& res) {
    REQUIRE(res);
    std::lock_guard lock(bodies_mu);
    bodies.push_back(res->body);
    return {res->status, json::parse(res->body, nullptr, false), res->body};
  }

  Reply post(const std::string& path, const json& body, const std::string& token = "") {
    auto c = client();
    httplib::Headers h;
    if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
    return record(c.Post(path, h, body.dump(), "application/json"));
  }

  Reply get(const std::string& path, const std::string& token = "") {
    auto c = client();
    httplib::Headers h;
    if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
    return record(c.Get(path, h));
  }

  std::string login(const std::string& user, const std::string& password) {
    auto r = post("/api/login", {{"username", user}, {"password", password}});
    REQUIRE(r.status == 200);
    return r.body.at("token").get<std::string>();
  }

  // Polls the counterparty view until the session is terminal.
  json wait_terminal(const std::string& sid) {
    for (int i = 0; i < 500; ++i) {
      auto r = get("/sim/sessions/" + sid);
      if (r.body.at("outcome") != "pending") return r.body;
      std::this_thread::sleep_for(10ms);
    }
    FAIL("session never finished");
    return {};
  }
};

}  // namespace

TEST_CASE("HTTP: login and authorization") {
  Server s;
  auto wrong = s.post("/api/login", {{"username", "alice"}, {"password", "nope"}});
  auto unknown = s.post("/api/login", {{"username", "nobody"}, {"password", "nope"}});
  CHECK(wrong.status == 401);
  CHECK(unknown.status == 401);
  CHECK(wrong.raw == unknown.raw);
  CHECK(s.post("/api/login", json::array()).status == 400);

  const std::string token = s.login("alice", "alice-password");
  CHECK(s.get("/api/cards", token).status == 200);
  CHECK(s.get("/api/cards").status == 401);
  CHECK(s.get("/api/cards", "forged" + token.substr(6)).status == 401);
  CHECK(s.get("/api/approvals?wait=0", token).status == 200);
  CHECK(s.get("/api/approvals?wait=soon", token).status == 400);

  s.clock.advance(31 * 60);
  auto expired = s.get("/api/cards", token);
  CHECK(expired.status == 401);
  CHECK(expired.body.at("error") == "unauthorized");
}

TEST_CASE("HTTP: request cap") {
  GatewayOptions options;
  options.limits.request_cap = 3;
  Server s(options);
  const std::string token = s.login("alice", "alice-password");
  for (int i = 0; i < 3; ++i) CHECK(s.get("/api/cards", token).status == 200);
  CHECK(s.get("/api/cards", token).status == 429);
}

TEST_CASE("HTTP: card generation") {
  Server s;
  const std::string token = s.login("alice", "alice-password");
  auto created = s.post("/api/cards", {{"usage", "one_time"}, {"limit", 10000}, {"valid_for_seconds", 86400}}, token);
  REQUIRE(created.status == 201);
  const std::string card_id = created.body.at("card_id");
  const std::string qr = created.body.at("qr_payload");
  CHECK(qr.rfind("cardless://v1/", 0) == 0);

  const std::string account = *s.system->account_of_user("alice");
  auto sealed = crypto::SealedCard::parse(base64_decode(created.body.at("sealed_card").get<std::string>()));
  auto opened = json::parse(to_string(crypto::open_card(sealed, s.system->user_delivery_key(account), to_bytes(card_id))));
  const std::string pan = opened.at("pan");
  CHECK(card::luhn_validate(pan));
  CHECK(opened.at("qr_payload") == qr);

  auto listed = s.get("/api/cards", token);
  REQUIRE(listed.body.at("cards").size() == 1);
  const auto& summary = listed.body.at("cards")[0];
  CHECK(summary.at("masked_pan") == pan.substr(0, 6) + "******" + pan.substr(12));
  CHECK(summary.at("usage") == "one_time");
  CHECK(summary.at("limit") == 10000);
  CHECK(summary.at("spent") == 0);
  CHECK(summary.at("state") == "active");

  auto empty = s.post("/api/cards", json::object(), token);
  CHECK(empty.status == 422);
  CHECK(empty.body.at("outcome") == "Virtual card generate failed!");
  CHECK(empty.body.at("reason") == "invalid_policy");
  CHECK(s.post("/api/cards", {{"usage", "sometimes"}, {"limit", 1}, {"valid_for_seconds", 1}}, token).status == 400);
  CHECK(s.post("/api/cards", {{"usage", "one_time"}, {"limit", "lots"}}, token).status == 400);

  // Bob sees none of alice's cards.
  const std::string bob = s.login("bob", "bob-password");
  CHECK(s.get("/api/cards", bob).body.at("cards").empty());

  for (const auto& b : s.bodies) CHECK(b.find(pan) == std::string::npos);
}

TEST_CASE("HTTP: purchase approved and declined through the inbox") {
  Server s;
  const std::string token = s.login("alice", "alice-password");
  auto created = s.post("/api/cards", {{"usage", "multi_use"}, {"limit", 10000}, {"valid_for_seconds", 86400}}, token);
  REQUIRE(created.status == 201);
  const std::string qr = created.body.at("qr_payload");

  auto present = [&](std::int64_t amount) {
    auto r = s.post("/sim/present", {{"qr_payload", qr},
                                     {"counterparty", {{"kind", "merchant"}, {"id", "m-demo"}, {"category", "books"}}},
                                     {"amount", amount}});
    REQUIRE(r.status == 202);
    return r.body.at("session_id").get<std::string>();
  };

  // Approve.
  auto t0 = std::chrono::steady_clock::now();
  const std::string sid = present(2500);
  auto inbox = s.get("/api/approvals?wait=10", token);
  CHECK(std::chrono::steady_clock::now() - t0 < 1s);
  REQUIRE(inbox.body.at("approvals").size() == 1);
  const auto& pending = inbox.body.at("approvals")[0];
  CHECK(pending.at("session_id") == sid);
  CHECK(pending.at("amount") == 2500);
  CHECK(pending.at("counterparty").at("id") == "m-demo");

  const std::string bob = s.login("bob", "bob-password");
  CHECK(s.get("/api/approvals?wait=0", bob).body.at("approvals").empty());
  CHECK(s.post("/api/approvals/" + sid, {{"decision", "approve"}, {"pin", "864209"}}, bob).status == 404);
  CHECK(s.post("/api/approvals/" + sid, {{"decision", "approve"}, {"pin", "000000"}}, token).status == 403);
  CHECK(s.post("/api/approvals/" + sid, {{"decision", "maybe"}, {"pin", "135790"}}, token).status == 400);
  CHECK(s.post("/api/approvals/" + sid, {{"decision", "approve"}}, token).status == 400);
  auto ack = s.post("/api/approvals/" + sid, {{"decision", "approve"}, {"pin", "135790"}}, token);
  CHECK(ack.status == 200);
  CHECK(ack.body.at("status") == "acknowledged");
  CHECK(s.post("/api/approvals/" + sid, {{"decision", "decline"}, {"pin", "135790"}}, token).status == 409);
  CHECK(s.post("/api/approvals/sess-424242", {{"decision", "approve"}, {"pin", "135790"}}, token).status == 404);

  auto done = s.wait_terminal(sid);
  CHECK(done.at("outcome") == "Payment completed successfully!");
  for (const auto& e : done.at("events")) CHECK(e.at("visible") == true);

  auto trace = s.get("/api/sessions/" + sid + "/trace", token);
  REQUIRE(trace.status == 200);
  std::vector<int> phases;
  for (const auto& e : trace.body.at("events")) phases.push_back(e.at("phase"));
  CHECK(phases == std::vector<int>{6, 7, 8, 9, 10, 11, 12});
  CHECK(s.get("/api/sessions/" + sid + "/trace", bob).status == 404);
  CHECK(s.get("/api/sessions/" + sid + "/trace").status == 401);

  // Decline.
  const std::string sid2 = present(1000);
  REQUIRE(s.get("/api/approvals?wait=10", token).body.at("approvals").size() == 1);
  CHECK(s.post("/api/approvals/" + sid2, {{"decision", "decline"}, {"pin", "135790"}}, token).status == 200);
  CHECK(s.wait_terminal(sid2).at("outcome") == "User approval failed!");

  auto cards = s.get("/api/cards", token);
  CHECK(cards.body.at("cards")[0].at("spent") == 2500);

  // Bad presentations.
  CHECK(s.post("/sim/present", {{"qr_payload", "cardless://v1/AAAA"}, {"counterparty", "m-x"}, {"amount", 5}}).status == 202);
  CHECK(s.post("/sim/present", {{"qr_payload", "nope"}, {"counterparty", "m-x"}, {"amount", 5}}).status == 400);
  CHECK(s.post("/sim/present", {{"qr_payload", qr}, {"counterparty", "m-x"}, {"amount", 0}}).status == 400);
  CHECK(s.get("/sim/sessions/sess-999999").status == 404);

  const std::string account = *s.system->account_of_user("alice");
  std::vector<std::string> pans = s.system->registry_active();
  for (const auto& b : s.bodies) {
    for (const auto& pan : pans) CHECK(b.find(pan) == std::string::npos);
    CHECK(b.find("alice-password") == std::string::npos);
    CHECK(b.find("135790") == std::string::npos);
  }
}

TEST_CASE("HTTP: duplicate approvals race, exactly one is acknowledged") {
  Server s;
  const std::string token = s.login("alice", "alice-password");
  auto created = s.post("/api/cards", {{"usage", "multi_use"}, {"limit", 100000}, {"valid_for_seconds", 86400}}, token);
  const std::string qr = created.body.at("qr_payload");
  for (int round = 0; round < 5; ++round) {
    auto p = s.post("/sim/present", {{"qr_payload", qr}, {"counterparty", "m-race"}, {"amount", 100}});
    const std::string sid = p.body.at("session_id");
    REQUIRE(s.get("/api/approvals?wait=10", token).body.at("approvals").size() == 1);
    std::vector<std::future<int>> calls;
    for (int t = 0; t < 6; ++t) {
      calls.push_back(std::async(std::launch::async, [&, t] {
        return s.post("/api/approvals/" + sid,
                      {{"decision", t % 2 ? "approve" : "decline"}, {"pin", "135790"}}, token)
            .status;
      }));
    }
    int ok = 0, conflict = 0;
    for (auto& c : calls) {
      const int status = c.get();
      ok += status == 200;
      conflict += status == 409 || status == 404;
    }
    CHECK(ok == 1);
    CHECK(conflict == 5);
    s.wait_terminal(sid);
  }
  CHECK(s.system->conservation().residual() == 0);
}

TEST_CASE("HTTP: unanswered approval times out") {
  Server s({}, 1s);
  const std::string token = s.login("alice", "alice-password");
  auto created = s.post("/api/cards", {{"usage", "one_time"}, {"limit", 5000}, {"valid_for_seconds", 86400}}, token);
  auto p = s.post("/sim/present", {{"qr_payload", created.body.at("qr_payload")}, {"counterparty", "m-slow"}, {"amount", 100}});
  const std::string sid = p.body.at("session_id");
  auto done = s.wait_terminal(sid);
  CHECK(done.at("outcome") == "User approval failed!");
  auto trace = s.get("/api/sessions/" + sid + "/trace", token);
  CHECK(trace.body.at("reason") == "approval_timeout");
  CHECK(s.post("/api/approvals/" + sid, {{"decision", "approve"}, {"pin", "135790"}}, token).status == 409);
}

namespace {

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// The gateway binary as a child process.
struct Child {
  pid_t pid = -1;
  explicit Child(std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
    REQUIRE(posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ) == 0);
    posix_spawn_file_actions_destroy(&actions);
  }
  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;
  ~Child() {
    if (pid > 0) stop();
  }
  int stop() {
    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
    pid = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

bool wait_listening(httplib::Client& c) {
  for (int i = 0; i < 300; ++i) {
    if (auto r = c.Get("/sim/sessions/none")) return true;
    std::this_thread::sleep_for(50ms);
  }
  return false;
}

}  // namespace

TEST_CASE("gateway binary serves, persists and replays") {
  const auto log = temp_path("gateway.jsonl");
  std::filesystem::remove(log.string() + ".keys");
  const int port = free_port();
  const std::vector<std::string> args = {GATEWAY_BIN, "--listen", "127.0.0.1:" + std::to_string(port),
                                         "--log", log.string(), "--seed", "5", "--he-bits", "256",
                                         "--hash-iterations", "1000", "--approval-timeout", "2"};
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(30, 0);
  auto login = [&c] {
    auto r = c.Post("/api/login", R"({"username":"demo","password":"demo-password"})", "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    return httplib::Headers{{"Authorization", "Bearer " + json::parse(r->body).at("token").get<std::string>()}};
  };

  std::string cards_before;
  {
    Child gw(args);
    REQUIRE(wait_listening(c));
    auto auth = login();
    auto created = c.Post("/api/cards", auth, R"({"usage":"one_time","limit":2000,"valid_for_seconds":600})",
                          "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    auto cards = c.Get("/api/cards", auth);
    REQUIRE(cards);
    CHECK(json::parse(cards->body).at("cards").size() == 2);  // seeded demo card plus the new one
    cards_before = cards->body;
    CHECK(gw.stop() == 0);
  }
  CHECK((std::filesystem::status(log.string() + ".keys").permissions() & std::filesystem::perms::group_all) ==
        std::filesystem::perms::none);
  const auto records = read_log(log);
  CHECK(records.size() > 0);
  {
    Child gw(args);
    REQUIRE(wait_listening(c));
    auto cards = c.Get("/api/cards", login());
    REQUIRE(cards);
    CHECK(cards->body == cards_before);
    CHECK(gw.stop() == 0);
  }
  CHECK(read_log(log).size() == records.size());

  // A torn final record stops startup.
  {
    std::ofstream out(log, std::ios::app);
    out << R"({"seq":99999,"timestamp":1)";
  }
  Child broken(args);
  int status = 0;
  ::waitpid(broken.pid, &status, 0);
  broken.pid = -1;
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 1);

  std::filesystem::remove(log);
  std::filesystem::remove(log.string() + ".keys");
}
