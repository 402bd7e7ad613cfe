#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cardless/gateway/event_log.hpp"
#include "cardless/gateway/http_api.hpp"
#include "cardless/sim/dataset.hpp"

namespace {

using namespace cardless;

gateway::GatewayServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->interrupt();
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Keys live next to the log, readable by the owner only.
protocol::KeyRing load_or_create_keys(const std::filesystem::path& path, RandomSource& rng,
                                      unsigned he_bits) {
  if (std::filesystem::exists(path)) {
    return protocol::keyring_from_json(nlohmann::json::parse(slurp(path)));
  }
  auto keys = protocol::KeyRing::generate(rng, he_bits);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << protocol::keyring_to_json(keys).dump(2) << '\n';
  }
  std::filesystem::permissions(path, std::filesystem::perms::owner_read |
                                         std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::replace);
  return keys;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardless payment gateway"};
  std::string listen = "127.0.0.1:8080";
  std::string log_path = "cardless-events.jsonl";
  std::string model_path;
  std::optional<std::uint64_t> seed;
  int approval_timeout = 120;
  unsigned he_bits = 2048;
  int hash_iterations = gateway::kDefaultHashIterations;
  app.add_option("--listen", listen, "Address to serve on, host:port");
  app.add_option("--log", log_path, "Append-only event log (keys are kept in <log>.keys)");
  app.add_option("--model", model_path, "Fraud model file; trained at startup when absent")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Deterministic mode: seeds keys, card numbers and model data");
  app.add_option("--approval-timeout", approval_timeout, "Seconds to wait for cardholder approval")
      ->check(CLI::PositiveNumber);
  app.add_option("--he-bits", he_bits, "Homomorphic key size")->check(CLI::IsMember({256u, 512u, 1024u, 2048u}));
  app.add_option("--hash-iterations", hash_iterations, "PBKDF2 iterations for new credentials")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("--listen expects host:port");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    std::unique_ptr<RandomSource> key_rng, engine_rng;
    if (seed) {
      key_rng = std::make_unique<SeededRandom>(derive_seed(*seed, "keys"));
      engine_rng = std::make_unique<SeededRandom>(derive_seed(*seed, "engine"));
    } else {
      key_rng = std::make_unique<SystemRandom>();
      engine_rng = std::make_unique<SystemRandom>();
    }

    SystemClock clock;
    const std::filesystem::path log_file(log_path);
    auto keys = load_or_create_keys(log_file.string() + ".keys", *key_rng, he_bits);

    protocol::EngineConfig config;
    config.approval_timeout = std::chrono::seconds(approval_timeout);
    config.hash_iterations = hash_iterations;

    auto records = gateway::read_log(log_file);
    protocol::PaymentSystem system(keys, config, clock, std::move(engine_rng));
    for (const auto& r : records) system.apply(r.event);
    const std::uint64_t last_seq = records.empty() ? 0 : records.back().seq;
    gateway::EventLog log(log_file, clock, last_seq);
    system.set_sink([&log](const protocol::LedgerEvent& ev) { log.append(ev); });
    std::cerr << "replayed " << records.size() << " events, state " << system.state_digest() << '\n';

    if (records.empty()) {
      auto account = system.open_account("demo", "demo-password", "246810", 500000);
      protocol::CardPolicy policy{protocol::Usage::multi_use, 100000, 30 * 86400,
                                  {config.default_network}};
      system.issue_card(account, policy);
      std::cerr << "seeded demo account 'demo'\n";
    }

    std::shared_ptr<const protocol::FraudScorer> scorer;
    if (!model_path.empty()) {
      scorer = std::make_shared<protocol::ModelScorer>(fraud::FraudModel::parse(slurp(model_path)));
    } else {
      auto data = sim::gen_dataset(seed.value_or(7), 10000, 0.1, 2.0);
      scorer = std::make_shared<protocol::ModelScorer>(fraud::train(data, {0.5, 1000, 1e-4, 0.5}));
      std::cerr << "trained fraud model on " << data.size() << " generated rows\n";
    }

    gateway::GatewayServer server(system, scorer, clock);
    if (server.bind(host, port) < 0) throw std::runtime_error("cannot bind " + listen);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << listen << '\n';
    server.run();
    g_server = nullptr;
    server.stop();
  } catch (const gateway::LogError& e) {
    std::cerr << "event log replay failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
