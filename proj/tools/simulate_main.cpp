#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cardless/fraud/model.hpp"
#include "cardless/sim/dataset.hpp"
#include "cardless/sim/report.hpp"
#include "cardless/sim/scenario.hpp"

namespace {

using namespace cardless;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic driver for the cardless payment protocol"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute a scenario file and report metrics");
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string model_path;
  std::string report = "text";
  std::string out_dir;
  run->add_option("scenario", scenario_path, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--model", model_path, "Fraud model file (overrides the scenario model)")
      ->check(CLI::ExistingFile);
  run->add_option("--report", report, "Report format")->check(CLI::IsMember({"text", "csv"}));
  run->add_option("--out", out_dir, "Directory for report, per-session CSV and event log");

  auto* gen = app.add_subcommand("gen-data", "Generate a labeled feature dataset (CSV)");
  std::uint64_t gen_seed = 0;
  std::size_t gen_n = 0;
  double fraud_rate = 0.1;
  double separation = 2.0;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "Generator seed")->required();
  gen->add_option("--n", gen_n, "Number of rows")->required();
  gen->add_option("--fraud-rate", fraud_rate, "Fraction of fraud rows")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--separation", separation, "Fraud shift in standard deviations")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train a logistic-regression fraud model");
  std::string data_path;
  std::string model_out;
  fraud::TrainOptions opts;
  train->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--lr", opts.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  train->add_option("--epochs", opts.epochs, "Full-batch epochs")->check(CLI::PositiveNumber);
  train->add_option("--l2", opts.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  train->add_option("--threshold", opts.threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));
  train->add_option("--out", model_out, "Model output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto scenario = sim::load_scenario(scenario_path);
      std::optional<fraud::FraudModel> model;
      if (!model_path.empty()) model = fraud::FraudModel::parse(slurp(model_path));
      auto result = sim::run_scenario(scenario, seed, model ? &*model : nullptr);
      auto format = report == "csv" ? sim::ReportFormat::csv : sim::ReportFormat::text;
      std::cout << sim::render_report(result.metrics, format);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        write_file(dir / "report.txt", sim::render_report(result.metrics, sim::ReportFormat::text));
        write_file(dir / "report.csv", sim::render_report(result.metrics, sim::ReportFormat::csv));
        write_file(dir / "sessions.csv", sim::render_sessions_csv(result.sessions));
        std::string log;
        for (const auto& line : result.log_lines) log += line + '\n';
        write_file(dir / "events.jsonl", log);
      }
      return result.metrics.conservation_residual == 0 ? 0 : 2;
    }
    if (*gen) {
      write_file(gen_out, fraud::dataset_to_csv(sim::gen_dataset(gen_seed, gen_n, fraud_rate, separation)));
      return 0;
    }
    if (*train) {
      auto data = fraud::dataset_from_csv(slurp(data_path));
      auto model = fraud::train(data, opts);
      write_file(model_out, model.serialize());
      auto metrics = fraud::evaluate(model, data);
      std::cout << "rows " << data.size() << '\n'
                << "training_accuracy " << metrics.accuracy << '\n'
                << "training_recall " << metrics.recall << '\n';
      if (metrics.auc) std::cout << "training_auc " << *metrics.auc << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
