#include "cardless/sim/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace cardless::sim {
namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + '\n';
}

}  // namespace

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "scenario",       "seed",
      "sessions",       "true_positive",
      "false_positive", "true_negative",
      "false_negative", "precision",
      "recall",         "payment_completed",
      "user_approval_failed", "fraudulent_transaction",
      "fraud_detection_failed", "card_generate_failed",
      "conservation_residual", "log_digest",
      "state_digest",
  };
  return columns;
}

std::vector<std::string> report_values(const RunMetrics& m) {
  using protocol::Outcome;
  auto count = [&m](Outcome o) {
    auto it = m.outcomes.find(o);
    return std::to_string(it == m.outcomes.end() ? 0 : it->second);
  };
  return {
      m.scenario,
      std::to_string(m.seed),
      std::to_string(m.sessions),
      std::to_string(m.confusion.true_positive),
      std::to_string(m.confusion.false_positive),
      std::to_string(m.confusion.true_negative),
      std::to_string(m.confusion.false_negative),
      fixed6(m.confusion.precision()),
      fixed6(m.confusion.recall()),
      count(Outcome::payment_completed),
      count(Outcome::user_approval_failed),
      count(Outcome::fraudulent_transaction),
      count(Outcome::fraud_detection_failed),
      count(Outcome::card_generate_failed),
      std::to_string(m.conservation_residual),
      m.log_digest,
      m.state_digest,
  };
}

std::string render_report(const RunMetrics& metrics, ReportFormat format) {
  const auto& cols = report_columns();
  if (format == ReportFormat::csv) {
    std::string out = join(cols);
    if (metrics.sessions > 0) out += join(report_values(metrics));
    return out;
  }
  std::ostringstream out;
  const auto values = report_values(metrics);
  for (std::size_t i = 0; i < cols.size(); ++i) out << cols[i] << ": " << values[i] << '\n';
  out << "outcomes:\n";
  for (auto o : protocol::kTerminalOutcomes) {
    auto it = metrics.outcomes.find(o);
    out << "  " << protocol::outcome_text(o) << ' '
        << (it == metrics.outcomes.end() ? 0 : it->second) << '\n';
  }
  return out.str();
}

std::string render_sessions_csv(const std::vector<SessionOutcome>& sessions) {
  std::string out = "id,label,outcome,reason,fraud_score\n";
  for (const auto& s : sessions) {
    std::string label = !s.label ? "" : (*s.label == Label::fraud ? "fraud" : "legit");
    std::string score;
    if (s.fraud_score) {
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, *s.fraud_score);
      score.assign(buf, res.ptr);
    }
    out += join({s.id, label, std::string(protocol::outcome_text(s.outcome)),
                 std::string(protocol::reason_name(s.reason)), score});
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace cardless::sim
