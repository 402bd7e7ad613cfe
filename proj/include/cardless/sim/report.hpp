#pragma once

#include <string>
#include <vector>

#include "cardless/sim/scenario.hpp"

namespace cardless::sim {

enum class ReportFormat { text, csv };

// Summary columns, in order.
const std::vector<std::string>& report_columns();

// One value per report column; ratios use six decimals.
std::vector<std::string> report_values(const RunMetrics& metrics);

// CSV is the header plus one row, or the header alone when the run had no
// sessions. Text lists the same values as "column: value" lines.
std::string render_report(const RunMetrics& metrics, ReportFormat format);

// Per-session CSV: id,label,outcome,reason,fraud_score.
std::string render_sessions_csv(const std::vector<SessionOutcome>& sessions);

// Minimal CSV reader for the files written here (no quoting).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace cardless::sim
