#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cardless/common/clock.hpp"
#include "cardless/protocol/ledger.hpp"

// Append-only event log, one JSON record per line:
//   {"seq":N,"timestamp":T,"kind":K,"payload":{...}}
namespace cardless::gateway {

struct EventRecord {
  std::uint64_t seq = 0;
  std::int64_t timestamp = 0;
  protocol::LedgerEvent event;
};

class LogError : public std::runtime_error {
 public:
  LogError(std::size_t line, std::uint64_t last_good_seq, const std::string& what)
      : std::runtime_error(what), line_(line), last_good_seq_(last_good_seq) {}
  std::size_t line() const { return line_; }
  std::uint64_t last_good_seq() const { return last_good_seq_; }

 private:
  std::size_t line_;
  std::uint64_t last_good_seq_;
};

std::string format_record(const EventRecord& record);

// Parses a whole log. Throws LogError naming the 1-based line, and the last
// seq read before it, on the first bad record.
std::vector<EventRecord> parse_log(std::string_view text);
std::vector<EventRecord> read_log(const std::filesystem::path& path);

// Single writer; appends are serialized and flushed before returning.
class EventLog {
 public:
  // Continues numbering after `last_seq`.
  EventLog(const std::filesystem::path& path, const Clock& clock, std::uint64_t last_seq = 0);

  std::uint64_t append(const protocol::LedgerEvent& ev);
  std::uint64_t last_seq() const;

 private:
  const Clock& clock_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::uint64_t seq_;
};

// In-memory counterpart used by the simulator.
class MemoryLog {
 public:
  explicit MemoryLog(const Clock& clock) : clock_(clock) {}
  std::uint64_t append(const protocol::LedgerEvent& ev);
  const std::vector<std::string>& lines() const { return lines_; }
  std::string text() const;

 private:
  const Clock& clock_;
  std::mutex mu_;
  std::vector<std::string> lines_;
};

}  // namespace cardless::gateway
