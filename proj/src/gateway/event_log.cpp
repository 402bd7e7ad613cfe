#include "cardless/gateway/event_log.hpp"

#include <sstream>

namespace cardless::gateway {

std::string format_record(const EventRecord& record) {
  nlohmann::json payload = protocol::to_json(record.event);
  std::string kind = payload.at("kind").get<std::string>();
  payload.erase("kind");
  nlohmann::json line = {{"seq", record.seq},
                         {"timestamp", record.timestamp},
                         {"kind", kind},
                         {"payload", std::move(payload)}};
  return line.dump();
}

std::vector<EventRecord> parse_log(std::string_view text) {
  std::vector<EventRecord> out;
  std::uint64_t last = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    const bool terminated = end != std::string_view::npos;
    std::string_view line = text.substr(pos, terminated ? end - pos : std::string_view::npos);
    pos = terminated ? end + 1 : text.size();
    if (line.empty()) {
      if (terminated) continue;
      break;
    }
    try {
      auto j = nlohmann::json::parse(line);
      auto payload = j.at("payload");
      payload["kind"] = j.at("kind");
      EventRecord rec{j.at("seq").get<std::uint64_t>(), j.at("timestamp").get<std::int64_t>(),
                      protocol::ledger_event_from_json(payload)};
      if (rec.seq <= last) throw std::invalid_argument("seq is not increasing");
      last = rec.seq;
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      std::string what = terminated ? "line " + std::to_string(line_no) + ": " + e.what()
                                    : "truncated record at line " + std::to_string(line_no) +
                                          " after seq " + std::to_string(last);
      throw LogError(line_no, last, what);
    }
  }
  return out;
}

std::vector<EventRecord> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_log(buf.str());
}

EventLog::EventLog(const std::filesystem::path& path, const Clock& clock, std::uint64_t last_seq)
    : clock_(clock), out_(path, std::ios::app | std::ios::binary), seq_(last_seq) {
  if (!out_) throw std::runtime_error("cannot open event log " + path.string());
}

std::uint64_t EventLog::append(const protocol::LedgerEvent& ev) {
  std::lock_guard lock(mu_);
  EventRecord rec{seq_ + 1, clock_.now(), ev};
  out_ << format_record(rec) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("event log write failed");
  return ++seq_;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

std::uint64_t MemoryLog::append(const protocol::LedgerEvent& ev) {
  std::lock_guard lock(mu_);
  EventRecord rec{lines_.size() + 1, clock_.now(), ev};
  lines_.push_back(format_record(rec));
  return rec.seq;
}

std::string MemoryLog::text() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace cardless::gateway
