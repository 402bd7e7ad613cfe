#include "cardless/card_numbering.hpp"

#include <algorithm>

namespace cardless::card {
namespace {

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void require_digits(std::string_view s, std::size_t min_len, std::size_t max_len,
                    const char* what) {
  if (s.size() < min_len || s.size() > max_len) {
    throw FormatError(std::string(what) + ": length " + std::to_string(s.size()) +
                      " outside " + std::to_string(min_len) + ".." +
                      std::to_string(max_len));
  }
  if (!all_digits(s)) throw FormatError(std::string(what) + ": non-digit character");
}

int check_digit_unchecked(std::string_view body) {
  int sum = 0;
  bool doubled = true;
  for (auto it = body.rbegin(); it != body.rend(); ++it) {
    int d = *it - '0';
    if (doubled) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    doubled = !doubled;
  }
  return (10 - sum % 10) % 10;
}

}  // namespace

std::string PanParts::pan() const {
  return iin + account_id + static_cast<char>('0' + check_digit);
}

std::string PanParts::masked() const {
  std::string p = pan();
  for (std::size_t i = 6; i + 4 < p.size(); ++i) p[i] = '*';
  return p;
}

int luhn_check_digit(std::string_view body) {
  require_digits(body, 7, 18, "luhn body");
  return check_digit_unchecked(body);
}

bool luhn_validate(std::string_view pan) {
  require_digits(pan, 8, 19, "pan");
  return check_digit_unchecked(pan.substr(0, pan.size() - 1)) == pan.back() - '0';
}

std::string generate_account_id(RandomSource& rng) {
  std::string id = std::to_string(rng.uniform(1'000'000'000ULL));
  return std::string(kAccountIdDigits - id.size(), '0') + id;
}

PanParts assemble_pan(std::string_view iin, std::string_view account_id) {
  require_digits(iin, kIinDigits, kIinDigits, "iin");
  require_digits(account_id, kAccountIdDigits, kAccountIdDigits, "account id");
  PanParts parts{std::string(iin), std::string(account_id), 0};
  parts.check_digit = check_digit_unchecked(parts.iin + parts.account_id);
  return parts;
}

PanParts split_pan(std::string_view pan) {
  require_digits(pan, kPanDigits, kPanDigits, "pan");
  if (!luhn_validate(pan)) throw FormatError("pan: Luhn check failed");
  return PanParts{std::string(pan.substr(0, kIinDigits)),
                  std::string(pan.substr(kIinDigits, kAccountIdDigits)),
                  pan.back() - '0'};
}

Registration PanRegistry::register_unique(const std::string& pan) {
  std::lock_guard lock(mu_);
  if (active_.contains(pan) || retired_.contains(pan)) return Registration::duplicate;
  active_.insert(pan);
  return Registration::accepted;
}

void PanRegistry::retire(const std::string& pan) {
  std::lock_guard lock(mu_);
  auto it = active_.find(pan);
  if (it == active_.end()) {
    throw RegistryError(RegistryError::Kind::not_active, "retire: card number is not active");
  }
  active_.erase(it);
  retired_.insert(pan);
}

bool PanRegistry::is_active(const std::string& pan) const {
  std::lock_guard lock(mu_);
  return active_.contains(pan);
}

bool PanRegistry::is_retired(const std::string& pan) const {
  std::lock_guard lock(mu_);
  return retired_.contains(pan);
}

std::size_t PanRegistry::active_count() const {
  std::lock_guard lock(mu_);
  return active_.size();
}

std::size_t PanRegistry::retired_count() const {
  std::lock_guard lock(mu_);
  return retired_.size();
}

std::vector<std::string> PanRegistry::active_snapshot() const {
  std::lock_guard lock(mu_);
  return {active_.begin(), active_.end()};
}

std::vector<std::string> PanRegistry::retired_snapshot() const {
  std::lock_guard lock(mu_);
  return {retired_.begin(), retired_.end()};
}

PanParts issue_pan(std::string_view iin, RandomSource& rng, PanRegistry& registry,
                   int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    PanParts parts = assemble_pan(iin, generate_account_id(rng));
    if (registry.register_unique(parts.pan()) == Registration::accepted) return parts;
  }
  throw RegistryError(RegistryError::Kind::exhausted,
                      "card number generation exhausted after " +
                          std::to_string(max_attempts) + " attempts");
}

}  // namespace cardless::card
