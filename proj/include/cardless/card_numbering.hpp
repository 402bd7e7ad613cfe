#pragma once

#include <cstddef>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cardless/common/random.hpp"

// Virtual card numbers: ISO/IEC 7812 layout (6-digit IIN, 9-digit account
// identifier, Luhn check digit) and the registry that keeps them unique.
namespace cardless::card {

class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RegistryError : public std::runtime_error {
 public:
  enum class Kind { not_active, exhausted };
  RegistryError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::size_t kIinDigits = 6;
inline constexpr std::size_t kAccountIdDigits = 9;
inline constexpr std::size_t kPanDigits = 16;

struct PanParts {
  std::string iin;
  std::string account_id;
  int check_digit = 0;

  std::string pan() const;
  // First six and last four digits; everything else '*'.
  std::string masked() const;

  friend bool operator==(const PanParts&, const PanParts&) = default;
};

// C = (10 - S mod 10) mod 10 where S doubles every second digit counted from
// the right end of `body` (so the rightmost body digit is doubled).
// Body length 7..18.
int luhn_check_digit(std::string_view body);

// Accepts 8..19 digits.
bool luhn_validate(std::string_view pan);

// Uniform over 000000000..999999999.
std::string generate_account_id(RandomSource& rng);

PanParts assemble_pan(std::string_view iin, std::string_view account_id);

// Parses a 16-digit Luhn-valid PAN back into its parts.
PanParts split_pan(std::string_view pan);

enum class Registration { accepted, duplicate };

// Active and retired PAN sets. Retired numbers are never admitted again.
// All member functions are safe to call concurrently.
class PanRegistry {
 public:
  Registration register_unique(const std::string& pan);
  // Throws RegistryError(not_active) if pan is not currently active.
  void retire(const std::string& pan);

  bool is_active(const std::string& pan) const;
  bool is_retired(const std::string& pan) const;
  std::size_t active_count() const;
  std::size_t retired_count() const;

  std::vector<std::string> active_snapshot() const;
  std::vector<std::string> retired_snapshot() const;

 private:
  mutable std::mutex mu_;
  std::set<std::string> active_;
  std::set<std::string> retired_;
};

// Draws account identifiers until the assembled PAN registers, giving up with
// RegistryError(exhausted) after max_attempts collisions.
PanParts issue_pan(std::string_view iin, RandomSource& rng, PanRegistry& registry,
                   int max_attempts = 16);

}  // namespace cardless::card
