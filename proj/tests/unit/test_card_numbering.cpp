#include <doctest.h>

#include <algorithm>
#include <regex>
#include <set>
#include <thread>

#include "cardless/card_numbering.hpp"
#include "oracles.hpp"

using namespace cardless;
using card::FormatError;
using card::RegistryError;

namespace {

std::string random_digits(RandomSource& rng, std::size_t n) {
  std::string s(n, '0');
  for (auto& c : s) c = static_cast<char>('0' + rng.uniform(10));
  return s;
}

// Fixed source for driving issue_pan into collisions.
class Repeating final : public RandomSource {
 public:
  explicit Repeating(std::vector<std::uint64_t> values) : values_(std::move(values)) {}
  std::uint64_t next_u64() override { return values_[i_++ % values_.size()]; }

 private:
  std::vector<std::uint64_t> values_;
  std::size_t i_ = 0;
};

}  // namespace

TEST_CASE("oracle agrees with a hand trace") {
  // 7992739871: doubled from the right 1->2, 8->16->7, 3->6, 2->4, 9->18->9;
  // kept 7,9,7,9,7. Sum 2+7+6+4+9+7+9+7+9+7 = 67, check (10 - 7) % 10 = 3.
  CHECK(oracle::luhn_digit("7992739871") == 3);
  CHECK(oracle::luhn_digit("000000000000000") == 0);
}

TEST_CASE("luhn_check_digit examples") {
  CHECK(card::luhn_check_digit("000000000000000") == 0);
  CHECK(card::luhn_check_digit("7992739871") == 3);
  CHECK(card::luhn_check_digit("444433123456789") == oracle::luhn_digit("444433123456789"));
  CHECK(card::luhn_check_digit("444433123456789") == 4);
}

TEST_CASE("luhn_check_digit matches the oracle on every 4-digit body") {
  // Bodies shorter than 7 are out of range; zero padding leaves the sum and
  // the right-anchored parity unchanged.
  for (int v = 0; v < 10000; ++v) {
    char body[5];
    std::snprintf(body, sizeof body, "%04d", v);
    REQUIRE(card::luhn_check_digit(std::string("000") + body) == oracle::luhn_digit(body));
  }
}

TEST_CASE("luhn_check_digit matches the oracle on random bodies of every length") {
  SeededRandom rng(1);
  for (int i = 0; i < 20000; ++i) {
    const std::string body = random_digits(rng, 7 + rng.uniform(12));
    REQUIRE(card::luhn_check_digit(body) == oracle::luhn_digit(body));
  }
}

TEST_CASE("luhn_check_digit rejects bad input") {
  CHECK_THROWS_AS(card::luhn_check_digit("123456"), FormatError);
  CHECK_THROWS_AS(card::luhn_check_digit("1234567890123456789"), FormatError);
  CHECK_THROWS_AS(card::luhn_check_digit("12345a7"), FormatError);
  CHECK_THROWS_AS(card::luhn_check_digit(""), FormatError);
}

TEST_CASE("luhn_validate examples") {
  CHECK(card::luhn_validate("0000000000000000"));
  CHECK(card::luhn_validate("79927398713"));
  CHECK_FALSE(card::luhn_validate("79927398710"));
  CHECK(card::luhn_validate("4444331234567894"));
  CHECK_THROWS_AS(card::luhn_validate("1234567"), FormatError);
  CHECK_THROWS_AS(card::luhn_validate("12345678901234567890"), FormatError);
  CHECK_THROWS_AS(card::luhn_validate("4444 3312 3456 7894"), FormatError);
}

TEST_CASE("every single-digit substitution breaks a valid number") {
  SeededRandom rng(2);
  card::PanRegistry registry;
  for (int n = 0; n < 200; ++n) {
    const std::string pan = card::issue_pan("444433", rng, registry).pan();
    REQUIRE(card::luhn_validate(pan));
    for (std::size_t i = 0; i < pan.size(); ++i) {
      for (char d = '0'; d <= '9'; ++d) {
        if (d == pan[i]) continue;
        std::string altered = pan;
        altered[i] = d;
        REQUIRE_FALSE(card::luhn_validate(altered));
      }
    }
  }
}

TEST_CASE("generate_account_id") {
  SUBCASE("seeded regression vectors") {
    SeededRandom a(42), b(1), c(2);
    CHECK(card::generate_account_id(a) == "258120406");
    CHECK(card::generate_account_id(b) == "546311528");
    CHECK(card::generate_account_id(c) == "174154828");
  }
  SUBCASE("always nine digits, zero padded") {
    const std::regex nine("^[0-9]{9}$");
    SeededRandom rng(3);
    for (int i = 0; i < 5000; ++i) REQUIRE(std::regex_match(card::generate_account_id(rng), nine));
    Repeating zero({0});
    CHECK(card::generate_account_id(zero) == "000000000");
  }
  SUBCASE("system source") {
    SystemRandom rng;
    CHECK(card::generate_account_id(rng).size() == 9);
  }
}

TEST_CASE("assemble_pan") {
  auto zero = card::assemble_pan("000000", "000000000");
  CHECK(zero.pan() == "0000000000000000");
  auto p = card::assemble_pan("444433", "123456789");
  CHECK(p.pan() == "444433123456789" + std::to_string(oracle::luhn_digit("444433123456789")));
  CHECK(p.pan().size() == 16);
  CHECK(p.check_digit == 4);
  CHECK(p.masked() == "444433******7894");
  CHECK(card::split_pan(p.pan()) == p);
  CHECK_THROWS_AS(card::assemble_pan("44443", "123456789"), FormatError);
  CHECK_THROWS_AS(card::assemble_pan("444433", "12345678"), FormatError);
  CHECK_THROWS_AS(card::assemble_pan("44443x", "123456789"), FormatError);
  CHECK_THROWS_AS(card::split_pan("4444331234567895"), FormatError);
}

TEST_CASE("assembled numbers are always valid and well-formed") {
  SeededRandom rng(4);
  for (int i = 0; i < 5000; ++i) {
    auto p = card::assemble_pan(random_digits(rng, 6), card::generate_account_id(rng));
    const std::string pan = p.pan();
    REQUIRE(pan.size() == card::kPanDigits);
    REQUIRE(card::luhn_validate(pan));
    REQUIRE(p.check_digit == oracle::luhn_digit(pan.substr(0, 15)));
  }
}

TEST_CASE("registry admission and retirement") {
  card::PanRegistry r;
  const std::string pan = card::assemble_pan("444433", "123456789").pan();
  CHECK(r.register_unique(pan) == card::Registration::accepted);
  CHECK(r.is_active(pan));
  CHECK(r.register_unique(pan) == card::Registration::duplicate);
  r.retire(pan);
  CHECK(r.is_retired(pan));
  CHECK_FALSE(r.is_active(pan));
  CHECK(r.register_unique(pan) == card::Registration::duplicate);
  try {
    r.retire(pan);
    FAIL("second retire accepted");
  } catch (const RegistryError& e) {
    CHECK(e.kind() == RegistryError::Kind::not_active);
  }
  CHECK_THROWS_AS(r.retire(card::assemble_pan("444433", "000000001").pan()), RegistryError);
  CHECK(r.active_count() == 0);
  CHECK(r.retired_count() == 1);
}

TEST_CASE("active and retired stay disjoint under random operations") {
  SeededRandom rng(5);
  card::PanRegistry r;
  std::vector<std::string> pool;
  for (int i = 0; i < 64; ++i) {
    pool.push_back(card::assemble_pan("444433", card::generate_account_id(rng)).pan());
  }
  for (int step = 0; step < 5000; ++step) {
    const std::string& pan = pool[rng.uniform(pool.size())];
    const bool was_known = r.is_active(pan) || r.is_retired(pan);
    if (rng.uniform(2) == 0) {
      auto reg = r.register_unique(pan);
      REQUIRE((reg == card::Registration::duplicate) == was_known);
    } else if (r.is_active(pan)) {
      r.retire(pan);
    } else {
      REQUIRE_THROWS_AS(r.retire(pan), RegistryError);
    }
    REQUIRE_FALSE((r.is_active(pan) && r.is_retired(pan)));
  }
  auto active = r.active_snapshot();
  auto retired = r.retired_snapshot();
  std::vector<std::string> both;
  std::set_intersection(active.begin(), active.end(), retired.begin(), retired.end(),
                        std::back_inserter(both));
  CHECK(both.empty());
}

TEST_CASE("issue_pan retries collisions and then gives up") {
  card::PanRegistry r;
  // 123456789 twice, then 987654321.
  Repeating rng({123456789, 123456789, 987654321});
  auto first = card::issue_pan("444433", rng, r);
  CHECK(first.account_id == "123456789");
  auto second = card::issue_pan("444433", rng, r);
  CHECK(second.account_id == "987654321");

  Repeating stuck({123456789});
  try {
    card::issue_pan("444433", stuck, r, 5);
    FAIL("exhaustion not reported");
  } catch (const RegistryError& e) {
    CHECK(e.kind() == RegistryError::Kind::exhausted);
  }
  CHECK(r.active_count() == 2);
}

TEST_CASE("concurrent registration never admits a number twice") {
  card::PanRegistry r;
  std::vector<std::string> pans;
  SeededRandom rng(6);
  for (int i = 0; i < 500; ++i) {
    pans.push_back(card::assemble_pan("444433", card::generate_account_id(rng)).pan());
  }
  std::atomic<int> accepted{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      // Each thread walks the same numbers in a different rotation.
      for (std::size_t i = 0; i < pans.size(); ++i) {
        const auto& pan = pans[(i + static_cast<std::size_t>(t) * 61) % pans.size()];
        if (r.register_unique(pan) == card::Registration::accepted) ++accepted;
      }
    });
  }
  for (auto& th : threads) th.join();
  const std::set<std::string> distinct(pans.begin(), pans.end());
  CHECK(accepted.load() == static_cast<int>(distinct.size()));
  CHECK(r.active_count() == distinct.size());
}

TEST_CASE("10,000 issued numbers are distinct") {
  SeededRandom rng(7);
  card::PanRegistry r;
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(card::issue_pan("444433", rng, r).pan());
  CHECK(seen.size() == 10000);
  CHECK(r.active_count() == 10000);
}
