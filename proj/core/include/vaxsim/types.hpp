#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace vaxsim {

enum class Sex : std::uint8_t { female, male };

enum class Race : std::uint8_t {
    white,
    black,
    indigenous,
    asian,
    pacific_islander,
    other,
    multiracial,
};
inline constexpr int kRaceCount = 7;

enum class MilitaryStatus : std::uint8_t { active_duty, reserve_or_guard, veteran };

/// Month-of-age class for age-0 persons, drawn during the infant split.
enum class InfantClass : std::uint8_t { months_0_5, months_6_11 };

std::string_view to_string(Sex s);
std::string_view to_string(Race r);
std::string_view to_string(MilitaryStatus m);
std::string_view to_string(InfantClass c);

std::optional<Sex> parse_sex(std::string_view s);
std::optional<Race> parse_race(std::string_view s);
std::optional<MilitaryStatus> parse_military_status(std::string_view s);

/// Priority rank: tier 1..5; subtier 1..7 inside tier 1, 0 elsewhere.
/// Smaller compares higher-priority.
struct Rank {
    int tier = 0;
    int subtier = 0;

    auto operator<=>(const Rank &) const = default;

    std::string label() const;
};

/// The rank below every real one; a running "best rank" starts here.
inline constexpr Rank kNoRank{99, 0};

} // namespace vaxsim
