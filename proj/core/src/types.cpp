#include "vaxsim/types.hpp"

namespace vaxsim {

std::string_view to_string(Sex s) { return s == Sex::female ? "female" : "male"; }

std::string_view to_string(Race r) {
    switch (r) {
    case Race::white: return "white";
    case Race::black: return "black";
    case Race::indigenous: return "indigenous";
    case Race::asian: return "asian";
    case Race::pacific_islander: return "pacific_islander";
    case Race::other: return "other";
    case Race::multiracial: return "multiracial";
    }
    return "?";
}

std::string_view to_string(MilitaryStatus m) {
    switch (m) {
    case MilitaryStatus::active_duty: return "active_duty";
    case MilitaryStatus::reserve_or_guard: return "reserve_or_guard";
    case MilitaryStatus::veteran: return "veteran";
    }
    return "?";
}

std::string_view to_string(InfantClass c) { return c == InfantClass::months_0_5 ? "months_0_5" : "months_6_11"; }

std::optional<Sex> parse_sex(std::string_view s) {
    if (s == "female") return Sex::female;
    if (s == "male") return Sex::male;
    return std::nullopt;
}

std::optional<Race> parse_race(std::string_view s) {
    if (s == "white") return Race::white;
    if (s == "black") return Race::black;
    if (s == "indigenous") return Race::indigenous;
    if (s == "asian") return Race::asian;
    if (s == "pacific_islander") return Race::pacific_islander;
    if (s == "other") return Race::other;
    if (s == "multiracial") return Race::multiracial;
    return std::nullopt;
}

std::optional<MilitaryStatus> parse_military_status(std::string_view s) {
    if (s == "active_duty") return MilitaryStatus::active_duty;
    if (s == "reserve_or_guard") return MilitaryStatus::reserve_or_guard;
    if (s == "veteran") return MilitaryStatus::veteran;
    return std::nullopt;
}

std::string Rank::label() const {
    std::string out = "tier " + std::to_string(tier);
    if (subtier > 0)
        out += " subtier " + std::to_string(subtier);
    return out;
}

} // namespace vaxsim
