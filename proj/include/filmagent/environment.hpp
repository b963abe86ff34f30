#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace filmagent {

enum class Posture { Standing, Sitting };

enum class StateEffect { None, ToSitting, ToStanding };

enum class ShotKind { Static, Dynamic };

std::string to_string(Posture p);
std::string to_string(StateEffect e);
std::string to_string(ShotKind k);

/// A named spot a character can occupy inside one location.
struct PositionSpec {
    std::string id;          // e.g. "Position B", unique within its location
    std::string description;
    bool sittable = false;
    std::string location_id; // name of the owning location, filled at load
};

struct LocationSpec {
    std::string name;
    int capacity = 0; // maximum characters on stage at once
    std::vector<PositionSpec> positions;

    const PositionSpec* find_position(std::string_view id) const;
};

struct ActionSpec {
    std::string canonical_name;
    Posture required_state = Posture::Standing;
    StateEffect state_effect = StateEffect::None;
    std::vector<std::string> aliases;
};

struct ShotSpec {
    std::string canonical_name;
    ShotKind kind = ShotKind::Static;
    std::vector<std::string> aliases;
    std::vector<std::string> usage_rules; // rule ids this shot participates in
};

/// The stage world every script is checked against. Immutable after load;
/// safe to share across threads.
struct EnvironmentSpec {
    std::vector<LocationSpec> locations;
    std::vector<ActionSpec> actions;
    std::vector<ShotSpec> shots;

    const LocationSpec* find_location(std::string_view name) const;

    std::size_t position_count() const;
    std::size_t sittable_count() const;
};

/// Loads an environment file (JSON with top-level `locations`, `actions`,
/// `shots`). Structural invariants (unique names, disjoint aliases, capacity
/// floor, the Sit Down / Stand Up pairing) are always enforced. When
/// `strict_counts` is set, the shipped catalog sizes are enforced too:
/// 15 locations, 65 positions (32 standing + 33 sittable), 21 actions,
/// 9 shots (3 static + 6 dynamic).
///
/// Throws ParseError for malformed files and IntegrityError naming the first
/// failing invariant.
EnvironmentSpec load_environment(const std::filesystem::path& path, bool strict_counts = false);

/// Case-insensitive lookup against canonical names, then aliases.
/// Throws UnknownActionError listing the three nearest catalog names.
const ActionSpec& resolve_action(std::string_view name, const EnvironmentSpec& env);

/// Same contract as resolve_action. Throws UnknownShotError.
const ShotSpec& resolve_shot(std::string_view name, const EnvironmentSpec& env);

/// Levenshtein distance over case-folded strings.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// distance / max(len) in [0,1]; 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

/// The `k` catalog names nearest to `name`, best first.
std::vector<std::string> nearest_names(std::string_view name,
                                       const std::vector<std::string>& catalog,
                                       std::size_t k);

} // namespace filmagent
