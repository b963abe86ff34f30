#pragma once

#include "filmagent/environment.hpp"
#include "filmagent/script_model.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace filmagent {

enum class RuleId {
    UnknownAction,
    UnknownShot,
    StateMismatch,
    DoubleAction,
    SitUnsittable,
    IllegalStateChange,
    PositionCollision,
    CapacityExceeded,
    UnknownPosition,
    OpeningShotRule,
    ZoomNeedsLong,
    TruckOnlyOpening,
    TrackingNeedsMotion,
    PanRunRule,
    CurveSurroundFirstAppearance,
    ConsecutiveStaticRepeat,
    PositionSnapshotMismatch,
};

enum class Severity { Error, Warning, Info };

std::string to_string(RuleId rule);
std::string to_string(Severity severity);
std::optional<RuleId> rule_from_string(std::string_view name);

/// Where a suggestion applies. May differ from the diagnostic locus: a zoom
/// without a long-shot predecessor is reported at the zoom but fixed at the
/// preceding event.
enum class FixField { ActionName, Shot, Destination, SnapshotPosition };

struct FixTarget {
    FixField field = FixField::Shot;
    std::size_t scene_index = 0;
    std::size_t event_index = 0;
    std::size_t entry_index = 0; // action / snapshot entry within the event

    auto operator<=>(const FixTarget&) const = default;
};

struct Diagnostic {
    RuleId rule = RuleId::UnknownAction;
    Severity severity = Severity::Error;
    std::size_t scene_index = 0;
    std::size_t event_index = 0;
    std::string message;
    std::optional<std::string> suggestion; // resolves in the environment catalog
    std::optional<FixTarget> fix;          // present iff suggestion is present
};

struct CharacterState {
    std::string position;
    Posture posture = Posture::Standing;

    bool operator==(const CharacterState&) const = default;
};

/// State snapshots per character: entry k is the state *before* event k runs,
/// and the final entry is the state after the last event. Size is therefore
/// events + 1.
using StateTrace = std::vector<std::map<std::string, CharacterState>>;

/// Replays a scene's moves and Sit Down / Stand Up transitions. Initial
/// posture is standing unless the character's first declared `state`
/// annotation in the scene says sitting. Throws UnknownPositionError when a
/// move destination does not exist in the scene's location.
StateTrace derive_state_trace(const Scene& scene, const EnvironmentSpec& env);

struct ValidatorConfig {
    int consecutive_static_threshold = 3;  // flag runs longer than this
    double suggestion_max_distance = 0.5;  // normalized edit distance cutoff
    /// Known hallucinated names mapped straight to their catalog fix; takes
    /// precedence over nearest-name search. Keys are case-folded.
    std::map<std::string, std::string> known_action_fixes = {
        {"standing suggest", "Standing Thinking"},
    };
};

/// Lints a script against the environment. Pure; findings come back sorted by
/// (scene, event, rule) and an empty list means the script is accepted.
std::vector<Diagnostic> validate(const AnnotatedScript& script, const EnvironmentSpec& env,
                                 const ValidatorConfig& config = {});

/// Returns a copy of the script with every carried suggestion substituted.
/// Throws ConflictingSuggestions when two suggestions target the same field
/// with different values.
AnnotatedScript apply_suggestions(const AnnotatedScript& script,
                                  const std::vector<Diagnostic>& diagnostics);

nlohmann::ordered_json diagnostic_to_json(const Diagnostic& d);

} // namespace filmagent
