#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace filmagent {

struct CharacterProfile {
    std::string name; // single word
    std::string age;
    std::string gender; // "male" | "female"
    std::string occupation;
    std::string personality_traits;
    std::string speaking_style;
};

struct SceneOutline {
    std::string sub_topic;
    std::vector<std::string> selected_characters;
    std::string selected_location;
    std::string story_plot;
    std::string dialogue_goal;
};

struct PositionAssignment {
    std::string character;
    std::string position;

    bool operator==(const PositionAssignment&) const = default;
};

struct ActionAnnotation {
    std::string character;
    std::string state; // posture before the action: "standing" | "sitting"
    std::string action;
};

struct MoveEvent {
    std::string character;
    std::string destination;
};

struct LineEvent {
    std::string speaker;
    std::string content;
    std::vector<ActionAnnotation> actions;
};

/// One entry of a scene's event list: either a movement or a spoken line,
/// both optionally carrying a camera shot and a position snapshot taken
/// before the event runs. Unknown JSON keys survive in `extras`.
struct SceneEvent {
    std::variant<MoveEvent, LineEvent> body;
    std::optional<std::string> shot;
    std::vector<PositionAssignment> current_position;
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();

    bool is_move() const { return std::holds_alternative<MoveEvent>(body); }
    const MoveEvent& move() const { return std::get<MoveEvent>(body); }
    const LineEvent& line() const { return std::get<LineEvent>(body); }
    LineEvent& line() { return std::get<LineEvent>(body); }

    /// The character the camera would frame: the mover or the speaker.
    const std::string& subject() const;
};

struct SceneInformation {
    std::vector<std::string> who;
    std::string where;
    std::string what;
};

struct Scene {
    SceneInformation info;
    std::vector<PositionAssignment> initial_position;
    std::vector<SceneEvent> events;
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();
};

struct AnnotatedScript {
    std::vector<Scene> scenes;
    std::vector<CharacterProfile> profiles; // populated by the workflow
    std::string topic;
};

struct LineTiming {
    std::size_t scene_index = 0;
    std::size_t event_index = 0;
    double seconds = 0.0;
};

struct DurationConfig {
    double words_per_second = 2.5;
    double floor_seconds = 1.5;
    double move_seconds = 3.0;
};

/// Parses a script document: a JSON array of scenes, each carrying
/// `scene information`, `initial position` and `scene` keys. Unknown keys are
/// preserved and re-emitted by serialize_script. Throws ParseError for
/// malformed JSON and SchemaError naming the first missing field.
AnnotatedScript parse_script(const std::string& text);

/// Deterministic inverse of parse_script: stable key order and indentation so
/// repeated serialization of the same script is byte-identical.
std::string serialize_script(const AnnotatedScript& script);

nlohmann::ordered_json script_to_json(const AnnotatedScript& script);
AnnotatedScript script_from_json(const nlohmann::ordered_json& doc);

nlohmann::ordered_json profile_to_json(const CharacterProfile& profile);
CharacterProfile profile_from_json(const nlohmann::json& doc);

nlohmann::ordered_json outline_to_json(const SceneOutline& outline);
SceneOutline outline_from_json(const nlohmann::json& doc);

/// Word-count based stand-in for speech audio lengths: lines get
/// max(floor, words / rate), moves get the fixed move duration.
std::vector<LineTiming> estimate_durations(const AnnotatedScript& script,
                                           const DurationConfig& config = {});

} // namespace filmagent
