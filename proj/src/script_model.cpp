#include "filmagent/script_model.hpp"

#include "filmagent/errors.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace filmagent {

using ojson = nlohmann::ordered_json;

namespace {

// Key names of the on-disk script shape. Everything else is an unknown key
// and is carried through parse/serialize untouched.
constexpr const char* kSceneInformation = "scene information";
constexpr const char* kInitialPosition = "initial position";
constexpr const char* kSceneEvents = "scene";
constexpr const char* kCurrentPosition = "current position";

const ojson& require(const ojson& obj, const char* key, const std::string& locus) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError("missing field '" + std::string(key) + "' at " + locus);
    return *it;
}

std::string as_string(const ojson& value, const std::string& locus) {
    if (!value.is_string())
        throw SchemaError("expected string at " + locus);
    return value.get<std::string>();
}

std::vector<PositionAssignment> parse_positions(const ojson& arr, const std::string& locus) {
    if (!arr.is_array())
        throw SchemaError("expected array at " + locus);
    std::vector<PositionAssignment> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& entry = arr[i];
        const std::string here = locus + "[" + std::to_string(i) + "]";
        out.push_back({as_string(require(entry, "character", here), here + ".character"),
                       as_string(require(entry, "position", here), here + ".position")});
    }
    return out;
}

ojson positions_to_json(const std::vector<PositionAssignment>& positions) {
    ojson arr = ojson::array();
    for (const auto& p : positions)
        arr.push_back({{"character", p.character}, {"position", p.position}});
    return arr;
}

SceneEvent parse_event(const ojson& jevent, const std::string& locus) {
    if (!jevent.is_object())
        throw SchemaError("expected object at " + locus);
    SceneEvent event;
    std::set<std::string> known;

    if (jevent.contains("move")) {
        known = {"move", "shot", kCurrentPosition};
        const auto& jmove = jevent["move"];
        MoveEvent move;
        move.character = as_string(require(jmove, "character", locus + ".move"), locus + ".move.character");
        move.destination = as_string(require(jmove, "destination", locus + ".move"), locus + ".move.destination");
        event.body = std::move(move);
    } else {
        known = {"speaker", "actions", "content", "shot", kCurrentPosition};
        LineEvent line;
        line.speaker = as_string(require(jevent, "speaker", locus), locus + ".speaker");
        line.content = as_string(require(jevent, "content", locus), locus + ".content");
        const auto& jactions = require(jevent, "actions", locus);
        if (!jactions.is_array())
            throw SchemaError("expected array at " + locus + ".actions");
        for (std::size_t i = 0; i < jactions.size(); ++i) {
            const auto& ja = jactions[i];
            const std::string here = locus + ".actions[" + std::to_string(i) + "]";
            ActionAnnotation a;
            a.character = as_string(require(ja, "character", here), here + ".character");
            a.state = as_string(require(ja, "state", here), here + ".state");
            a.action = as_string(require(ja, "action", here), here + ".action");
            line.actions.push_back(std::move(a));
        }
        event.body = std::move(line);
    }

    if (jevent.contains("shot"))
        event.shot = as_string(jevent["shot"], locus + ".shot");
    if (jevent.contains(kCurrentPosition))
        event.current_position = parse_positions(jevent[kCurrentPosition], locus + ".current position");

    for (const auto& [key, value] : jevent.items())
        if (!known.count(key)) event.extras[key] = value;
    return event;
}

ojson event_to_json(const SceneEvent& event) {
    ojson out = ojson::object();
    if (event.is_move()) {
        const auto& move = event.move();
        out["move"] = {{"character", move.character}, {"destination", move.destination}};
    } else {
        const auto& line = event.line();
        out["speaker"] = line.speaker;
        ojson actions = ojson::array();
        for (const auto& a : line.actions)
            actions.push_back({{"character", a.character}, {"state", a.state}, {"action", a.action}});
        out["actions"] = std::move(actions);
        out["content"] = line.content;
    }
    if (event.shot) out["shot"] = *event.shot;
    if (!event.current_position.empty())
        out[kCurrentPosition] = positions_to_json(event.current_position);
    for (const auto& [key, value] : event.extras.items()) out[key] = value;
    return out;
}

Scene parse_scene(const ojson& jscene, std::size_t index) {
    const std::string locus = "scenes[" + std::to_string(index) + "]";
    if (!jscene.is_object())
        throw SchemaError("expected object at " + locus);

    Scene scene;
    const auto& jinfo = require(jscene, kSceneInformation, locus);
    const auto& jwho = require(jinfo, "who", locus + ".scene information");
    if (!jwho.is_array())
        throw SchemaError("expected array at " + locus + ".scene information.who");
    for (const auto& name : jwho)
        scene.info.who.push_back(as_string(name, locus + ".scene information.who"));
    scene.info.where = as_string(require(jinfo, "where", locus), locus + ".scene information.where");
    scene.info.what = as_string(require(jinfo, "what", locus), locus + ".scene information.what");

    scene.initial_position =
        parse_positions(require(jscene, kInitialPosition, locus), locus + ".initial position");

    const auto& jevents = require(jscene, kSceneEvents, locus);
    if (!jevents.is_array())
        throw SchemaError("expected array at " + locus + ".scene");
    for (std::size_t i = 0; i < jevents.size(); ++i)
        scene.events.push_back(parse_event(jevents[i], locus + ".scene[" + std::to_string(i) + "]"));

    const std::set<std::string> known = {kSceneInformation, kInitialPosition, kSceneEvents};
    for (const auto& [key, value] : jscene.items())
        if (!known.count(key)) scene.extras[key] = value;
    return scene;
}

ojson scene_to_json(const Scene& scene) {
    ojson out = ojson::object();
    ojson info = ojson::object();
    info["who"] = scene.info.who;
    info["where"] = scene.info.where;
    info["what"] = scene.info.what;
    out[kSceneInformation] = std::move(info);
    out[kInitialPosition] = positions_to_json(scene.initial_position);
    ojson events = ojson::array();
    for (const auto& event : scene.events) events.push_back(event_to_json(event));
    out[kSceneEvents] = std::move(events);
    for (const auto& [key, value] : scene.extras.items()) out[key] = value;
    return out;
}

} // namespace

const std::string& SceneEvent::subject() const {
    return is_move() ? move().character : line().speaker;
}

AnnotatedScript script_from_json(const ojson& doc) {
    if (!doc.is_array())
        throw SchemaError("script document must be a JSON array of scenes");
    if (doc.empty())
        throw SchemaError("scenes");
    if (doc.size() > 3)
        throw SchemaError("scenes: at most 3 scenes are allowed, found " +
                          std::to_string(doc.size()));
    AnnotatedScript script;
    for (std::size_t i = 0; i < doc.size(); ++i)
        script.scenes.push_back(parse_scene(doc[i], i));
    return script;
}

AnnotatedScript parse_script(const std::string& text) {
    ojson doc = ojson::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        // re-parse with exceptions to surface the error position
        try {
            ojson strict = ojson::parse(text);
            (void)strict;
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(e.what());
        }
        throw ParseError("invalid JSON");
    }
    return script_from_json(doc);
}

ojson script_to_json(const AnnotatedScript& script) {
    ojson doc = ojson::array();
    for (const auto& scene : script.scenes) doc.push_back(scene_to_json(scene));
    return doc;
}

std::string serialize_script(const AnnotatedScript& script) {
    return script_to_json(script).dump(4) + "\n";
}

ojson profile_to_json(const CharacterProfile& profile) {
    ojson out = ojson::object();
    out["name"] = profile.name;
    out["age"] = profile.age;
    out["gender"] = profile.gender;
    out["occupation"] = profile.occupation;
    out["personality traits"] = profile.personality_traits;
    out["speaking style"] = profile.speaking_style;
    return out;
}

CharacterProfile profile_from_json(const nlohmann::json& doc) {
    auto field = [&](const char* key) -> std::string {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_string() || it->get<std::string>().empty())
            throw SchemaError(std::string("profile field '") + key + "' missing or empty");
        return it->get<std::string>();
    };
    CharacterProfile p;
    p.name = field("name");
    if (p.name.find_first_of(" \t\n") != std::string::npos)
        throw SchemaError("profile name must be a single word: '" + p.name + "'");
    p.age = field("age");
    p.gender = field("gender");
    if (p.gender != "male" && p.gender != "female")
        throw SchemaError("profile gender must be male or female: '" + p.gender + "'");
    p.occupation = field("occupation");
    p.personality_traits = field("personality traits");
    p.speaking_style = field("speaking style");
    return p;
}

ojson outline_to_json(const SceneOutline& outline) {
    ojson out = ojson::object();
    out["sub-topic"] = outline.sub_topic;
    out["selected-characters"] = outline.selected_characters;
    out["selected-location"] = outline.selected_location;
    out["story-plot"] = outline.story_plot;
    out["dialogue-goal"] = outline.dialogue_goal;
    return out;
}

SceneOutline outline_from_json(const nlohmann::json& doc) {
    auto field = [&](const char* key) -> std::string {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_string())
            throw SchemaError(std::string("outline field '") + key + "' missing");
        return it->get<std::string>();
    };
    SceneOutline o;
    o.sub_topic = field("sub-topic");
    auto chars = doc.find("selected-characters");
    if (chars == doc.end() || !chars->is_array())
        throw SchemaError("outline field 'selected-characters' missing");
    for (const auto& name : *chars) {
        if (!name.is_string()) throw SchemaError("selected-characters must be strings");
        o.selected_characters.push_back(name.get<std::string>());
    }
    o.selected_location = field("selected-location");
    o.story_plot = field("story-plot");
    o.dialogue_goal = field("dialogue-goal");
    return o;
}

std::vector<LineTiming> estimate_durations(const AnnotatedScript& script,
                                           const DurationConfig& config) {
    std::vector<LineTiming> timings;
    for (std::size_t s = 0; s < script.scenes.size(); ++s) {
        const auto& scene = script.scenes[s];
        for (std::size_t e = 0; e < scene.events.size(); ++e) {
            const auto& event = scene.events[e];
            double seconds = config.move_seconds;
            if (!event.is_move()) {
                std::istringstream words(event.line().content);
                std::size_t count = 0;
                for (std::string w; words >> w;) ++count;
                seconds = std::max(config.floor_seconds,
                                   static_cast<double>(count) / config.words_per_second);
            }
            timings.push_back({s, e, seconds});
        }
    }
    return timings;
}

} // namespace filmagent
