#include "filmagent/workflow.hpp"

#include "filmagent/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace filmagent {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, 6> kStageNames = {"idea",    "script1", "script2",
                                                    "script3", "cinema",  "assembled"};

int stage_rank(Stage stage) { return static_cast<int>(stage); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw ParseError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string join_names(const std::vector<std::string>& names) {
    if (names.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

std::string format_seconds(double seconds) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f", seconds);
    return buffer;
}

bool truthy(const ojson& value) {
    if (value.is_boolean()) return value.get<bool>();
    if (value.is_string()) {
        std::string s = value.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(), ::tolower);
        return s == "true";
    }
    return false;
}

/// Applies a writer-shaped revision (scene_information / initial position /
/// dialogues) onto the current script. Dialogue updates merge by index so
/// move events stay where the draft put them; if the line count changed, the
/// scene's line list is rebuilt and moves are re-inserted at their old slots.
void merge_writer_revision(AnnotatedScript& current, const ojson& doc) {
    for (std::size_t s = 0; s < doc.size() && s < current.scenes.size(); ++s) {
        Scene& scene = current.scenes[s];
        const auto& jscene = doc[s];
        if (!jscene.contains("dialogues") || !jscene["dialogues"].is_array())
            throw SchemaError("revised scene " + std::to_string(s) + " has no dialogues");
        const auto& jlines = jscene["dialogues"];

        auto parse_line = [&](const ojson& jline) {
            LineEvent line;
            line.speaker = jline.at("speaker").get<std::string>();
            line.content = jline.at("content").get<std::string>();
            if (jline.contains("actions"))
                for (const auto& ja : jline["actions"])
                    line.actions.push_back({ja.at("character").get<std::string>(),
                                            ja.value("state", "standing"),
                                            ja.at("action").get<std::string>()});
            return line;
        };

        std::vector<std::size_t> line_indices;
        for (std::size_t e = 0; e < scene.events.size(); ++e)
            if (!scene.events[e].is_move()) line_indices.push_back(e);

        if (line_indices.size() == jlines.size()) {
            for (std::size_t k = 0; k < jlines.size(); ++k)
                scene.events[line_indices[k]].body = parse_line(jlines[k]);
        } else {
            // rebuild: lines fresh, moves re-inserted by their old line slot
            std::vector<std::pair<std::size_t, SceneEvent>> moves; // (lines before it, event)
            std::size_t lines_seen = 0;
            for (const auto& event : scene.events) {
                if (event.is_move())
                    moves.emplace_back(lines_seen, event);
                else
                    ++lines_seen;
            }
            std::vector<SceneEvent> rebuilt;
            for (const auto& jline : jlines) {
                SceneEvent event;
                event.body = parse_line(jline);
                rebuilt.push_back(std::move(event));
            }
            for (auto it = moves.rbegin(); it != moves.rend(); ++it) {
                const std::size_t slot = std::min(it->first, rebuilt.size());
                rebuilt.insert(rebuilt.begin() + static_cast<std::ptrdiff_t>(slot), it->second);
            }
            scene.events = std::move(rebuilt);
        }

        if (jscene.contains("initial position") && jscene["initial position"].is_array() &&
            !jscene["initial position"].empty()) {
            std::vector<PositionAssignment> positions;
            for (const auto& jp : jscene["initial position"])
                positions.push_back({jp.at("character").get<std::string>(),
                                     jp.at("position").get<std::string>()});
            scene.initial_position = std::move(positions);
        }
    }
}

void apply_annotations(AnnotatedScript& script, const CameraAnnotationSet& set,
                       const EnvironmentSpec& env) {
    for (std::size_t s = 0; s < script.scenes.size(); ++s)
        for (std::size_t e = 0; e < script.scenes[s].events.size(); ++e) {
            std::string shot = set.scenes[s][e].shot;
            try {
                shot = resolve_shot(shot, env).canonical_name;
            } catch (const UnknownShotError&) {
                // keep the raw name; the validation gate will flag and fix it
            }
            script.scenes[s].events[e].shot = shot;
        }
}

} // namespace

ojson ccv_log_to_json(const CcvResult& result, const std::string& action_tag,
                      const std::string& critic_tag) {
    ojson log = ojson::array();
    auto entry = [](const std::string& tag, const char* phase, int round,
                    const std::string& text) {
        return ojson{{"agent_tag", tag}, {"phase", phase}, {"round", round}, {"text", text}};
    };
    for (const auto& round : result.rounds) {
        log.push_back(entry(action_tag, "respond", round.round, round.response));
        if (round.verdict)
            log.push_back(entry(critic_tag, "verify", round.round, round.verdict->rationale));
        if (round.critique)
            log.push_back(entry(critic_tag, "critique", round.round, *round.critique));
    }
    return log;
}

ojson debate_log_to_json(const DebateResult& result) {
    ojson log = ojson::array();
    for (const auto& step : result.log)
        log.push_back({{"agent_tag", step.agent_tag}, {"phase", step.phase},
                       {"round", step.round}, {"text", step.text}});
    return log;
}

std::string to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::optional<Stage> stage_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kStageNames.size(); ++i)
        if (name == kStageNames[i]) return static_cast<Stage>(i);
    return std::nullopt;
}

ojson RunState::to_json() const {
    ojson out;
    out["run_id"] = run_id;
    out["topic"] = topic;
    out["completed_stage"] = completed ? to_string(*completed) : "";
    out["warnings"] = warnings;
    out["stage_call_counts"] = stage_call_counts;
    return out;
}

RunState RunState::from_json(const ojson& doc) {
    RunState state;
    state.run_id = doc.value("run_id", "");
    state.topic = doc.value("topic", "");
    const std::string stage = doc.value("completed_stage", "");
    if (!stage.empty()) state.completed = stage_from_string(stage);
    if (doc.contains("warnings"))
        state.warnings = doc["warnings"].get<std::vector<std::string>>();
    if (doc.contains("stage_call_counts"))
        state.stage_call_counts =
            doc["stage_call_counts"].get<std::map<std::string, std::uint64_t>>();
    return state;
}

ojson CameraAnnotationSet::to_wire() const {
    ojson out = ojson::object();
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        ojson jscene = ojson::object();
        for (std::size_t e = 0; e < scenes[s].size(); ++e) {
            ojson entry = ojson::object();
            entry["reasoning"] = scenes[s][e].reasoning;
            entry["shot"] = scenes[s][e].shot;
            jscene["selected-shot-" + std::to_string(e + 1)] = std::move(entry);
        }
        out["scene " + std::to_string(s + 1)] = std::move(jscene);
    }
    return out;
}

CameraAnnotationSet CameraAnnotationSet::from_wire(const ojson& doc, std::string author_tag) {
    if (!doc.is_object()) throw SchemaError("camera annotations must be a JSON object");
    std::map<int, std::vector<CameraAnnotation>> parsed;
    for (const auto& [key, jscene] : doc.items()) {
        if (key.rfind("scene ", 0) != 0)
            throw SchemaError("unexpected camera annotation key '" + key + "'");
        const int scene_no = std::atoi(key.c_str() + 6);
        if (scene_no < 1) throw SchemaError("bad scene number in '" + key + "'");
        std::map<int, CameraAnnotation> shots;
        for (const auto& [skey, jshot] : jscene.items()) {
            if (skey.rfind("selected-shot-", 0) != 0)
                throw SchemaError("unexpected shot key '" + skey + "'");
            const int shot_no = std::atoi(skey.c_str() + 14);
            if (shot_no < 1) throw SchemaError("bad shot number in '" + skey + "'");
            CameraAnnotation annotation;
            if (!jshot.contains("shot"))
                throw SchemaError("'" + skey + "' has no shot field");
            annotation.shot = jshot["shot"].get<std::string>();
            annotation.reasoning = jshot.value("reasoning", "");
            shots[shot_no] = std::move(annotation);
        }
        std::vector<CameraAnnotation> ordered;
        for (int expected = 1; const auto& [no, annotation] : shots) {
            if (no != expected++)
                throw SchemaError("non-contiguous shot numbering in '" + key + "'");
            ordered.push_back(annotation);
        }
        parsed[scene_no] = std::move(ordered);
    }
    CameraAnnotationSet set;
    set.author_tag = std::move(author_tag);
    for (int expected = 1; const auto& [no, shots] : parsed) {
        if (no != expected++) throw SchemaError("non-contiguous scene numbering");
        set.scenes.push_back(shots);
    }
    return set;
}

void recompute_snapshots(AnnotatedScript& script, const EnvironmentSpec& env) {
    for (auto& scene : script.scenes) {
        const StateTrace trace = derive_state_trace(scene, env);
        for (std::size_t e = 0; e < scene.events.size(); ++e) {
            std::vector<PositionAssignment> snapshot;
            for (const auto& assignment : scene.initial_position) {
                auto it = trace[e].find(assignment.character);
                if (it != trace[e].end())
                    snapshot.push_back({assignment.character, it->second.position});
            }
            scene.events[e].current_position = std::move(snapshot);
        }
    }
}

std::string render_storyboard(const AnnotatedScript& script, const DurationConfig& durations) {
    const auto timings = estimate_durations(script, durations);
    std::map<std::pair<std::size_t, std::size_t>, double> duration_of;
    for (const auto& t : timings) duration_of[{t.scene_index, t.event_index}] = t.seconds;

    std::ostringstream out;
    for (std::size_t s = 0; s < script.scenes.size(); ++s) {
        const auto& scene = script.scenes[s];
        out << "Scene " << (s + 1) << ": " << scene.info.where << " ("
            << join_names(scene.info.who) << ")\n";
        double clock = 0.0;
        for (std::size_t e = 0; e < scene.events.size(); ++e) {
            const auto& event = scene.events[e];
            out << "  [t=" << format_seconds(clock) << "s] "
                << (event.shot ? *event.shot : "(no shot)");
            if (event.is_move()) {
                out << " — " << event.move().character << " moves to "
                    << event.move().destination;
            } else {
                out << " — " << event.line().speaker << ": \"" << event.line().content << "\"";
                if (!event.line().actions.empty()) {
                    out << " — actions: ";
                    for (std::size_t a = 0; a < event.line().actions.size(); ++a) {
                        if (a) out << "; ";
                        out << event.line().actions[a].character << " "
                            << event.line().actions[a].action;
                    }
                }
            }
            out << "\n";
            clock += duration_of[{s, e}];
        }
        out << "\n";
    }
    return out.str();
}

std::map<std::string, std::size_t> consumed_calls_per_tag(const std::filesystem::path& jsonl) {
    std::map<std::string, std::size_t> counts;
    if (!std::filesystem::exists(jsonl)) return counts;
    for (const auto& record : Transcript::load_jsonl(jsonl)) ++counts[record.agent_tag];
    return counts;
}

FilmRun::FilmRun(WorkflowConfig config, ChatProvider& provider, Transcript& transcript)
    : config_(std::move(config)), provider_(provider), transcript_(transcript),
      environment_(load_environment(config_.environment_path, config_.strict_counts)),
      templates_(TemplateLibrary::load(config_.template_dir)) {
    const auto partials = config_.template_dir / "partials";
    action_list_ = read_text_file(partials / "action_list.txt");
    shot_list_ = read_text_file(partials / "shot_list.txt");
    shot_requirements_ = read_text_file(partials / "shot_requirements.txt");
    std::filesystem::create_directories(config_.run_dir);
    state_.run_id = config_.run_dir.filename().string();
}

std::filesystem::path FilmRun::artifact(const std::string& name) const {
    return config_.run_dir / name;
}

void FilmRun::write_artifact(const std::string& name, const std::string& text) const {
    std::ofstream out(artifact(name), std::ios::trunc);
    if (!out.is_open()) throw ParseError("cannot write " + artifact(name).string());
    out << text;
}

void FilmRun::save_state() const {
    std::ofstream out(artifact("state.json"), std::ios::trunc);
    out << state_.to_json().dump(2) << "\n";
}

void FilmRun::mark_complete(Stage stage) {
    state_.completed = stage;
    state_.stage_call_counts[to_string(stage)] = transcript_.size();
    save_state();
    log("stage " + to_string(stage) + " complete");
}

std::map<std::string, std::string> FilmRun::base_vars() const {
    return {{"topic", state_.topic},
            {"action_list", action_list_},
            {"shot_list", shot_list_},
            {"shot_annotation_requirements", shot_requirements_}};
}

std::string FilmRun::position_description(const std::vector<std::string>& locations) const {
    std::ostringstream out;
    for (const auto& name : locations) {
        const LocationSpec* location = environment_.find_location(name);
        if (!location) continue;
        out << location->name << ":\n";
        for (const auto& position : location->positions)
            out << "  - " << position.id << ": " << position.description
                << (position.sittable ? " (sittable)" : " (standing only)") << "\n";
    }
    return out.str();
}

std::string FilmRun::initial_position_text(const Scene& scene) const {
    const LocationSpec* location = environment_.find_location(scene.info.where);
    std::ostringstream out;
    for (const auto& assignment : scene.initial_position) {
        const PositionSpec* position =
            location ? location->find_position(assignment.position) : nullptr;
        out << assignment.character << ": " << assignment.position << ", "
            << (position && position->sittable ? "sittable" : "not sittable") << ", standing\n";
    }
    return out.str();
}

IdeaResult FilmRun::develop_idea(const std::string& topic) {
    state_.topic = topic;
    const RoleAgent director = RoleAgent::director();

    SchemaCheck profile_check = [](const ojson& doc) -> std::optional<std::string> {
        std::set<std::string> names;
        for (const auto& jprofile : doc) {
            try {
                CharacterProfile p = profile_from_json(jprofile);
                if (!names.insert(p.name).second)
                    return "duplicate character name '" + p.name + "'";
            } catch (const SchemaError& e) {
                return std::string(e.what());
            }
        }
        return std::nullopt;
    };
    const ojson jprofiles = invoke(director, provider_, templates_, "plan_1", base_vars(),
                                   profile_check, config_.schema_attempts);
    IdeaResult result;
    for (const auto& jprofile : jprofiles) result.profiles.push_back(profile_from_json(jprofile));

    std::vector<std::string> males, females, all_names;
    for (const auto& profile : result.profiles) {
        (profile.gender == "male" ? males : females).push_back(profile.name);
        all_names.push_back(profile.name);
    }
    auto vars = base_vars();
    vars["male_characters"] = join_names(males);
    vars["female_characters"] = join_names(females);

    // structural capacity / cast-size constraints; one more completion is
    // allowed to repair a violation before the run fails hard
    auto constraint_error = [&](const std::vector<SceneOutline>& outlines)
        -> std::optional<std::pair<std::string, std::string>> {
        for (std::size_t i = 0; i < outlines.size(); ++i) {
            const auto& outline = outlines[i];
            const auto* location = environment_.find_location(outline.selected_location);
            if (!location)
                return std::make_pair("selected-location",
                                      "scene " + std::to_string(i + 1) + " uses unknown location '" +
                                          outline.selected_location + "'");
            if (outline.selected_characters.size() < 2)
                return std::make_pair("selected-characters",
                                      "scene " + std::to_string(i + 1) +
                                          " needs at least two characters");
            if (outline.selected_characters.size() > static_cast<std::size_t>(location->capacity))
                return std::make_pair(
                    "selected-characters",
                    "scene " + std::to_string(i + 1) + " has " +
                        std::to_string(outline.selected_characters.size()) + " characters but " +
                        location->name + " holds " + std::to_string(location->capacity));
            for (const auto& name : outline.selected_characters)
                if (std::find(all_names.begin(), all_names.end(), name) == all_names.end())
                    return std::make_pair("selected-characters",
                                          "scene " + std::to_string(i + 1) +
                                              " casts unknown character '" + name + "'");
        }
        return std::nullopt;
    };
    auto parse_outlines = [](const ojson& doc) {
        std::vector<SceneOutline> outlines;
        for (const auto& joutline : doc) outlines.push_back(outline_from_json(joutline));
        return outlines;
    };

    ojson joutlines = invoke(director, provider_, templates_, "plan_2", vars, nullptr,
                             config_.schema_attempts);
    result.outlines = parse_outlines(joutlines);
    if (auto violation = constraint_error(result.outlines)) {
        SchemaCheck strict = [&](const ojson& doc) -> std::optional<std::string> {
            try {
                if (auto v = constraint_error(parse_outlines(doc))) return v->second;
            } catch (const SchemaError& e) {
                return std::string(e.what());
            }
            return std::nullopt;
        };
        try {
            joutlines = invoke(director, provider_, templates_, "plan_2", vars, strict,
                               config_.schema_attempts);
        } catch (const SchemaRetriesExhausted&) {
            throw ConstraintViolation(violation->first + ": " + violation->second);
        }
        result.outlines = parse_outlines(joutlines);
    }

    std::set<std::string> used;
    for (const auto& outline : result.outlines)
        for (const auto& name : outline.selected_characters) used.insert(name);
    for (const auto& name : all_names)
        if (!used.count(name))
            state_.warnings.push_back("profile '" + name + "' is never cast in any scene");

    ojson profile_doc = ojson::array();
    for (const auto& profile : result.profiles) profile_doc.push_back(profile_to_json(profile));
    write_artifact("profiles.json", profile_doc.dump(2) + "\n");
    ojson outline_doc = ojson::array();
    for (const auto& outline : result.outlines) outline_doc.push_back(outline_to_json(outline));
    write_artifact("outline.json", outline_doc.dump(2) + "\n");
    mark_complete(Stage::Idea);
    return result;
}

AnnotatedScript FilmRun::draft_script(const std::vector<SceneOutline>& outlines,
                                      const std::vector<CharacterProfile>& profiles) {
    const RoleAgent writer = RoleAgent::screenwriter();
    ojson outline_doc = ojson::array();
    for (const auto& outline : outlines) outline_doc.push_back(outline_to_json(outline));
    auto vars = base_vars();
    vars["scene_outline"] = pretty_json(outline_doc);

    SchemaCheck scene_count = [&](const ojson& doc) -> std::optional<std::string> {
        if (doc.size() != outlines.size())
            return "expected " + std::to_string(outlines.size()) + " scenes, got " +
                   std::to_string(doc.size());
        return std::nullopt;
    };
    const ojson dialogue = invoke(writer, provider_, templates_, "script_1", vars, scene_count,
                                  config_.schema_attempts);

    std::vector<std::string> location_names;
    for (const auto& outline : outlines) location_names.push_back(outline.selected_location);
    vars["position_description"] = position_description(location_names);

    SchemaCheck position_check = [&](const ojson& doc) -> std::optional<std::string> {
        if (doc.size() != outlines.size())
            return "expected positions for " + std::to_string(outlines.size()) + " scenes";
        for (std::size_t i = 0; i < doc.size(); ++i) {
            const auto* location = environment_.find_location(outlines[i].selected_location);
            std::set<std::string> expected(outlines[i].selected_characters.begin(),
                                           outlines[i].selected_characters.end());
            std::set<std::string> seen_positions;
            for (const auto& jp : doc[i]["scene-position"]) {
                if (!jp.contains("character") || !jp.contains("position"))
                    return "scene-position entries need character and position";
                const auto character = jp["character"].get<std::string>();
                const auto position = jp["position"].get<std::string>();
                if (!expected.erase(character))
                    return "scene " + std::to_string(i + 1) + " assigns a position to '" +
                           character + "' who is not in the scene";
                if (!seen_positions.insert(position).second)
                    return "scene " + std::to_string(i + 1) + " assigns " + position + " twice";
                if (location && !location->find_position(position))
                    return "scene " + std::to_string(i + 1) + ": no position '" + position +
                           "' in " + location->name;
            }
            if (!expected.empty())
                return "scene " + std::to_string(i + 1) + " leaves '" + *expected.begin() +
                       "' without a position";
        }
        return std::nullopt;
    };
    const ojson positions = invoke(writer, provider_, templates_, "script_2", vars,
                                   position_check, config_.schema_attempts);

    AnnotatedScript script;
    script.topic = state_.topic;
    script.profiles = profiles;

    for (std::size_t i = 0; i < outlines.size(); ++i) {
        Scene scene;
        scene.info.who = outlines[i].selected_characters;
        scene.info.where = outlines[i].selected_location;
        scene.info.what = outlines[i].story_plot;
        for (const auto& jp : positions[i]["scene-position"])
            scene.initial_position.push_back(
                {jp["character"].get<std::string>(), jp["position"].get<std::string>()});

        const auto& jlines = dialogue[i]["scene-dialogue"];
        auto scene_vars = base_vars();
        scene_vars["scene_outline"] = pretty_json(outline_to_json(outlines[i]));
        scene_vars["dialogue_draft"] = pretty_json(jlines);
        scene_vars["initial_position"] = initial_position_text(scene);

        SchemaCheck action_check = [&](const ojson& doc) -> std::optional<std::string> {
            if (doc.size() != jlines.size())
                return "expected " + std::to_string(jlines.size()) + " annotated lines, got " +
                       std::to_string(doc.size());
            for (std::size_t k = 0; k < doc.size(); ++k) {
                if (doc[k]["speaker"] != jlines[k]["speaker"])
                    return "line " + std::to_string(k + 1) + " changed its speaker";
                if (!doc[k]["actions"].is_array() || doc[k]["actions"].empty())
                    return "line " + std::to_string(k + 1) + " carries no action";
                for (const auto& ja : doc[k]["actions"])
                    if (!ja.contains("character") || !ja.contains("state") ||
                        !ja.contains("action"))
                        return "actions need character, state and action fields";
            }
            return std::nullopt;
        };
        const ojson annotated = invoke(writer, provider_, templates_, "script_3", scene_vars,
                                       action_check, config_.schema_attempts);

        for (const auto& jline : annotated) {
            SceneEvent event;
            LineEvent line;
            line.speaker = jline["speaker"].get<std::string>();
            line.content = jline["content"].get<std::string>();
            for (const auto& ja : jline["actions"])
                line.actions.push_back({ja["character"].get<std::string>(),
                                        ja["state"].get<std::string>(),
                                        ja["action"].get<std::string>()});
            event.body = std::move(line);
            scene.events.push_back(std::move(event));
        }

        // movement step: markers 0..n bracket every line, n allows a closing move
        ojson with_insertion = ojson::array();
        for (std::size_t k = 0; k < jlines.size(); ++k) {
            with_insertion.push_back("<Insertion Position " + std::to_string(k) + ">");
            with_insertion.push_back(jlines[k]);
        }
        with_insertion.push_back("<Insertion Position " + std::to_string(jlines.size()) + ">");

        std::vector<std::string> standing;
        for (const auto& assignment : scene.initial_position) standing.push_back(assignment.character);
        scene_vars["characters_in_standing_state"] = join_names(standing);
        scene_vars["position_description"] =
            position_description({outlines[i].selected_location});
        scene_vars["dialogue_with_insertion"] = pretty_json(with_insertion);

        const ojson jmove = invoke(writer, provider_, templates_, "script_4", scene_vars,
                                   nullptr, config_.schema_attempts);
        if (!(jmove["move"].is_string() && jmove["move"].get<std::string>() == "None")) {
            const auto& move_doc = jmove["move"];
            const auto& insertion = jmove.at("insertion");
            std::size_t slot = 0;
            const auto& jslot = insertion.at("insertion position");
            if (jslot.is_number())
                slot = jslot.get<std::size_t>();
            else
                slot = static_cast<std::size_t>(std::atoll(jslot.get<std::string>().c_str()));
            if (slot > scene.events.size())
                throw InsertionOutOfRange("insertion position " + std::to_string(slot) +
                                          " on a " + std::to_string(scene.events.size()) +
                                          "-slot dialogue");
            SceneEvent event;
            event.body = MoveEvent{move_doc.at("character").get<std::string>(),
                                   move_doc.at("destination").get<std::string>()};
            scene.events.insert(scene.events.begin() + static_cast<std::ptrdiff_t>(slot),
                                std::move(event));
        }
        script.scenes.push_back(std::move(scene));
    }

    recompute_snapshots(script, environment_);
    write_artifact("script_draft.json", serialize_script(script));
    mark_complete(Stage::Script1);
    return script;
}

AnnotatedScript FilmRun::revise_with_director(const AnnotatedScript& script) {
    const RoleAgent director = RoleAgent::director();
    const RoleAgent writer = RoleAgent::screenwriter();
    auto current = std::make_shared<AnnotatedScript>(script);

    CcvAgents agents;
    agents.action_tag = writer.tag;
    agents.critic_tag = director.tag;
    agents.act = [&, current](const DialogueHistory& history) {
        if (history.size() <= 2) return serialize_script(*current);
        auto vars = base_vars();
        vars["director_critique"] = history.entries().back().content;
        vars["draft_script"] = serialize_script(*current);
        std::string positions;
        for (const auto& scene : current->scenes) positions += initial_position_text(scene);
        vars["initial_position"] = positions;
        const ojson doc = invoke(writer, provider_, templates_, "writer_correct", vars, nullptr,
                                 config_.schema_attempts);
        merge_writer_revision(*current, doc);
        recompute_snapshots(*current, environment_);
        return serialize_script(*current);
    };
    agents.critique = [&, current](const DialogueHistory&, const std::string&) {
        auto vars = base_vars();
        vars["draft_script"] = serialize_script(*current);
        const ojson doc = invoke(director, provider_, templates_, "director_feedback", vars,
                                 nullptr, config_.schema_attempts);
        return doc.dump(2);
    };
    agents.verify = [&](const DialogueHistory&, const std::string& response,
                        const std::string& critique) {
        auto vars = base_vars();
        vars["director_critique"] = critique;
        vars["updated_script"] = response;
        const ojson doc = invoke(director, provider_, templates_, "director_verify", vars,
                                 nullptr, config_.schema_attempts);
        return Verdict{truthy(doc["finalize"]), doc.dump(2)};
    };

    const CcvResult result = critique_correct_verify(
        agents, state_.topic, "Revise the script until the director signs off.",
        {config_.ccv_max_rounds, config_.literal_loop_guard});
    if (!result.finalized)
        state_.warnings.push_back("director review ended unverified after " +
                                  std::to_string(result.rounds.size()) + " rounds");
    write_artifact("ccv_director_log.json",
                   ccv_log_to_json(result, agents.action_tag, agents.critic_tag).dump(2) + "\n");

    AnnotatedScript revised = parse_script(result.response);
    revised.profiles = script.profiles;
    revised.topic = script.topic;
    write_artifact("script_v2.json", serialize_script(revised));
    mark_complete(Stage::Script2);
    return revised;
}

AnnotatedScript FilmRun::revise_with_actors(const AnnotatedScript& script,
                                            const std::vector<CharacterProfile>& profiles) {
    const RoleAgent director = RoleAgent::director();
    const std::string serialized = serialize_script(script);

    ojson all_feedback = ojson::array();
    for (const auto& profile : profiles) {
        auto vars = base_vars();
        vars["character"] = profile.name;
        vars["character_profile"] = pretty_json(profile_to_json(profile));
        vars["draft_script"] = serialized;
        const ojson doc = invoke(RoleAgent::actor(profile), provider_, templates_,
                                 "actor_feedback", vars, nullptr, config_.schema_attempts);
        for (const auto& entry : doc) {
            if (entry["speaker"].get<std::string>() != profile.name) {
                state_.warnings.push_back("dropped feedback from " + profile.name +
                                          " about a line that is not theirs");
                continue;
            }
            all_feedback.push_back(entry);
        }
    }

    AnnotatedScript revised = script;
    if (!all_feedback.empty()) {
        ojson jprofiles = ojson::array();
        for (const auto& profile : profiles) jprofiles.push_back(profile_to_json(profile));
        auto vars = base_vars();
        vars["character_profiles"] = pretty_json(jprofiles);
        vars["draft_script"] = serialized;
        vars["actor_critique"] = pretty_json(all_feedback);
        const ojson filtered = invoke(director, provider_, templates_, "director_filter", vars,
                                      nullptr, config_.schema_attempts);
        const auto& adopted = filtered["adopted-suggestions"];
        if (!(adopted.is_string() && adopted.get<std::string>() == "None")) {
            revised = run_correction_cycle(script, pretty_json(adopted), "director_verify_2",
                                           "actor review");
            revised.profiles = script.profiles;
            revised.topic = script.topic;
        }
    }

    write_artifact("script_v3.json", serialize_script(revised));
    mark_complete(Stage::Script3);
    return revised;
}

AnnotatedScript FilmRun::run_correction_cycle(const AnnotatedScript& script,
                                              const std::string& first_critique,
                                              const std::string& verify_template,
                                              const std::string& stage_label) {
    const RoleAgent director = RoleAgent::director();
    const RoleAgent writer = RoleAgent::screenwriter();
    auto current = std::make_shared<AnnotatedScript>(script);
    auto last_verify_reason = std::make_shared<std::string>();

    CcvAgents agents;
    agents.action_tag = writer.tag;
    agents.critic_tag = director.tag;
    agents.act = [&, current](const DialogueHistory& history) {
        if (history.size() <= 2) return serialize_script(*current);
        auto vars = base_vars();
        vars["director_critique"] = history.entries().back().content;
        vars["draft_script"] = serialize_script(*current);
        std::string positions;
        for (const auto& scene : current->scenes) positions += initial_position_text(scene);
        vars["initial_position"] = positions;
        const ojson doc = invoke(writer, provider_, templates_, "writer_correct", vars, nullptr,
                                 config_.schema_attempts);
        merge_writer_revision(*current, doc);
        recompute_snapshots(*current, environment_);
        return serialize_script(*current);
    };
    // the critique is the filtered suggestion list itself; later rounds
    // restate it together with why the verification failed
    agents.critique = [first_critique, last_verify_reason](const DialogueHistory& history,
                                                           const std::string&) {
        if (history.size() <= 2 || last_verify_reason->empty()) return first_critique;
        return first_critique + "\n\nThe previous revision did not fully address this: " +
               *last_verify_reason;
    };
    agents.verify = [&, last_verify_reason](const DialogueHistory&, const std::string& response,
                                            const std::string&) {
        auto vars = base_vars();
        vars["filtered_critique"] = first_critique;
        vars["updated_script"] = response;
        const ojson doc = invoke(director, provider_, templates_, verify_template, vars, nullptr,
                                 config_.schema_attempts);
        *last_verify_reason = doc.value("reason", "");
        return Verdict{truthy(doc["finalize"]), doc.dump(2)};
    };

    const CcvResult result = critique_correct_verify(
        agents, state_.topic, "Incorporate the adopted suggestions.",
        {config_.ccv_max_rounds, config_.literal_loop_guard});
    if (!result.finalized)
        state_.warnings.push_back(stage_label + " ended unverified after " +
                                  std::to_string(result.rounds.size()) + " rounds");
    write_artifact("ccv_actors_log.json",
                   ccv_log_to_json(result, agents.action_tag, agents.critic_tag).dump(2) + "\n");
    return parse_script(result.response);
}

AnnotatedScript FilmRun::annotate_cameras(const AnnotatedScript& script) {
    const std::string serialized = serialize_script(script);
    auto sets = std::make_shared<std::array<CameraAnnotationSet, 2>>();

    auto arity_check = [&](const CameraAnnotationSet& set) {
        if (set.scenes.size() != script.scenes.size())
            throw MergeArityMismatch("annotations cover " + std::to_string(set.scenes.size()) +
                                     " scenes, script has " +
                                     std::to_string(script.scenes.size()));
        for (std::size_t s = 0; s < set.scenes.size(); ++s)
            if (set.scenes[s].size() != script.scenes[s].events.size())
                throw MergeArityMismatch(
                    "scene " + std::to_string(s + 1) + " has " +
                    std::to_string(script.scenes[s].events.size()) + " events but " +
                    std::to_string(set.scenes[s].size()) + " shot annotations");
    };

    auto make_peer = [&, sets](int index) {
        const RoleAgent agent = RoleAgent::cinematographer(index + 1);
        DebatePeer peer;
        peer.tag = agent.tag;
        peer.respond = [&, sets, agent, index](const DialogueHistory&) {
            auto vars = base_vars();
            vars["final_script"] = serialized;
            const ojson doc = invoke(agent, provider_, templates_, "cinema", vars, nullptr,
                                     config_.schema_attempts);
            (*sets)[index] = CameraAnnotationSet::from_wire(doc, agent.tag);
            arity_check((*sets)[index]);
            return doc.dump(2);
        };
        peer.feedback = [&, sets, agent, index](const DialogueHistory&, const std::string&,
                                                const std::string&,
                                                const std::optional<std::string>&) {
            AnnotatedScript own = script;
            apply_annotations(own, (*sets)[index], environment_);
            auto vars = base_vars();
            vars["final_script_with_own_annotation"] = serialize_script(own);
            vars["peer_annotation"] = pretty_json((*sets)[1 - index].to_wire());
            const ojson doc = invoke(agent, provider_, templates_, "debate", vars, nullptr,
                                     config_.schema_attempts);
            // adopt only the updates this reviewer marked on its own set
            CameraAnnotationSet review = CameraAnnotationSet::from_wire(doc, agent.tag);
            auto& mine = (*sets)[index];
            for (std::size_t s = 0; s < review.scenes.size() && s < mine.scenes.size(); ++s) {
                const auto& jscene = doc["scene " + std::to_string(s + 1)];
                for (std::size_t e = 0; e < review.scenes[s].size() && e < mine.scenes[s].size();
                     ++e) {
                    const auto& entry = jscene["selected-shot-" + std::to_string(e + 1)];
                    if (!entry.contains("need update") || !truthy(entry["need update"])) continue;
                    const std::string updated = entry.value("updated shot", "None");
                    if (updated == "None" || updated.empty()) continue;
                    mine.scenes[s][e].shot = updated;
                    if (entry.contains("reasoning"))
                        mine.scenes[s][e].reasoning = entry["reasoning"].get<std::string>();
                }
            }
            return doc.dump(2);
        };
        return peer;
    };

    DebateJudge judge;
    judge.tag = RoleAgent::director().tag;
    judge.judge = [&, sets](const DialogueHistory&, const std::string&, const std::string&,
                            const std::string&, const std::string&) {
        auto vars = base_vars();
        vars["final_script"] = serialized;
        vars["peer_annotation_1"] = pretty_json((*sets)[0].to_wire());
        vars["peer_annotation_2"] = pretty_json((*sets)[1].to_wire());
        const ojson doc = invoke(RoleAgent::director(), provider_, templates_, "judge", vars,
                                 nullptr, config_.schema_attempts);
        const auto& better = doc["better"];
        const bool second = (better.is_string() && better.get<std::string>() == "2") ||
                            (better.is_number() && better.get<int>() == 2);
        return Judgment{second ? DebateWinner::Q : DebateWinner::P, doc.value("reason", "")};
    };

    const DebateResult result =
        debate_judge(make_peer(0), make_peer(1), judge, state_.topic,
                     "Annotate every event with the most suitable shot.", config_.debate_rounds);

    write_artifact("debate_log.json", debate_log_to_json(result).dump(2) + "\n");
    for (int i = 0; i < 2; ++i) {
        ojson artifact_doc;
        artifact_doc["author"] = (*sets)[i].author_tag;
        artifact_doc["annotations"] = (*sets)[i].to_wire();
        write_artifact("camera_" + std::to_string(i + 1) + ".json",
                       artifact_doc.dump(2) + "\n");
    }

    const int winner = result.judgment.winner == DebateWinner::P ? 0 : 1;
    log("judge picked cinematographer " + std::to_string(winner + 1));
    AnnotatedScript annotated = script;
    apply_annotations(annotated, (*sets)[winner], environment_);
    recompute_snapshots(annotated, environment_);

    auto errors_of = [&](const std::vector<Diagnostic>& diagnostics) {
        std::vector<Diagnostic> errors;
        for (const auto& d : diagnostics)
            if (d.severity == Severity::Error) errors.push_back(d);
        return errors;
    };
    auto findings = errors_of(validate(annotated, environment_));
    if (!findings.empty()) {
        state_.warnings.push_back("validation gate fixed " + std::to_string(findings.size()) +
                                  " shot finding(s) automatically");
        annotated = apply_suggestions(annotated, findings);
        auto residual = errors_of(validate(annotated, environment_));
        if (!residual.empty()) {
            std::string listing;
            for (const auto& d : residual)
                listing += "\n  " + to_string(d.rule) + " at scene " +
                           std::to_string(d.scene_index + 1) + " event " +
                           std::to_string(d.event_index + 1) + ": " + d.message;
            throw ValidationGateFailed("residual error diagnostics after one fix pass:" +
                                       listing);
        }
    }

    write_artifact("script_cinema.json", serialize_script(annotated));
    mark_complete(Stage::Cinema);
    return annotated;
}

AnnotatedScript FilmRun::assemble(const AnnotatedScript& script) {
    auto diagnostics = validate(script, environment_);
    std::size_t errors = 0, warnings = 0, infos = 0;
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::Error) ++errors;
        else if (d.severity == Severity::Warning) ++warnings;
        else ++infos;
    }
    if (errors > 0)
        throw ValidationGateFailed("assemble requires a script with zero error diagnostics; " +
                                   std::to_string(errors) + " present");

    AnnotatedScript final_script = script;
    final_script.topic = state_.topic;
    recompute_snapshots(final_script, environment_);

    // keep only profiles that are actually on stage
    std::set<std::string> cast;
    for (const auto& scene : final_script.scenes)
        for (const auto& name : scene.info.who) cast.insert(name);
    std::vector<CharacterProfile> used;
    for (const auto& profile : final_script.profiles)
        if (cast.count(profile.name)) used.push_back(profile);
    final_script.profiles = std::move(used);

    write_artifact("script_final.json", serialize_script(final_script));
    write_artifact("storyboard.txt", render_storyboard(final_script, config_.durations));

    ojson manifest;
    manifest["run_id"] = state_.run_id;
    manifest["topic"] = state_.topic;
    manifest["model"] = config_.provider.model_name;
    manifest["config"] = {{"ccv_max_rounds", config_.ccv_max_rounds},
                          {"debate_rounds", config_.debate_rounds},
                          {"schema_attempts", config_.schema_attempts},
                          {"literal_loop_guard", config_.literal_loop_guard},
                          {"words_per_second", config_.durations.words_per_second},
                          {"floor_seconds", config_.durations.floor_seconds},
                          {"move_seconds", config_.durations.move_seconds}};
    std::map<std::string, std::uint64_t> per_agent;
    for (const auto& record : transcript_.records()) ++per_agent[record.agent_tag];
    manifest["calls_per_agent"] = per_agent;
    manifest["stage_call_counts"] = state_.stage_call_counts;
    manifest["validator"] = {{"errors", errors}, {"warnings", warnings}, {"infos", infos}};
    ojson jtimings = ojson::array();
    for (const auto& t : estimate_durations(final_script, config_.durations))
        jtimings.push_back({{"scene", t.scene_index}, {"event", t.event_index},
                            {"seconds", t.seconds}});
    manifest["timings"] = std::move(jtimings);
    manifest["warnings"] = state_.warnings;
    write_artifact("manifest.json", manifest.dump(2) + "\n");

    mark_complete(Stage::Assembled);
    return final_script;
}

RunState FilmRun::run_all(const std::string& topic, bool resume) {
    if (resume && std::filesystem::exists(artifact("state.json"))) {
        const std::string text = read_text_file(artifact("state.json"));
        state_ = RunState::from_json(ojson::parse(text));
        if (state_.run_id.empty()) state_.run_id = config_.run_dir.filename().string();
    }
    state_.topic = topic.empty() ? state_.topic : topic;

    auto done = [&](Stage stage) {
        return state_.completed && stage_rank(*state_.completed) >= stage_rank(stage);
    };
    auto load_script = [&](const std::string& name) {
        return parse_script(read_text_file(artifact(name)));
    };

    IdeaResult idea;
    if (done(Stage::Idea)) {
        for (const auto& jp : ojson::parse(read_text_file(artifact("profiles.json"))))
            idea.profiles.push_back(profile_from_json(jp));
        for (const auto& jo : ojson::parse(read_text_file(artifact("outline.json"))))
            idea.outlines.push_back(outline_from_json(jo));
        log("stage idea reloaded");
    } else {
        idea = develop_idea(state_.topic);
    }

    AnnotatedScript script;
    if (done(Stage::Script1)) {
        script = load_script("script_draft.json");
        log("stage script1 reloaded");
    } else {
        script = draft_script(idea.outlines, idea.profiles);
    }
    script.profiles = idea.profiles;
    script.topic = state_.topic;

    if (done(Stage::Script2)) {
        script = load_script("script_v2.json");
        log("stage script2 reloaded");
    } else {
        script = revise_with_director(script);
    }
    script.profiles = idea.profiles;

    if (done(Stage::Script3)) {
        script = load_script("script_v3.json");
        log("stage script3 reloaded");
    } else {
        script = revise_with_actors(script, idea.profiles);
    }
    script.profiles = idea.profiles;

    if (done(Stage::Cinema)) {
        script = load_script("script_cinema.json");
        log("stage cinema reloaded");
    } else {
        script = annotate_cameras(script);
    }
    script.profiles = idea.profiles;
    script.topic = state_.topic;

    if (!done(Stage::Assembled)) assemble(script);
    return state_;
}

} // namespace filmagent
