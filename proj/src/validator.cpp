#include "filmagent/validator.hpp"

#include "filmagent/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace filmagent {

namespace {

constexpr std::array<const char*, 17> kRuleNames = {
    "UnknownAction",      "UnknownShot",
    "StateMismatch",      "DoubleAction",
    "SitUnsittable",      "IllegalStateChange",
    "PositionCollision",  "CapacityExceeded",
    "UnknownPosition",    "OpeningShotRule",
    "ZoomNeedsLong",      "TruckOnlyOpening",
    "TrackingNeedsMotion", "PanRunRule",
    "CurveSurroundFirstAppearance", "ConsecutiveStaticRepeat",
    "PositionSnapshotMismatch",
};

std::string fold_case(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const ActionSpec* try_resolve_action(const std::string& name, const EnvironmentSpec& env) {
    try {
        return &resolve_action(name, env);
    } catch (const UnknownActionError&) {
        return nullptr;
    }
}

const ShotSpec* try_resolve_shot(const std::string& name, const EnvironmentSpec& env) {
    try {
        return &resolve_shot(name, env);
    } catch (const UnknownShotError&) {
        return nullptr;
    }
}

struct Finder {
    const AnnotatedScript& script;
    const EnvironmentSpec& env;
    const ValidatorConfig& config;
    std::vector<Diagnostic> out;

    void add(RuleId rule, Severity severity, std::size_t scene, std::size_t event,
             std::string message, std::optional<std::string> suggestion = std::nullopt,
             std::optional<FixTarget> fix = std::nullopt) {
        out.push_back({rule, severity, scene, event, std::move(message),
                       std::move(suggestion), std::move(fix)});
    }

    /// Nearest catalog action with a compatible required posture, inside the
    /// distance cutoff; known hallucinations resolve through the fix table.
    std::optional<std::string> suggest_action(const std::string& name, Posture posture) const {
        auto fixed = config.known_action_fixes.find(fold_case(name));
        if (fixed != config.known_action_fixes.end()) return fixed->second;
        std::optional<std::string> best;
        double best_distance = config.suggestion_max_distance;
        for (const auto& action : env.actions) {
            if (action.required_state != posture) continue;
            const double d = normalized_edit_distance(name, action.canonical_name);
            if (d <= best_distance && (!best || d < best_distance)) {
                best = action.canonical_name;
                best_distance = d;
            }
        }
        return best;
    }

    std::optional<std::string> suggest_shot(const std::string& name) const {
        std::optional<std::string> best;
        double best_distance = config.suggestion_max_distance;
        for (const auto& shot : env.shots) {
            const double d = normalized_edit_distance(name, shot.canonical_name);
            if (d <= best_distance && (!best || d < best_distance)) {
                best = shot.canonical_name;
                best_distance = d;
            }
        }
        return best;
    }
};

Posture initial_posture(const Scene& scene, const std::string& character) {
    for (const auto& event : scene.events) {
        if (event.is_move()) continue;
        for (const auto& action : event.line().actions)
            if (action.character == character)
                return action.state == "sitting" ? Posture::Sitting : Posture::Standing;
    }
    return Posture::Standing;
}

/// Replays the scene, optionally collecting diagnostics. When `finder` is
/// null, an unknown move destination throws instead.
StateTrace trace_scene(const Scene& scene, const EnvironmentSpec& env,
                       Finder* finder, std::size_t scene_index) {
    const LocationSpec* location = env.find_location(scene.info.where);
    if (!location && finder && !scene.events.empty())
        finder->add(RuleId::UnknownPosition, Severity::Error, scene_index, 0,
                    "unknown location '" + scene.info.where + "'");

    StateTrace trace;
    std::map<std::string, CharacterState> state;
    for (const auto& assignment : scene.initial_position) {
        CharacterState cs;
        cs.position = assignment.position;
        cs.posture = initial_posture(scene, assignment.character);
        if (finder && location && !location->find_position(assignment.position) &&
            !scene.events.empty())
            finder->add(RuleId::UnknownPosition, Severity::Error, scene_index, 0,
                        "initial position '" + assignment.position + "' of " +
                            assignment.character + " not in " + scene.info.where);
        state[assignment.character] = std::move(cs);
    }
    trace.push_back(state);

    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        const auto& event = scene.events[e];
        if (event.is_move()) {
            const auto& move = event.move();
            const PositionSpec* destination =
                location ? location->find_position(move.destination) : nullptr;
            if (!destination && location) {
                if (!finder)
                    throw UnknownPositionError("destination '" + move.destination +
                                               "' not in " + scene.info.where);
                std::optional<std::string> suggestion;
                std::optional<FixTarget> fix;
                std::vector<std::string> ids;
                for (const auto& p : location->positions) ids.push_back(p.id);
                auto near = nearest_names(move.destination, ids, 1);
                if (!near.empty() &&
                    normalized_edit_distance(move.destination, near.front()) <=
                        finder->config.suggestion_max_distance) {
                    suggestion = near.front();
                    fix = FixTarget{FixField::Destination, scene_index, e, 0};
                }
                finder->add(RuleId::UnknownPosition, Severity::Error, scene_index, e,
                            "destination '" + move.destination + "' not in " +
                                scene.info.where,
                            std::move(suggestion), std::move(fix));
                // character stays put so the rest of the replay stays coherent
            } else {
                auto it = state.find(move.character);
                if (it != state.end()) it->second.position = move.destination;
            }
        } else {
            std::set<std::string> acted; // DoubleAction guard: first entry wins
            for (const auto& annotation : event.line().actions) {
                auto it = state.find(annotation.character);
                if (it == state.end()) continue; // actor not on stage; merge-time concern
                if (!acted.insert(annotation.character).second) continue;
                if (const auto* spec = try_resolve_action(annotation.action, env)) {
                    if (spec->state_effect == StateEffect::ToSitting)
                        it->second.posture = Posture::Sitting;
                    else if (spec->state_effect == StateEffect::ToStanding)
                        it->second.posture = Posture::Standing;
                }
            }
        }
        trace.push_back(state);
    }
    return trace;
}

void check_scene_shape(Finder& f, const Scene& scene, std::size_t s) {
    if (scene.events.empty()) return;
    if (const auto* location = f.env.find_location(scene.info.where)) {
        if (scene.info.who.size() > static_cast<std::size_t>(location->capacity))
            f.add(RuleId::CapacityExceeded, Severity::Error, s, 0,
                  scene.info.where + " holds at most " + std::to_string(location->capacity) +
                      " characters, scene has " + std::to_string(scene.info.who.size()));
    }
}

void check_collisions(Finder& f, const Scene& scene, const StateTrace& trace, std::size_t s) {
    auto collisions = [](const std::map<std::string, CharacterState>& state) {
        std::set<std::pair<std::string, std::string>> pairs;
        for (auto a = state.begin(); a != state.end(); ++a)
            for (auto b = std::next(a); b != state.end(); ++b)
                if (a->second.position == b->second.position)
                    pairs.insert({a->first, b->first});
        return pairs;
    };

    if (scene.events.empty()) return;
    auto previous = collisions(trace[0]);
    for (const auto& [a, b] : previous)
        f.add(RuleId::PositionCollision, Severity::Error, s, 0,
              a + " and " + b + " both start at " + trace[0].at(a).position);
    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        auto current = collisions(trace[e + 1]);
        for (const auto& [a, b] : current)
            if (!previous.count({a, b}))
                f.add(RuleId::PositionCollision, Severity::Error, s, e,
                      a + " and " + b + " share " + trace[e + 1].at(a).position);
        previous = std::move(current);
    }
}

void check_actions(Finder& f, const Scene& scene, const StateTrace& trace, std::size_t s) {
    const LocationSpec* location = f.env.find_location(scene.info.where);
    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        const auto& event = scene.events[e];
        if (event.is_move()) continue;
        const auto& actions = event.line().actions;

        std::map<std::string, int> per_character;
        for (const auto& annotation : actions) ++per_character[annotation.character];
        for (const auto& [character, count] : per_character)
            if (count > 1)
                f.add(RuleId::DoubleAction, Severity::Error, s, e,
                      character + " has " + std::to_string(count) +
                          " actions on one line; at most one is allowed");

        for (std::size_t i = 0; i < actions.size(); ++i) {
            const auto& annotation = actions[i];
            auto derived_it = trace[e].find(annotation.character);
            const Posture derived =
                derived_it != trace[e].end() ? derived_it->second.posture : Posture::Standing;

            const ActionSpec* spec = try_resolve_action(annotation.action, f.env);
            if (!spec) {
                auto suggestion = f.suggest_action(annotation.action, derived);
                std::optional<FixTarget> fix;
                if (suggestion) fix = FixTarget{FixField::ActionName, s, e, i};
                f.add(RuleId::UnknownAction, Severity::Error, s, e,
                      "action '" + annotation.action + "' is not in the action catalog",
                      std::move(suggestion), std::move(fix));
                continue;
            }

            if (spec->canonical_name != annotation.action)
                f.add(RuleId::UnknownAction, Severity::Info, s, e,
                      "'" + annotation.action + "' normalizes to '" + spec->canonical_name + "'",
                      spec->canonical_name, FixTarget{FixField::ActionName, s, e, i});

            if (spec->required_state != derived) {
                // prefer swapping the posture family prefix, else the plain talker
                std::optional<std::string> suggestion;
                const std::string& name = spec->canonical_name;
                std::string swapped;
                if (name.rfind("Standing ", 0) == 0)
                    swapped = "Sitting " + name.substr(9);
                else if (name.rfind("Sitting ", 0) == 0)
                    swapped = "Standing " + name.substr(8);
                if (!swapped.empty()) {
                    if (const auto* alt = try_resolve_action(swapped, f.env))
                        if (alt->required_state == derived) suggestion = alt->canonical_name;
                }
                if (!suggestion)
                    suggestion = derived == Posture::Sitting ? "Sitting Talking" : "Standing Talking";
                f.add(RuleId::StateMismatch, Severity::Error, s, e,
                      annotation.character + " is " + to_string(derived) + " but '" +
                          spec->canonical_name + "' requires " + to_string(spec->required_state),
                      std::move(suggestion), FixTarget{FixField::ActionName, s, e, i});
            }

            if (spec->state_effect == StateEffect::ToSitting && location &&
                derived_it != trace[e].end()) {
                const auto* position = location->find_position(derived_it->second.position);
                if (position && !position->sittable)
                    f.add(RuleId::SitUnsittable, Severity::Error, s, e,
                          annotation.character + " cannot sit at " + position->id +
                              " (not sittable)",
                          "Standing Normal", FixTarget{FixField::ActionName, s, e, i});
            }

            if (annotation.state != to_string(derived))
                f.add(RuleId::IllegalStateChange, Severity::Error, s, e,
                      annotation.character + " is annotated '" + annotation.state +
                          "' but the replayed state is " + to_string(derived) +
                          "; only Sit Down or Stand Up change posture");
        }
    }
}

void check_shots(Finder& f, const Scene& scene, std::size_t s) {
    // canonical shot names, empty where missing or unresolvable
    std::vector<std::string> canonical(scene.events.size());
    std::vector<const ShotSpec*> specs(scene.events.size(), nullptr);
    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        const auto& event = scene.events[e];
        if (!event.shot) continue;
        specs[e] = try_resolve_shot(*event.shot, f.env);
        if (!specs[e]) {
            auto suggestion = f.suggest_shot(*event.shot);
            std::optional<FixTarget> fix;
            if (suggestion) fix = FixTarget{FixField::Shot, s, e, 0};
            f.add(RuleId::UnknownShot, Severity::Error, s, e,
                  "shot '" + *event.shot + "' is not in the shot catalog",
                  std::move(suggestion), std::move(fix));
            continue;
        }
        canonical[e] = specs[e]->canonical_name;
        if (canonical[e] != *event.shot)
            f.add(RuleId::UnknownShot, Severity::Info, s, e,
                  "'" + *event.shot + "' normalizes to '" + canonical[e] + "'",
                  canonical[e], FixTarget{FixField::Shot, s, e, 0});
    }

    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        if (canonical[e].empty()) continue;
        const auto& event = scene.events[e];
        const std::string& shot = canonical[e];

        if (e == 0) {
            const bool tracked_entrance = event.is_move() && shot == "Tracking Shot";
            if (shot != "Truck Shot" && shot != "Long Shot" && !tracked_entrance)
                f.add(RuleId::OpeningShotRule, Severity::Error, s, 0,
                      "scene opens with " + shot +
                          "; use Truck Shot or Long Shot to set the context",
                      "Long Shot", FixTarget{FixField::Shot, s, 0, 0});
        } else if (shot == "Truck Shot") {
            const std::string replacement = event.is_move() ? "Tracking Shot" : "Medium Shot";
            f.add(RuleId::TruckOnlyOpening, Severity::Error, s, e,
                  "Truck Shot is only allowed as a scene's opening shot",
                  replacement, FixTarget{FixField::Shot, s, e, 0});
        }

        if (shot == "Zoom Shot") {
            if (e == 0)
                f.add(RuleId::ZoomNeedsLong, Severity::Error, s, e,
                      "Zoom Shot has no preceding Long Shot",
                      "Long Shot", FixTarget{FixField::Shot, s, e, 0});
            else if (canonical[e - 1] != "Long Shot")
                f.add(RuleId::ZoomNeedsLong, Severity::Error, s, e,
                      "Zoom Shot must follow a Long Shot; replace the preceding shot",
                      "Long Shot", FixTarget{FixField::Shot, s, e - 1, 0});
        }

        if (shot == "Tracking Shot" && !event.is_move())
            f.add(RuleId::TrackingNeedsMotion, Severity::Error, s, e,
                  "Tracking Shot on a line where " + event.subject() + " is not moving",
                  "Medium Shot", FixTarget{FixField::Shot, s, e, 0});
    }

    // isolated Pan Shot during dialogue: the tension usage wants a run
    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        if (canonical[e] != "Pan Shot" || scene.events[e].is_move()) continue;
        const bool before = e > 0 && canonical[e - 1] == "Pan Shot";
        const bool after = e + 1 < scene.events.size() && canonical[e + 1] == "Pan Shot";
        if (!before && !after)
            f.add(RuleId::PanRunRule, Severity::Warning, s, e,
                  "a single Pan Shot during dialogue; use several in a row or a different shot");
    }

    // runs of one identical static shot
    std::size_t run = 0;
    std::string run_shot;
    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        const bool is_static = specs[e] && specs[e]->kind == ShotKind::Static;
        if (is_static && canonical[e] == run_shot) {
            ++run;
        } else if (is_static) {
            run_shot = canonical[e];
            run = 1;
        } else {
            run_shot.clear();
            run = 0;
        }
        if (run > static_cast<std::size_t>(f.config.consecutive_static_threshold)) {
            const std::string replacement =
                run_shot == "Close-up Shot" ? "Medium Shot" : "Close-up Shot";
            f.add(RuleId::ConsecutiveStaticRepeat, Severity::Warning, s, e,
                  std::to_string(run) + " consecutive " + run_shot +
                      "s make the scene feel static; vary the shot",
                  replacement, FixTarget{FixField::Shot, s, e, 0});
        }
    }
}

void check_snapshots(Finder& f, const Scene& scene, const StateTrace& trace, std::size_t s) {
    for (std::size_t e = 0; e < scene.events.size(); ++e) {
        const auto& snapshot = scene.events[e].current_position;
        if (snapshot.empty()) continue;
        const auto& derived = trace[e];
        for (std::size_t i = 0; i < snapshot.size(); ++i) {
            auto it = derived.find(snapshot[i].character);
            if (it == derived.end()) {
                f.add(RuleId::PositionSnapshotMismatch, Severity::Warning, s, e,
                      "snapshot lists " + snapshot[i].character + " who is not on stage");
                continue;
            }
            if (it->second.position != snapshot[i].position)
                f.add(RuleId::PositionSnapshotMismatch, Severity::Warning, s, e,
                      "snapshot places " + snapshot[i].character + " at " +
                          snapshot[i].position + " but the replayed position is " +
                          it->second.position,
                      it->second.position,
                      FixTarget{FixField::SnapshotPosition, s, e, i});
        }
    }
}

void check_first_appearances(Finder& f) {
    std::set<std::string> seen;
    for (std::size_t s = 0; s < f.script.scenes.size(); ++s) {
        const auto& scene = f.script.scenes[s];
        for (std::size_t e = 0; e < scene.events.size(); ++e) {
            const auto& event = scene.events[e];
            const std::string& subject = event.subject();
            const bool first_appearance = !seen.count(subject);
            if (event.shot) {
                const auto* spec = try_resolve_shot(*event.shot, f.env);
                if (spec && spec->canonical_name == "Curve Surround Shot" && !first_appearance) {
                    const std::string replacement =
                        event.is_move() ? "Tracking Shot" : "360-Degree Arc Shot";
                    f.add(RuleId::CurveSurroundFirstAppearance, Severity::Error, s, e,
                          "Curve Surround Shot on " + subject +
                              " who already appeared earlier in the script",
                          replacement, FixTarget{FixField::Shot, s, e, 0});
                }
            }
            seen.insert(subject);
        }
    }
}

} // namespace

std::string to_string(RuleId rule) {
    return kRuleNames[static_cast<std::size_t>(rule)];
}

std::string to_string(Severity severity) {
    switch (severity) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    default: return "info";
    }
}

std::optional<RuleId> rule_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kRuleNames.size(); ++i)
        if (name == kRuleNames[i]) return static_cast<RuleId>(i);
    return std::nullopt;
}

StateTrace derive_state_trace(const Scene& scene, const EnvironmentSpec& env) {
    return trace_scene(scene, env, nullptr, 0);
}

std::vector<Diagnostic> validate(const AnnotatedScript& script, const EnvironmentSpec& env,
                                 const ValidatorConfig& config) {
    Finder finder{script, env, config, {}};
    for (std::size_t s = 0; s < script.scenes.size(); ++s) {
        const auto& scene = script.scenes[s];
        check_scene_shape(finder, scene, s);
        const StateTrace trace = trace_scene(scene, env, &finder, s);
        check_collisions(finder, scene, trace, s);
        check_actions(finder, scene, trace, s);
        check_shots(finder, scene, s);
        check_snapshots(finder, scene, trace, s);
    }
    check_first_appearances(finder);

    std::stable_sort(finder.out.begin(), finder.out.end(),
                     [](const Diagnostic& a, const Diagnostic& b) {
                         return std::tie(a.scene_index, a.event_index, a.rule) <
                                std::tie(b.scene_index, b.event_index, b.rule);
                     });
    return finder.out;
}

AnnotatedScript apply_suggestions(const AnnotatedScript& script,
                                  const std::vector<Diagnostic>& diagnostics) {
    // per target, the most severe suggestion wins (an error fix overrides an
    // info alias normalization); equal-severity disagreements are conflicts
    std::map<FixTarget, std::pair<Severity, std::string>> fixes;
    for (const auto& d : diagnostics) {
        if (!d.suggestion || !d.fix) continue;
        auto it = fixes.find(*d.fix);
        if (it == fixes.end()) {
            fixes.emplace(*d.fix, std::make_pair(d.severity, *d.suggestion));
            continue;
        }
        if (d.severity < it->second.first) {
            it->second = {d.severity, *d.suggestion};
        } else if (d.severity == it->second.first && it->second.second != *d.suggestion) {
            throw ConflictingSuggestions(
                "two suggestions target scene " + std::to_string(d.fix->scene_index) +
                " event " + std::to_string(d.fix->event_index) + ": '" + it->second.second +
                "' vs '" + *d.suggestion + "'");
        }
    }

    AnnotatedScript result = script;
    for (const auto& [target, fix] : fixes) {
        const std::string& value = fix.second;
        if (target.scene_index >= result.scenes.size()) continue;
        auto& scene = result.scenes[target.scene_index];
        if (target.event_index >= scene.events.size()) continue;
        auto& event = scene.events[target.event_index];
        switch (target.field) {
        case FixField::Shot:
            event.shot = value;
            break;
        case FixField::ActionName:
            if (!event.is_move() && target.entry_index < event.line().actions.size())
                event.line().actions[target.entry_index].action = value;
            break;
        case FixField::Destination:
            if (event.is_move()) std::get<MoveEvent>(event.body).destination = value;
            break;
        case FixField::SnapshotPosition:
            if (target.entry_index < event.current_position.size())
                event.current_position[target.entry_index].position = value;
            break;
        }
    }
    return result;
}

nlohmann::ordered_json diagnostic_to_json(const Diagnostic& d) {
    nlohmann::ordered_json out;
    out["rule"] = to_string(d.rule);
    out["severity"] = to_string(d.severity);
    out["scene"] = d.scene_index;
    out["event"] = d.event_index;
    out["message"] = d.message;
    if (d.suggestion) out["suggestion"] = *d.suggestion;
    return out;
}

} // namespace filmagent
