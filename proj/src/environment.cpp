#include "filmagent/environment.hpp"

#include "filmagent/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace filmagent {

namespace {

std::string fold_case(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Posture parse_posture(const std::string& s) {
    if (s == "standing") return Posture::Standing;
    if (s == "sitting") return Posture::Sitting;
    throw ParseError("unknown required_state '" + s + "'");
}

StateEffect parse_effect(const std::string& s) {
    if (s == "none") return StateEffect::None;
    if (s == "to_sitting") return StateEffect::ToSitting;
    if (s == "to_standing") return StateEffect::ToStanding;
    throw ParseError("unknown state_effect '" + s + "'");
}

ShotKind parse_kind(const std::string& s) {
    if (s == "static") return ShotKind::Static;
    if (s == "dynamic") return ShotKind::Dynamic;
    throw ParseError("unknown shot kind '" + s + "'");
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const char* where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError(std::string("missing key '") + key + "' in " + where);
    return *it;
}

void check_integrity(const EnvironmentSpec& env) {
    std::set<std::string> location_names;
    for (const auto& loc : env.locations) {
        if (!location_names.insert(fold_case(loc.name)).second)
            throw IntegrityError("duplicate location name: " + loc.name);
        if (loc.capacity < 2)
            throw IntegrityError("location capacity below 2: " + loc.name);
        if (loc.positions.empty())
            throw IntegrityError("location has no positions: " + loc.name);
        std::set<std::string> position_ids;
        for (const auto& pos : loc.positions) {
            if (!position_ids.insert(fold_case(pos.id)).second)
                throw IntegrityError("duplicate position id '" + pos.id + "' in " + loc.name);
            if (pos.description.empty())
                throw IntegrityError("empty description for '" + pos.id + "' in " + loc.name);
        }
    }

    std::set<std::string> action_names; // canonical + aliases share one namespace
    int to_sitting = 0, to_standing = 0;
    for (const auto& act : env.actions) {
        if (!action_names.insert(fold_case(act.canonical_name)).second)
            throw IntegrityError("duplicate action name: " + act.canonical_name);
        for (const auto& alias : act.aliases)
            if (!action_names.insert(fold_case(alias)).second)
                throw IntegrityError("duplicate action alias: " + alias);
        if (act.state_effect == StateEffect::ToSitting) {
            ++to_sitting;
            if (act.required_state != Posture::Standing)
                throw IntegrityError("to_sitting action must require standing: " + act.canonical_name);
        }
        if (act.state_effect == StateEffect::ToStanding) {
            ++to_standing;
            if (act.required_state != Posture::Sitting)
                throw IntegrityError("to_standing action must require sitting: " + act.canonical_name);
        }
    }
    if (!env.actions.empty() && (to_sitting != 1 || to_standing != 1))
        throw IntegrityError("catalog must contain exactly one to_sitting and one to_standing action");

    std::set<std::string> shot_names;
    for (const auto& shot : env.shots) {
        if (!shot_names.insert(fold_case(shot.canonical_name)).second)
            throw IntegrityError("duplicate shot name: " + shot.canonical_name);
        for (const auto& alias : shot.aliases)
            if (!shot_names.insert(fold_case(alias)).second)
                throw IntegrityError("duplicate shot alias: " + alias);
    }
}

void check_counts(const EnvironmentSpec& env) {
    if (env.locations.size() != 15)
        throw IntegrityError("strict counts: expected 15 locations, found " +
                             std::to_string(env.locations.size()));
    const auto positions = env.position_count();
    const auto sittable = env.sittable_count();
    if (positions != 65)
        throw IntegrityError("strict counts: expected 65 positions, found " +
                             std::to_string(positions));
    if (sittable != 33 || positions - sittable != 32)
        throw IntegrityError("strict counts: expected 32 standing + 33 sittable positions, found " +
                             std::to_string(positions - sittable) + " + " + std::to_string(sittable));
    if (env.actions.size() != 21)
        throw IntegrityError("strict counts: expected 21 actions, found " +
                             std::to_string(env.actions.size()));
    if (env.shots.size() != 9)
        throw IntegrityError("strict counts: expected 9 shots, found " +
                             std::to_string(env.shots.size()));
    const auto statics = std::count_if(env.shots.begin(), env.shots.end(),
                                       [](const ShotSpec& s) { return s.kind == ShotKind::Static; });
    if (statics != 3)
        throw IntegrityError("strict counts: expected 3 static and 6 dynamic shots");
}

} // namespace

std::string to_string(Posture p) {
    return p == Posture::Standing ? "standing" : "sitting";
}

std::string to_string(StateEffect e) {
    switch (e) {
    case StateEffect::ToSitting: return "to_sitting";
    case StateEffect::ToStanding: return "to_standing";
    default: return "none";
    }
}

std::string to_string(ShotKind k) {
    return k == ShotKind::Static ? "static" : "dynamic";
}

const PositionSpec* LocationSpec::find_position(std::string_view id) const {
    const auto folded = fold_case(id);
    for (const auto& pos : positions)
        if (fold_case(pos.id) == folded) return &pos;
    return nullptr;
}

const LocationSpec* EnvironmentSpec::find_location(std::string_view name) const {
    const auto folded = fold_case(name);
    for (const auto& loc : locations)
        if (fold_case(loc.name) == folded) return &loc;
    return nullptr;
}

std::size_t EnvironmentSpec::position_count() const {
    std::size_t n = 0;
    for (const auto& loc : locations) n += loc.positions.size();
    return n;
}

std::size_t EnvironmentSpec::sittable_count() const {
    std::size_t n = 0;
    for (const auto& loc : locations)
        n += static_cast<std::size_t>(
            std::count_if(loc.positions.begin(), loc.positions.end(),
                          [](const PositionSpec& p) { return p.sittable; }));
    return n;
}

EnvironmentSpec load_environment(const std::filesystem::path& path, bool strict_counts) {
    std::ifstream in(path);
    if (!in.is_open())
        throw ParseError("cannot open environment file: " + path.string());

    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ParseError("environment file is not valid JSON: " + path.string());
    if (!doc.is_object())
        throw ParseError("environment file must be a JSON object");

    EnvironmentSpec env;
    try {
        for (const auto& jloc : require(doc, "locations", "environment")) {
            LocationSpec loc;
            loc.name = require(jloc, "name", "location").get<std::string>();
            loc.capacity = require(jloc, "capacity", "location").get<int>();
            for (const auto& jpos : require(jloc, "positions", "location")) {
                PositionSpec pos;
                pos.id = require(jpos, "id", "position").get<std::string>();
                pos.description = require(jpos, "description", "position").get<std::string>();
                pos.sittable = require(jpos, "sittable", "position").get<bool>();
                pos.location_id = loc.name;
                loc.positions.push_back(std::move(pos));
            }
            env.locations.push_back(std::move(loc));
        }
        for (const auto& jact : require(doc, "actions", "environment")) {
            ActionSpec act;
            act.canonical_name = require(jact, "canonical_name", "action").get<std::string>();
            act.required_state = parse_posture(require(jact, "required_state", "action").get<std::string>());
            act.state_effect = parse_effect(require(jact, "state_effect", "action").get<std::string>());
            if (jact.contains("aliases"))
                act.aliases = jact["aliases"].get<std::vector<std::string>>();
            env.actions.push_back(std::move(act));
        }
        for (const auto& jshot : require(doc, "shots", "environment")) {
            ShotSpec shot;
            shot.canonical_name = require(jshot, "canonical_name", "shot").get<std::string>();
            shot.kind = parse_kind(require(jshot, "kind", "shot").get<std::string>());
            if (jshot.contains("aliases"))
                shot.aliases = jshot["aliases"].get<std::vector<std::string>>();
            if (jshot.contains("usage_rules"))
                shot.usage_rules = jshot["usage_rules"].get<std::vector<std::string>>();
            env.shots.push_back(std::move(shot));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("environment file: ") + e.what());
    }

    check_integrity(env);
    if (strict_counts) check_counts(env);
    return env;
}

namespace {

template <typename Spec>
const Spec* match_by_name(std::string_view name, const std::vector<Spec>& specs) {
    const auto folded = fold_case(name);
    for (const auto& spec : specs)
        if (fold_case(spec.canonical_name) == folded) return &spec;
    for (const auto& spec : specs)
        for (const auto& alias : spec.aliases)
            if (fold_case(alias) == folded) return &spec;
    return nullptr;
}

template <typename Spec>
std::vector<std::string> canonical_names(const std::vector<Spec>& specs) {
    std::vector<std::string> names;
    names.reserve(specs.size());
    for (const auto& spec : specs) names.push_back(spec.canonical_name);
    return names;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
    }
    return out;
}

} // namespace

const ActionSpec& resolve_action(std::string_view name, const EnvironmentSpec& env) {
    if (const auto* spec = match_by_name(name, env.actions)) return *spec;
    auto near = nearest_names(name, canonical_names(env.actions), 3);
    throw UnknownActionError("unknown action '" + std::string(name) +
                             "'; nearest: " + join(near));
}

const ShotSpec& resolve_shot(std::string_view name, const EnvironmentSpec& env) {
    if (const auto* spec = match_by_name(name, env.shots)) return *spec;
    auto near = nearest_names(name, canonical_names(env.shots), 3);
    throw UnknownShotError("unknown shot '" + std::string(name) +
                           "'; nearest: " + join(near));
}

std::size_t edit_distance(std::string_view a_raw, std::string_view b_raw) {
    const std::string a = fold_case(a_raw);
    const std::string b = fold_case(b_raw);
    std::vector<std::size_t> prev(b.size() + 1), curr(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
    const auto longest = std::max(a.size(), b.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

std::vector<std::string> nearest_names(std::string_view name,
                                       const std::vector<std::string>& catalog,
                                       std::size_t k) {
    std::vector<std::pair<std::size_t, std::string>> scored;
    scored.reserve(catalog.size());
    for (const auto& candidate : catalog)
        scored.emplace_back(edit_distance(name, candidate), candidate);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i)
        out.push_back(scored[i].second);
    return out;
}

} // namespace filmagent
