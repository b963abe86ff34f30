#include "filmagent/environment.hpp"
#include "filmagent/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>

#include <json.hpp>

using namespace filmagent;

namespace {

EnvironmentSpec full_env() {
    return load_environment(testsupport::data("environment/full.json"), true);
}

} // namespace

TEST_CASE("shipped full environment carries the whole catalog") {
    const auto env = full_env();
    CHECK(env.locations.size() == 15);
    CHECK(env.position_count() == 65);
    CHECK(env.sittable_count() == 33);
    CHECK(env.position_count() - env.sittable_count() == 32);
    CHECK(env.actions.size() == 21);
    CHECK(env.shots.size() == 9);

    const auto* meeting = env.find_location("Meeting room");
    REQUIRE(meeting != nullptr);
    CHECK(meeting->capacity == 7);
    const auto* roadside = env.find_location("Roadside");
    REQUIRE(roadside != nullptr);
    CHECK(roadside->capacity == 2);

    int statics = 0;
    for (const auto& shot : env.shots)
        if (shot.kind == ShotKind::Static) ++statics;
    CHECK(statics == 3);
}

TEST_CASE("living room sample loads without strict counts") {
    const auto env = load_environment(testsupport::data("environment/livingroom.json"));
    CHECK(env.locations.size() == 1);
    CHECK(env.actions.size() == 21);
    CHECK(env.shots.size() == 9);
    CHECK_THROWS_AS(load_environment(testsupport::data("environment/livingroom.json"), true),
                    IntegrityError);

    const auto* living = env.find_location("Apartment living room");
    REQUIRE(living != nullptr);
    REQUIRE(living->positions.size() == 4);
    CHECK_FALSE(living->find_position("Position A")->sittable);
    CHECK(living->find_position("Position B")->sittable);
    CHECK(living->find_position("position b") != nullptr); // lookups fold case
}

TEST_CASE("integrity violations name the failing invariant") {
    const auto dir = testsupport::fresh_temp_dir("env_integrity");
    auto doc = nlohmann::json::parse(
        testsupport::read_file(testsupport::data("environment/livingroom.json")));

    SUBCASE("duplicate location names") {
        doc["locations"].push_back(doc["locations"][0]);
        std::ofstream(dir / "dup.json") << doc.dump();
        CHECK_THROWS_WITH_AS(load_environment(dir / "dup.json"),
                             doctest::Contains("duplicate location"), IntegrityError);
    }
    SUBCASE("capacity below two") {
        doc["locations"][0]["capacity"] = 1;
        std::ofstream(dir / "cap.json") << doc.dump();
        CHECK_THROWS_WITH_AS(load_environment(dir / "cap.json"),
                             doctest::Contains("capacity"), IntegrityError);
    }
    SUBCASE("alias colliding with a canonical name") {
        doc["actions"][0]["aliases"].push_back("Stand Up");
        std::ofstream(dir / "alias.json") << doc.dump();
        CHECK_THROWS_AS(load_environment(dir / "alias.json"), IntegrityError);
    }
    SUBCASE("malformed json is a parse error") {
        std::ofstream(dir / "bad.json") << "{not json";
        CHECK_THROWS_AS(load_environment(dir / "bad.json"), ParseError);
        CHECK_THROWS_AS(load_environment(dir / "missing.json"), ParseError);
    }
}

TEST_CASE("posture-changing actions must pair with the right required state") {
    const auto dir = testsupport::fresh_temp_dir("env_pairing");
    auto doc = nlohmann::json::parse(
        testsupport::read_file(testsupport::data("environment/livingroom.json")));
    for (auto& action : doc["actions"])
        if (action["canonical_name"] == "Sit Down") action["required_state"] = "sitting";
    std::ofstream(dir / "pairing.json") << doc.dump();
    CHECK_THROWS_WITH_AS(load_environment(dir / "pairing.json"),
                         doctest::Contains("to_sitting"), IntegrityError);
}

TEST_CASE("action resolution: canonical, alias, case-insensitive, unknown") {
    const auto env = full_env();
    CHECK(resolve_action("Sitting Claping", env).canonical_name == "Sitting Clapping");
    CHECK(resolve_action("sit down", env).canonical_name == "Sit Down");
    CHECK(resolve_action("STANDING TALKING", env).canonical_name == "Standing Talking");
    CHECK_THROWS_AS(resolve_action("Standing Suggest", env), UnknownActionError);

    try {
        resolve_action("Standing Suggest", env);
    } catch (const UnknownActionError& e) {
        // the message offers the three nearest catalog names
        const std::string what = e.what();
        CHECK(what.find("nearest") != std::string::npos);
    }

    CHECK(resolve_action("Sit Down", env).state_effect == StateEffect::ToSitting);
    CHECK(resolve_action("Stand Up", env).state_effect == StateEffect::ToStanding);
    CHECK(resolve_action("Stand Up", env).required_state == Posture::Sitting);
}

TEST_CASE("shot resolution absorbs the naming drift") {
    const auto env = full_env();
    CHECK(resolve_shot("Track Shot", env).canonical_name == "Tracking Shot");
    CHECK(resolve_shot("Follow Shot", env).canonical_name == "Tracking Shot");
    CHECK(resolve_shot("360 Degrees Shot", env).canonical_name == "360-Degree Arc Shot");
    CHECK(resolve_shot("close-up shot", env).canonical_name == "Close-up Shot");
    CHECK_THROWS_AS(resolve_shot("Dolly Zoom", env), UnknownShotError);
}

TEST_CASE("resolution is an idempotent normalization over the alias universe") {
    const auto env = full_env();
    for (const auto& action : env.actions) {
        std::vector<std::string> names = action.aliases;
        names.push_back(action.canonical_name);
        for (const auto& name : names) {
            const auto& once = resolve_action(name, env);
            CHECK(resolve_action(once.canonical_name, env).canonical_name ==
                  once.canonical_name);
            CHECK(once.canonical_name == action.canonical_name);
        }
    }
    for (const auto& shot : env.shots) {
        std::vector<std::string> names = shot.aliases;
        names.push_back(shot.canonical_name);
        for (const auto& name : names)
            CHECK(resolve_shot(name, env).canonical_name == shot.canonical_name);
    }
}

TEST_CASE("every usage rule string on a shot names a real rule") {
    const auto env = full_env();
    const std::vector<std::string> known = {
        "OpeningShotRule", "ZoomNeedsLong", "TruckOnlyOpening", "TrackingNeedsMotion",
        "PanRunRule", "CurveSurroundFirstAppearance", "ConsecutiveStaticRepeat"};
    for (const auto& shot : env.shots)
        for (const auto& rule : shot.usage_rules)
            CHECK(std::find(known.begin(), known.end(), rule) != known.end());
}

TEST_CASE("edit distance and nearest names") {
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("Same", "same") == 0);
    CHECK(normalized_edit_distance("", "") == 0.0);
    CHECK(normalized_edit_distance("abcd", "") == 1.0);

    const std::vector<std::string> catalog = {"Pan Shot", "Zoom Shot", "Long Shot"};
    const auto near = nearest_names("Pam Shot", catalog, 2);
    REQUIRE(near.size() == 2);
    CHECK(near[0] == "Pan Shot");
}
