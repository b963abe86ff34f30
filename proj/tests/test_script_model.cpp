#include "filmagent/errors.hpp"
#include "filmagent/script_model.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace filmagent;
using ojson = nlohmann::ordered_json;

namespace {

// the opening of the breakup script: a move, then an annotated line
const char* kExcerpt = R"([
  {
    "scene information": {
      "who": ["Alex", "Mia"],
      "where": "Apartment living room",
      "what": "Mia confronts Alex about the messages."
    },
    "initial position": [
      {"character": "Mia", "position": "Position D"},
      {"character": "Alex", "position": "Position B"}
    ],
    "scene": [
      {
        "move": {"character": "Mia", "destination": "Position A"},
        "shot": "Track Shot",
        "current position": [
          {"character": "Mia", "position": "Position D"},
          {"character": "Alex", "position": "Position B"}
        ]
      },
      {
        "speaker": "Mia",
        "actions": [
          {"character": "Mia", "state": "standing", "action": "Standing Arguing"}
        ],
        "content": "Alex, what is this? I found messages between you and Lily.",
        "shot": "Medium Shot",
        "current position": [
          {"character": "Mia", "position": "Position A"},
          {"character": "Alex", "position": "Position B"}
        ]
      }
    ]
  }
])";

} // namespace

TEST_CASE("parses the breakup excerpt: move then annotated line") {
    const AnnotatedScript script = parse_script(kExcerpt);
    REQUIRE(script.scenes.size() == 1);
    const Scene& scene = script.scenes[0];
    CHECK(scene.info.where == "Apartment living room");
    CHECK(scene.info.who == std::vector<std::string>{"Alex", "Mia"});
    REQUIRE(scene.events.size() == 2);

    REQUIRE(scene.events[0].is_move());
    CHECK(scene.events[0].move().character == "Mia");
    CHECK(scene.events[0].move().destination == "Position A");
    CHECK(scene.events[0].shot == "Track Shot"); // kept verbatim; the validator normalizes

    const SceneEvent& line = scene.events[1];
    REQUIRE_FALSE(line.is_move());
    CHECK(line.line().speaker == "Mia");
    REQUIRE(line.line().actions.size() == 1);
    CHECK(line.line().actions[0].action == "Standing Arguing");
    CHECK(line.line().actions[0].state == "standing");
    CHECK(line.shot == "Medium Shot");
    REQUIRE(line.current_position.size() == 2);
    CHECK(line.current_position[0] == PositionAssignment{"Mia", "Position A"});
}

TEST_CASE("serialization is deterministic and round-trips") {
    const AnnotatedScript script = parse_script(kExcerpt);
    const std::string once = serialize_script(script);
    const std::string twice = serialize_script(parse_script(once));
    CHECK(once == twice);

    // normalization fixpoint: parse . serialize . parse == parse
    const AnnotatedScript reparsed = parse_script(once);
    CHECK(serialize_script(reparsed) == once);

    // key spellings from the shipped format survive verbatim
    CHECK(once.find("\"scene information\"") != std::string::npos);
    CHECK(once.find("\"initial position\"") != std::string::npos);
    CHECK(once.find("\"current position\"") != std::string::npos);
}

TEST_CASE("schema errors name the missing field") {
    CHECK_THROWS_AS(parse_script("this is not json"), ParseError);
    CHECK_THROWS_WITH_AS(parse_script("[]"), doctest::Contains("scenes"), SchemaError);
    CHECK_THROWS_AS(parse_script("{\"not\": \"a scene array\"}"), SchemaError);

    auto doc = ojson::parse(kExcerpt);
    doc[0].erase("initial position");
    CHECK_THROWS_WITH_AS(parse_script(doc.dump()), doctest::Contains("initial position"),
                         SchemaError);

    auto doc2 = ojson::parse(kExcerpt);
    doc2[0]["scene"][1].erase("content");
    CHECK_THROWS_WITH_AS(parse_script(doc2.dump()), doctest::Contains("content"), SchemaError);

    // four scenes exceed the cap
    auto doc3 = ojson::parse(kExcerpt);
    for (int i = 0; i < 3; ++i) doc3.push_back(doc3[0]);
    CHECK_THROWS_AS(parse_script(doc3.dump()), SchemaError);
}

TEST_CASE("unknown keys are preserved through parse and serialize") {
    auto doc = ojson::parse(kExcerpt);
    doc[0]["mood"] = "tense";
    doc[0]["scene"][1]["camera_note"] = {{"lens", "35mm"}};
    const std::string text = serialize_script(parse_script(doc.dump()));
    CHECK(text.find("\"mood\": \"tense\"") != std::string::npos);
    CHECK(text.find("\"camera_note\"") != std::string::npos);
    CHECK(text.find("\"lens\": \"35mm\"") != std::string::npos);
}

TEST_CASE("round-trip holds on generated scripts with random extras") {
    std::mt19937 rng(20240811);
    const std::vector<std::string> names = {"Ava", "Ben", "Cara", "Raj"};
    for (int iteration = 0; iteration < 100; ++iteration) {
        ojson scenes = ojson::array();
        const int scene_count = 1 + static_cast<int>(rng() % 3);
        for (int s = 0; s < scene_count; ++s) {
            ojson scene;
            scene["scene information"] = {{"who", {"Ava", "Ben"}},
                                          {"where", "Meeting room"},
                                          {"what", "iteration " + std::to_string(iteration)}};
            scene["initial position"] = {{{"character", "Ava"}, {"position", "Position A"}},
                                         {{"character", "Ben"}, {"position", "Position B"}}};
            ojson events = ojson::array();
            const int event_count = 1 + static_cast<int>(rng() % 5);
            for (int e = 0; e < event_count; ++e) {
                ojson event;
                if (rng() % 4 == 0) {
                    event["move"] = {{"character", names[rng() % names.size()]},
                                     {"destination", "Position C"}};
                } else {
                    event["speaker"] = names[rng() % names.size()];
                    event["actions"] = {{{"character", "Ava"},
                                         {"state", rng() % 2 ? "standing" : "sitting"},
                                         {"action", "Standing Talking"}}};
                    event["content"] = "line " + std::to_string(e);
                }
                if (rng() % 2) event["shot"] = "Medium Shot";
                if (rng() % 3 == 0) event["extra_key_" + std::to_string(e)] = int(rng() % 100);
                events.push_back(std::move(event));
            }
            scene["scene"] = std::move(events);
            if (rng() % 3 == 0) scene["scene_note"] = "kept";
            scenes.push_back(std::move(scene));
        }
        const std::string text = scenes.dump(2);
        const std::string normalized = serialize_script(parse_script(text));
        // fixpoint from the first normalization on
        CHECK(serialize_script(parse_script(normalized)) == normalized);
        // semantic equality with the original document
        CHECK(ojson::parse(normalized) == ojson::parse(serialize_script(parse_script(text))));
    }
}

TEST_CASE("duration estimation: rate, floor, move length") {
    AnnotatedScript script;
    Scene scene;
    scene.info = {{"Ava", "Ben"}, "Meeting room", "timing"};
    scene.initial_position = {{"Ava", "Position A"}, {"Ben", "Position B"}};

    SceneEvent ten_words;
    ten_words.body = LineEvent{"Ava", "one two three four five six seven eight nine ten", {}};
    SceneEvent one_word;
    one_word.body = LineEvent{"Ben", "hi", {}};
    SceneEvent walk;
    walk.body = MoveEvent{"Ava", "Position C"};
    scene.events = {ten_words, one_word, walk};
    script.scenes.push_back(scene);

    const auto timings = estimate_durations(script, {2.5, 1.5, 3.0});
    REQUIRE(timings.size() == 3);
    CHECK(timings[0].seconds == doctest::Approx(4.0)); // 10 words / 2.5 wps
    CHECK(timings[1].seconds == doctest::Approx(1.5)); // floor clamps
    CHECK(timings[2].seconds == doctest::Approx(3.0)); // fixed move duration

    SUBCASE("adding words never shortens a line") {
        std::mt19937 rng(7);
        std::string content;
        double previous = 0.0;
        for (int words = 1; words <= 40; ++words) {
            content += (words > 1 ? " w" : "w");
            script.scenes[0].events[0].body = LineEvent{"Ava", content, {}};
            const double seconds = estimate_durations(script, {2.5, 1.5, 3.0})[0].seconds;
            CHECK(seconds >= previous);
            previous = seconds;
            (void)rng;
        }
    }
}

TEST_CASE("profile parsing enforces the single-word name and gender set") {
    ojson good = {{"name", "Dana"},          {"age", "34"},
                  {"gender", "female"},      {"occupation", "therapist"},
                  {"personality traits", "empathetic, patient"},
                  {"speaking style", "soothing, deliberate, therapeutic"}};
    const CharacterProfile profile = profile_from_json(good);
    CHECK(profile.name == "Dana");
    CHECK(profile.speaking_style == "soothing, deliberate, therapeutic");
    CHECK(profile_to_json(profile) == good);

    ojson two_words = good;
    two_words["name"] = "Dana Lee";
    CHECK_THROWS_AS(profile_from_json(two_words), SchemaError);
    ojson bad_gender = good;
    bad_gender["gender"] = "unknown";
    CHECK_THROWS_AS(profile_from_json(bad_gender), SchemaError);
    ojson missing = good;
    missing.erase("speaking style");
    CHECK_THROWS_AS(profile_from_json(missing), SchemaError);
}

TEST_CASE("outline json round-trip") {
    SceneOutline outline{"The discovery", {"Mia", "Alex"}, "Apartment living room",
                         "Mia confronts Alex.", "Mia demands the truth."};
    const auto doc = outline_to_json(outline);
    CHECK(doc["sub-topic"] == "The discovery");
    const SceneOutline back = outline_from_json(doc);
    CHECK(back.selected_characters == outline.selected_characters);
    CHECK(back.dialogue_goal == outline.dialogue_goal);

    auto broken = doc;
    broken.erase("selected-location");
    CHECK_THROWS_AS(outline_from_json(broken), SchemaError);
}
