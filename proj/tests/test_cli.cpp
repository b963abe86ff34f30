// End-to-end checks of the command-line surface: exit codes are a stable
// contract (0 success, 1 domain error, 2 input/parse error).
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
    const auto dir = std::filesystem::temp_directory_path() / "filmagent_tests";
    std::filesystem::create_directories(dir);
    const auto capture = dir / "cli_output.txt";
    const std::string command = std::string(FILMAGENT_CLI_PATH) + " " + args + " > " +
                                capture.string() + " 2>&1";
    const int status = std::system(command.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = testsupport::read_file(capture);
    return result;
}

std::string q(const std::filesystem::path& path) { return "\"" + path.string() + "\""; }

} // namespace

TEST_CASE("env stats prints the catalog summary and honors strict counts") {
    const auto result = run_cli("env stats " + q(testsupport::data("environment/full.json")));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("15 locations, 65 positions (32 standing / 33 sitting), "
                             "21 actions, 9 shots") != std::string::npos);
    CHECK(result.output.find("Meeting room (capacity 7") != std::string::npos);

    const auto json_result =
        run_cli("--json env stats " + q(testsupport::data("environment/full.json")));
    CHECK(json_result.exit_code == 0);
    CHECK(json_result.output.find("\"positions\":65") != std::string::npos);

    const auto missing = run_cli("env stats /no/such/file.json");
    CHECK(missing.exit_code == 2);

    const auto strict = run_cli("env stats --strict-counts " +
                                q(testsupport::data("environment/livingroom.json")));
    CHECK(strict.exit_code == 2);
}

TEST_CASE("env list names every location") {
    const auto result = run_cli("env list " + q(testsupport::data("environment/full.json")));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("Meeting room (capacity 7)") != std::string::npos);
    CHECK(result.output.find("Roadside (capacity 2)") != std::string::npos);
    CHECK(result.output.find("Truck Shot") != std::string::npos);
}

TEST_CASE("validate: clean golden exits 0 silently, findings exit 1, bad file exits 2") {
    const std::string envarg = " --env " + q(testsupport::data("environment/full.json"));

    const auto clean =
        run_cli("validate " + q(testsupport::fixture("golden/breakup_final.json")) + envarg);
    CHECK(clean.exit_code == 0);
    CHECK(clean.output.empty());

    const auto tracking_still =
        run_cli("validate " + q(testsupport::fixture("cases/tracking_still.json")) + envarg);
    CHECK(tracking_still.exit_code == 1);
    CHECK(tracking_still.output.find("TrackingNeedsMotion") != std::string::npos);
    CHECK(tracking_still.output.find("\"suggestion\":\"Medium Shot\"") != std::string::npos);

    // warnings alone do not fail the lint
    const auto static_run =
        run_cli("validate " + q(testsupport::fixture("cases/static_run.json")) + envarg);
    CHECK(static_run.exit_code == 0);
    CHECK(static_run.output.find("ConsecutiveStaticRepeat") != std::string::npos);

    const auto dir = testsupport::fresh_temp_dir("cli_validate");
    std::ofstream(dir / "broken.json") << "{не json";
    const auto broken = run_cli("validate " + q(dir / "broken.json") + envarg);
    CHECK(broken.exit_code == 2);
}

TEST_CASE("render writes a storyboard for valid scripts and refuses invalid ones") {
    const std::string envarg = " --env " + q(testsupport::data("environment/full.json"));
    const auto dir = testsupport::fresh_temp_dir("cli_render");

    const auto ok = run_cli("render " + q(testsupport::fixture("golden/breakup_final.json")) +
                            envarg + " --out " + q(dir / "board.txt"));
    CHECK(ok.exit_code == 0);
    const std::string board = testsupport::read_file(dir / "board.txt");
    CHECK(board.find("Scene 1: Apartment living room") != std::string::npos);
    CHECK(board.find("[t=") != std::string::npos);

    // halving the rate doubles spoken time: a later timestamp appears
    const auto slow = run_cli("render " +
                              q(testsupport::fixture("golden/breakup_final.json")) + envarg +
                              " --rate 1.0");
    CHECK(slow.exit_code == 0);
    CHECK(slow.output.find("[t=14.0s]") != std::string::npos);

    const auto invalid =
        run_cli("render " + q(testsupport::fixture("cases/hallucinated_action.json")) + envarg);
    CHECK(invalid.exit_code == 1);
    CHECK(invalid.output.find("UnknownAction") != std::string::npos);
}

TEST_CASE("produce --replay runs offline and deterministically") {
    const auto out1 = testsupport::fresh_temp_dir("cli_run1");
    const auto out2 = testsupport::fresh_temp_dir("cli_run2");
    const std::string base = "produce --topic \"a quarrel and breakup scene\" --replay " +
                             q(testsupport::fixture("breakup")) + " --env " +
                             q(testsupport::data("environment/full.json")) + " --templates " +
                             q(testsupport::data("prompts")) + " --quiet --out ";

    const auto first = run_cli(base + q(out1));
    CHECK(first.exit_code == 0);
    CHECK(first.output.find(out1.string()) != std::string::npos);
    CHECK(std::filesystem::exists(out1 / "script_final.json"));

    const auto second = run_cli(base + q(out2));
    CHECK(second.exit_code == 0);
    CHECK(testsupport::read_file(out1 / "script_final.json") ==
          testsupport::read_file(out2 / "script_final.json"));
    CHECK(testsupport::read_file(out1 / "transcript.jsonl") ==
          testsupport::read_file(out2 / "transcript.jsonl"));
}

TEST_CASE("produce --record copies the transcript as a reusable fixture") {
    const auto out = testsupport::fresh_temp_dir("cli_record_run");
    const auto rec = testsupport::fresh_temp_dir("cli_record_fixture");
    const auto result = run_cli("produce --topic \"a quarrel and breakup scene\" --replay " +
                                q(testsupport::fixture("breakup")) + " --env " +
                                q(testsupport::data("environment/full.json")) +
                                " --templates " + q(testsupport::data("prompts")) +
                                " --quiet --out " + q(out) + " --record " + q(rec));
    CHECK(result.exit_code == 0);
    REQUIRE(std::filesystem::exists(rec / "transcript.jsonl"));
    // the recorded fixture replays in turn
    const auto out2 = testsupport::fresh_temp_dir("cli_record_replay");
    const auto again = run_cli("produce --topic \"a quarrel and breakup scene\" --replay " +
                               q(rec) + " --env " +
                               q(testsupport::data("environment/full.json")) +
                               " --templates " + q(testsupport::data("prompts")) +
                               " --quiet --out " + q(out2));
    CHECK(again.exit_code == 0);
    CHECK(testsupport::read_file(out / "script_final.json") ==
          testsupport::read_file(out2 / "script_final.json"));
}

TEST_CASE("produce --resume on a finished run reloads every stage") {
    const auto out = testsupport::fresh_temp_dir("cli_resume");
    const std::string common = " --replay " + q(testsupport::fixture("breakup")) + " --env " +
                               q(testsupport::data("environment/full.json")) +
                               " --templates " + q(testsupport::data("prompts")) + " --quiet";
    const auto first = run_cli("produce --topic \"a quarrel and breakup scene\"" + common +
                               " --out " + q(out));
    REQUIRE(first.exit_code == 0);
    const std::string final_before = testsupport::read_file(out / "script_final.json");
    const std::string transcript_before = testsupport::read_file(out / "transcript.jsonl");

    const auto resumed = run_cli("produce" + common + " --resume " + q(out));
    CHECK(resumed.exit_code == 0);
    CHECK(testsupport::read_file(out / "script_final.json") == final_before);
    CHECK(testsupport::read_file(out / "transcript.jsonl") == transcript_before);
}

TEST_CASE("produce without a key and without replay is an auth failure") {
    const auto out = testsupport::fresh_temp_dir("cli_nokey");
    unsetenv("FILMAGENT_API_KEY");
    const auto result = run_cli("produce --topic \"x\" --quiet --env " +
                                q(testsupport::data("environment/full.json")) +
                                " --templates " + q(testsupport::data("prompts")) +
                                " --out " + q(out));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("AuthError") != std::string::npos);
}

TEST_CASE("a missing replay fixture is an input error naming the setup phase") {
    const auto out = testsupport::fresh_temp_dir("cli_badfixture");
    const auto result = run_cli("produce --topic \"x\" --quiet --replay /no/such/fixture"
                                " --env " + q(testsupport::data("environment/full.json")) +
                                " --templates " + q(testsupport::data("prompts")) +
                                " --out " + q(out));
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("setup failed") != std::string::npos);
}

TEST_CASE("an exhausted fixture fails mid-pipeline and names the failing stage") {
    const auto dir = testsupport::fresh_temp_dir("cli_exhausted");
    // keep only the first four records: the pipeline dies during the draft stage
    std::ofstream shortened(dir / "transcript.jsonl");
    std::ifstream full(testsupport::fixture("breakup/transcript.jsonl"));
    std::string line;
    for (int i = 0; i < 4 && std::getline(full, line); ++i) shortened << line << "\n";
    shortened.close();

    const auto out = testsupport::fresh_temp_dir("cli_exhausted_run");
    const auto result = run_cli("produce --topic \"a quarrel and breakup scene\" --quiet"
                                " --replay " + q(dir / "transcript.jsonl") +
                                " --env " + q(testsupport::data("environment/full.json")) +
                                " --templates " + q(testsupport::data("prompts")) +
                                " --out " + q(out));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("during stage 'script1'") != std::string::npos);
    CHECK(result.output.find("ReplayExhausted") != std::string::npos);
    // partial artifacts from the completed idea stage survive
    CHECK(std::filesystem::exists(out / "profiles.json"));
    CHECK(std::filesystem::exists(out / "outline.json"));
}

TEST_CASE("produce with no topic or resume target is a usage error") {
    const auto result = run_cli("produce --quiet");
    CHECK(result.exit_code == 2);
}

TEST_CASE("a config file sets defaults and flags still win") {
    const auto dir = testsupport::fresh_temp_dir("cli_config");
    std::ofstream(dir / "config.json")
        << "{\"environment\": \"" << testsupport::data("environment/full.json").string()
        << "\"}";
    const auto result = run_cli("--config " + q(dir / "config.json") + " env stats");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("15 locations") != std::string::npos);
}
