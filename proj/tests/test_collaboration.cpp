#include "filmagent/collaboration.hpp"
#include "filmagent/errors.hpp"

#include <doctest.h>

using namespace filmagent;

namespace {

/// Scripted agents with call counters, for pinning the loop contracts.
struct ScriptedCcv {
    int act_calls = 0;
    int critique_calls = 0;
    int verify_calls = 0;
    int finalize_at_verify = -1; // verify call number that approves, -1 = never

    CcvAgents agents() {
        CcvAgents out;
        out.action_tag = "writer";
        out.critic_tag = "director";
        out.act = [this](const DialogueHistory&) {
            return "response " + std::to_string(++act_calls);
        };
        out.critique = [this](const DialogueHistory&, const std::string&) {
            return "critique " + std::to_string(++critique_calls);
        };
        out.verify = [this](const DialogueHistory&, const std::string&, const std::string&) {
            ++verify_calls;
            return Verdict{verify_calls == finalize_at_verify, "verdict"};
        };
        return out;
    }
};

} // namespace

TEST_CASE("ccv with a never-approving critic runs the full budget") {
    ScriptedCcv scripted;
    const CcvResult result =
        critique_correct_verify(scripted.agents(), "ctx", "inst", {3, false});
    CHECK(scripted.act_calls == 3);
    CHECK(scripted.critique_calls == 3);
    CHECK(scripted.verify_calls == 2);
    CHECK(result.response == "response 3"); // always the action agent's last output
    CHECK_FALSE(result.finalized);
    REQUIRE(result.rounds.size() == 3);
    CHECK(result.rounds[0].round == 1);
    CHECK_FALSE(result.rounds[0].verdict.has_value()); // round 1 has nothing to verify
    CHECK(result.rounds[2].verdict.has_value());
}

TEST_CASE("ccv stops early when the critic approves at the round-2 verify") {
    ScriptedCcv scripted;
    scripted.finalize_at_verify = 1;
    const CcvResult result =
        critique_correct_verify(scripted.agents(), "ctx", "inst", {3, false});
    CHECK(scripted.act_calls == 2);
    CHECK(scripted.critique_calls == 1);
    CHECK(scripted.verify_calls == 1);
    CHECK(result.response == "response 2");
    CHECK(result.finalized);
}

TEST_CASE("ccv with a single round: one response, one critique, no verify") {
    ScriptedCcv scripted;
    const CcvResult result =
        critique_correct_verify(scripted.agents(), "ctx", "inst", {1, false});
    CHECK(scripted.act_calls == 1);
    CHECK(scripted.critique_calls == 1);
    CHECK(scripted.verify_calls == 0);
    CHECK(result.response == "response 1");
}

TEST_CASE("the literal loop guard runs the body one extra time") {
    ScriptedCcv scripted;
    const CcvResult result =
        critique_correct_verify(scripted.agents(), "ctx", "inst", {3, true});
    CHECK(scripted.act_calls == 4);
    CHECK(scripted.critique_calls == 4);
    CHECK(scripted.verify_calls == 3);
    CHECK(result.response == "response 4");
}

TEST_CASE("ccv history grows monotonically and starts with context and instruction") {
    std::vector<std::size_t> sizes;
    CcvAgents agents;
    agents.act = [&](const DialogueHistory& history) {
        sizes.push_back(history.size());
        CHECK(history.entries()[0].source == "context");
        CHECK(history.entries()[0].content == "the context");
        CHECK(history.entries()[1].source == "instruction");
        return "r";
    };
    agents.critique = [](const DialogueHistory&, const std::string&) { return "c"; };
    agents.verify = [](const DialogueHistory&, const std::string&, const std::string&) {
        return Verdict{false, ""};
    };
    critique_correct_verify(agents, "the context", "the instruction", {3, false});
    REQUIRE(sizes.size() == 3);
    CHECK(sizes[0] == 2);
    CHECK(sizes[1] == 4); // + [response; critique]
    CHECK(sizes[2] == 6);
}

TEST_CASE("ccv rejects a zero round budget and wraps agent failures") {
    ScriptedCcv scripted;
    CHECK_THROWS_AS(critique_correct_verify(scripted.agents(), "c", "i", {0, false}),
                    AgentError);

    CcvAgents failing = scripted.agents();
    failing.critique = [](const DialogueHistory&, const std::string&) -> std::string {
        throw std::runtime_error("model unreachable");
    };
    CHECK_THROWS_WITH_AS(critique_correct_verify(failing, "c", "i", {2, false}),
                         doctest::Contains("critique failed in round 1"), AgentError);
}

namespace {

struct ScriptedDebate {
    int respond_calls = 0;
    int feedback_calls = 0;
    int judge_calls = 0;
    std::vector<std::string> feedback_seen;

    DebatePeer peer(const std::string& tag) {
        DebatePeer out;
        out.tag = tag;
        out.respond = [this, tag](const DialogueHistory&) {
            ++respond_calls;
            return tag + " response";
        };
        out.feedback = [this, tag](const DialogueHistory&, const std::string& own,
                                   const std::string& peer,
                                   const std::optional<std::string>& peer_feedback) {
            ++feedback_calls;
            CHECK(own == tag + " response");
            CHECK(peer != own);
            if (peer_feedback) feedback_seen.push_back(*peer_feedback);
            return tag + " feedback " + std::to_string(feedback_calls);
        };
        return out;
    }

    DebateJudge judge(DebateWinner winner) {
        DebateJudge out;
        out.tag = "director";
        out.judge = [this, winner](const DialogueHistory&, const std::string& rp,
                                   const std::string& rq, const std::string& fp,
                                   const std::string& fq) {
            ++judge_calls;
            CHECK(rp == "P response");
            CHECK(rq == "Q response");
            CHECK_FALSE(fp.empty());
            CHECK_FALSE(fq.empty());
            return Judgment{winner, "because"};
        };
        return out;
    }
};

} // namespace

TEST_CASE("debate with two rounds makes exactly nine agent calls") {
    ScriptedDebate scripted;
    const DebateResult result = debate_judge(scripted.peer("P"), scripted.peer("Q"),
                                             scripted.judge(DebateWinner::P), "c", "i", 2);
    CHECK(scripted.respond_calls == 2);
    CHECK(scripted.feedback_calls == 6); // initial exchange + 2 rounds of 2
    CHECK(scripted.judge_calls == 1);
    CHECK(scripted.respond_calls + scripted.feedback_calls + scripted.judge_calls == 9);
    CHECK(result.judgment.winner == DebateWinner::P);
    CHECK(result.response_p == "P response");
    CHECK(result.response_q == "Q response");
    CHECK(result.log.size() == 9);
}

TEST_CASE("debate with zero rounds stops after the initial exchange: five calls") {
    ScriptedDebate scripted;
    const DebateResult result = debate_judge(scripted.peer("P"), scripted.peer("Q"),
                                             scripted.judge(DebateWinner::Q), "c", "i", 0);
    CHECK(scripted.respond_calls == 2);
    CHECK(scripted.feedback_calls == 2);
    CHECK(scripted.judge_calls == 1);
    CHECK(result.judgment.winner == DebateWinner::Q);
    // no debate rounds: nobody ever saw peer feedback
    CHECK(scripted.feedback_seen.empty());
}

TEST_CASE("debate rounds pass the freshest peer feedback") {
    ScriptedDebate scripted;
    debate_judge(scripted.peer("P"), scripted.peer("Q"), scripted.judge(DebateWinner::P),
                 "c", "i", 1);
    // round 1: P sees Q's initial feedback (#2), then Q sees P's round-1 feedback (#3)
    REQUIRE(scripted.feedback_seen.size() == 2);
    CHECK(scripted.feedback_seen[0] == "Q feedback 2");
    CHECK(scripted.feedback_seen[1] == "P feedback 3");
}

TEST_CASE("debate call counts scale as 5 + 2M") {
    for (int rounds = 0; rounds <= 4; ++rounds) {
        ScriptedDebate scripted;
        debate_judge(scripted.peer("P"), scripted.peer("Q"), scripted.judge(DebateWinner::P),
                     "c", "i", rounds);
        CHECK(scripted.respond_calls + scripted.feedback_calls + scripted.judge_calls ==
              5 + 2 * rounds);
    }
}

TEST_CASE("debate tags failures with their phase") {
    ScriptedDebate scripted;
    auto p = scripted.peer("P");
    p.respond = [](const DialogueHistory&) -> std::string {
        throw std::runtime_error("down");
    };
    CHECK_THROWS_WITH_AS(debate_judge(p, scripted.peer("Q"), scripted.judge(DebateWinner::P),
                                      "c", "i", 0),
                         doctest::Contains("respond failed"), AgentError);
    CHECK_THROWS_AS(debate_judge(scripted.peer("P"), scripted.peer("Q"),
                                 scripted.judge(DebateWinner::P), "c", "i", -1),
                    AgentError);
}
