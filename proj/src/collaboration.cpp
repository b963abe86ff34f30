#include "filmagent/collaboration.hpp"

#include "filmagent/errors.hpp"

namespace filmagent {

namespace {

template <typename Fn>
auto guarded(const char* phase, int round, Fn&& fn) {
    try {
        return fn();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw AgentError(std::string(phase) + " failed in round " + std::to_string(round) +
                         ": " + e.what());
    }
}

} // namespace

CcvResult critique_correct_verify(const CcvAgents& agents, std::string context,
                                  std::string instruction, const CcvOptions& options) {
    if (options.max_rounds < 1)
        throw AgentError("critique_correct_verify needs max_rounds >= 1");

    DialogueHistory history(std::move(context), std::move(instruction));
    CcvResult result;
    std::string response;
    std::string critique;
    int m = 0;

    while (options.literal_loop_guard ? m <= options.max_rounds : m < options.max_rounds) {
        ++m;
        CcvRound round;
        round.round = m;
        response = guarded("action", m, [&] { return agents.act(history); });
        round.response = response;

        if (m > 1) {
            const Verdict verdict =
                guarded("verify", m, [&] { return agents.verify(history, response, critique); });
            round.verdict = verdict;
            if (verdict.finalize) {
                result.finalized = true;
                result.rounds.push_back(std::move(round));
                break;
            }
        }

        critique = guarded("critique", m, [&] { return agents.critique(history, response); });
        round.critique = critique;
        history.append(agents.action_tag, response);
        history.append(agents.critic_tag, critique);
        result.rounds.push_back(std::move(round));
    }

    result.response = std::move(response);
    return result;
}

DebateResult debate_judge(const DebatePeer& p, const DebatePeer& q, const DebateJudge& judge,
                          std::string context, std::string instruction, int rounds) {
    if (rounds < 0) throw AgentError("debate_judge needs rounds >= 0");

    DialogueHistory history(std::move(context), std::move(instruction));
    DebateResult result;
    auto log = [&](const std::string& tag, const char* phase, int round, const std::string& text) {
        result.log.push_back({tag, phase, round, text});
    };

    result.response_p = guarded("respond", 0, [&] { return p.respond(history); });
    log(p.tag, "respond", 0, result.response_p);
    result.response_q = guarded("respond", 0, [&] { return q.respond(history); });
    log(q.tag, "respond", 0, result.response_q);

    // initial exchange: each peer reacts to the pair of responses
    result.feedback_q = guarded("feedback", 0, [&] {
        return p.feedback(history, result.response_p, result.response_q, std::nullopt);
    });
    log(p.tag, "feedback", 0, result.feedback_q);
    result.feedback_p = guarded("feedback", 0, [&] {
        return q.feedback(history, result.response_q, result.response_p, std::nullopt);
    });
    log(q.tag, "feedback", 0, result.feedback_p);

    for (int m = 1; m <= rounds; ++m) {
        result.feedback_q = guarded("debate", m, [&] {
            return p.feedback(history, result.response_p, result.response_q, result.feedback_p);
        });
        log(p.tag, "debate", m, result.feedback_q);
        result.feedback_p = guarded("debate", m, [&] {
            return q.feedback(history, result.response_q, result.response_p, result.feedback_q);
        });
        log(q.tag, "debate", m, result.feedback_p);
    }

    result.judgment = guarded("judge", rounds, [&] {
        return judge.judge(history, result.response_p, result.response_q, result.feedback_p,
                           result.feedback_q);
    });
    log(judge.tag, "judge", rounds, result.judgment.rationale);
    return result;
}

} // namespace filmagent
