#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace filmagent {

/// Append-only conversation history shared by collaborating agents. The
/// first two entries are always the context and the instruction.
class DialogueHistory {
public:
    struct Entry {
        std::string source; // "context", "instruction", or an agent tag
        std::string content;
    };

    DialogueHistory(std::string context, std::string instruction) {
        entries_.push_back({"context", std::move(context)});
        entries_.push_back({"instruction", std::move(instruction)});
    }

    void append(std::string source, std::string content) {
        entries_.push_back({std::move(source), std::move(content)});
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    const std::string& context() const { return entries_[0].content; }
    const std::string& instruction() const { return entries_[1].content; }

private:
    std::vector<Entry> entries_;
};

/// The critic's stop decision after reviewing a corrected response.
struct Verdict {
    bool finalize = false;
    std::string rationale;
};

enum class DebateWinner { P, Q };

struct Judgment {
    DebateWinner winner = DebateWinner::P;
    std::string rationale;
};

// ---------------------------------------------------------------------------
// Critique-correct-verify: an action agent drafts, a critic critiques, the
// action agent corrects, and the critic verifies whether to stop.
// ---------------------------------------------------------------------------

struct CcvAgents {
    std::string action_tag = "action";
    std::string critic_tag = "critic";
    std::function<std::string(const DialogueHistory&)> act;
    std::function<std::string(const DialogueHistory&, const std::string& response)> critique;
    std::function<Verdict(const DialogueHistory&, const std::string& response,
                          const std::string& critique)>
        verify;
};

struct CcvOptions {
    /// Cap on response generations: the action agent runs at most this many
    /// times. With the literal loop guard the loop body runs max_rounds + 1
    /// times instead, reproducing a guard of the form `while m <= M`.
    int max_rounds = 3;
    bool literal_loop_guard = false;
};

struct CcvRound {
    int round = 0;
    std::string response;
    std::optional<std::string> critique;
    std::optional<Verdict> verdict;
};

struct CcvResult {
    std::string response; // always the action agent's last output, verbatim
    bool finalized = false;
    std::vector<CcvRound> rounds;
};

/// Runs the loop: round m generates a response; from round 2 on, the critic
/// first verifies the previous critique was addressed and stops early on
/// approval; otherwise a fresh critique is appended to the history. Agent
/// exceptions surface as AgentError with round and phase context.
CcvResult critique_correct_verify(const CcvAgents& agents, std::string context,
                                  std::string instruction, const CcvOptions& options = {});

// ---------------------------------------------------------------------------
// Debate-judge: two peers respond independently, exchange feedback over a
// fixed number of rounds, and a judge picks the better final position.
// ---------------------------------------------------------------------------

struct DebatePeer {
    std::string tag;
    std::function<std::string(const DialogueHistory&)> respond;
    /// Feedback on the peer's work given both initial responses; from the
    /// second exchange on, the peer's latest feedback is passed along too.
    std::function<std::string(const DialogueHistory&, const std::string& own_response,
                              const std::string& peer_response,
                              const std::optional<std::string>& peer_feedback)>
        feedback;
};

struct DebateJudge {
    std::string tag;
    std::function<Judgment(const DialogueHistory&, const std::string& response_p,
                           const std::string& response_q, const std::string& feedback_p,
                           const std::string& feedback_q)>
        judge;
};

struct DebateStep {
    std::string agent_tag;
    std::string phase; // respond | feedback | debate | judge
    int round = 0;
    std::string text;
};

struct DebateResult {
    Judgment judgment;
    std::string response_p;
    std::string response_q;
    std::string feedback_p; // final state after all rounds
    std::string feedback_q;
    std::vector<DebateStep> log;
};

/// Total peer calls are exactly 4 + 2 * rounds plus one judge call,
/// independent of agent output.
DebateResult debate_judge(const DebatePeer& p, const DebatePeer& q, const DebateJudge& judge,
                          std::string context, std::string instruction, int rounds);

} // namespace filmagent
