#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace filmagent {

enum class Role { System, User, Assistant };

std::string to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ProviderCallRecord {
    std::uint64_t call_index = 0;
    std::string agent_tag;
    std::vector<ChatMessage> request;
    std::string response;
    double latency_seconds = 0.0;
};

struct ProviderConfig {
    std::string base_url = "https://api.openai.com";
    std::string model_name = "gpt-4o-2024-05-13";
    double temperature = 0.2;
    int max_retries = 2;
    double timeout_seconds = 60.0;
    double retry_backoff_seconds = 0.5;
    std::string api_key_env_var = "FILMAGENT_API_KEY";
};

/// Ordered, thread-safe log of every chat call in a run. When a sink path is
/// attached, records are flushed line-by-line as they arrive so a crashed run
/// keeps its history.
class Transcript {
public:
    ProviderCallRecord& append(const std::string& agent_tag,
                               std::vector<ChatMessage> request,
                               std::string response, double latency_seconds);

    void attach_sink(const std::filesystem::path& path, bool truncate = true);

    std::vector<ProviderCallRecord> records() const;
    std::size_t size() const;

    std::string to_jsonl() const;
    void save(const std::filesystem::path& path) const;
    static std::vector<ProviderCallRecord> load_jsonl(const std::filesystem::path& path);

private:
    mutable std::mutex mutex_;
    std::vector<ProviderCallRecord> records_;
    std::ofstream sink_;
};

nlohmann::ordered_json call_record_to_json(const ProviderCallRecord& record);

/// One chat completion boundary. Implementations must tolerate concurrent
/// complete() calls.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    /// Returns the assistant text for the given request, tagging the
    /// transcript entry with the calling agent.
    virtual std::string complete(const std::vector<ChatMessage>& messages,
                                 const std::string& agent_tag) = 0;
};

/// Live OpenAI-style chat-completions client with bounded retry on transient
/// transport failures.
class HttpChatProvider : public ChatProvider {
public:
    HttpChatProvider(ProviderConfig config, Transcript& transcript);

    std::string complete(const std::vector<ChatMessage>& messages,
                         const std::string& agent_tag) override;

private:
    ProviderConfig config_;
    Transcript& transcript_;
};

/// Deterministic provider serving pre-recorded responses keyed by agent tag
/// in per-tag order. Holds no transport, so replay runs cannot touch the
/// network.
class ReplayProvider : public ChatProvider {
public:
    ReplayProvider(std::vector<ProviderCallRecord> fixture, Transcript& transcript);
    static ReplayProvider from_file(const std::filesystem::path& jsonl, Transcript& transcript);

    /// Skips responses already consumed by a previous (crashed) run.
    void fast_forward(const std::map<std::string, std::size_t>& consumed_per_tag);

    std::string complete(const std::vector<ChatMessage>& messages,
                         const std::string& agent_tag) override;

    std::size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<std::string>> queues_;
    Transcript& transcript_;
};

/// Pulls the first JSON object or array out of model output, tolerating code
/// fences, surrounding prose and trailing commas. Throws NoJsonFound.
nlohmann::ordered_json extract_json(const std::string& raw);

/// nullopt = pass, otherwise a human-readable description of the violation
/// that is echoed back to the model on retry.
using SchemaCheck = std::function<std::optional<std::string>(const nlohmann::ordered_json&)>;

/// complete + extract_json + schema check, re-prompting with the error on
/// failure, up to `attempts` completions. Throws SchemaRetriesExhausted
/// carrying the last raw response.
nlohmann::ordered_json complete_json(ChatProvider& provider,
                                     std::vector<ChatMessage> messages,
                                     const std::string& agent_tag,
                                     const SchemaCheck& schema_check,
                                     int attempts = 3);

} // namespace filmagent
