#include "filmagent/provider.hpp"

#include "filmagent/errors.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace filmagent {

using ojson = nlohmann::ordered_json;

std::string to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    default: return "assistant";
    }
}

Role role_from_string(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    throw ParseError("unknown chat role '" + std::string(name) + "'");
}

ojson call_record_to_json(const ProviderCallRecord& record) {
    ojson out;
    out["call_index"] = record.call_index;
    out["agent_tag"] = record.agent_tag;
    ojson request = ojson::array();
    for (const auto& message : record.request)
        request.push_back({{"role", to_string(message.role)}, {"content", message.content}});
    out["request"] = std::move(request);
    out["response"] = record.response;
    out["latency"] = record.latency_seconds;
    return out;
}

ProviderCallRecord& Transcript::append(const std::string& agent_tag,
                                       std::vector<ChatMessage> request,
                                       std::string response, double latency_seconds) {
    std::lock_guard lock(mutex_);
    ProviderCallRecord record;
    record.call_index = records_.size();
    record.agent_tag = agent_tag;
    record.request = std::move(request);
    record.response = std::move(response);
    record.latency_seconds = latency_seconds;
    records_.push_back(std::move(record));
    auto& stored = records_.back();
    if (sink_.is_open()) {
        sink_ << call_record_to_json(stored).dump() << '\n';
        sink_.flush();
    }
    return stored;
}

void Transcript::attach_sink(const std::filesystem::path& path, bool truncate) {
    std::lock_guard lock(mutex_);
    sink_.open(path, truncate ? std::ios::trunc : std::ios::app);
    if (!sink_.is_open())
        throw ParseError("cannot open transcript sink: " + path.string());
}

std::vector<ProviderCallRecord> Transcript::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t Transcript::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::string Transcript::to_jsonl() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& record : records_) {
        out += call_record_to_json(record).dump();
        out += '\n';
    }
    return out;
}

void Transcript::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out.is_open())
        throw ParseError("cannot write transcript: " + path.string());
    out << to_jsonl();
}

std::vector<ProviderCallRecord> Transcript::load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open())
        throw ParseError("cannot open transcript: " + path.string());
    std::vector<ProviderCallRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ojson doc = ojson::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": invalid transcript record");
        ProviderCallRecord record;
        record.call_index = doc.value("call_index", static_cast<std::uint64_t>(records.size()));
        if (!doc.contains("agent_tag") || !doc.contains("response"))
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": record needs agent_tag and response");
        record.agent_tag = doc["agent_tag"].get<std::string>();
        record.response = doc["response"].get<std::string>();
        record.latency_seconds = doc.value("latency", 0.0);
        if (doc.contains("request"))
            for (const auto& jmsg : doc["request"])
                record.request.push_back({role_from_string(jmsg.at("role").get<std::string>()),
                                          jmsg.at("content").get<std::string>()});
        records.push_back(std::move(record));
    }
    return records;
}

HttpChatProvider::HttpChatProvider(ProviderConfig config, Transcript& transcript)
    : config_(std::move(config)), transcript_(transcript) {}

std::string HttpChatProvider::complete(const std::vector<ChatMessage>& messages,
                                       const std::string& agent_tag) {
    if (messages.empty()) throw ProviderError("empty message list");

    const char* key = std::getenv(config_.api_key_env_var.c_str());
    if (!key || !*key)
        throw AuthError("API key environment variable " + config_.api_key_env_var + " is not set");

    ojson body;
    body["model"] = config_.model_name;
    body["temperature"] = config_.temperature;
    ojson jmessages = ojson::array();
    for (const auto& message : messages)
        jmessages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
    body["messages"] = std::move(jmessages);
    const std::string payload = body.dump();

    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };
    auto record = [&](const std::string& response) {
        transcript_.append(agent_tag, messages, response, elapsed());
    };

    std::string last_failure = "no attempt made";
    double backoff = config_.retry_backoff_seconds;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2;
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
        auto result = client.Post("/v1/chat/completions", headers, payload, "application/json");

        if (!result) {
            last_failure = "transport failure: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 401 || result->status == 403) {
            record("[error] auth rejected");
            throw AuthError("provider rejected the API key (status " +
                            std::to_string(result->status) + ")");
        }
        if (result->status == 429 || result->status >= 500) {
            last_failure = "status " + std::to_string(result->status);
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            record("[error] status " + std::to_string(result->status));
            throw ProviderError("provider returned status " + std::to_string(result->status) +
                                ": " + result->body.substr(0, 200));
        }

        ojson doc = ojson::parse(result->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty()) {
            record("[error] unparseable response body");
            throw ProviderError("provider returned an unparseable body: " +
                                result->body.substr(0, 200));
        }
        std::string text = doc["choices"][0]["message"]["content"].get<std::string>();
        record(text);
        return text;
    }

    record("[error] " + last_failure);
    throw TransportError("exhausted " + std::to_string(config_.max_retries) +
                         " retries; last failure: " + last_failure);
}

ReplayProvider::ReplayProvider(std::vector<ProviderCallRecord> fixture, Transcript& transcript)
    : transcript_(transcript) {
    for (auto& record : fixture)
        queues_[record.agent_tag].push_back(std::move(record.response));
}

ReplayProvider ReplayProvider::from_file(const std::filesystem::path& jsonl,
                                         Transcript& transcript) {
    return ReplayProvider(Transcript::load_jsonl(jsonl), transcript);
}

void ReplayProvider::fast_forward(const std::map<std::string, std::size_t>& consumed_per_tag) {
    std::lock_guard lock(mutex_);
    for (const auto& [tag, count] : consumed_per_tag) {
        auto it = queues_.find(tag);
        if (it == queues_.end()) continue;
        for (std::size_t i = 0; i < count && !it->second.empty(); ++i)
            it->second.pop_front();
    }
}

std::string ReplayProvider::complete(const std::vector<ChatMessage>& messages,
                                     const std::string& agent_tag) {
    std::string response;
    {
        std::lock_guard lock(mutex_);
        auto it = queues_.find(agent_tag);
        if (it == queues_.end() || it->second.empty())
            throw ReplayExhausted("replay fixture has no further response for agent '" +
                                  agent_tag + "'");
        response = std::move(it->second.front());
        it->second.pop_front();
    }
    transcript_.append(agent_tag, messages, response, 0.0);
    return response;
}

std::size_t ReplayProvider::remaining() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [tag, queue] : queues_) n += queue.size();
    return n;
}

namespace {

/// Removes `,` tokens that directly precede a closing brace/bracket, outside
/// of string literals.
std::string strip_trailing_commas(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_string = false, escaped = false;
    for (char c : text) {
        if (in_string) {
            out += c;
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
            out += c;
            continue;
        }
        if (c == '}' || c == ']') {
            auto last = out.find_last_not_of(" \t\r\n");
            if (last != std::string::npos && out[last] == ',') out.erase(last, 1);
        }
        out += c;
    }
    return out;
}

/// The balanced {...} or [...] span starting at `start`, or npos length.
std::size_t balanced_span(const std::string& text, std::size_t start) {
    const char open = text[start];
    const char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == open) ++depth;
        else if (c == close && --depth == 0) return i - start + 1;
    }
    return std::string::npos;
}

std::optional<ojson> try_extract(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' && text[i] != '[') continue;
        const auto span = balanced_span(text, i);
        if (span == std::string::npos) continue;
        const std::string candidate = text.substr(i, span);
        ojson doc = ojson::parse(candidate, nullptr, false);
        if (doc.is_discarded())
            doc = ojson::parse(strip_trailing_commas(candidate), nullptr, false);
        if (!doc.is_discarded()) return doc;
        i += span - 1;
    }
    return std::nullopt;
}

/// Contents of every ```-fenced block, language tags dropped.
std::vector<std::string> fenced_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("```", pos);
        if (open == std::string::npos) break;
        auto body = text.find('\n', open + 3);
        if (body == std::string::npos) break;
        const auto close = text.find("```", body);
        if (close == std::string::npos) break;
        blocks.push_back(text.substr(body + 1, close - body - 1));
        pos = close + 3;
    }
    return blocks;
}

} // namespace

ojson extract_json(const std::string& raw) {
    for (const auto& block : fenced_blocks(raw))
        if (auto doc = try_extract(block)) return *doc;
    if (auto doc = try_extract(raw)) return *doc;
    throw NoJsonFound("no JSON object or array found in model output");
}

ojson complete_json(ChatProvider& provider, std::vector<ChatMessage> messages,
                    const std::string& agent_tag, const SchemaCheck& schema_check,
                    int attempts) {
    if (attempts < 1) attempts = 1;
    std::string last_raw;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        last_raw = provider.complete(messages, agent_tag);
        std::string error;
        try {
            ojson doc = extract_json(last_raw);
            if (!schema_check) return doc;
            auto violation = schema_check(doc);
            if (!violation) return doc;
            error = *violation;
        } catch (const NoJsonFound& e) {
            error = e.what();
        }
        last_error = error;
        messages.push_back({Role::Assistant, last_raw});
        messages.push_back({Role::User,
                            "Your previous reply was not usable: " + error +
                                ". Reply again with only the corrected JSON content."});
    }
    throw SchemaRetriesExhausted("no valid JSON after " + std::to_string(attempts) +
                                     " attempts (" + agent_tag + "): " + last_error,
                                 last_raw);
}

} // namespace filmagent
