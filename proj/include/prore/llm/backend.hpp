#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "prore/llm/template.hpp"

namespace prore::llm {

struct ChatMessage {
    std::string role; // "system" or "user"
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_output_tokens = 4096;
    std::string model_id = "offline-stub";
    PromptFamily family = PromptFamily::schedule;

    void validate() const; // at least one user message, temperature >= 0

    static ChatRequest for_prompt(PromptFamily family, std::string rendered_prompt);

    // The user-visible prompt text (concatenated user messages).
    std::string prompt_text() const;
};

// Stable cassette key: FNV-1a 64 over the family tag and message stream.
std::string request_key(const ChatRequest& request);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string kind() const = 0;
};

// Validates the request, then dispatches to the backend.
std::string complete(const ChatRequest& request, LlmBackend& backend);

// Bounds concurrent in-flight requests per backend.
class InflightGate {
public:
    explicit InflightGate(int cap) : cap_(cap < 1 ? 1 : cap) {}
    void acquire();
    void release();

private:
    int cap_;
    int active_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

/// POST {"model", "messages", "temperature"} to an OpenAI-style chat endpoint.
/// Config keys: host (required, e.g. http://127.0.0.1:8080), path (default
/// /v1/chat/completions), model, api_key_env, timeout_ms, max_retries,
/// max_inflight.
class HttpChatBackend : public LlmBackend {
public:
    explicit HttpChatBackend(std::map<std::string, std::string> config);
    std::string complete(const ChatRequest& request) override;
    std::string kind() const override { return "http_chat_endpoint"; }

private:
    std::map<std::string, std::string> config_;
    std::string host_;
    std::string path_;
    int max_retries_ = 2;
    int timeout_ms_ = 30000;
    InflightGate gate_;
};

/// Cassette wrapper: responses keyed by request_key. In strict mode a miss is
/// a CassetteError; otherwise the inner backend fills the cassette.
class RecordReplayBackend : public LlmBackend {
public:
    RecordReplayBackend(std::shared_ptr<LlmBackend> inner, std::string cassette_path, bool strict);
    std::string complete(const ChatRequest& request) override;
    std::string kind() const override { return "record_replay"; }
    std::size_t entries() const { return responses_.size(); }

private:
    std::shared_ptr<LlmBackend> inner_;
    std::string cassette_path_;
    bool strict_;
    std::mutex mutex_;
    std::map<std::string, std::string> responses_;
};

} // namespace prore::llm
