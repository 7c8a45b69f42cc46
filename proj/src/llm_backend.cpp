#include "prore/llm/backend.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "prore/core/errors.hpp"
#include "prore/core/text.hpp"

namespace prore::llm {

using nlohmann::json;

void ChatRequest::validate() const {
    bool has_user = false;
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user") {
            throw InputError("chat request: unknown message role " + m.role);
        }
        if (m.role == "user") has_user = true;
    }
    if (!has_user) throw InputError("chat request: at least one user message required");
    if (temperature < 0.0) throw InputError("chat request: temperature must be >= 0");
    if (max_output_tokens <= 0) throw InputError("chat request: max_output_tokens must be > 0");
}

ChatRequest ChatRequest::for_prompt(PromptFamily family, std::string rendered_prompt) {
    ChatRequest r;
    r.family = family;
    r.messages.push_back({"user", std::move(rendered_prompt)});
    return r;
}

std::string ChatRequest::prompt_text() const {
    std::string out;
    for (const auto& m : messages) {
        if (m.role == "user") {
            if (!out.empty()) out += '\n';
            out += m.content;
        }
    }
    return out;
}

std::string request_key(const ChatRequest& request) {
    std::string blob = to_string(request.family);
    for (const auto& m : request.messages) {
        blob += '\x1f';
        blob += m.role;
        blob += '\x1e';
        blob += m.content;
    }
    return text::hex64(text::fnv1a64(blob));
}

std::string complete(const ChatRequest& request, LlmBackend& backend) {
    request.validate();
    return backend.complete(request);
}

void InflightGate::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [this] { return active_ < cap_; });
    ++active_;
}

void InflightGate::release() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        --active_;
    }
    cv_.notify_one();
}

namespace {

int config_int(const std::map<std::string, std::string>& cfg, const std::string& key, int fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    return std::stoi(it->second);
}

struct GateHold {
    InflightGate& gate;
    explicit GateHold(InflightGate& g) : gate(g) { gate.acquire(); }
    ~GateHold() { gate.release(); }
};

} // namespace

HttpChatBackend::HttpChatBackend(std::map<std::string, std::string> config)
    : config_(std::move(config)), gate_(config_int(config_, "max_inflight", 4)) {
    auto it = config_.find("host");
    if (it == config_.end()) throw InputError("http backend: config key \"host\" required");
    host_ = it->second;
    path_ = config_.count("path") ? config_.at("path") : "/v1/chat/completions";
    max_retries_ = config_int(config_, "max_retries", 2);
    timeout_ms_ = config_int(config_, "timeout_ms", 30000);
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
    GateHold hold(gate_);

    json body;
    body["model"] = config_.count("model") ? config_.at("model") : request.model_id;
    json msgs = json::array();
    for (const auto& m : request.messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = request.temperature;

    httplib::Headers headers;
    if (config_.count("api_key_env")) {
        if (const char* key = std::getenv(config_.at("api_key_env").c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        httplib::Client client(host_);
        client.set_connection_timeout(0, timeout_ms_ * 1000);
        client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            json parsed = json::parse(res->body);
            if (parsed.contains("choices") && !parsed["choices"].empty()) {
                return parsed["choices"][0]["message"]["content"].get<std::string>();
            }
            if (parsed.contains("content")) {
                return parsed["content"].get<std::string>();
            }
            last_error = "response missing choices[0].message.content";
        } catch (const json::exception& e) {
            last_error = std::string("response parse: ") + e.what();
        }
    }
    throw BackendError("http backend failed after " + std::to_string(max_retries_ + 1) +
                       " attempts: " + last_error);
}

RecordReplayBackend::RecordReplayBackend(std::shared_ptr<LlmBackend> inner,
                                         std::string cassette_path, bool strict)
    : inner_(std::move(inner)), cassette_path_(std::move(cassette_path)), strict_(strict) {
    std::ifstream in(cassette_path_, std::ios::binary);
    if (!in) return; // fresh cassette
    std::string line;
    while (std::getline(in, line)) {
        std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        json j = json::parse(trimmed);
        responses_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
    }
}

std::string RecordReplayBackend::complete(const ChatRequest& request) {
    const std::string key = request_key(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = responses_.find(key);
        if (it != responses_.end()) return it->second;
    }
    if (strict_ || !inner_) {
        throw CassetteError("cassette miss for key " + key + " in " + cassette_path_);
    }
    std::string response = inner_->complete(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto [it, inserted] = responses_.emplace(key, response);
        if (inserted) {
            std::ofstream out(cassette_path_, std::ios::binary | std::ios::app);
            if (!out) throw IoError("cannot append cassette: " + cassette_path_);
            json j;
            j["key"] = key;
            j["response"] = response;
            out << j.dump() << '\n';
        }
    }
    return response;
}

} // namespace prore::llm
