#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexforge/dataset.hpp"

namespace lexforge {

enum class ResponseFormat { free_text, json };

struct LlmRequest {
    std::string model;
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output = 2048;
    ResponseFormat response_format = ResponseFormat::free_text;
    /// Provider-specific extras (reasoning toggles etc.), merged into the remote payload as-is.
    nlohmann::json options = nlohmann::json::object();
};

nlohmann::json to_json(const LlmRequest& request);
LlmRequest request_from_json(const nlohmann::json& j);

/// Sorted keys, NFC text, compact. Independent of field insertion order and locale.
std::string canonical_serialization(const LlmRequest& request);

/// Lowercase hex SHA-256 of the canonical serialization.
std::string cache_key(const LlmRequest& request);

struct LlmExchange {
    LlmRequest request;
    std::string response_text;
    std::string cache_key;
};

/// A chat backend. Implementations throw ProviderError (or CacheMissError for replay).
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string send(const LlmRequest& request) = 0;
    virtual std::string name() const = 0;
    /// True if send() never touches the network.
    virtual bool offline() const { return false; }
};

enum class ProviderKind { remote_api, replay, scripted };
enum class CacheMode { record, replay, off };

std::string_view to_string(ProviderKind kind);
std::string_view to_string(CacheMode mode);
ProviderKind parse_provider_kind(std::string_view s);
CacheMode parse_cache_mode(std::string_view s);

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 1000;  // doubled after each failed attempt
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::replay;
    std::string endpoint;  // e.g. https://api.example.com/v1
    std::string api_key_env = "LEXFORGE_API_KEY";
    std::string model;
    RetryPolicy retry;
    std::filesystem::path script_path;  // scripted provider rules
    std::filesystem::path cache_dir;    // empty disables caching
    CacheMode cache_mode = CacheMode::replay;
    std::size_t max_in_flight = 4;
    int timeout_s = 120;
    double temperature = 0.0;
    int max_output = 2048;
    nlohmann::json options = nlohmann::json::object();
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& config);

/// Content-addressed exchange store: `<dir>/<key[0:2]>/<key>.json`. Reads are lock-free;
/// writes go through an atomic rename so concurrent readers never see partial files.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> lookup(const LlmRequest& request, const std::string& key) const;
    void store(const LlmRequest& request, const std::string& key, std::string_view response_text);
    std::filesystem::path path_for(const std::string& key) const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

/// Cache + provider + in-flight limit. Thread-safe.
class LlmClient {
public:
    LlmClient(std::shared_ptr<Provider> provider, std::optional<ResponseCache> cache, CacheMode mode,
              std::size_t max_in_flight = 4);
    ~LlmClient();
    LlmClient(const LlmClient&) = delete;
    LlmClient& operator=(const LlmClient&) = delete;

    /// Record: cache hit or provider call followed by a cache write. Replay: cache only,
    /// CacheMissError otherwise. Off: always the provider. Empty text is a ProviderError.
    std::string complete(const LlmRequest& request);
    LlmExchange exchange(const LlmRequest& request);

    std::size_t provider_calls() const noexcept { return provider_calls_.load(); }
    std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
    std::string provider_name() const { return provider_->name(); }

private:
    struct Gate;
    std::shared_ptr<Provider> provider_;
    std::optional<ResponseCache> cache_;
    CacheMode mode_;
    std::unique_ptr<Gate> gate_;
    std::atomic<std::size_t> provider_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

std::shared_ptr<Provider> make_provider(const ProviderConfig& config);
std::shared_ptr<LlmClient> make_client(const ProviderConfig& config);

/// One-shot convenience over make_client(config)->complete(request).
std::string complete(const LlmRequest& request, const ProviderConfig& config);

/// Base request carrying the config's model and sampling settings.
LlmRequest make_request(const ProviderConfig& config, std::string system_text, std::string user_text,
                        ResponseFormat format);

/// Accepts a bare JSON array of strings or one wrapped in a ``` fence, with surrounding
/// prose tolerated. FormatError carries the raw text; `[]` is an EmptyOutputError.
std::vector<Definition> parse_json_definitions(std::string_view response_text);

// --- concrete providers -------------------------------------------------------

/// OpenAI-style `POST <endpoint>/chat/completions`, reading choices[0].message.content.
class RemoteApiProvider final : public Provider {
public:
    explicit RemoteApiProvider(ProviderConfig config);
    std::string send(const LlmRequest& request) override;
    std::string name() const override;

private:
    ProviderConfig config_;
    std::string api_key_;
};

/// Never answers; combined with a cache it serves recorded exchanges only.
class ReplayOnlyProvider final : public Provider {
public:
    std::string send(const LlmRequest& request) override;
    std::string name() const override { return "replay"; }
    bool offline() const override { return true; }
};

/// Substring or regex rules over the prompt text, first match wins. `contains` may be a
/// list, in which case every item must occur. A rule with several
/// responses hands them out in order and then repeats the last one.
///
///   {"rules": [{"contains": "...", "match": "regex", "field": "user|system|any",
///               "responses": ["..."], "error": "..."}],
///    "default": "..."}
class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(const nlohmann::json& script);
    static std::shared_ptr<ScriptedProvider> from_file(const std::filesystem::path& path);

    std::string send(const LlmRequest& request) override;
    std::string name() const override { return "scripted"; }
    bool offline() const override { return true; }

private:
    struct State;
    std::shared_ptr<State> state_;
};

}  // namespace lexforge
