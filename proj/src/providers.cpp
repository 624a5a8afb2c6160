#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <regex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/llm.hpp"

namespace lexforge {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // full request path
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    std::string base = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!base.empty() && base.back() == '/') base.pop_back();
    e.path = base.ends_with("/chat/completions") ? base : base + "/chat/completions";
    return e;
}

bool retryable_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

}  // namespace

// --- remote -------------------------------------------------------------------------

RemoteApiProvider::RemoteApiProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ValidationError("remote_api provider needs an endpoint");
    if (config_.model.empty()) throw ValidationError("remote_api provider needs a model");
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw ProviderError("environment variable " + config_.api_key_env + " is not set");
    api_key_ = key;
    split_endpoint(config_.endpoint);
}

std::string RemoteApiProvider::name() const { return "remote_api:" + config_.model; }

std::string RemoteApiProvider::send(const LlmRequest& request) {
    const auto ep = split_endpoint(config_.endpoint);
    json body = request.options.is_object() ? request.options : json::object();
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output;
    body["messages"] = json::array();
    if (!request.system_text.empty())
        body["messages"].push_back({{"role", "system"}, {"content", request.system_text}});
    body["messages"].push_back({{"role", "user"}, {"content", request.user_text}});
    const auto payload = body.dump(-1, ' ', false, json::error_handler_t::strict);

    httplib::Client client(ep.origin);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(std::chrono::seconds(config_.timeout_s));
    client.set_write_timeout(std::chrono::seconds(30));
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    std::string last_error;
    int delay = config_.retry.backoff_ms;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            spdlog::warn("{}: attempt {} failed ({}); retrying in {} ms", name(), attempt - 1, last_error, delay);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            delay *= 2;
        }
        auto res = client.Post(ep.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
            if (retryable_status(res->status)) continue;
            throw ProviderError(name() + ": " + last_error);
        }
        const auto doc = json::parse(res->body, nullptr, false);
        if (doc.is_discarded()) {
            last_error = "response body is not JSON";
            continue;
        }
        try {
            const auto& content = doc.at("choices").at(0).at("message").at("content");
            if (!content.is_string()) throw ProviderError(name() + ": message content is not a string");
            auto text = content.get<std::string>();
            if (text.empty()) throw ProviderError(name() + ": empty response");
            return text;
        } catch (const json::exception& e) {
            throw ProviderError(name() + ": unexpected response shape: " + e.what());
        }
    }
    throw ProviderError(name() + ": giving up after " + std::to_string(config_.retry.max_attempts) +
                        " attempts; last error: " + last_error);
}

// --- replay -------------------------------------------------------------------------

std::string ReplayOnlyProvider::send(const LlmRequest& request) { throw CacheMissError(cache_key(request)); }

// --- scripted -----------------------------------------------------------------------

struct ScriptedProvider::State {
    struct Rule {
        enum class Field { user, system, any } field = Field::any;
        std::vector<std::string> contains;  // all must occur
        std::optional<std::regex> pattern;
        std::vector<std::string> responses;
        std::optional<std::string> error;
        std::size_t next = 0;
    };
    std::vector<Rule> rules;
    std::optional<std::string> fallback;
    std::mutex mutex;
};

ScriptedProvider::ScriptedProvider(const json& script) : state_(std::make_shared<State>()) {
    if (!script.is_object() || !script.contains("rules") || !script.at("rules").is_array())
        throw ValidationError("script must be an object with a \"rules\" array");
    for (const auto& r : script.at("rules")) {
        State::Rule rule;
        const auto field = r.value("field", std::string("any"));
        if (field == "user") rule.field = State::Rule::Field::user;
        else if (field == "system") rule.field = State::Rule::Field::system;
        else if (field != "any") throw ValidationError("script rule field must be user, system or any");
        if (r.contains("contains")) {
            const auto& c = r.at("contains");
            if (c.is_string()) rule.contains.push_back(c.get<std::string>());
            else rule.contains = c.get<std::vector<std::string>>();
        }
        if (r.contains("match")) {
            try {
                rule.pattern.emplace(r.at("match").get<std::string>(), std::regex::ECMAScript);
            } catch (const std::regex_error& e) {
                throw ValidationError("bad script regex: " + std::string(e.what()));
            }
        }
        if (r.contains("response")) rule.responses.push_back(r.at("response").get<std::string>());
        if (r.contains("responses"))
            for (const auto& s : r.at("responses")) rule.responses.push_back(s.get<std::string>());
        if (r.contains("error")) rule.error = r.at("error").get<std::string>();
        if (rule.contains.empty() && !rule.pattern) throw ValidationError("script rule needs \"contains\" or \"match\"");
        if (rule.responses.empty() && !rule.error) throw ValidationError("script rule needs a response or an error");
        state_->rules.push_back(std::move(rule));
    }
    if (script.contains("default") && script.at("default").is_string())
        state_->fallback = script.at("default").get<std::string>();
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::filesystem::path& path) {
    return std::make_shared<ScriptedProvider>(io::parse_json(io::read_file(path), path.string()));
}

std::string ScriptedProvider::send(const LlmRequest& request) {
    std::lock_guard lock(state_->mutex);
    for (auto& rule : state_->rules) {
        const std::string* subject = nullptr;
        std::string both;
        switch (rule.field) {
            case State::Rule::Field::user: subject = &request.user_text; break;
            case State::Rule::Field::system: subject = &request.system_text; break;
            case State::Rule::Field::any:
                both = request.system_text + "\n" + request.user_text;
                subject = &both;
                break;
        }
        if (std::any_of(rule.contains.begin(), rule.contains.end(),
                        [&](const std::string& c) { return subject->find(c) == std::string::npos; }))
            continue;
        if (rule.pattern && !std::regex_search(*subject, *rule.pattern)) continue;
        if (rule.error) throw ProviderError("scripted failure: " + *rule.error);
        const auto i = std::min(rule.next, rule.responses.size() - 1);
        ++rule.next;
        return rule.responses[i];
    }
    if (state_->fallback) return *state_->fallback;
    throw ProviderError("scripted provider has no rule matching the request");
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config) {
    switch (config.kind) {
        case ProviderKind::remote_api: return std::make_shared<RemoteApiProvider>(config);
        case ProviderKind::replay: return std::make_shared<ReplayOnlyProvider>();
        case ProviderKind::scripted:
            if (config.script_path.empty()) throw ValidationError("scripted provider needs a script path");
            return ScriptedProvider::from_file(config.script_path);
    }
    throw ValidationError("unknown provider kind");
}

}  // namespace lexforge
