#include "lexforge/llm.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <semaphore>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

using nlohmann::json;

namespace {

std::string_view to_string(ResponseFormat f) { return f == ResponseFormat::json ? "json" : "free_text"; }

ResponseFormat parse_response_format(std::string_view s) {
    if (s == "json") return ResponseFormat::json;
    if (s == "free_text") return ResponseFormat::free_text;
    throw ValidationError("unknown response_format: " + std::string(s));
}

std::string hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(n * 2, '0');
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = digits[data[i] >> 4];
        out[2 * i + 1] = digits[data[i] & 0xF];
    }
    return out;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

json to_json(const LlmRequest& r) {
    return json{{"model", r.model},
                {"system_text", r.system_text},
                {"user_text", r.user_text},
                {"temperature", r.temperature},
                {"max_output", r.max_output},
                {"response_format", to_string(r.response_format)},
                {"options", r.options}};
}

LlmRequest request_from_json(const json& j) {
    LlmRequest r;
    r.model = j.at("model").get<std::string>();
    r.system_text = j.at("system_text").get<std::string>();
    r.user_text = j.at("user_text").get<std::string>();
    r.temperature = j.value("temperature", 0.0);
    r.max_output = j.value("max_output", 2048);
    r.response_format = parse_response_format(j.value("response_format", std::string("free_text")));
    r.options = j.value("options", json::object());
    return r;
}

std::string canonical_serialization(const LlmRequest& request) {
    LlmRequest r = request;
    r.model = unicode::nfc(r.model);
    r.system_text = unicode::nfc(r.system_text);
    r.user_text = unicode::nfc(r.user_text);
    // nlohmann's default object is a std::map, so keys come out sorted.
    return to_json(r).dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string cache_key(const LlmRequest& request) {
    const auto text = canonical_serialization(request);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    return hex(md, len);
}

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::remote_api: return "remote_api";
        case ProviderKind::replay: return "replay";
        case ProviderKind::scripted: return "scripted";
    }
    return "?";
}

std::string_view to_string(CacheMode mode) {
    switch (mode) {
        case CacheMode::record: return "record";
        case CacheMode::replay: return "replay";
        case CacheMode::off: return "off";
    }
    return "?";
}

ProviderKind parse_provider_kind(std::string_view s) {
    if (s == "remote_api") return ProviderKind::remote_api;
    if (s == "replay") return ProviderKind::replay;
    if (s == "scripted") return ProviderKind::scripted;
    throw ValidationError("unknown provider kind: " + std::string(s));
}

CacheMode parse_cache_mode(std::string_view s) {
    if (s == "record") return CacheMode::record;
    if (s == "replay") return CacheMode::replay;
    if (s == "off") return CacheMode::off;
    throw ValidationError("unknown cache mode: " + std::string(s));
}

ProviderConfig provider_config_from_json(const json& j) {
    ProviderConfig c;
    if (!j.is_object()) throw ValidationError("provider config must be an object");
    if (j.contains("provider")) c.kind = parse_provider_kind(j.at("provider").get<std::string>());
    c.endpoint = j.value("endpoint", c.endpoint);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.model = j.value("model", c.model);
    if (j.contains("retry")) {
        const auto& r = j.at("retry");
        c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
        c.retry.backoff_ms = r.value("backoff_ms", c.retry.backoff_ms);
    }
    if (j.contains("script")) c.script_path = j.at("script").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("cache_mode")) c.cache_mode = parse_cache_mode(j.at("cache_mode").get<std::string>());
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.temperature = j.value("temperature", c.temperature);
    c.max_output = j.value("max_output", c.max_output);
    c.options = j.value("options", json::object());
    if (c.retry.max_attempts < 1) throw ValidationError("retry.max_attempts must be at least 1");
    if (c.max_in_flight < 1) throw ValidationError("max_in_flight must be at least 1");
    return c;
}

json to_json(const ProviderConfig& c) {
    return json{{"provider", to_string(c.kind)},
                {"endpoint", c.endpoint},
                {"api_key_env", c.api_key_env},
                {"model", c.model},
                {"retry", {{"max_attempts", c.retry.max_attempts}, {"backoff_ms", c.retry.backoff_ms}}},
                {"script", c.script_path.string()},
                {"cache_dir", c.cache_dir.string()},
                {"cache_mode", to_string(c.cache_mode)},
                {"max_in_flight", c.max_in_flight},
                {"timeout_s", c.timeout_s},
                {"temperature", c.temperature},
                {"max_output", c.max_output},
                {"options", c.options}};
}

// --- cache ------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::lookup(const LlmRequest& request, const std::string& key) const {
    const auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    const auto doc = io::parse_json(io::read_file(path), path.string());
    if (!doc.contains("request") || !doc.contains("response_text"))
        throw ParseError(path.string() + ": cache entry lacks request or response_text");
    if (canonical_serialization(request_from_json(doc.at("request"))) != canonical_serialization(request))
        throw ParseError(path.string() + ": cache entry does not match its key");
    return doc.at("response_text").get<std::string>();
}

void ResponseCache::store(const LlmRequest& request, const std::string& key, std::string_view response_text) {
    json doc;
    doc["request"] = to_json(request);
    doc["response_text"] = std::string(response_text);
    doc["recorded_at"] = utc_now();
    io::write_file_atomic(path_for(key), doc.dump(2, ' ', false, json::error_handler_t::strict) + "\n");
}

// --- client -----------------------------------------------------------------------

struct LlmClient::Gate {
    explicit Gate(std::size_t n) : slots(static_cast<std::ptrdiff_t>(n)) {}
    std::counting_semaphore<1024> slots;
};

LlmClient::LlmClient(std::shared_ptr<Provider> provider, std::optional<ResponseCache> cache, CacheMode mode,
                     std::size_t max_in_flight)
    : provider_(std::move(provider)),
      cache_(std::move(cache)),
      mode_(mode),
      gate_(std::make_unique<Gate>(std::clamp<std::size_t>(max_in_flight, 1, 1024))) {
    if (!provider_) throw ValidationError("LlmClient needs a provider");
    if (mode_ == CacheMode::replay && !cache_) throw ValidationError("replay mode needs a cache directory");
}

LlmClient::~LlmClient() = default;

LlmExchange LlmClient::exchange(const LlmRequest& request) {
    LlmExchange ex{request, {}, cache_key(request)};
    if (cache_ && mode_ != CacheMode::off) {
        if (auto hit = cache_->lookup(request, ex.cache_key)) {
            if (hit->empty()) throw ProviderError("cached response is empty for key " + ex.cache_key);
            ++cache_hits_;
            ex.response_text = std::move(*hit);
            return ex;
        }
        if (mode_ == CacheMode::replay) throw CacheMissError(ex.cache_key);
    }
    {
        gate_->slots.acquire();
        struct Release {
            Gate& g;
            ~Release() { g.slots.release(); }
        } release{*gate_};
        ++provider_calls_;
        ex.response_text = provider_->send(request);
    }
    if (ex.response_text.empty()) throw ProviderError(provider_->name() + " returned an empty response");
    if (cache_ && mode_ == CacheMode::record) cache_->store(request, ex.cache_key, ex.response_text);
    return ex;
}

std::string LlmClient::complete(const LlmRequest& request) { return exchange(request).response_text; }

std::shared_ptr<LlmClient> make_client(const ProviderConfig& config) {
    std::optional<ResponseCache> cache;
    if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);
    auto mode = config.cache_mode;
    if (config.kind == ProviderKind::replay) mode = CacheMode::replay;
    // Replay never reaches the backend, so do not demand credentials for it.
    std::shared_ptr<Provider> provider;
    if (mode == CacheMode::replay) provider = std::make_shared<ReplayOnlyProvider>();
    else provider = make_provider(config);
    return std::make_shared<LlmClient>(std::move(provider), std::move(cache), mode, config.max_in_flight);
}

std::string complete(const LlmRequest& request, const ProviderConfig& config) {
    return make_client(config)->complete(request);
}

LlmRequest make_request(const ProviderConfig& config, std::string system_text, std::string user_text,
                        ResponseFormat format) {
    LlmRequest r;
    r.model = config.model;
    r.system_text = std::move(system_text);
    r.user_text = std::move(user_text);
    r.temperature = config.temperature;
    r.max_output = config.max_output;
    r.response_format = format;
    r.options = config.options;
    return r;
}

// --- output parsing ---------------------------------------------------------------

namespace {

/// Body of the first ``` fence, if any.
std::optional<std::string_view> fenced_body(std::string_view text) {
    const auto open = text.find("```");
    if (open == std::string_view::npos) return std::nullopt;
    auto body_start = text.find('\n', open + 3);
    if (body_start == std::string_view::npos) return std::nullopt;
    ++body_start;
    const auto close = text.find("```", body_start);
    if (close == std::string_view::npos) return text.substr(body_start);
    return text.substr(body_start, close - body_start);
}

std::optional<json> find_array(std::string_view text) {
    // Try each '[' from the left against each ']' from the right until something parses.
    for (auto open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
        for (auto close = text.rfind(']'); close != std::string_view::npos && close > open;
             close = close == 0 ? std::string_view::npos : text.rfind(']', close - 1)) {
            auto parsed = json::parse(text.substr(open, close - open + 1), nullptr, false);
            if (!parsed.is_discarded() && parsed.is_array()) return parsed;
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<Definition> parse_json_definitions(std::string_view response_text) {
    std::optional<json> array;
    if (auto body = fenced_body(response_text)) array = find_array(*body);
    if (!array) array = find_array(response_text);
    if (!array) throw FormatError("no JSON array of definitions in model output", std::string(response_text));
    if (array->empty()) throw EmptyOutputError("model returned an empty definition list");
    std::vector<Definition> out;
    for (const auto& item : *array) {
        if (!item.is_string())
            throw FormatError("definition list contains a non-string element", std::string(response_text));
        const auto text = unicode::trim(item.get_ref<const std::string&>());
        if (text.empty()) throw FormatError("definition list contains an empty string", std::string(response_text));
        if (!unicode::is_valid_utf8(text)) throw FormatError("definition is not valid UTF-8", std::string(response_text));
        out.push_back(Definition{unicode::nfc(text)});
    }
    return out;
}

}  // namespace lexforge
