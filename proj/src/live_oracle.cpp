#include "orderby/live_oracle.hpp"

#include <chrono>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace orderby {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string task_clause(const RankTask& task) {
    std::string s = "Ordering criterion: " + task.criterion + ".";
    if (task.query) s += " Query context: " + *task.query + ".";
    s +=
        " Always reason about the items in ascending order of the criterion"
        " (smallest or least first).";
    return s;
}

ojson response_schema(const char* name, ojson answer_field) {
    // Reasoning precedes the answer field so the model commits its chain of
    // thought before the structured answer.
    ojson props;
    props["reasoning"] = {{"type", "string"}};
    props[name] = std::move(answer_field);
    return ojson{{"type", "json_schema"},
                {"json_schema",
                 {{"name", std::string("rank_") + name},
                  {"strict", true},
                  {"schema",
                   {{"type", "object"},
                    {"properties", props},
                    {"required", ojson::array({"reasoning", name})},
                    {"additionalProperties", false}}}}}};
}

std::string redact(std::string body, const std::string& secret) {
    if (secret.empty()) return body;
    for (std::size_t at = body.find(secret); at != std::string::npos;
         at = body.find(secret, at)) {
        body.replace(at, secret.size(), "[redacted]");
    }
    return body;
}

HttpTransport make_default_transport(const LiveOracleConfig& cfg) {
    return [base = cfg.base_url](const std::string& url, const std::string& body,
                                 const HttpHeaders& headers) {
        httplib::Client client(base);
        client.set_connection_timeout(30);
        client.set_read_timeout(300);
        httplib::Headers h(headers.begin(), headers.end());
        auto res = client.Post(url, h, body, "application/json");
        if (!res) return HttpResponse{0, "", httplib::to_string(res.error())};
        return HttpResponse{res->status, res->body, ""};
    };
}

}  // namespace

LiveOracle::LiveOracle(LiveOracleConfig cfg)
    : cfg_(std::move(cfg)), transport_(make_default_transport(cfg_)) {}

LiveOracle::LiveOracle(LiveOracleConfig cfg, HttpTransport transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {}

LiveOracle::Exchange LiveOracle::round_trip(const std::string& request_body, UsageMeter& meter) {
    HttpHeaders headers{{"Authorization", "Bearer " + cfg_.api_key}};
    Exchange ex;
    for (int attempt = 0; attempt < std::max(1, cfg_.transport_retries); ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(250 << (attempt - 1)));
        if (cfg_.verbose)
            std::cerr << "live request: " << redact(request_body, cfg_.api_key) << "\n";
        HttpResponse res = transport_(cfg_.path, request_body, headers);
        if (cfg_.verbose)
            std::cerr << "live response (" << res.status
                      << "): " << redact(res.body.empty() ? res.error : res.body, cfg_.api_key)
                      << "\n";
        if (!res.error.empty() || res.status == 429 || res.status >= 500) {
            ex.error = res.error.empty() ? "http status " + std::to_string(res.status) : res.error;
            continue;
        }
        if (res.status != 200) {
            ex.error = "http status " + std::to_string(res.status) + ": " + res.body;
            return ex;  // 4xx other than 429: retrying will not help
        }
        json doc = json::parse(res.body, nullptr, false);
        if (doc.is_discarded()) {
            ex.error = "response body is not JSON";
            return ex;
        }
        std::int64_t prompt = 0, completion = 0;
        if (doc.contains("usage")) {
            prompt = doc["usage"].value("prompt_tokens", std::int64_t(0));
            completion = doc["usage"].value("completion_tokens", std::int64_t(0));
        }
        meter.add(1, prompt, completion);
        try {
            ex.content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            ex.transport_ok = true;
        } catch (const json::exception&) {
            ex.error = "response has no message content";
        }
        return ex;
    }
    return ex;
}

OracleResult<std::vector<double>> LiveOracle::score_batch(const std::vector<Key>& keys,
                                                          const RankTask& task,
                                                          UsageMeter& meter) {
    if (keys.empty()) throw std::invalid_argument("score_batch: empty batch");

    std::string user = task_clause(task);
    user += "\nAssign each item below a numeric value of the criterion. Respond with JSON:"
            " a `reasoning` string, then `values`, an array with exactly " +
            std::to_string(keys.size()) + " numbers in input order.\n";
    for (std::size_t i = 0; i < keys.size(); ++i)
        user += "\nItem " + std::to_string(i + 1) + ": " + keys[i].text;

    ojson body{{"model", cfg_.model},
              {"temperature", cfg_.decoding.temperature},
              {"messages",
               ojson::array({{{"role", "system"},
                             {"content", "You estimate numeric attribute values for items."}},
                            {{"role", "user"}, {"content", user}}})},
              {"response_format",
               response_schema("values", ojson{{"type", "array"}, {"items", {{"type", "number"}}}})}};
    if (cfg_.decoding.top_p) body["top_p"] = *cfg_.decoding.top_p;
    if (cfg_.decoding.max_tokens) body["max_tokens"] = *cfg_.decoding.max_tokens;
    std::string request = body.dump();

    // One re-request on a malformed body, then invalid.
    for (int attempt = 0; attempt < 2; ++attempt) {
        Exchange ex = round_trip(request, meter);
        if (!ex.transport_ok)
            return OracleResult<std::vector<double>>::failure(OracleStatus::transport_error,
                                                              ex.error);
        json parsed = json::parse(ex.content, nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("values") && parsed["values"].is_array() &&
            parsed["values"].size() == keys.size()) {
            std::vector<double> values;
            values.reserve(keys.size());
            bool numeric = true;
            for (const auto& v : parsed["values"]) {
                if (!v.is_number()) {
                    numeric = false;
                    break;
                }
                values.push_back(v.get<double>());
            }
            if (numeric) return {OracleStatus::ok, std::move(values), {}};
        }
    }
    return OracleResult<std::vector<double>>::failure(OracleStatus::invalid_output,
                                                      "value count mismatch after one retry");
}

OracleResult<CompareOutcome> LiveOracle::compare(const Key& a, const Key& b, const RankTask& task,
                                                 UsageMeter& meter) {
    if (a.id == b.id) throw std::invalid_argument("compare: keys must be distinct");

    std::string user = task_clause(task);
    user += "\nWhich item comes first in ascending order of the criterion?"
            " Respond with JSON: a `reasoning` string, then `winner`, either \"A\" or \"B\".";
    user += "\n\nItem A: " + a.text + "\nItem B: " + b.text;

    ojson body{{"model", cfg_.model},
              {"temperature", cfg_.decoding.temperature},
              {"messages",
               ojson::array({{{"role", "system"}, {"content", "You compare two items."}},
                            {{"role", "user"}, {"content", user}}})},
              {"response_format",
               response_schema("winner",
                               ojson{{"type", "string"}, {"enum", ojson::array({"A", "B"})}})}};
    if (cfg_.decoding.top_p) body["top_p"] = *cfg_.decoding.top_p;
    if (cfg_.decoding.max_tokens) body["max_tokens"] = *cfg_.decoding.max_tokens;
    std::string request = body.dump();

    for (int attempt = 0; attempt < 2; ++attempt) {
        Exchange ex = round_trip(request, meter);
        if (!ex.transport_ok)
            return OracleResult<CompareOutcome>::failure(OracleStatus::transport_error, ex.error);
        json parsed = json::parse(ex.content, nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("winner") && parsed["winner"].is_string()) {
            std::string w = parsed["winner"].get<std::string>();
            if (w == "A") return {OracleStatus::ok, CompareOutcome{Winner::first}, {}};
            if (w == "B") return {OracleStatus::ok, CompareOutcome{Winner::second}, {}};
        }
    }
    return OracleResult<CompareOutcome>::failure(OracleStatus::comparison_failed,
                                                 "unparseable winner after one retry");
}

OracleResult<BatchSortResult> LiveOracle::sort_batch(const std::vector<Key>& keys,
                                                     const RankTask& task, UsageMeter& meter) {
    if (keys.empty()) throw std::invalid_argument("sort_batch: empty batch");

    std::string user = task_clause(task);
    user += "\nSort the items below in ascending order of the criterion. Respond with JSON:"
            " a `reasoning` string, then `order`, an array of the item ids from first to last,"
            " each id exactly once.\n";
    for (const Key& k : keys) user += "\nItem id \"" + k.id + "\": " + k.text;

    ojson body{{"model", cfg_.model},
              {"temperature", cfg_.decoding.temperature},
              {"messages",
               ojson::array({{{"role", "system"}, {"content", "You sort a list of items."}},
                            {{"role", "user"}, {"content", user}}})},
              {"response_format",
               response_schema("order", ojson{{"type", "array"}, {"items", {{"type", "string"}}}})}};
    if (cfg_.decoding.top_p) body["top_p"] = *cfg_.decoding.top_p;
    if (cfg_.decoding.max_tokens) body["max_tokens"] = *cfg_.decoding.max_tokens;
    std::string request = body.dump();

    std::vector<std::string> expected;
    expected.reserve(keys.size());
    for (const Key& k : keys) expected.push_back(k.id);

    std::vector<std::string> raw;
    bool got_list = false;
    for (int attempt = 0; attempt < 2 && !got_list; ++attempt) {
        Exchange ex = round_trip(request, meter);
        if (!ex.transport_ok)
            return OracleResult<BatchSortResult>::failure(OracleStatus::transport_error, ex.error);
        json parsed = json::parse(ex.content, nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("order") && parsed["order"].is_array()) {
            raw.clear();
            bool strings = true;
            for (const auto& v : parsed["order"]) {
                if (!v.is_string()) {
                    strings = false;
                    break;
                }
                raw.push_back(v.get<std::string>());
            }
            got_list = strings;
            if (got_list && is_permutation_of(raw, expected))
                return {OracleStatus::ok, BatchSortResult{std::move(raw), true}, {}};
            if (got_list) break;  // parseable but not a permutation: repair, don't re-ask
        }
    }
    if (!got_list)
        return OracleResult<BatchSortResult>::failure(OracleStatus::invalid_output,
                                                      "unparseable order after one retry");
    if (!cfg_.repair)
        return OracleResult<BatchSortResult>::failure(OracleStatus::invalid_output,
                                                      "order is not a permutation");
    return {OracleStatus::ok, BatchSortResult{repair_permutation(raw, expected), false}, {}};
}

std::string LiveOracle::descriptor() const {
    return "live;model=" + cfg_.model + ";url=" + cfg_.base_url + cfg_.path;
}

std::string LiveOracle::decoding_descriptor() const {
    nlohmann::json j;
    j["temperature"] = cfg_.decoding.temperature;
    if (cfg_.decoding.top_p) j["top_p"] = *cfg_.decoding.top_p;
    if (cfg_.decoding.max_tokens) j["max_tokens"] = *cfg_.decoding.max_tokens;
    return j.dump();
}

}  // namespace orderby
