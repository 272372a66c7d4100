#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orderby/oracle.hpp"

namespace orderby {

struct DecodingParams {
    double temperature = 0.0;
    std::optional<double> top_p;
    std::optional<int> max_tokens;
};

struct LiveOracleConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    std::string api_key;  // read from the environment by the CLI; never logged
    DecodingParams decoding;
    int transport_retries = 3;  // attempts on 429/5xx/connect failure
    bool verbose = false;       // log request/response bodies (key redacted)
    bool repair = true;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error;  // transport-level failure, empty on success
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;
using HttpTransport =
    std::function<HttpResponse(const std::string& url, const std::string& body,
                               const HttpHeaders& headers)>;

// Chat-completion backend. Prompts request structured JSON with a reasoning
// field ahead of the answer field; responses are parsed and re-requested
// once on a malformed body before the call is reported invalid. A custom
// transport can be injected for tests.
class LiveOracle final : public Oracle {
public:
    explicit LiveOracle(LiveOracleConfig cfg);
    LiveOracle(LiveOracleConfig cfg, HttpTransport transport);

    OracleResult<std::vector<double>> score_batch(const std::vector<Key>& keys,
                                                  const RankTask& task,
                                                  UsageMeter& meter) override;
    OracleResult<CompareOutcome> compare(const Key& a, const Key& b, const RankTask& task,
                                         UsageMeter& meter) override;
    OracleResult<BatchSortResult> sort_batch(const std::vector<Key>& keys, const RankTask& task,
                                             UsageMeter& meter) override;
    std::string descriptor() const override;
    std::string decoding_descriptor() const override;

private:
    struct Exchange {
        bool transport_ok = false;
        std::string content;  // assistant message body when transport_ok
        std::string error;
    };

    Exchange round_trip(const std::string& request_body, UsageMeter& meter);

    LiveOracleConfig cfg_;
    HttpTransport transport_;
};

}  // namespace orderby
