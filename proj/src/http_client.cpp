#include "evr/http_client.hpp"

#include "evr/error.hpp"
#include "httplib.h"

namespace evr {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("invalid_url", "base URL must include a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_start);
        out.prefix = url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

}  // namespace

json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body) {
    const auto url = split_url(endpoint.base_url);
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);

    const auto res = client.Post(url.prefix + path, headers, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
        throw TransportError(timeout ? "provider_timeout" : "provider_unreachable",
                             endpoint.base_url + path + ": " + httplib::to_string(err), timeout);
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("provider_unavailable",
                             endpoint.base_url + path + " returned HTTP " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error("provider_rejected", endpoint.base_url + path + " returned HTTP " +
                                             std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw Error("provider_bad_response", std::string("unparseable provider response: ") + e.what());
    }
}

}  // namespace evr
