#pragma once

#include <chrono>
#include <string>

#include "evr/io.hpp"

namespace evr {

struct HttpEndpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string token;     // bearer token; empty = no Authorization header
    std::chrono::milliseconds timeout{60000};
};

// POSTs a JSON body to base_url + path and returns the parsed response.
// Connection failures, timeouts, 429 and 5xx raise TransportError; other
// non-2xx statuses raise Error("provider_rejected"); an unparseable body
// raises Error("provider_bad_response").
json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body);

}  // namespace evr
