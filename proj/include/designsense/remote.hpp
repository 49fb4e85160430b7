#pragma once

// Minimal JSON-over-HTTP transport shared by all external-service clients
// (generator, grouper, refiner, judge, embedder).

#include <chrono>
#include <string>

#include "designsense/layout.hpp"

namespace dsense {

struct Endpoint {
    std::string url;  // http://host[:port][/prefix]
    int retries = 2;  // extra attempts after the first, transport failures only
    std::chrono::milliseconds timeout{10000};
    std::chrono::milliseconds backoff{50};
    std::string api_key;  // sent as a bearer token when non-empty
};

// True for http://host[:port][/path] URLs.
bool is_well_formed_url(const std::string& url);

// POSTs `body` to url + path and returns the decoded response.
//  - connection failures and 5xx replies are retried, then raised as TransportError;
//  - other non-2xx replies and undecodable bodies raise ProtocolError with an excerpt.
Json post_json(const Endpoint& ep, const std::string& path, const Json& body);

// First `limit` characters of a payload, for error messages.
std::string excerpt(const std::string& payload, std::size_t limit = 200);

}  // namespace dsense
