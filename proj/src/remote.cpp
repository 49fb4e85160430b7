#include "designsense/remote.hpp"

#include <regex>
#include <thread>

#include "designsense/error.hpp"
#include "httplib.h"

namespace dsense {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash
};

const std::regex& url_pattern() {
    static const std::regex re(R"(^(http://[A-Za-z0-9.\-]+(:[0-9]{1,5})?)(/[^\s?#]*)?$)");
    return re;
}

SplitUrl split_url(const std::string& url) {
    std::smatch m;
    if (!std::regex_match(url, m, url_pattern())) {
        throw DomainError("malformed endpoint URL '" + url + "' (expected http://host[:port][/prefix])");
    }
    std::string prefix = m[3].matched ? m[3].str() : "";
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {m[1].str(), prefix};
}

}  // namespace

bool is_well_formed_url(const std::string& url) { return std::regex_match(url, url_pattern()); }

std::string excerpt(const std::string& payload, std::size_t limit) {
    if (payload.size() <= limit) return payload;
    return payload.substr(0, limit) + "...";
}

Json post_json(const Endpoint& ep, const std::string& path, const Json& body) {
    const SplitUrl target = split_url(ep.url);
    const std::string full_path = target.prefix + path;
    const std::string payload = body.dump();

    std::string last_failure;
    for (int attempt = 0; attempt <= ep.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(ep.backoff * attempt);

        httplib::Client client(target.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers headers;
        if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);

        auto res = client.Post(full_path, headers, payload, "application/json");
        if (!res) {
            last_failure = "POST " + ep.url + path + " failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_failure = "POST " + ep.url + path + " returned HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw ProtocolError("POST " + ep.url + path + " returned HTTP " + std::to_string(res->status),
                                excerpt(res->body));
        }
        try {
            return Json::parse(res->body);
        } catch (const Json::parse_error&) {
            throw ProtocolError("response from " + ep.url + path + " is not JSON", excerpt(res->body));
        }
    }
    throw TransportError(last_failure + " (after " + std::to_string(ep.retries + 1) + " attempts)");
}

}  // namespace dsense
