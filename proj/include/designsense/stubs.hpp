#pragma once

// Deterministic stand-ins for the external services, speaking the same wire
// protocols as the remote clients. Used by the heuristic fallback mode, the
// `stub serve` command and the end-to-end tests.

#include <cstdint>
#include <memory>
#include <string>

#include "designsense/augment.hpp"
#include "designsense/json_io.hpp"

namespace dsense {

// FNV-1a over the bytes of a string.
std::uint64_t fnv1a64(std::string_view bytes);

// Generator: random group placement, seeded by a hash of the request.
Json stub_generate(const Json& request);
// Grouper: heuristic grouping.
Json stub_group(const Json& request);
// Refiner: the local optimizer.
Json stub_refine(const Json& request);
// Judge: the heuristic judge applied to the request's layout metadata.
Json stub_judge(const Json& request);
// Embedder: geometric features.
Json stub_embed(const Json& request);

class StubGenerator final : public GeneratorBackend {
public:
    Json generate(const Json& request) override { return stub_generate(request); }
};

// HTTP server exposing POST /generate, /group, /refine, /judge, /embed and
// GET /health. Handler failures answer 400 with {"error": ...}.
class StubServer {
public:
    StubServer();
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    // Binds and serves on a background thread; port 0 picks a free port.
    // Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    // Blocks serving on the calling thread.
    void listen_blocking(const std::string& host, int port);
    void stop();
    std::string url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace dsense
