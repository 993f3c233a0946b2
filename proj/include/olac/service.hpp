// HTTP front ends for the four services, plus the real network fetcher.
// One Service instance hosts one personality; the CLI owns the loop.

#pragma once

#include <functional>
#include <memory>
#include <string>

#include "olac/aggregator.hpp"
#include "olac/protocol.hpp"
#include "olac/viser.hpp"

namespace olac {

// Fetches over real HTTP(S) with a bounded timeout.
class HttpFetcher : public Fetcher {
public:
    explicit HttpFetcher(int timeout_seconds = 30) : timeout_seconds_(timeout_seconds) {}
    FetchResult fetch(const std::string& url) override;

private:
    int timeout_seconds_;
};

struct ServiceOptions {
    std::string base_url; // advertised in response envelopes
    int page_size = 500;
    int token_expiry_hours = 24;
    std::shared_ptr<const ApplicationProfile> profile;
    // One line per request: timestamp, method, target, status, duration.
    std::function<void(const std::string&)> log;
};

class Service {
public:
    Service();
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void mount_vida(std::shared_ptr<VidaGateway> gateway, ServiceOptions options);
    void mount_provider(std::shared_ptr<const RepositoryDocument> document, ServiceOptions options);
    void mount_aggregator(std::shared_ptr<Aggregator> aggregator, ServiceOptions options);
    void mount_viser(std::shared_ptr<QueryClient> client, std::shared_ptr<Fetcher> template_fetcher,
                     ViserConfig viser, ServiceOptions options);

    // Blocking serve; returns false when the address cannot be bound.
    bool listen(const std::string& host, int port);

    // Split form for tests: bind (port 0 picks a free port), then serve
    // from a background thread via listen_after_bind.
    int bind(const std::string& host, int port);
    bool listen_after_bind();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Splits "host:port"; accepts a bare port as ":port" or "port".
bool split_listen_address(const std::string& address, std::string& host, int& port);

} // namespace olac
