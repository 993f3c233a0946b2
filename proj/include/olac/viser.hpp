// The virtual service provider: turns aggregator Query responses into
// web pages with continuation links, plus crawler-friendly per-record
// pages.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "olac/aggregator.hpp"
#include "olac/protocol.hpp"

namespace olac {

// How Viser reaches the aggregator; implementations throw on transport
// failure, which renders as a 502-style page.
class QueryClient {
public:
    virtual ~QueryClient() = default;
    virtual std::string request(const ProtocolRequest& req) = 0;
};

// In-process client over an aggregator handle.
class LocalQueryClient : public QueryClient {
public:
    LocalQueryClient(const Aggregator& aggregator, ProviderConfig config)
        : aggregator_(aggregator), config_(std::move(config)) {}

    std::string request(const ProtocolRequest& req) override {
        std::shared_ptr<RepositorySource> source = aggregator_.aggregate_source();
        return handle_request(req, *source, config_).body;
    }

private:
    const Aggregator& aggregator_;
    ProviderConfig config_;
};

// Wire client for a remote aggregator endpoint.
class HttpQueryClient : public QueryClient {
public:
    HttpQueryClient(std::string base_url, std::shared_ptr<Fetcher> fetcher)
        : base_url_(std::move(base_url)), fetcher_(std::move(fetcher)) {}

    std::string request(const ProtocolRequest& req) override;

private:
    std::string base_url_;
    std::shared_ptr<Fetcher> fetcher_;
};

struct ViserRequest {
    std::optional<int> elements;
    std::optional<std::string> sql;
    std::string title;
    std::optional<std::string> template_text; // custom template, already fetched
    std::string template_fetch_error; // set when a requested template could not be fetched
    std::optional<std::string> resumption_token;
};

struct ListingItem {
    std::string display_title;
    std::string archive_name;
    std::string record_identifier;
    std::string link;

    bool operator==(const ListingItem&) const = default;
};

struct ListingPage {
    std::string title;
    std::vector<ListingItem> items;
    std::optional<std::string> more_link;

    bool operator==(const ListingPage&) const = default;
};

struct ViserConfig {
    std::string listing_path = "/search"; // where the listing endpoint lives, for more-links
    std::string record_path = "/record/";
    std::string default_title = "Search results";
    std::shared_ptr<const ApplicationProfile> profile; // labels on record pages
};

struct HtmlPage {
    std::string body;
    int http_status = 200;
};

HtmlPage render_listing(const ViserRequest& req, QueryClient& client, const ViserConfig& config);
HtmlPage render_record_page(const std::string& identifier, QueryClient& client,
                            const ViserConfig& config);

struct TemplateError : Error {
    using Error::Error;
};

const std::string& default_listing_template();

// Expands a placeholder template: {{title}}, an {{#items}}...{{/items}}
// loop over {{display_title}}/{{archive_name}}/{{record_identifier}}/
// {{link}}, and optional {{#more}}...{{/more}} / {{#empty}}...{{/empty}}
// sections. Unknown placeholders or a missing items loop raise
// TemplateError. All substituted values are HTML-escaped.
std::string apply_template(const std::string& template_text, const ListingPage& page);

std::string html_escape(std::string_view raw);

} // namespace olac
