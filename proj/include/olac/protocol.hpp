// The harvesting-protocol engine: request parsing and validation, the
// verb handlers, stateless resumption tokens, and the Vida gateway that
// serves the protocol from a posted repository document.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "olac/crosswalk.hpp"
#include "olac/oryx.hpp"

namespace olac {

// Where a record originally came from, carried on aggregated records
// and surfaced in the response's about block.
struct Provenance {
    std::string archive_id;
    std::string archive_name;
    std::string base_url;

    bool operator==(const Provenance&) const = default;
};

// A record as served by the protocol, under its full oai identifier.
struct SourceRecord {
    std::string identifier;
    UtcTimestamp datestamp;
    bool deleted = false;
    std::vector<std::string> sets;
    std::optional<MetadataRecord> metadata;
    std::optional<Provenance> provenance;

    bool operator==(const SourceRecord&) const = default;
};

struct SourceDescription {
    std::string repository_id;
    ArchiveDescription description;
};

// Capability interface the engine serves from. Implementations must be
// snapshots: repeated select calls during one request see the same data.
class RepositorySource {
public:
    virtual ~RepositorySource() = default;

    virtual SourceDescription description() const = 0;
    virtual std::optional<SourceRecord> get(const std::string& identifier) const = 0;
    virtual std::vector<SourceRecord> select(const std::optional<UtcTimestamp>& from,
                                             const std::optional<UtcTimestamp>& until,
                                             const std::optional<std::string>& set) const = 0;
    virtual std::vector<RepositorySet> sets() const = 0;

    // Only the aggregator answers the Query verb.
    virtual bool supports_query() const { return false; }
};

// Serves a parsed repository document snapshot.
class OryxSource : public RepositorySource {
public:
    explicit OryxSource(std::shared_ptr<const RepositoryDocument> doc) : doc_(std::move(doc)) {}

    SourceDescription description() const override;
    std::optional<SourceRecord> get(const std::string& identifier) const override;
    std::vector<SourceRecord> select(const std::optional<UtcTimestamp>& from,
                                     const std::optional<UtcTimestamp>& until,
                                     const std::optional<std::string>& set) const override;
    std::vector<RepositorySet> sets() const override;

private:
    std::shared_ptr<const RepositoryDocument> doc_;
};

std::string make_oai_identifier(const std::string& repository_id, const std::string& local_id);
// Splits "oai:<repository-id>:<local-id>"; returns false on malformed input.
bool split_oai_identifier(const std::string& identifier, std::string& repository_id, std::string& local_id);

struct ProtocolRequest {
    std::string verb;
    std::vector<std::pair<std::string, std::string>> arguments; // excludes verb, document order

    const std::string* argument(std::string_view name) const;
};

using Clock = std::function<UtcTimestamp()>;

struct ProviderConfig {
    std::string base_url = "http://localhost/";
    int page_size = 500;
    int token_expiry_hours = 24;
    std::shared_ptr<const ApplicationProfile> profile; // required for oai_dc
    Clock now = &UtcTimestamp::now;
};

struct ProtocolResponse {
    std::string body;
    int http_status = 200;
    std::string error_code; // empty on success payloads
};

// Full verb dispatch. Never throws for request-level problems; those
// become protocol error responses per the error table.
ProtocolResponse handle_request(const ProtocolRequest& req, const RepositorySource& source,
                                const ProviderConfig& config);

// An error response in the standard envelope, for conditions that arise
// outside the verb handlers (gateway failures, transport-level checks).
ProtocolResponse make_error_response(const ProtocolRequest& req, const ProviderConfig& config,
                                     const std::string& code, const std::string& message,
                                     int http_status = 200);

// Resumption tokens are self-describing: resuming re-executes the
// original selection, so the token carries the original arguments along
// with the cursor. A checksum rejects foreign strings.
struct ResumptionToken {
    std::string verb;
    std::string repository_id;
    std::vector<std::pair<std::string, std::string>> arguments; // canonical (sorted) selector args
    long cursor = 0;
    std::int64_t issued_at = 0;
    long complete_list_size = 0;
};

std::string encode_token(const ResumptionToken& token);
std::optional<ResumptionToken> decode_token(std::string_view text);

std::string url_encode(std::string_view raw);
std::string url_decode(std::string_view raw);

// --- Vida: the virtual data provider -------------------------------------

struct FetchResult {
    int status = 0; // 0 = transport failure
    std::string body;
    std::string error; // transport failure detail
    bool ok() const { return status >= 200 && status < 300; }
};

class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResult fetch(const std::string& url) = 0;
};

struct VidaError : Error {
    VidaError(std::string error_code, const std::string& message, int status)
        : Error(message), code(std::move(error_code)), http_status(status) {}
    std::string code; // upstreamUnavailable | badRepository | badArgument
    int http_status;
};

// Resolves "host/path" suffixes to live sources, fetching and parsing
// the repository document behind them. Parsed documents are cached for
// ttl_seconds, keyed by URL; the cache is safe for concurrent use.
class VidaGateway {
public:
    VidaGateway(std::shared_ptr<Fetcher> fetcher, int ttl_seconds, Clock now = &UtcTimestamp::now)
        : fetcher_(std::move(fetcher)), ttl_seconds_(ttl_seconds), now_(std::move(now)) {}

    // "example.org/repo.xml" -> http://example.org/repo.xml;
    // "https/example.org/repo.xml" -> https://example.org/repo.xml
    static std::string url_from_suffix(std::string_view suffix);

    std::shared_ptr<RepositorySource> resolve(std::string_view path_suffix);

private:
    struct CacheEntry {
        UtcTimestamp fetched_at;
        std::shared_ptr<const RepositoryDocument> doc;
    };

    std::shared_ptr<Fetcher> fetcher_;
    int ttl_seconds_;
    Clock now_;
    std::mutex mutex_;
    std::map<std::string, CacheEntry> cache_;
};

// --- Client-side response parsing (used by the harvester and Viser) ------

struct ParsedList {
    std::string error_code;
    std::string error_message;
    std::vector<SourceRecord> records;
    // Records whose metadata body would not parse land here instead of
    // in `records`, so one bad record cannot sink a harvest page.
    std::vector<std::string> record_errors;
    bool has_token_element = false;
    std::string resumption_token; // empty on the final page
    long complete_list_size = -1;
};

// Reads a ListRecords-shaped response (ListRecords, ListIdentifiers or
// Query payloads). Throws xml::ParseError / Error on malformed documents.
ParsedList parse_list_response(std::string_view body);

struct ParsedIdentify {
    std::string error_code;
    std::string error_message;
    std::string repository_name;
    std::string repository_id; // empty when the response carries none
    std::optional<ArchiveDescription> description;
};

ParsedIdentify parse_identify_response(std::string_view body);

} // namespace olac
