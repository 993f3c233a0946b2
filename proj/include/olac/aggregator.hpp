// The union catalog: register providers, harvest them into an on-disk
// store of provenanced records, and re-expose the union as one data
// provider that also answers the Query verb.

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "olac/protocol.hpp"

namespace olac {

struct RegistrationError : Error {
    using Error::Error;
};
// Registration-time problems with the provider's self-description.
struct BadRepositoryError : Error {
    using Error::Error;
};

enum class ArchiveStatus { active, failing, suspended };

const char* to_string(ArchiveStatus status);
std::optional<ArchiveStatus> archive_status_from_string(std::string_view text);

struct RegistryEntry {
    std::string archive_id;
    std::string base_url;
    std::optional<UtcTimestamp> last_successful_harvest;
    ArchiveStatus status = ArchiveStatus::active;
    int consecutive_failures = 0;
    ArchiveDescription description; // captured at registration

    bool operator==(const RegistryEntry&) const = default;
};

enum class HarvestMode { full, incremental };

struct HarvestError {
    std::string stage; // "transport" | "record"
    std::string message;

    bool operator==(const HarvestError&) const = default;
};

struct HarvestReport {
    std::string archive_id;
    HarvestMode mode = HarvestMode::full;
    long added = 0;
    long updated = 0;
    long deleted = 0;
    long unchanged = 0;
    std::vector<HarvestError> errors;
    UtcTimestamp started_at;
    UtcTimestamp finished_at;

    bool transport_clean() const;
};

struct ProvenancedRecord {
    std::string identifier; // full oai identifier
    std::string source_archive;
    UtcTimestamp datestamp;
    bool deleted = false;
    std::optional<MetadataRecord> record; // absent when deleted
    std::vector<ElementQuad> quads; // always extract_quads(*record), [] when deleted

    bool operator==(const ProvenancedRecord&) const = default;
};

struct AggregatorOptions {
    std::string aggregator_id = "aggregate";
    ArchiveDescription self_description; // empty fields get serviceable defaults
};

// Owns the data directory: registry.json plus one repository-format
// file per source archive under archives/. The in-memory union is an
// immutable snapshot swapped atomically after each mutation, so readers
// never block on harvests; harvests of one archive exclude each other.
class Aggregator {
public:
    using Options = AggregatorOptions;

    Aggregator(std::string data_dir, std::shared_ptr<Fetcher> fetcher,
               std::shared_ptr<const ApplicationProfile> profile, Options options = {},
               Clock now = &UtcTimestamp::now);

    // Issues Identify at base_url, validates the archive description and
    // persists the entry. Re-registering the same base_url refreshes the
    // captured description and returns the existing entry.
    RegistryEntry register_provider(const std::string& base_url);

    HarvestReport harvest(const std::string& archive_id, HarvestMode mode);

    std::vector<RegistryEntry> registry() const;
    std::optional<RegistryEntry> entry(const std::string& archive_id) const;

    // A consistent snapshot of the union, ready for handle_request; the
    // source answers the Query verb.
    std::shared_ptr<RepositorySource> aggregate_source() const;

    // All stored records in the aggregate total order (datestamp, identifier).
    std::vector<ProvenancedRecord> stored_records() const;

    const std::shared_ptr<const ApplicationProfile>& profile() const { return profile_; }
    const std::string& data_dir() const { return data_dir_; }

private:
    struct Snapshot {
        std::map<std::string, RegistryEntry> registry; // by archive_id
        std::map<std::string, ProvenancedRecord> records; // by identifier
    };

    void load();
    void persist_registry(const Snapshot& snap) const;
    void persist_archive(const Snapshot& snap, const std::string& archive_id) const;
    std::shared_ptr<const Snapshot> snapshot() const;
    void swap_snapshot(std::shared_ptr<const Snapshot> next);
    std::string fetch_page(const std::string& url, std::string& error) const;

    std::string data_dir_;
    std::shared_ptr<Fetcher> fetcher_;
    std::shared_ptr<const ApplicationProfile> profile_;
    Options options_;
    Clock now_;

    mutable std::mutex mutex_; // guards snapshot_ and archive_locks_
    std::shared_ptr<const Snapshot> snapshot_;
    std::map<std::string, std::shared_ptr<std::mutex>> archive_locks_;
};

// Turns a display name into a usable archive id: lowercase alphanumerics
// with single dashes, guaranteed to start with a letter.
std::string sanitize_archive_id(std::string_view name);

} // namespace olac
