// A whole metadata repository in one document: the archive description
// plus every record with its datestamp, including deletion tombstones.
// Edit operations return new document values; callers own write ordering.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "olac/model.hpp"
#include "olac/timestamp.hpp"

namespace olac {

struct DuplicateIdError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct NotFoundError : Error {
    using Error::Error;
};
struct BadArgumentError : Error {
    using Error::Error;
};

struct RepositoryRecord {
    std::string local_id;
    UtcTimestamp datestamp;
    bool deleted = false;
    std::optional<MetadataRecord> metadata; // absent when deleted
    std::vector<std::string> set_memberships;

    bool operator==(const RepositoryRecord&) const = default;
};

struct RepositorySet {
    std::string spec;
    std::string name;
    bool operator==(const RepositorySet&) const = default;
};

struct RepositoryDocument {
    std::string repository_id; // [a-zA-Z][a-zA-Z0-9-]*
    ArchiveDescription description;
    std::vector<RepositoryRecord> records;
    std::vector<RepositorySet> sets;

    const RepositoryRecord* find(std::string_view local_id) const;
    bool operator==(const RepositoryDocument&) const = default;
};

bool valid_repository_id(std::string_view id);
bool looks_like_url(std::string_view url);

// Shared with the protocol layer, which embeds the same description
// block in Identify responses.
ArchiveDescription parse_archive_description(const xml::Element& el);
xml::Element archive_description_to_element(const ArchiveDescription& desc, const char* element_name);

RepositoryDocument parse_repository(std::string_view doc);
std::string serialize_repository(const RepositoryDocument& repo);

struct UpsertRejected {
    std::vector<Finding> findings;
};

// Inserts or replaces a record with status active and datestamp `now`.
// The metadata must validate against the profile with no errors; on
// rejection the findings come back instead of a new document.
std::variant<RepositoryDocument, UpsertRejected>
upsert_record(const RepositoryDocument& repo, const std::string& local_id,
              MetadataRecord metadata, UtcTimestamp now, const ApplicationProfile& profile);

struct DeleteResult {
    RepositoryDocument repo;
    bool was_noop = false; // record was already deleted
};

// Tombstones a record. Unknown id -> NotFoundError; deleting an already
// deleted record is a no-op flagged in the result.
DeleteResult delete_record(const RepositoryDocument& repo, const std::string& local_id, UtcTimestamp now);

// Records with from <= datestamp <= until (both inclusive, both
// optional) and membership in `set` when given; tombstones included;
// ordered by (datestamp, local_id).
std::vector<RepositoryRecord>
select_records(const RepositoryDocument& repo,
               const std::optional<UtcTimestamp>& from = std::nullopt,
               const std::optional<UtcTimestamp>& until = std::nullopt,
               const std::optional<std::string>& set = std::nullopt);

} // namespace olac
