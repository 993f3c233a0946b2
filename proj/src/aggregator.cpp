#include "olac/aggregator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace olac {

namespace {

const struct {
    ArchiveStatus status;
    const char* name;
} kStatusNames[] = {
    {ArchiveStatus::active, "active"},
    {ArchiveStatus::failing, "failing"},
    {ArchiveStatus::suspended, "suspended"},
};

ArchiveDescription with_defaults(ArchiveDescription desc) {
    auto fill = [](std::string& field, const char* value) {
        if (field.empty())
            field = value;
    };
    fill(desc.archive_name, "Aggregate of registered archives");
    fill(desc.archive_url, "http://localhost/");
    fill(desc.curator, "unattended");
    fill(desc.location, "service host");
    fill(desc.institution_name, "none");
    fill(desc.institution_url, "http://localhost/");
    fill(desc.synopsis, "Union catalog harvested from every registered archive.");
    fill(desc.access_terms, "See the terms of each source archive.");
    return desc;
}

std::string join_url(const std::string& base_url, const std::string& query) {
    return base_url + (base_url.find('?') == std::string::npos ? "?" : "&") + query;
}

json description_to_json(const ArchiveDescription& d) {
    return json{{"archiveName", d.archive_name},
                {"archiveURL", d.archive_url},
                {"curator", d.curator},
                {"location", d.location},
                {"institutionName", d.institution_name},
                {"institutionURL", d.institution_url},
                {"synopsis", d.synopsis},
                {"accessTerms", d.access_terms}};
}

ArchiveDescription description_from_json(const json& j) {
    ArchiveDescription d;
    d.archive_name = j.value("archiveName", "");
    d.archive_url = j.value("archiveURL", "");
    d.curator = j.value("curator", "");
    d.location = j.value("location", "");
    d.institution_name = j.value("institutionName", "");
    d.institution_url = j.value("institutionURL", "");
    d.synopsis = j.value("synopsis", "");
    d.access_terms = j.value("accessTerms", "");
    return d;
}

// The provider view over one snapshot. Sets are not carried across
// archives, so the aggregate declares no set hierarchy.
class AggregateSource : public RepositorySource {
public:
    AggregateSource(std::shared_ptr<const void> keepalive,
                    const std::map<std::string, RegistryEntry>* registry,
                    const std::map<std::string, ProvenancedRecord>* records,
                    std::string aggregator_id, ArchiveDescription self)
        : keepalive_(std::move(keepalive)),
          registry_(registry),
          records_(records),
          aggregator_id_(std::move(aggregator_id)),
          self_(std::move(self)) {}

    SourceDescription description() const override {
        return SourceDescription{aggregator_id_, self_};
    }

    std::optional<SourceRecord> get(const std::string& identifier) const override {
        auto it = records_->find(identifier);
        if (it == records_->end())
            return std::nullopt;
        return to_source_record(it->second);
    }

    std::vector<SourceRecord> select(const std::optional<UtcTimestamp>& from,
                                     const std::optional<UtcTimestamp>& until,
                                     const std::optional<std::string>& set) const override {
        std::vector<SourceRecord> out;
        if (set)
            return out; // no sets exist on the aggregate
        std::vector<const ProvenancedRecord*> picked;
        for (const auto& [identifier, rec] : *records_) {
            if (from && rec.datestamp < *from)
                continue;
            if (until && *until < rec.datestamp)
                continue;
            picked.push_back(&rec);
        }
        std::sort(picked.begin(), picked.end(), [](const auto* a, const auto* b) {
            if (a->datestamp != b->datestamp)
                return a->datestamp < b->datestamp;
            return a->identifier < b->identifier;
        });
        out.reserve(picked.size());
        for (const ProvenancedRecord* rec : picked)
            out.push_back(to_source_record(*rec));
        return out;
    }

    std::vector<RepositorySet> sets() const override { return {}; }

    bool supports_query() const override { return true; }

private:
    SourceRecord to_source_record(const ProvenancedRecord& rec) const {
        SourceRecord out;
        out.identifier = rec.identifier;
        out.datestamp = rec.datestamp;
        out.deleted = rec.deleted;
        out.metadata = rec.record;
        Provenance prov;
        prov.archive_id = rec.source_archive;
        if (auto it = registry_->find(rec.source_archive); it != registry_->end()) {
            prov.archive_name = it->second.description.archive_name;
            prov.base_url = it->second.base_url;
        }
        out.provenance = prov;
        return out;
    }

    std::shared_ptr<const void> keepalive_;
    const std::map<std::string, RegistryEntry>* registry_;
    const std::map<std::string, ProvenancedRecord>* records_;
    std::string aggregator_id_;
    ArchiveDescription self_;
};

} // namespace

const char* to_string(ArchiveStatus status) {
    for (const auto& entry : kStatusNames)
        if (entry.status == status)
            return entry.name;
    return "active";
}

std::optional<ArchiveStatus> archive_status_from_string(std::string_view text) {
    for (const auto& entry : kStatusNames)
        if (text == entry.name)
            return entry.status;
    return std::nullopt;
}

bool HarvestReport::transport_clean() const {
    return std::none_of(errors.begin(), errors.end(),
                        [](const HarvestError& e) { return e.stage == "transport"; });
}

std::string sanitize_archive_id(std::string_view name) {
    std::string out;
    bool pending_dash = false;
    for (char c : name) {
        bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
        if (!alnum) {
            pending_dash = !out.empty();
            continue;
        }
        if (pending_dash) {
            out += '-';
            pending_dash = false;
        }
        out += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    }
    if (out.empty())
        return "";
    if (!(out.front() >= 'a' && out.front() <= 'z'))
        out = "a-" + out;
    return out;
}

Aggregator::Aggregator(std::string data_dir, std::shared_ptr<Fetcher> fetcher,
                       std::shared_ptr<const ApplicationProfile> profile, Options options, Clock now)
    : data_dir_(std::move(data_dir)),
      fetcher_(std::move(fetcher)),
      profile_(std::move(profile)),
      options_(std::move(options)),
      now_(std::move(now)) {
    if (options_.aggregator_id.empty() || !valid_repository_id(options_.aggregator_id))
        options_.aggregator_id = "aggregate";
    options_.self_description = with_defaults(options_.self_description);
    load();
}

void Aggregator::load() {
    auto snap = std::make_shared<Snapshot>();
    fs::create_directories(fs::path(data_dir_) / "archives");

    fs::path registry_path = fs::path(data_dir_) / "registry.json";
    if (fs::exists(registry_path)) {
        std::ifstream in(registry_path);
        if (!in)
            throw Error("cannot read " + registry_path.string());
        json doc = json::parse(in);
        for (const json& j : doc.value("archives", json::array())) {
            RegistryEntry entry;
            entry.archive_id = j.value("archive_id", "");
            entry.base_url = j.value("base_url", "");
            if (j.contains("last_successful_harvest") && !j["last_successful_harvest"].is_null())
                entry.last_successful_harvest =
                    UtcTimestamp::parse(j["last_successful_harvest"].get<std::string>());
            entry.status = archive_status_from_string(j.value("status", "active"))
                               .value_or(ArchiveStatus::active);
            entry.consecutive_failures = j.value("consecutive_failures", 0);
            if (j.contains("description"))
                entry.description = description_from_json(j["description"]);
            if (entry.archive_id.empty())
                throw Error("registry entry without an archive_id in " + registry_path.string());
            snap->registry[entry.archive_id] = std::move(entry);
        }
    }

    for (const auto& [archive_id, entry] : snap->registry) {
        fs::path partition = fs::path(data_dir_) / "archives" / (archive_id + ".xml");
        if (!fs::exists(partition))
            continue;
        std::ifstream in(partition);
        std::stringstream buffer;
        buffer << in.rdbuf();
        RepositoryDocument doc = parse_repository(buffer.str());
        for (RepositoryRecord& rec : doc.records) {
            ProvenancedRecord stored;
            stored.identifier = make_oai_identifier(archive_id, rec.local_id);
            stored.source_archive = archive_id;
            stored.datestamp = rec.datestamp;
            stored.deleted = rec.deleted;
            stored.record = std::move(rec.metadata);
            if (stored.record)
                stored.quads = extract_quads(*stored.record);
            snap->records[stored.identifier] = std::move(stored);
        }
    }

    std::lock_guard<std::mutex> lock(mutex_);
    snapshot_ = std::move(snap);
}

void Aggregator::persist_registry(const Snapshot& snap) const {
    json archives = json::array();
    for (const auto& [archive_id, entry] : snap.registry) {
        json j{{"archive_id", entry.archive_id},
               {"base_url", entry.base_url},
               {"status", to_string(entry.status)},
               {"consecutive_failures", entry.consecutive_failures},
               {"description", description_to_json(entry.description)}};
        if (entry.last_successful_harvest)
            j["last_successful_harvest"] = entry.last_successful_harvest->to_string();
        else
            j["last_successful_harvest"] = nullptr;
        archives.push_back(std::move(j));
    }
    json doc{{"archives", std::move(archives)}};

    fs::path path = fs::path(data_dir_) / "registry.json";
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

void Aggregator::persist_archive(const Snapshot& snap, const std::string& archive_id) const {
    auto entry = snap.registry.find(archive_id);
    if (entry == snap.registry.end())
        return;
    RepositoryDocument doc;
    doc.repository_id = archive_id;
    doc.description = entry->second.description;
    for (const auto& [identifier, rec] : snap.records) {
        if (rec.source_archive != archive_id)
            continue;
        RepositoryRecord out;
        std::string repo_part;
        split_oai_identifier(identifier, repo_part, out.local_id);
        out.datestamp = rec.datestamp;
        out.deleted = rec.deleted;
        out.metadata = rec.record;
        doc.records.push_back(std::move(out));
    }
    std::sort(doc.records.begin(), doc.records.end(),
              [](const RepositoryRecord& a, const RepositoryRecord& b) {
                  return a.local_id < b.local_id;
              });
    fs::path path = fs::path(data_dir_) / "archives" / (archive_id + ".xml");
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << serialize_repository(doc);
}

std::shared_ptr<const Aggregator::Snapshot> Aggregator::snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return snapshot_;
}

void Aggregator::swap_snapshot(std::shared_ptr<const Snapshot> next) {
    std::lock_guard<std::mutex> lock(mutex_);
    snapshot_ = std::move(next);
}

std::string Aggregator::fetch_page(const std::string& url, std::string& error) const {
    FetchResult fetched = fetcher_->fetch(url);
    if (!fetched.ok()) {
        error = fetched.status == 0 ? fetched.error
                                    : "HTTP status " + std::to_string(fetched.status);
        return "";
    }
    error.clear();
    return fetched.body;
}

RegistryEntry Aggregator::register_provider(const std::string& base_url) {
    if (base_url.empty() || !looks_like_url(base_url))
        throw RegistrationError("base URL '" + base_url + "' is not an http(s) URL");

    std::string error;
    std::string body = fetch_page(join_url(base_url, "verb=Identify"), error);
    if (!error.empty())
        throw RegistrationError("could not reach " + base_url + ": " + error);

    ParsedIdentify identify;
    try {
        identify = parse_identify_response(body);
    } catch (const std::exception& err) {
        throw BadRepositoryError(base_url + " did not return a parseable Identify response: " +
                                 err.what());
    }
    if (!identify.error_code.empty())
        throw BadRepositoryError(base_url + " answered Identify with error " + identify.error_code +
                                 ": " + identify.error_message);
    if (!identify.description)
        throw BadRepositoryError(base_url + " Identify carries no archive description");

    // A well-formed repository id is kept verbatim so aggregated
    // identifiers match the source's identifiers byte for byte.
    std::string archive_id = identify.repository_id;
    if (!valid_repository_id(archive_id))
        archive_id = sanitize_archive_id(identify.repository_id);
    if (archive_id.empty())
        archive_id = sanitize_archive_id(identify.repository_name);
    if (archive_id.empty())
        throw BadRepositoryError(base_url + " Identify provides no usable repository identification");

    auto old_snap = snapshot();
    auto next = std::make_shared<Snapshot>(*old_snap);

    for (const auto& [existing_id, entry] : next->registry) {
        if (entry.base_url == base_url) {
            // Idempotent: refresh the captured description.
            RegistryEntry refreshed = entry;
            refreshed.description = *identify.description;
            next->registry[existing_id] = refreshed;
            persist_registry(*next);
            swap_snapshot(std::move(next));
            return refreshed;
        }
    }
    if (next->registry.count(archive_id))
        throw RegistrationError("archive id '" + archive_id +
                                "' is already registered for a different base URL");

    RegistryEntry entry;
    entry.archive_id = archive_id;
    entry.base_url = base_url;
    entry.status = ArchiveStatus::active;
    entry.description = *identify.description;
    next->registry[archive_id] = entry;
    persist_registry(*next);
    swap_snapshot(std::move(next));
    return entry;
}

HarvestReport Aggregator::harvest(const std::string& archive_id, HarvestMode mode) {
    RegistryEntry entry;
    std::shared_ptr<std::mutex> archive_lock;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = snapshot_->registry.find(archive_id);
        if (it == snapshot_->registry.end())
            throw NotFoundError("archive '" + archive_id + "' is not registered");
        entry = it->second;
        auto& slot = archive_locks_[archive_id];
        if (!slot)
            slot = std::make_shared<std::mutex>();
        archive_lock = slot;
    }
    if (entry.status == ArchiveStatus::suspended)
        throw Error("archive '" + archive_id + "' is suspended");

    std::lock_guard<std::mutex> harvest_guard(*archive_lock);

    HarvestReport report;
    report.archive_id = archive_id;
    report.mode = mode;
    report.started_at = now_();

    std::string query = "verb=ListRecords&metadataPrefix=olac";
    if (mode == HarvestMode::incremental && entry.last_successful_harvest)
        query += "&from=" + url_encode(entry.last_successful_harvest->to_string());

    std::vector<SourceRecord> incoming;
    std::string url = join_url(entry.base_url, query);
    for (;;) {
        std::string error;
        std::string body = fetch_page(url, error);
        if (!error.empty()) {
            report.errors.push_back({"transport", url + ": " + error});
            break;
        }
        ParsedList page;
        try {
            page = parse_list_response(body);
        } catch (const std::exception& err) {
            report.errors.push_back({"transport", url + ": unparseable response: " + err.what()});
            break;
        }
        if (page.error_code == "noRecordsMatch")
            break; // empty selection is a successful harvest of nothing
        if (!page.error_code.empty()) {
            report.errors.push_back(
                {"transport", url + ": " + page.error_code + ": " + page.error_message});
            break;
        }
        for (const std::string& message : page.record_errors)
            report.errors.push_back({"record", message});
        for (SourceRecord& rec : page.records)
            incoming.push_back(std::move(rec));
        if (page.resumption_token.empty())
            break;
        url = join_url(entry.base_url,
                       "verb=ListRecords&resumptionToken=" + url_encode(page.resumption_token));
    }

    auto old_snap = snapshot();
    auto next = std::make_shared<Snapshot>(*old_snap);

    for (SourceRecord& rec : incoming) {
        std::string source_repo, local_id;
        if (!split_oai_identifier(rec.identifier, source_repo, local_id)) {
            report.errors.push_back({"record", "identifier '" + rec.identifier + "' is malformed"});
            continue;
        }
        ProvenancedRecord stored;
        // Store under this registry entry's id so every stored record
        // resolves to a registered archive even if the provider renames
        // itself; the local part keeps the provider's identifier tail.
        stored.identifier = make_oai_identifier(archive_id, local_id);
        stored.source_archive = archive_id;
        stored.datestamp = rec.datestamp;
        stored.deleted = rec.deleted;
        if (!rec.deleted) {
            if (!rec.metadata) {
                report.errors.push_back({"record", rec.identifier + ": record has no metadata body"});
                continue;
            }
            stored.record = std::move(rec.metadata);
            stored.quads = extract_quads(*stored.record);
        }

        auto it = next->records.find(stored.identifier);
        if (it == next->records.end()) {
            report.added += 1;
            next->records[stored.identifier] = std::move(stored);
            continue;
        }
        const ProvenancedRecord& existing = it->second;
        if (stored.deleted) {
            if (existing.deleted)
                report.unchanged += 1;
            else {
                report.deleted += 1;
                it->second = std::move(stored);
            }
            continue;
        }
        if (!existing.deleted && existing.record == stored.record &&
            existing.datestamp == stored.datestamp) {
            report.unchanged += 1;
            continue;
        }
        report.updated += 1;
        it->second = std::move(stored);
    }

    report.finished_at = now_();

    RegistryEntry& updated_entry = next->registry[archive_id];
    if (report.transport_clean()) {
        updated_entry.last_successful_harvest = report.started_at;
        updated_entry.consecutive_failures = 0;
        if (updated_entry.status == ArchiveStatus::failing)
            updated_entry.status = ArchiveStatus::active;
    } else {
        updated_entry.consecutive_failures += 1;
        if (updated_entry.consecutive_failures >= 3)
            updated_entry.status = ArchiveStatus::failing;
    }

    persist_archive(*next, archive_id);
    persist_registry(*next);
    swap_snapshot(std::move(next));
    return report;
}

std::vector<RegistryEntry> Aggregator::registry() const {
    auto snap = snapshot();
    std::vector<RegistryEntry> out;
    out.reserve(snap->registry.size());
    for (const auto& [archive_id, entry] : snap->registry)
        out.push_back(entry);
    return out;
}

std::optional<RegistryEntry> Aggregator::entry(const std::string& archive_id) const {
    auto snap = snapshot();
    auto it = snap->registry.find(archive_id);
    if (it == snap->registry.end())
        return std::nullopt;
    return it->second;
}

std::shared_ptr<RepositorySource> Aggregator::aggregate_source() const {
    auto snap = snapshot();
    return std::make_shared<AggregateSource>(snap, &snap->registry, &snap->records,
                                             options_.aggregator_id, options_.self_description);
}

std::vector<ProvenancedRecord> Aggregator::stored_records() const {
    auto snap = snapshot();
    std::vector<ProvenancedRecord> out;
    out.reserve(snap->records.size());
    for (const auto& [identifier, rec] : snap->records)
        out.push_back(rec);
    std::sort(out.begin(), out.end(), [](const ProvenancedRecord& a, const ProvenancedRecord& b) {
        if (a.datestamp != b.datestamp)
            return a.datestamp < b.datestamp;
        return a.identifier < b.identifier;
    });
    return out;
}

} // namespace olac
