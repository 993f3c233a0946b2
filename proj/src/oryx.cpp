#include "olac/oryx.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace olac {

namespace {

struct DescriptionField {
    const char* element;
    std::string ArchiveDescription::* member;
};

const DescriptionField kDescriptionFields[] = {
    {"archiveName", &ArchiveDescription::archive_name},
    {"archiveURL", &ArchiveDescription::archive_url},
    {"curator", &ArchiveDescription::curator},
    {"location", &ArchiveDescription::location},
    {"institutionName", &ArchiveDescription::institution_name},
    {"institutionURL", &ArchiveDescription::institution_url},
    {"synopsis", &ArchiveDescription::synopsis},
    {"accessTerms", &ArchiveDescription::access_terms},
};

std::vector<std::string> split_ws(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string token;
    while (in >> token)
        out.push_back(token);
    return out;
}

} // namespace

bool valid_repository_id(std::string_view id) {
    if (id.empty() || !std::isalpha(static_cast<unsigned char>(id[0])))
        return false;
    return std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) != 0 || c == '-';
    });
}

bool looks_like_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0)
        return false;
    return url.size() > scheme_end + 3;
}

const RepositoryRecord* RepositoryDocument::find(std::string_view local_id) const {
    for (const RepositoryRecord& rec : records)
        if (rec.local_id == local_id)
            return &rec;
    return nullptr;
}

ArchiveDescription parse_archive_description(const xml::Element& el) {
    ArchiveDescription desc;
    std::vector<std::string> missing;
    for (const DescriptionField& field : kDescriptionFields) {
        const xml::Element* child = el.find_child(field.element);
        if (!child) {
            missing.emplace_back(field.element);
            continue;
        }
        desc.*(field.member) = trim(child->text());
    }
    if (!missing.empty()) {
        std::string joined;
        for (const std::string& name : missing)
            joined += (joined.empty() ? "" : ", ") + name;
        throw ValidationError("archive description is missing fields: " + joined);
    }
    if (desc.archive_name.empty())
        throw ValidationError("archive description field archiveName is empty");
    if (!looks_like_url(desc.archive_url))
        throw ValidationError("archive description field archiveURL is not a URL: '" + desc.archive_url + "'");
    return desc;
}

xml::Element archive_description_to_element(const ArchiveDescription& desc, const char* element_name) {
    xml::Element el(element_name);
    for (const DescriptionField& field : kDescriptionFields) {
        xml::Element child(field.element);
        child.add_text(desc.*(field.member));
        el.add_child(std::move(child));
    }
    return el;
}

RepositoryDocument parse_repository(std::string_view doc) {
    xml::Element root = xml::parse(doc);
    if (root.name != "repository")
        throw ValidationError("expected a 'repository' root element, found '" + root.name + "'");

    RepositoryDocument repo;
    const std::string* id = root.attribute("id");
    if (!id || !valid_repository_id(*id))
        throw ValidationError("repository id '" + std::string(id ? *id : "") + "' is missing or malformed");
    repo.repository_id = *id;

    const xml::Element* description = root.find_child("description");
    if (!description)
        throw ValidationError("repository has no description");
    repo.description = parse_archive_description(*description);

    std::set<std::string> declared_sets;
    if (const xml::Element* sets = root.find_child("sets")) {
        for (const xml::Element* set : sets->children_named("set")) {
            const std::string* spec = set->attribute("spec");
            const std::string* name = set->attribute("name");
            if (!spec || spec->empty())
                throw ValidationError("set declaration without a spec");
            repo.sets.push_back(RepositorySet{*spec, name ? *name : *spec});
            declared_sets.insert(*spec);
        }
    }

    std::set<std::string> seen_ids;
    if (const xml::Element* records = root.find_child("records")) {
        for (const xml::Element* node : records->children_named("record")) {
            RepositoryRecord rec;
            const std::string* local_id = node->attribute("id");
            if (!local_id || local_id->empty())
                throw ValidationError("record without an id");
            if (!seen_ids.insert(*local_id).second)
                throw DuplicateIdError("duplicate record id '" + *local_id + "'");
            rec.local_id = *local_id;

            const std::string* datestamp = node->attribute("datestamp");
            if (!datestamp)
                throw ValidationError("record '" + rec.local_id + "' has no datestamp");
            try {
                rec.datestamp = UtcTimestamp::parse(*datestamp);
            } catch (const BadTimestampError& e) {
                throw ValidationError("record '" + rec.local_id + "': " + e.what());
            }

            if (const std::string* status = node->attribute("status")) {
                if (*status != "deleted")
                    throw ValidationError("record '" + rec.local_id + "' has unknown status '" + *status + "'");
                rec.deleted = true;
            }
            if (const std::string* sets = node->attribute("sets")) {
                rec.set_memberships = split_ws(*sets);
                for (const std::string& spec : rec.set_memberships)
                    if (!declared_sets.contains(spec))
                        throw ValidationError("record '" + rec.local_id + "' references undeclared set '"
                                              + spec + "'");
            }

            auto body = node->child_elements();
            if (rec.deleted) {
                if (!body.empty())
                    throw ValidationError("deleted record '" + rec.local_id + "' carries metadata");
            } else {
                if (body.size() != 1)
                    throw ValidationError("record '" + rec.local_id + "' must contain exactly one metadata root");
                rec.metadata = record_from_element(*body.front());
            }
            repo.records.push_back(std::move(rec));
        }
    }
    return repo;
}

std::string serialize_repository(const RepositoryDocument& repo) {
    if (!valid_repository_id(repo.repository_id))
        throw SerializeError("repository id '" + repo.repository_id + "' is malformed");
    std::set<std::string> seen_ids;
    std::set<std::string> declared_sets;
    for (const RepositorySet& set : repo.sets)
        declared_sets.insert(set.spec);

    xml::Element root("repository");
    root.set_attribute("id", repo.repository_id);
    root.add_child(archive_description_to_element(repo.description, "description"));

    if (!repo.sets.empty()) {
        xml::Element sets("sets");
        for (const RepositorySet& set : repo.sets) {
            xml::Element node("set");
            node.set_attribute("spec", set.spec);
            node.set_attribute("name", set.name);
            sets.add_child(std::move(node));
        }
        root.add_child(std::move(sets));
    }

    xml::Element records("records");
    for (const RepositoryRecord& rec : repo.records) {
        if (!seen_ids.insert(rec.local_id).second)
            throw SerializeError("duplicate record id '" + rec.local_id + "'");
        if (rec.deleted == rec.metadata.has_value())
            throw SerializeError("record '" + rec.local_id + "' must carry metadata exactly when active");
        xml::Element node("record");
        node.set_attribute("id", rec.local_id);
        node.set_attribute("datestamp", rec.datestamp.to_string());
        if (rec.deleted)
            node.set_attribute("status", "deleted");
        if (!rec.set_memberships.empty()) {
            std::string joined;
            for (const std::string& spec : rec.set_memberships) {
                if (!declared_sets.contains(spec))
                    throw SerializeError("record '" + rec.local_id + "' references undeclared set '" + spec + "'");
                joined += (joined.empty() ? "" : " ") + spec;
            }
            node.set_attribute("sets", joined);
        }
        if (rec.metadata)
            node.add_child(record_to_element(*rec.metadata));
        records.add_child(std::move(node));
    }
    root.add_child(std::move(records));
    return xml::serialize(root);
}

std::variant<RepositoryDocument, UpsertRejected>
upsert_record(const RepositoryDocument& repo, const std::string& local_id,
              MetadataRecord metadata, UtcTimestamp now, const ApplicationProfile& profile) {
    std::vector<Finding> findings = validate_record(metadata, profile);
    if (has_errors(findings))
        return UpsertRejected{std::move(findings)};

    RepositoryDocument next = repo;
    RepositoryRecord fresh;
    fresh.local_id = local_id;
    fresh.datestamp = now;
    fresh.metadata = std::move(metadata);
    for (RepositoryRecord& rec : next.records) {
        if (rec.local_id == local_id) {
            fresh.set_memberships = rec.set_memberships;
            rec = std::move(fresh);
            return next;
        }
    }
    next.records.push_back(std::move(fresh));
    return next;
}

DeleteResult delete_record(const RepositoryDocument& repo, const std::string& local_id, UtcTimestamp now) {
    DeleteResult result{repo, false};
    for (RepositoryRecord& rec : result.repo.records) {
        if (rec.local_id != local_id)
            continue;
        if (rec.deleted) {
            result.was_noop = true;
            return result;
        }
        rec.deleted = true;
        rec.metadata.reset();
        rec.datestamp = now;
        return result;
    }
    throw NotFoundError("no record with id '" + local_id + "'");
}

std::vector<RepositoryRecord>
select_records(const RepositoryDocument& repo,
               const std::optional<UtcTimestamp>& from,
               const std::optional<UtcTimestamp>& until,
               const std::optional<std::string>& set) {
    if (from && until && *from > *until)
        throw BadArgumentError("'from' is after 'until'");
    std::vector<RepositoryRecord> out;
    for (const RepositoryRecord& rec : repo.records) {
        if (from && rec.datestamp < *from)
            continue;
        if (until && rec.datestamp > *until)
            continue;
        if (set && std::find(rec.set_memberships.begin(), rec.set_memberships.end(), *set)
                       == rec.set_memberships.end())
            continue;
        out.push_back(rec);
    }
    std::stable_sort(out.begin(), out.end(), [](const RepositoryRecord& a, const RepositoryRecord& b) {
        if (a.datestamp != b.datestamp)
            return a.datestamp < b.datestamp;
        return a.local_id < b.local_id;
    });
    return out;
}

} // namespace olac
