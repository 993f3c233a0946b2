#include "olac/protocol.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

#include "olac/query.hpp"

namespace olac {

namespace {

constexpr const char* kOaiNamespace = "http://www.openarchives.org/OAI/2.0/";
constexpr const char* kOaiDcSchemaUrl = "http://www.openarchives.org/OAI/2.0/oai_dc.xsd";
constexpr const char* kOaiDcNamespace = "http://www.openarchives.org/OAI/2.0/oai_dc/";

constexpr const char* kTokenMagic = "olac-rt1";

// --- small codecs ---------------------------------------------------------

constexpr char kBase64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

std::string base64url_encode(std::string_view raw) {
    std::string out;
    out.reserve((raw.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= raw.size()) {
        unsigned v = (static_cast<unsigned char>(raw[i]) << 16) |
                     (static_cast<unsigned char>(raw[i + 1]) << 8) |
                     static_cast<unsigned char>(raw[i + 2]);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += kBase64Alphabet[v & 63];
        i += 3;
    }
    size_t rest = raw.size() - i;
    if (rest == 1) {
        unsigned v = static_cast<unsigned>(static_cast<unsigned char>(raw[i])) << 16;
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
    } else if (rest == 2) {
        unsigned v = (static_cast<unsigned char>(raw[i]) << 16) |
                     (static_cast<unsigned char>(raw[i + 1]) << 8);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
    }
    return out;
}

std::optional<std::string> base64url_decode(std::string_view enc) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '-') return 62;
        if (c == '_') return 63;
        return -1;
    };
    if (enc.size() % 4 == 1)
        return std::nullopt;
    std::string out;
    out.reserve(enc.size() / 4 * 3 + 2);
    unsigned buffer = 0;
    int bits = 0;
    for (char c : enc) {
        int v = value_of(c);
        if (v < 0)
            return std::nullopt;
        buffer = (buffer << 6) | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buffer >> bits) & 0xff);
        }
    }
    return out;
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string to_hex(std::uint64_t value) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

bool parse_long(const std::string& text, long& out) {
    if (text.empty())
        return false;
    size_t pos = 0;
    try {
        out = std::stol(text, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == text.size();
}

bool parse_int64(const std::string& text, std::int64_t& out) {
    if (text.empty())
        return false;
    size_t pos = 0;
    try {
        out = std::stoll(text, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == text.size();
}

// --- envelope ---------------------------------------------------------------

xml::Element make_envelope(const ProtocolRequest& req, const ProviderConfig& config) {
    xml::Element root("OAI-PMH");
    root.set_attribute("xmlns", kOaiNamespace);
    xml::Element date("responseDate");
    date.add_text(config.now().to_string());
    root.add_child(std::move(date));
    xml::Element request("request");
    if (!req.verb.empty())
        request.set_attribute("verb", req.verb);
    for (const auto& [name, value] : req.arguments)
        request.set_attribute(name, value);
    request.add_text(config.base_url);
    root.add_child(std::move(request));
    return root;
}

ProtocolResponse payload_response(const ProtocolRequest& req, const ProviderConfig& config,
                                  xml::Element payload) {
    xml::Element root = make_envelope(req, config);
    root.add_child(std::move(payload));
    return ProtocolResponse{xml::serialize(root), 200, ""};
}

ProtocolResponse error_response(const ProtocolRequest& req, const ProviderConfig& config,
                                const std::string& code, const std::string& message) {
    xml::Element root = make_envelope(req, config);
    xml::Element error("error");
    error.set_attribute("code", code);
    error.add_text(message);
    root.add_child(std::move(error));
    return ProtocolResponse{xml::serialize(root), 200, code};
}

// Thrown internally by verb handlers and turned into an error response
// by handle_request; keeps the handlers free of plumbing.
struct ProtocolError {
    std::string code;
    std::string message;
};

// --- argument validation ------------------------------------------------------

struct VerbSpec {
    std::set<std::string> required;
    std::set<std::string> optional;
    // Listing verbs accept a token in place of their required arguments.
    bool resumable = false;
};

const std::map<std::string, VerbSpec>& verb_table() {
    static const std::map<std::string, VerbSpec> table = {
        {"Identify", {{}, {}, false}},
        {"ListMetadataFormats", {{}, {"identifier"}, false}},
        {"ListSets", {{}, {"resumptionToken"}, false}},
        {"GetRecord", {{"identifier", "metadataPrefix"}, {}, false}},
        {"ListRecords", {{"metadataPrefix"}, {"from", "until", "set", "resumptionToken"}, true}},
        {"ListIdentifiers", {{"metadataPrefix"}, {"from", "until", "set", "resumptionToken"}, true}},
        {"Query", {{"sql", "elements"}, {"resumptionToken"}, true}},
    };
    return table;
}

void validate_arguments(const ProtocolRequest& req, const VerbSpec& spec) {
    std::set<std::string> seen;
    for (const auto& [name, value] : req.arguments) {
        if (!seen.insert(name).second)
            throw ProtocolError{"badArgument", "argument '" + name + "' appears more than once"};
        if (!spec.required.count(name) && !spec.optional.count(name))
            throw ProtocolError{"badArgument", "argument '" + name + "' is not allowed for verb " + req.verb};
        if (value.empty())
            throw ProtocolError{"badArgument", "argument '" + name + "' has an empty value"};
    }
    bool has_token = seen.count("resumptionToken") != 0;
    for (const std::string& name : spec.required) {
        if (seen.count(name))
            continue;
        if (spec.resumable && has_token)
            continue; // the token carries the original arguments
        throw ProtocolError{"badArgument", "verb " + req.verb + " requires argument '" + name + "'"};
    }
}

// --- resumption-token plumbing -----------------------------------------------

std::vector<std::pair<std::string, std::string>>
canonical_selector_arguments(const ProtocolRequest& req) {
    std::vector<std::pair<std::string, std::string>> args;
    for (const auto& [name, value] : req.arguments)
        if (name != "resumptionToken")
            args.emplace_back(name, value);
    std::sort(args.begin(), args.end());
    return args;
}

ResumptionToken require_token(const std::string& text, const ProtocolRequest& req,
                              const std::string& repository_id, const ProviderConfig& config) {
    std::optional<ResumptionToken> token = decode_token(text);
    if (!token)
        throw ProtocolError{"badResumptionToken", "resumption token is not recognized"};
    if (token->verb != req.verb)
        throw ProtocolError{"badResumptionToken",
                            "resumption token was issued for verb " + token->verb};
    if (token->repository_id != repository_id)
        throw ProtocolError{"badResumptionToken", "resumption token was issued by another repository"};
    std::int64_t age = config.now().seconds() - token->issued_at;
    if (age > static_cast<std::int64_t>(config.token_expiry_hours) * 3600)
        throw ProtocolError{"badResumptionToken", "resumption token has expired"};
    // A resume normally carries the token alone; any selector argument
    // that is repeated must match the one the token was minted for.
    for (const auto& [name, value] : req.arguments) {
        if (name == "resumptionToken")
            continue;
        auto it = std::find_if(token->arguments.begin(), token->arguments.end(),
                               [&name = name](const auto& p) { return p.first == name; });
        if (it == token->arguments.end() || it->second != value)
            throw ProtocolError{"badResumptionToken",
                                "argument '" + name + "' does not match the resumption token"};
    }
    return *token;
}

// --- selector parsing ----------------------------------------------------------

struct Selector {
    std::optional<UtcTimestamp> from;
    std::optional<UtcTimestamp> until;
    std::optional<std::string> set;
    std::string metadata_prefix;
    std::string sql;
    int elements = 0;
};

const std::string* find_argument(const std::vector<std::pair<std::string, std::string>>& args,
                                 std::string_view name) {
    for (const auto& [key, value] : args)
        if (key == name)
            return &value;
    return nullptr;
}

UtcTimestamp parse_date_argument(const std::string& name, const std::string& value) {
    try {
        return UtcTimestamp::parse(value);
    } catch (const BadTimestampError& err) {
        throw ProtocolError{"badArgument", "argument '" + name + "': " + err.what()};
    }
}

std::string require_metadata_prefix(const std::vector<std::pair<std::string, std::string>>& args) {
    const std::string* prefix = find_argument(args, "metadataPrefix");
    if (!prefix)
        throw ProtocolError{"badArgument", "metadataPrefix is required"};
    if (*prefix != "olac" && *prefix != "oai_dc")
        throw ProtocolError{"cannotDisseminateFormat",
                            "metadata format '" + *prefix + "' is not supported"};
    return *prefix;
}

Selector parse_list_selector(const std::vector<std::pair<std::string, std::string>>& args) {
    Selector sel;
    sel.metadata_prefix = require_metadata_prefix(args);
    if (const std::string* from = find_argument(args, "from"))
        sel.from = parse_date_argument("from", *from);
    if (const std::string* until = find_argument(args, "until"))
        sel.until = parse_date_argument("until", *until);
    if (sel.from && sel.until && *sel.until < *sel.from)
        throw ProtocolError{"badArgument", "'from' is later than 'until'"};
    if (const std::string* set = find_argument(args, "set"))
        sel.set = *set;
    return sel;
}

Selector parse_query_selector(const std::vector<std::pair<std::string, std::string>>& args) {
    Selector sel;
    sel.metadata_prefix = "olac";
    const std::string* elements = find_argument(args, "elements");
    if (!elements)
        throw ProtocolError{"badArgument", "elements is required"};
    long n = 0;
    if (!parse_long(*elements, n) || n < 1)
        throw ProtocolError{"badArgument", "elements must be a positive integer, got '" + *elements + "'"};
    sel.elements = static_cast<int>(n);
    const std::string* sql = find_argument(args, "sql");
    if (!sql)
        throw ProtocolError{"badArgument", "sql is required"};
    sel.sql = *sql;
    return sel;
}

// --- payload builders -------------------------------------------------------

xml::Element header_element(const SourceRecord& rec) {
    xml::Element header("header");
    if (rec.deleted)
        header.set_attribute("status", "deleted");
    xml::Element identifier("identifier");
    identifier.add_text(rec.identifier);
    header.add_child(std::move(identifier));
    xml::Element datestamp("datestamp");
    datestamp.add_text(rec.datestamp.to_string());
    header.add_child(std::move(datestamp));
    for (const std::string& set : rec.sets) {
        xml::Element spec("setSpec");
        spec.add_text(set);
        header.add_child(std::move(spec));
    }
    return header;
}

xml::Element metadata_body(const MetadataRecord& rec, const std::string& prefix,
                           const ApplicationProfile* profile) {
    if (prefix == "oai_dc") {
        if (!profile)
            throw ProtocolError{"cannotDisseminateFormat",
                                "the oai_dc crosswalk needs an application profile and none is configured"};
        return simple_dc_to_element(dumbdown_record(rec, *profile));
    }
    return record_to_element(rec);
}

xml::Element record_element(const SourceRecord& rec, const std::string& prefix,
                            const ApplicationProfile* profile) {
    xml::Element out("record");
    out.add_child(header_element(rec));
    if (!rec.deleted && rec.metadata) {
        xml::Element metadata("metadata");
        metadata.add_child(metadata_body(*rec.metadata, prefix, profile));
        out.add_child(std::move(metadata));
    }
    if (rec.provenance) {
        xml::Element about("about");
        xml::Element prov("provenance");
        prov.set_attribute("archiveId", rec.provenance->archive_id);
        prov.set_attribute("archiveName", rec.provenance->archive_name);
        prov.set_attribute("baseURL", rec.provenance->base_url);
        about.add_child(std::move(prov));
        out.add_child(std::move(about));
    }
    return out;
}

void append_token_element(xml::Element& payload, const std::string& verb,
                          const std::string& repository_id,
                          const std::vector<std::pair<std::string, std::string>>& selector_args,
                          long page_start, long page_end, long total, const ProviderConfig& config) {
    xml::Element token("resumptionToken");
    token.set_attribute("completeListSize", std::to_string(total));
    token.set_attribute("cursor", std::to_string(page_start));
    if (page_end < total) {
        UtcTimestamp now = config.now();
        token.set_attribute(
            "expirationDate",
            UtcTimestamp{now.seconds() + static_cast<std::int64_t>(config.token_expiry_hours) * 3600}
                .to_string());
        ResumptionToken next;
        next.verb = verb;
        next.repository_id = repository_id;
        next.arguments = selector_args;
        next.cursor = page_end;
        next.issued_at = now.seconds();
        next.complete_list_size = total;
        token.add_text(encode_token(next));
    }
    payload.add_child(std::move(token));
}

// --- verb handlers --------------------------------------------------------------

xml::Element do_identify(const RepositorySource& source, const ProviderConfig& config) {
    SourceDescription desc = source.description();
    xml::Element payload("Identify");
    auto add_field = [&payload](const char* name, const std::string& value) {
        xml::Element el(name);
        el.add_text(value);
        payload.add_child(std::move(el));
    };
    add_field("repositoryName", desc.description.archive_name);
    add_field("baseURL", config.base_url);
    add_field("protocolVersion", "2.0");
    std::vector<SourceRecord> all = source.select(std::nullopt, std::nullopt, std::nullopt);
    std::string earliest = "1970-01-01T00:00:00Z";
    if (!all.empty())
        earliest = all.front().datestamp.to_string();
    add_field("earliestDatestamp", earliest);
    add_field("deletedRecord", "persistent");
    add_field("granularity", "YYYY-MM-DDThh:mm:ssZ");
    add_field("repositoryIdentifier", desc.repository_id);
    payload.add_child(archive_description_to_element(desc.description, "description"));
    return payload;
}

xml::Element do_list_metadata_formats(const ProtocolRequest& req, const RepositorySource& source,
                                      const ProviderConfig& config) {
    if (const std::string* identifier = req.argument("identifier")) {
        std::string repo, local;
        if (!split_oai_identifier(*identifier, repo, local))
            throw ProtocolError{"badArgument",
                                "identifier '" + *identifier + "' is not an oai identifier"};
        if (!source.get(*identifier))
            throw ProtocolError{"idDoesNotExist", "no record with identifier '" + *identifier + "'"};
    }
    std::string olac_ns = config.profile ? config.profile->olac_namespace_uri : kOlacNamespace;
    xml::Element payload("ListMetadataFormats");
    auto add_format = [&payload](const std::string& prefix, const std::string& schema,
                                 const std::string& ns) {
        xml::Element format("metadataFormat");
        xml::Element p("metadataPrefix");
        p.add_text(prefix);
        format.add_child(std::move(p));
        xml::Element s("schema");
        s.add_text(schema);
        format.add_child(std::move(s));
        xml::Element n("metadataNamespace");
        n.add_text(ns);
        format.add_child(std::move(n));
        payload.add_child(std::move(format));
    };
    add_format("olac", olac_ns, olac_ns);
    add_format("oai_dc", kOaiDcSchemaUrl, kOaiDcNamespace);
    return payload;
}

xml::Element do_list_sets(const ProtocolRequest& req, const RepositorySource& source,
                          const ProviderConfig& config) {
    if (const std::string* token = req.argument("resumptionToken")) {
        // Set lists are never paged, so no token we minted names this verb.
        require_token(*token, req, source.description().repository_id, config);
        throw ProtocolError{"badResumptionToken", "resumption token is not recognized"};
    }
    std::vector<RepositorySet> sets = source.sets();
    if (sets.empty())
        throw ProtocolError{"noSetHierarchy", "this repository declares no sets"};
    xml::Element payload("ListSets");
    for (const RepositorySet& set : sets) {
        xml::Element el("set");
        xml::Element spec("setSpec");
        spec.add_text(set.spec);
        el.add_child(std::move(spec));
        xml::Element name("setName");
        name.add_text(set.name);
        el.add_child(std::move(name));
        payload.add_child(std::move(el));
    }
    return payload;
}

xml::Element do_get_record(const ProtocolRequest& req, const RepositorySource& source,
                           const ProviderConfig& config) {
    const std::string& identifier = *req.argument("identifier");
    std::string repo, local;
    if (!split_oai_identifier(identifier, repo, local))
        throw ProtocolError{"badArgument", "identifier '" + identifier + "' is not an oai identifier"};
    std::string prefix = require_metadata_prefix(req.arguments);
    std::optional<SourceRecord> rec = source.get(identifier);
    if (!rec)
        throw ProtocolError{"idDoesNotExist", "no record with identifier '" + identifier + "'"};
    xml::Element payload("GetRecord");
    payload.add_child(record_element(*rec, prefix, config.profile.get()));
    return payload;
}

std::vector<SourceRecord> query_matches(const RepositorySource& source, const Selector& sel) {
    query::Expr expr;
    try {
        expr = query::parse(sel.sql, sel.elements);
    } catch (const query::SyntaxError& err) {
        throw ProtocolError{"badArgument",
                            "sql: " + std::string(err.what()) + " (position " +
                                std::to_string(err.position) + ")"};
    } catch (const Error& err) {
        throw ProtocolError{"badArgument", "sql: " + std::string(err.what())};
    }
    std::vector<SourceRecord> all = source.select(std::nullopt, std::nullopt, std::nullopt);
    std::vector<SourceRecord> matched;
    for (SourceRecord& rec : all) {
        if (rec.deleted || !rec.metadata)
            continue;
        std::vector<ElementQuad> quads = extract_quads(*rec.metadata);
        if (query::matches(expr, quads))
            matched.push_back(std::move(rec));
    }
    return matched;
}

xml::Element do_listing(const ProtocolRequest& req, const RepositorySource& source,
                        const ProviderConfig& config) {
    const std::string repository_id = source.description().repository_id;

    std::vector<std::pair<std::string, std::string>> selector_args;
    long cursor = 0;
    if (const std::string* token_text = req.argument("resumptionToken")) {
        ResumptionToken token = require_token(*token_text, req, repository_id, config);
        selector_args = token.arguments;
        cursor = token.cursor;
    } else {
        selector_args = canonical_selector_arguments(req);
    }

    Selector sel = req.verb == "Query" ? parse_query_selector(selector_args)
                                       : parse_list_selector(selector_args);

    std::vector<SourceRecord> records =
        req.verb == "Query" ? query_matches(source, sel)
                            : source.select(sel.from, sel.until, sel.set);
    if (records.empty())
        throw ProtocolError{"noRecordsMatch", "the selection matched no records"};

    long total = static_cast<long>(records.size());
    if (cursor < 0 || cursor >= total)
        throw ProtocolError{"badResumptionToken", "resumption token points past the end of the list"};
    long page_size = std::max(1, config.page_size);
    long end = std::min(total, cursor + page_size);

    // Query responses reuse the ListRecords payload shape.
    xml::Element payload(req.verb == "ListIdentifiers" ? "ListIdentifiers" : "ListRecords");
    for (long i = cursor; i < end; ++i) {
        const SourceRecord& rec = records[static_cast<size_t>(i)];
        if (req.verb == "ListIdentifiers")
            payload.add_child(header_element(rec));
        else
            payload.add_child(record_element(rec, sel.metadata_prefix, config.profile.get()));
    }
    append_token_element(payload, req.verb, repository_id, selector_args, cursor, end, total, config);
    return payload;
}

} // namespace

// --- public API -------------------------------------------------------------

const std::string* ProtocolRequest::argument(std::string_view name) const {
    for (const auto& [key, value] : arguments)
        if (key == name)
            return &value;
    return nullptr;
}

ProtocolResponse handle_request(const ProtocolRequest& req, const RepositorySource& source,
                                const ProviderConfig& config) {
    try {
        auto it = verb_table().find(req.verb);
        if (it == verb_table().end()) {
            std::string label = req.verb.empty() ? "(missing)" : "'" + req.verb + "'";
            throw ProtocolError{"badVerb", "verb " + label + " is not a protocol verb"};
        }
        if (req.verb == "Query" && !source.supports_query())
            throw ProtocolError{"badVerb", "this repository does not support the Query verb"};
        validate_arguments(req, it->second);

        if (req.verb == "Identify")
            return payload_response(req, config, do_identify(source, config));
        if (req.verb == "ListMetadataFormats")
            return payload_response(req, config, do_list_metadata_formats(req, source, config));
        if (req.verb == "ListSets")
            return payload_response(req, config, do_list_sets(req, source, config));
        if (req.verb == "GetRecord")
            return payload_response(req, config, do_get_record(req, source, config));
        return payload_response(req, config, do_listing(req, source, config));
    } catch (const ProtocolError& err) {
        return error_response(req, config, err.code, err.message);
    } catch (const BadArgumentError& err) {
        return error_response(req, config, "badArgument", err.what());
    }
}

ProtocolResponse make_error_response(const ProtocolRequest& req, const ProviderConfig& config,
                                     const std::string& code, const std::string& message,
                                     int http_status) {
    ProtocolResponse out = error_response(req, config, code, message);
    out.http_status = http_status;
    return out;
}

std::string make_oai_identifier(const std::string& repository_id, const std::string& local_id) {
    return "oai:" + repository_id + ":" + local_id;
}

bool split_oai_identifier(const std::string& identifier, std::string& repository_id,
                          std::string& local_id) {
    if (identifier.rfind("oai:", 0) != 0)
        return false;
    size_t colon = identifier.find(':', 4);
    if (colon == std::string::npos || colon == 4 || colon + 1 >= identifier.size())
        return false;
    repository_id = identifier.substr(4, colon - 4);
    local_id = identifier.substr(colon + 1);
    return true;
}

// --- OryxSource ------------------------------------------------------------

namespace {

SourceRecord to_source_record(const RepositoryRecord& rec, const std::string& repository_id) {
    SourceRecord out;
    out.identifier = make_oai_identifier(repository_id, rec.local_id);
    out.datestamp = rec.datestamp;
    out.deleted = rec.deleted;
    out.sets = rec.set_memberships;
    out.metadata = rec.metadata;
    return out;
}

} // namespace

SourceDescription OryxSource::description() const {
    return SourceDescription{doc_->repository_id, doc_->description};
}

std::optional<SourceRecord> OryxSource::get(const std::string& identifier) const {
    std::string repo, local;
    if (!split_oai_identifier(identifier, repo, local) || repo != doc_->repository_id)
        return std::nullopt;
    const RepositoryRecord* rec = doc_->find(local);
    if (!rec)
        return std::nullopt;
    return to_source_record(*rec, doc_->repository_id);
}

std::vector<SourceRecord> OryxSource::select(const std::optional<UtcTimestamp>& from,
                                             const std::optional<UtcTimestamp>& until,
                                             const std::optional<std::string>& set) const {
    std::vector<SourceRecord> out;
    for (const RepositoryRecord& rec : select_records(*doc_, from, until, set))
        out.push_back(to_source_record(rec, doc_->repository_id));
    return out;
}

std::vector<RepositorySet> OryxSource::sets() const {
    return doc_->sets;
}

// --- resumption tokens -------------------------------------------------------

namespace {

std::string token_body(const ResumptionToken& token) {
    std::string args;
    for (const auto& [name, value] : token.arguments) {
        if (!args.empty())
            args += '&';
        args += url_encode(name) + "=" + url_encode(value);
    }
    std::string body = kTokenMagic;
    body += '\n';
    body += token.verb + '\n';
    body += token.repository_id + '\n';
    body += args + '\n';
    body += std::to_string(token.cursor) + '\n';
    body += std::to_string(token.issued_at) + '\n';
    body += std::to_string(token.complete_list_size);
    return body;
}

} // namespace

std::string encode_token(const ResumptionToken& token) {
    std::string body = token_body(token);
    return base64url_encode(body + '\n' + to_hex(fnv1a(body)));
}

std::optional<ResumptionToken> decode_token(std::string_view text) {
    std::optional<std::string> raw = base64url_decode(text);
    if (!raw)
        return std::nullopt;
    std::vector<std::string> lines;
    size_t start = 0;
    while (lines.size() < 8) {
        size_t nl = raw->find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(raw->substr(start));
            break;
        }
        lines.push_back(raw->substr(start, nl - start));
        start = nl + 1;
    }
    if (lines.size() != 8 || lines[0] != kTokenMagic)
        return std::nullopt;
    std::string body = *raw;
    body.resize(body.rfind('\n'));
    if (to_hex(fnv1a(body)) != lines[7])
        return std::nullopt;

    ResumptionToken token;
    token.verb = lines[1];
    token.repository_id = lines[2];
    if (!lines[3].empty()) {
        size_t pos = 0;
        while (pos <= lines[3].size()) {
            size_t amp = lines[3].find('&', pos);
            std::string pair = lines[3].substr(pos, amp == std::string::npos ? amp : amp - pos);
            size_t eq = pair.find('=');
            if (eq == std::string::npos)
                return std::nullopt;
            token.arguments.emplace_back(url_decode(pair.substr(0, eq)),
                                         url_decode(pair.substr(eq + 1)));
            if (amp == std::string::npos)
                break;
            pos = amp + 1;
        }
    }
    if (!parse_long(lines[4], token.cursor) || !parse_int64(lines[5], token.issued_at) ||
        !parse_long(lines[6], token.complete_list_size))
        return std::nullopt;
    if (token.cursor < 0)
        return std::nullopt;
    return token;
}

// --- URL codecs ----------------------------------------------------------------

std::string url_encode(std::string_view raw) {
    static const char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.' || c == '~';
        if (keep) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += digits[c >> 4];
            out += digits[c & 0xf];
        }
    }
    return out;
}

std::string url_decode(std::string_view raw) {
    auto hex_value = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '+') {
            out += ' ';
        } else if (c == '%' && i + 2 < raw.size() && hex_value(raw[i + 1]) >= 0 &&
                   hex_value(raw[i + 2]) >= 0) {
            out += static_cast<char>(hex_value(raw[i + 1]) * 16 + hex_value(raw[i + 2]));
            i += 2;
        } else {
            out += c;
        }
    }
    return out;
}

// --- Vida --------------------------------------------------------------------

std::string VidaGateway::url_from_suffix(std::string_view suffix) {
    while (!suffix.empty() && suffix.front() == '/')
        suffix.remove_prefix(1);
    if (suffix.rfind("https/", 0) == 0)
        return "https://" + std::string(suffix.substr(6));
    if (suffix.rfind("http/", 0) == 0)
        return "http://" + std::string(suffix.substr(5));
    return "http://" + std::string(suffix);
}

std::shared_ptr<RepositorySource> VidaGateway::resolve(std::string_view path_suffix) {
    std::string trimmed(path_suffix);
    while (!trimmed.empty() && trimmed.front() == '/')
        trimmed.erase(trimmed.begin());
    if (trimmed.empty())
        throw VidaError("badArgument", "no repository URL given after the mount point", 200);
    std::string url = url_from_suffix(trimmed);

    UtcTimestamp now = now_();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(url);
        if (it != cache_.end() && now.seconds() - it->second.fetched_at.seconds() < ttl_seconds_)
            return std::make_shared<OryxSource>(it->second.doc);
    }

    FetchResult fetched = fetcher_->fetch(url);
    if (!fetched.ok()) {
        std::string detail = fetched.status == 0 ? fetched.error
                                                 : "HTTP status " + std::to_string(fetched.status);
        throw VidaError("upstreamUnavailable", "could not fetch " + url + ": " + detail, 502);
    }

    std::shared_ptr<const RepositoryDocument> doc;
    try {
        doc = std::make_shared<const RepositoryDocument>(parse_repository(fetched.body));
    } catch (const xml::ParseError& err) {
        throw VidaError("badRepository", url + " is not a repository document: " + err.what(), 200);
    } catch (const Error& err) {
        throw VidaError("badRepository", url + " is not a repository document: " + err.what(), 200);
    }

    std::lock_guard<std::mutex> lock(mutex_);
    cache_[url] = CacheEntry{now, doc};
    return std::make_shared<OryxSource>(doc);
}

// --- client-side response parsing ------------------------------------------------

namespace {

const xml::Element* find_payload(const xml::Element& root) {
    for (const xml::Element* child : root.child_elements())
        if (child->name != "responseDate" && child->name != "request" && child->name != "error")
            return child;
    return nullptr;
}

SourceRecord parse_header(const xml::Element& header) {
    SourceRecord rec;
    if (const std::string* status = header.attribute("status"))
        rec.deleted = (*status == "deleted");
    const xml::Element* identifier = header.find_child("identifier");
    const xml::Element* datestamp = header.find_child("datestamp");
    if (!identifier || !datestamp)
        throw Error("record header lacks identifier or datestamp");
    rec.identifier = trim(identifier->text());
    rec.datestamp = UtcTimestamp::parse(trim(datestamp->text()));
    for (const xml::Element* spec : header.children_named("setSpec"))
        rec.sets.push_back(trim(spec->text()));
    return rec;
}

std::optional<Provenance> parse_provenance(const xml::Element& record) {
    const xml::Element* about = record.find_child("about");
    if (!about)
        return std::nullopt;
    const xml::Element* prov = about->find_child("provenance");
    if (!prov)
        return std::nullopt;
    Provenance out;
    if (const std::string* v = prov->attribute("archiveId"))
        out.archive_id = *v;
    if (const std::string* v = prov->attribute("archiveName"))
        out.archive_name = *v;
    if (const std::string* v = prov->attribute("baseURL"))
        out.base_url = *v;
    return out;
}

} // namespace

ParsedList parse_list_response(std::string_view body) {
    xml::Element root = xml::parse(body);
    ParsedList out;
    if (const xml::Element* error = root.find_child("error")) {
        const std::string* code = error->attribute("code");
        out.error_code = code ? *code : "unknown";
        out.error_message = trim(error->text());
        return out;
    }
    const xml::Element* payload = find_payload(root);
    if (!payload)
        throw Error("response has neither a payload nor an error element");

    for (const xml::Element* child : payload->child_elements()) {
        if (child->name == "resumptionToken") {
            out.has_token_element = true;
            out.resumption_token = trim(child->text());
            if (const std::string* size = child->attribute("completeListSize")) {
                long value = 0;
                if (parse_long(*size, value))
                    out.complete_list_size = value;
            }
            continue;
        }
        if (child->name == "header") { // ListIdentifiers shape
            out.records.push_back(parse_header(*child));
            continue;
        }
        if (child->name != "record")
            continue;
        const xml::Element* header = child->find_child("header");
        if (!header)
            throw Error("record without a header");
        SourceRecord rec = parse_header(*header);
        rec.provenance = parse_provenance(*child);
        if (const xml::Element* metadata = child->find_child("metadata")) {
            std::vector<const xml::Element*> bodies = metadata->child_elements();
            if (!bodies.empty()) {
                try {
                    rec.metadata = record_from_element(*bodies.front());
                } catch (const Error& err) {
                    out.record_errors.push_back(rec.identifier + ": " + err.what());
                    continue;
                }
            }
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

ParsedIdentify parse_identify_response(std::string_view body) {
    xml::Element root = xml::parse(body);
    ParsedIdentify out;
    if (const xml::Element* error = root.find_child("error")) {
        const std::string* code = error->attribute("code");
        out.error_code = code ? *code : "unknown";
        out.error_message = trim(error->text());
        return out;
    }
    const xml::Element* payload = root.find_child("Identify");
    if (!payload)
        throw Error("response carries no Identify payload");
    if (const xml::Element* name = payload->find_child("repositoryName"))
        out.repository_name = trim(name->text());
    if (const xml::Element* id = payload->find_child("repositoryIdentifier"))
        out.repository_id = trim(id->text());
    if (const xml::Element* description = payload->find_child("description"))
        out.description = parse_archive_description(*description);
    return out;
}

} // namespace olac
