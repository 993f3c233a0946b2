// Qualified Dublin Core metadata records with community extensions:
// parsing, validation, serialization, controlled vocabularies, and the
// language-identifier scheme.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "olac/xml.hpp"

namespace olac {

// Well-known namespace URIs. The olac namespace is configurable through
// the application profile; these are the shipped defaults.
inline constexpr const char* kDcNamespace = "http://purl.org/dc/elements/1.1/";
inline constexpr const char* kDctermsNamespace = "http://purl.org/dc/terms/";
inline constexpr const char* kXsiNamespace = "http://www.w3.org/2001/XMLSchema-instance";
inline constexpr const char* kOlacNamespace = "http://www.language-archives.org/OLAC/1.0/olac.xsd";

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownElementError : Error {
    using Error::Error;
};
struct SerializeError : Error {
    using Error::Error;
};
struct InvalidSubtagError : Error {
    using Error::Error;
};
struct UnknownRefinementError : Error {
    using Error::Error;
};

// The 15 Dublin Core element names, in canonical order.
const std::vector<std::string>& dc_element_names();
bool is_dc_element_name(std::string_view name);

// Local names of the dcterms element refinements, mapped to the DC
// element each one refines (the dumbdown target).
const std::map<std::string, std::string>& dcterms_refinement_parents();

// A qualified name with its prefix as written and its resolved
// namespace URI. Profile lookups compare by (namespace, local name);
// record equality keeps the prefix too so round-trips are exact.
struct QName {
    std::string prefix;
    std::string local;
    std::string ns_uri;

    std::string qualified() const { return prefix.empty() ? local : prefix + ":" + local; }
    bool operator==(const QName&) const = default;
};

// One metadata statement. `content` is the human-readable escape hatch
// and is stored trimmed of leading/trailing whitespace; `code` carries
// the controlled-vocabulary value when one applies. Attributes beyond
// the recognized set ride along verbatim in `extra_attrs`.
struct QualifiedElement {
    std::string tag;
    std::optional<QName> refinement_type;
    std::string code;
    std::string content;
    std::string xml_lang;
    std::vector<std::pair<std::string, std::string>> extra_attrs;

    bool operator==(const QualifiedElement&) const = default;
};

struct MetadataRecord {
    std::vector<QualifiedElement> elements;
    // prefix -> URI for extension schemas declared on the record; the
    // core namespaces (dc, dcterms, xsi, olac) are implicit.
    std::vector<std::pair<std::string, std::string>> namespace_decls;

    const std::string* namespace_for(std::string_view prefix) const;
    bool operator==(const MetadataRecord&) const = default;
};

// The four attributes a standard harvester keeps from each element.
struct ElementQuad {
    std::string tag;
    std::string content;
    std::string type;
    std::string code;

    bool operator==(const ElementQuad&) const = default;
};

struct ControlledVocabulary {
    QName name;
    std::map<std::string, std::string> terms; // code -> display label

    const std::string* label(std::string_view code) const;
};

struct LanguageIdentifier {
    enum class Kind { iso639_1, extension };
    Kind kind = Kind::iso639_1;
    std::string authority; // empty for iso639_1
    std::string code;

    std::string to_string() const;
    bool operator==(const LanguageIdentifier&) const = default;
};

struct LanguageValidity {
    bool valid = false;
    std::string reason; // empty when valid
};

struct ArchiveDescription {
    std::string archive_name;
    std::string archive_url;
    std::string curator;
    std::string location;
    std::string institution_name;
    std::string institution_url;
    std::string synopsis;
    std::string access_terms;

    bool operator==(const ArchiveDescription&) const = default;
};

struct Finding {
    enum class Severity { error, warning, info };
    Severity severity;
    std::string message;
    int element_index = -1; // -1 when not tied to one element

    bool operator==(const Finding&) const = default;
};

bool has_errors(const std::vector<Finding>& findings);

// The community application profile: which vocabularies exist, which DC
// tags each refinement may qualify, and the legacy dot-notation map.
// Assembled from fixture files so vocabulary data is swappable without
// code changes.
class ApplicationProfile {
public:
    std::string olac_namespace_uri = kOlacNamespace;
    std::map<std::string, ControlledVocabulary> vocabularies; // key: olac local name
    std::map<std::string, std::set<std::string>> refinement_parent; // olac local name -> DC tags
    std::map<std::string, std::string> legacy_refinements; // dot suffix -> olac local name

    // ISO 639-1 two-letter codes and extension identifiers accepted by
    // the language-identifier scheme. The olac:language vocabulary is
    // materialized from the same tables.
    std::map<std::string, std::string> iso639_1; // code -> label
    std::map<std::string, std::string> extension_languages; // "authority-code" -> label

    const ControlledVocabulary* vocabulary_for(const QName& type) const;
    bool is_olac_type(const QName& type) const { return type.ns_uri == olac_namespace_uri; }

    // Loads profile.json plus the vocabulary fixture files it names,
    // resolved relative to the manifest's directory.
    static ApplicationProfile load(const std::string& manifest_path);
};

// Reads a delimited vocabulary fixture: UTF-8 lines "code<TAB>label",
// '#' comments and blank lines ignored.
std::map<std::string, std::string> load_vocabulary_file(const std::string& path);

MetadataRecord parse_record(std::string_view doc);
std::string serialize_record(const MetadataRecord& rec);

// Element-level hooks shared with the repository-document format, which
// embeds records inside a larger tree.
MetadataRecord record_from_element(const xml::Element& root);
xml::Element record_to_element(const MetadataRecord& rec);

std::vector<ElementQuad> extract_quads(const MetadataRecord& rec);

LanguageIdentifier make_language_identifier(std::string_view authority, std::string_view code);
LanguageValidity validate_language_identifier(std::string_view id, const ApplicationProfile& profile);

std::vector<Finding> validate_record(const MetadataRecord& rec, const ApplicationProfile& profile);

// Migrates the original dot-notation format (<subject.language code=...>)
// to the current model; new-style input passes through unchanged.
MetadataRecord upgrade_legacy_record(std::string_view doc, const ApplicationProfile& profile);

std::string trim(std::string_view text);

} // namespace olac
