#include "olac/model.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace olac {

namespace {

const std::vector<std::string> kDcNames = {
    "title", "creator", "subject", "description", "publisher",
    "contributor", "date", "type", "format", "identifier",
    "source", "language", "relation", "coverage", "rights",
};

// Element refinements from the dcterms namespace and the DC element
// each dumbs down to.
const std::map<std::string, std::string> kDctermsParents = {
    {"alternative", "title"},
    {"abstract", "description"},
    {"tableOfContents", "description"},
    {"audience", "description"},
    {"created", "date"},
    {"issued", "date"},
    {"modified", "date"},
    {"valid", "date"},
    {"available", "date"},
    {"dateAccepted", "date"},
    {"dateCopyrighted", "date"},
    {"dateSubmitted", "date"},
    {"extent", "format"},
    {"medium", "format"},
    {"isPartOf", "relation"},
    {"hasPart", "relation"},
    {"isVersionOf", "relation"},
    {"hasVersion", "relation"},
    {"isFormatOf", "relation"},
    {"hasFormat", "relation"},
    {"references", "relation"},
    {"isReferencedBy", "relation"},
    {"replaces", "relation"},
    {"isReplacedBy", "relation"},
    {"requires", "relation"},
    {"isRequiredBy", "relation"},
    {"conformsTo", "relation"},
    {"spatial", "coverage"},
    {"temporal", "coverage"},
    {"bibliographicCitation", "identifier"},
    {"accessRights", "rights"},
    {"license", "rights"},
};

bool is_core_namespace(std::string_view uri) {
    return uri == kDcNamespace || uri == kDctermsNamespace || uri == kXsiNamespace || uri == kOlacNamespace;
}

std::string conventional_namespace(std::string_view prefix) {
    if (prefix == "dc") return kDcNamespace;
    if (prefix == "dcterms") return kDctermsNamespace;
    if (prefix == "xsi") return kXsiNamespace;
    if (prefix == "olac") return kOlacNamespace;
    return "";
}

struct NamespaceScope {
    std::map<std::string, std::string> decls; // prefix -> URI, "" = default

    std::string resolve(const std::string& prefix) const {
        auto it = decls.find(prefix);
        if (it != decls.end())
            return it->second;
        return conventional_namespace(prefix);
    }
};

std::pair<std::string, std::string> split_qname(const std::string& name) {
    auto colon = name.find(':');
    if (colon == std::string::npos)
        return {"", name};
    return {name.substr(0, colon), name.substr(colon + 1)};
}

QName resolve_qname(const std::string& qualified, const NamespaceScope& scope) {
    auto [prefix, local] = split_qname(qualified);
    return QName{prefix, local, scope.resolve(prefix)};
}

NamespaceScope scope_from_root(const xml::Element& root) {
    NamespaceScope scope;
    for (const auto& [name, value] : root.attributes) {
        if (name == "xmlns")
            scope.decls[""] = value;
        else if (name.starts_with("xmlns:"))
            scope.decls[name.substr(6)] = value;
    }
    return scope;
}

QualifiedElement element_from_xml(const xml::Element& el, const NamespaceScope& scope) {
    if (!el.child_elements().empty())
        throw Error("metadata element '" + el.name + "' has child elements; content must be text");

    QualifiedElement out;
    QName name = resolve_qname(el.name, scope);
    if (name.prefix.empty() || name.ns_uri == kDcNamespace) {
        if (!is_dc_element_name(name.local))
            throw UnknownElementError("unknown metadata element '" + el.name + "'");
        out.tag = name.local;
    } else if (name.ns_uri == kDctermsNamespace) {
        auto parent = kDctermsParents.find(name.local);
        if (parent == kDctermsParents.end())
            throw UnknownElementError("unknown metadata element '" + el.name + "'");
        out.tag = parent->second;
        out.refinement_type = name;
    } else {
        throw UnknownElementError("unknown metadata element '" + el.name + "'");
    }

    for (const auto& [attr_name, value] : el.attributes) {
        QName attr = resolve_qname(attr_name, scope);
        if (attr.ns_uri == kXsiNamespace && attr.local == "type") {
            if (out.refinement_type)
                throw Error("element '" + el.name + "' carries both a refinement element form and xsi:type");
            out.refinement_type = resolve_qname(value, scope);
        } else if ((attr.ns_uri == kOlacNamespace && attr.local == "code")
                   || (attr.prefix.empty() && attr.local == "code" && out.code.empty())) {
            out.code = value;
        } else if (attr.prefix == "xml" && attr.local == "lang") {
            out.xml_lang = value;
        } else {
            out.extra_attrs.emplace_back(attr_name, value);
        }
    }
    out.content = trim(el.text());
    return out;
}

void require_prefix_declared(const QName& type, const MetadataRecord& rec) {
    if (conventional_namespace(type.prefix) != "")
        return;
    if (rec.namespace_for(type.prefix) != nullptr)
        return;
    throw SerializeError("undeclared namespace prefix '" + type.prefix + "' in refinement type '"
                         + type.qualified() + "'");
}

} // namespace

const std::vector<std::string>& dc_element_names() {
    return kDcNames;
}

bool is_dc_element_name(std::string_view name) {
    return std::find(kDcNames.begin(), kDcNames.end(), name) != kDcNames.end();
}

const std::map<std::string, std::string>& dcterms_refinement_parents() {
    return kDctermsParents;
}

std::string trim(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])))
        ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1])))
        --end;
    return std::string(text.substr(begin, end - begin));
}

const std::string* MetadataRecord::namespace_for(std::string_view prefix) const {
    for (const auto& [p, uri] : namespace_decls)
        if (p == prefix)
            return &uri;
    return nullptr;
}

const std::string* ControlledVocabulary::label(std::string_view code) const {
    auto it = terms.find(std::string(code));
    return it == terms.end() ? nullptr : &it->second;
}

MetadataRecord record_from_element(const xml::Element& root) {
    NamespaceScope scope = scope_from_root(root);
    MetadataRecord rec;
    for (const auto& [name, value] : root.attributes) {
        if (!name.starts_with("xmlns:"))
            continue;
        std::string prefix = name.substr(6);
        if (!is_core_namespace(value))
            rec.namespace_decls.emplace_back(prefix, value);
    }
    for (const xml::Element* child : root.child_elements())
        rec.elements.push_back(element_from_xml(*child, scope));
    return rec;
}

MetadataRecord parse_record(std::string_view doc) {
    return record_from_element(xml::parse(doc));
}

xml::Element record_to_element(const MetadataRecord& rec) {
    xml::Element root("olac:olac");
    root.set_attribute("xmlns", kDcNamespace);
    auto declare_core = [&](const std::string& prefix, const char* uri) {
        if (rec.namespace_for(prefix) == nullptr)
            root.set_attribute("xmlns:" + prefix, uri);
    };
    declare_core("dcterms", kDctermsNamespace);
    declare_core("olac", kOlacNamespace);
    declare_core("xsi", kXsiNamespace);
    for (const auto& [prefix, uri] : rec.namespace_decls)
        root.set_attribute("xmlns:" + prefix, uri);

    for (const QualifiedElement& el : rec.elements) {
        bool refinement_element_form = el.refinement_type && el.refinement_type->ns_uri == kDctermsNamespace
                                       && kDctermsParents.contains(el.refinement_type->local);
        xml::Element node(refinement_element_form ? el.refinement_type->qualified() : el.tag);
        if (refinement_element_form) {
            require_prefix_declared(*el.refinement_type, rec);
        } else if (el.refinement_type) {
            require_prefix_declared(*el.refinement_type, rec);
            node.set_attribute("xsi:type", el.refinement_type->qualified());
        }
        if (!el.code.empty())
            node.set_attribute("olac:code", el.code);
        if (!el.xml_lang.empty())
            node.set_attribute("xml:lang", el.xml_lang);
        for (const auto& [name, value] : el.extra_attrs)
            node.attributes.emplace_back(name, value);
        node.add_text(el.content);
        root.add_child(std::move(node));
    }
    return root;
}

std::string serialize_record(const MetadataRecord& rec) {
    return xml::serialize(record_to_element(rec));
}

std::vector<ElementQuad> extract_quads(const MetadataRecord& rec) {
    std::vector<ElementQuad> quads;
    quads.reserve(rec.elements.size());
    for (const QualifiedElement& el : rec.elements)
        quads.push_back(ElementQuad{el.tag, el.content,
                                    el.refinement_type ? el.refinement_type->qualified() : "",
                                    el.code});
    return quads;
}

namespace {

bool alnum_subtag(std::string_view part) {
    if (part.empty() || part.size() > 8)
        return false;
    return std::all_of(part.begin(), part.end(),
                       [](unsigned char c) { return std::isalnum(c) != 0; });
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::string LanguageIdentifier::to_string() const {
    if (kind == Kind::extension)
        return "x-" + authority + "-" + code;
    return code;
}

LanguageIdentifier make_language_identifier(std::string_view authority, std::string_view code) {
    if (!alnum_subtag(authority))
        throw InvalidSubtagError("invalid authority subtag '" + std::string(authority) + "'");
    if (!alnum_subtag(code))
        throw InvalidSubtagError("invalid code subtag '" + std::string(code) + "'");
    return LanguageIdentifier{LanguageIdentifier::Kind::extension, lowercase(authority), std::string(code)};
}

LanguageValidity validate_language_identifier(std::string_view id, const ApplicationProfile& profile) {
    if (id.size() == 2 && std::isalpha(static_cast<unsigned char>(id[0]))
        && std::isalpha(static_cast<unsigned char>(id[1]))) {
        if (profile.iso639_1.contains(lowercase(id)))
            return {true, ""};
        return {false, "unknown ISO 639-1 code"};
    }
    // RFC 3066 treats the singleton and authority subtags as case-
    // insensitive; only the final code subtag is case-significant here.
    if (id.size() > 2 && (id[0] == 'x' || id[0] == 'X') && id[1] == '-') {
        std::string_view rest = id.substr(2);
        auto dash = rest.find('-');
        if (dash == std::string_view::npos)
            return {false, "not a coded identifier"};
        std::string authority(rest.substr(0, dash));
        std::string code(rest.substr(dash + 1));
        if (!alnum_subtag(authority) || !alnum_subtag(code))
            return {false, "not a coded identifier"};
        if (profile.extension_languages.contains(lowercase(authority) + "-" + code))
            return {true, ""};
        return {false, "unknown extension identifier"};
    }
    return {false, "not a coded identifier"};
}

bool has_errors(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Finding::Severity::error; });
}

const ControlledVocabulary* ApplicationProfile::vocabulary_for(const QName& type) const {
    if (type.ns_uri != olac_namespace_uri)
        return nullptr;
    auto it = vocabularies.find(type.local);
    return it == vocabularies.end() ? nullptr : &it->second;
}

std::vector<Finding> validate_record(const MetadataRecord& rec, const ApplicationProfile& profile) {
    std::vector<Finding> findings;
    auto add = [&](Finding::Severity severity, std::string message, int index) {
        findings.push_back(Finding{severity, std::move(message), index});
    };
    for (size_t i = 0; i < rec.elements.size(); ++i) {
        const QualifiedElement& el = rec.elements[i];
        int index = static_cast<int>(i);
        if (!is_dc_element_name(el.tag))
            add(Finding::Severity::error, "unknown DC element '" + el.tag + "'", index);
        if (!el.refinement_type)
            continue;
        const QName& type = *el.refinement_type;
        if (profile.is_olac_type(type)) {
            auto parents = profile.refinement_parent.find(type.local);
            if (parents == profile.refinement_parent.end()) {
                add(Finding::Severity::error,
                    "refinement type '" + type.qualified() + "' is not defined by the profile", index);
                continue;
            }
            if (!parents->second.contains(el.tag))
                add(Finding::Severity::error,
                    "refinement type '" + type.qualified() + "' may not refine '" + el.tag + "'", index);
            const ControlledVocabulary* vocab = profile.vocabulary_for(type);
            if (!el.code.empty()) {
                if (vocab && vocab->label(el.code) == nullptr)
                    add(Finding::Severity::error,
                        "code '" + el.code + "' is not in vocabulary '" + type.qualified() + "'", index);
            } else if (!el.content.empty()) {
                add(Finding::Severity::info,
                    "element uses free-text content instead of a '" + type.qualified() + "' code", index);
            }
        } else if (type.ns_uri == kDctermsNamespace) {
            // dc and dcterms are the profile's base schemas.
        } else if (type.ns_uri.empty()) {
            add(Finding::Severity::warning,
                "refinement type '" + type.qualified() + "' uses an undeclared namespace prefix", index);
        } else {
            add(Finding::Severity::warning,
                "third-party refinement type '" + type.qualified() + "'", index);
        }
    }
    return findings;
}

MetadataRecord upgrade_legacy_record(std::string_view doc, const ApplicationProfile& profile) {
    xml::Element root = xml::parse(doc);
    NamespaceScope scope = scope_from_root(root);
    MetadataRecord rec;
    for (const xml::Element* child : root.child_elements()) {
        auto dot = child->name.find('.');
        if (dot == std::string::npos || child->name.find(':') != std::string::npos) {
            rec.elements.push_back(element_from_xml(*child, scope));
            continue;
        }
        std::string base = child->name.substr(0, dot);
        std::string suffix = child->name.substr(dot + 1);
        if (!is_dc_element_name(base))
            throw UnknownElementError("unknown metadata element '" + child->name + "'");
        auto mapped = profile.legacy_refinements.find(suffix);
        if (mapped == profile.legacy_refinements.end())
            throw UnknownRefinementError("no refinement mapping for legacy suffix '" + suffix + "'");
        QualifiedElement el;
        el.tag = base;
        el.refinement_type = QName{"olac", mapped->second, profile.olac_namespace_uri};
        for (const auto& [attr_name, value] : child->attributes) {
            QName attr = resolve_qname(attr_name, scope);
            if (attr.local == "code" && (attr.prefix.empty() || attr.ns_uri == kOlacNamespace))
                el.code = value;
            else if (attr.prefix == "xml" && attr.local == "lang")
                el.xml_lang = value;
            else
                el.extra_attrs.emplace_back(attr_name, value);
        }
        el.content = trim(child->text());
        rec.elements.push_back(std::move(el));
    }
    return rec;
}

std::map<std::string, std::string> load_vocabulary_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open vocabulary file '" + path + "'");
    std::map<std::string, std::string> terms;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(path + ":" + std::to_string(line_no) + ": expected 'code<TAB>label'");
        std::string code = trim(line.substr(0, tab));
        std::string label = trim(line.substr(tab + 1));
        if (code.empty() || label.empty())
            throw Error(path + ":" + std::to_string(line_no) + ": empty code or label");
        if (!terms.emplace(code, label).second)
            throw Error(path + ":" + std::to_string(line_no) + ": duplicate code '" + code + "'");
    }
    return terms;
}

ApplicationProfile ApplicationProfile::load(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw Error("cannot open profile manifest '" + manifest_path + "'");
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid profile manifest '" + manifest_path + "': " + e.what());
    }

    std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& rel) { return (dir / rel).string(); };

    ApplicationProfile profile;
    profile.olac_namespace_uri = manifest.value("olac_namespace", std::string(kOlacNamespace));
    if (manifest.contains("iso639_1"))
        profile.iso639_1 = load_vocabulary_file(resolve(manifest["iso639_1"].get<std::string>()));

    for (const auto& entry : manifest.value("vocabularies", nlohmann::json::array())) {
        std::string name = entry.at("name").get<std::string>();
        ControlledVocabulary vocab;
        vocab.name = QName{"olac", name, profile.olac_namespace_uri};
        vocab.terms = load_vocabulary_file(resolve(entry.at("file").get<std::string>()));
        std::set<std::string> refines;
        for (const auto& tag : entry.at("refines"))
            refines.insert(tag.get<std::string>());
        if (name == "language") {
            for (const auto& [code, label] : vocab.terms) {
                if (code.starts_with("x-"))
                    profile.extension_languages.emplace(code.substr(2), label);
            }
            for (const auto& [code, label] : profile.iso639_1)
                vocab.terms.emplace(code, label);
        }
        profile.refinement_parent.emplace(name, std::move(refines));
        profile.vocabularies.emplace(name, std::move(vocab));
    }
    // Bind before iterating: items() keeps a reference to its object.
    const nlohmann::json legacy = manifest.value("legacy", nlohmann::json::object());
    for (const auto& [suffix, local] : legacy.items())
        profile.legacy_refinements.emplace(suffix, local.get<std::string>());
    return profile;
}

} // namespace olac
