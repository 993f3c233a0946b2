#include "support/generators.hpp"

#include <cctype>
#include <filesystem>
#include <mutex>
#include <stdexcept>

#include <unistd.h>

namespace fs = std::filesystem;

namespace olac::test {

std::string fixture_path(const std::string& name) {
    return std::string(OLAC_FIXTURES_DIR) + "/" + name;
}

std::shared_ptr<const ApplicationProfile> fixture_profile() {
    static std::shared_ptr<const ApplicationProfile> profile = [] {
        return std::make_shared<const ApplicationProfile>(
            ApplicationProfile::load(fixture_path("profile.json")));
    }();
    return profile;
}

int pick(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

const std::string& pick_one(Rng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<size_t>(pick(rng, 0, static_cast<int>(pool.size()) - 1))];
}

namespace {

const std::vector<std::string>& content_pool() {
    static const std::vector<std::string> pool = {
        "Alpha field notes", "alpha field notes", "Beta grammar",   "Gamma wordlist",
        "Notes on <tone> & stress", "O'Neil recordings",            "",
    };
    return pool;
}

} // namespace

QualifiedElement random_element(Rng& rng, const ApplicationProfile& profile) {
    static const std::vector<std::string> plain_tags = {"title", "creator", "description",
                                                        "publisher", "identifier"};
    QualifiedElement el;
    switch (pick(rng, 0, 4)) {
    case 0: // plain element, content only
        el.tag = pick_one(rng, plain_tags);
        el.content = trim(pick_one(rng, content_pool()));
        if (el.content.empty())
            el.content = "Untitled";
        break;
    case 4: // dcterms element refinement (element form)
        el.tag = "title";
        el.refinement_type = QName{"dcterms", "alternative", kDctermsNamespace};
        el.content = "Alternate title " + std::to_string(pick(rng, 1, 9));
        break;
    case 1: { // language with a code, optional content
        el.tag = pick(rng, 0, 1) ? "language" : "subject";
        el.refinement_type = QName{"olac", "language", profile.olac_namespace_uri};
        static const std::vector<std::string> codes = {"en", "sw", "x-sil-BAN", "x-sil-SWA",
                                                       "x-sil-SKY"};
        el.code = pick_one(rng, codes);
        if (pick(rng, 0, 2) == 0)
            el.content = "in-text name";
        break;
    }
    case 2: { // contributor/creator role
        el.tag = pick(rng, 0, 1) ? "contributor" : "creator";
        el.refinement_type = QName{"olac", "role", profile.olac_namespace_uri};
        static const std::vector<std::string> roles = {"editor", "author", "speaker"};
        el.code = pick_one(rng, roles);
        el.content = pick(rng, 0, 1) ? "Sapir, Edward" : "Bloomfield, Leonard";
        break;
    }
    default: { // linguistic type
        el.tag = "type";
        el.refinement_type = QName{"olac", "linguistic-type", profile.olac_namespace_uri};
        static const std::vector<std::string> kinds = {"lexicon", "text", "description"};
        el.code = pick_one(rng, kinds);
        break;
    }
    }
    return el;
}

MetadataRecord random_record(Rng& rng, const ApplicationProfile& profile, int min_elements,
                             int max_elements) {
    MetadataRecord rec;
    int n = pick(rng, min_elements, max_elements);
    for (int i = 0; i < n; ++i)
        rec.elements.push_back(random_element(rng, profile));
    return rec;
}

RepositoryDocument random_repository(Rng& rng, const ApplicationProfile& profile,
                                     const std::string& id, int records,
                                     UtcTimestamp first_stamp) {
    RepositoryDocument repo;
    repo.repository_id = id;
    repo.description = ArchiveDescription{
        "Archive " + id,
        "http://" + id + ".example.org/",
        "Curator of " + id,
        "Testhaven",
        "Institute for " + id,
        "http://" + id + ".example.org/institute",
        "Generated corpus for tests",
        "open access",
    };
    repo.sets.push_back(RepositorySet{"fieldwork", "Field recordings"});
    for (int i = 1; i <= records; ++i) {
        RepositoryRecord rec;
        rec.local_id = "rec" + std::to_string(i);
        rec.datestamp = UtcTimestamp(first_stamp.seconds() + 60 * i);
        rec.metadata = random_record(rng, profile);
        if (pick(rng, 0, 2) == 0)
            rec.set_memberships.push_back("fieldwork");
        repo.records.push_back(std::move(rec));
    }
    return repo;
}

namespace {

std::string random_literal(Rng& rng, query::Field field) {
    static const std::vector<std::string> tags = {"title", "creator", "subject", "language",
                                                  "type"};
    static const std::vector<std::string> types = {"olac:language", "olac:role", ""};
    static const std::vector<std::string> codes = {"en", "x-sil-BAN", "editor", ""};
    static const std::vector<std::string> patterns = {"%alpha%", "_lpha%", "%",     "Alpha%",
                                                      "o'neil%", "%notes", "_____", ""};
    switch (field) {
    case query::Field::tag: return tags[static_cast<size_t>(pick(rng, 0, 4))];
    case query::Field::type: return types[static_cast<size_t>(pick(rng, 0, 2))];
    case query::Field::code: return codes[static_cast<size_t>(pick(rng, 0, 3))];
    case query::Field::content: break;
    }
    if (pick(rng, 0, 1))
        return patterns[static_cast<size_t>(pick(rng, 0, static_cast<int>(patterns.size()) - 1))];
    return content_pool()[static_cast<size_t>(pick(rng, 0, static_cast<int>(content_pool().size()) - 1))];
}

query::Node random_comparison(Rng& rng, int elements) {
    query::Node node;
    node.kind = query::Node::Kind::comparison;
    node.cmp.alias = pick(rng, 1, elements);
    node.cmp.field = static_cast<query::Field>(pick(rng, 0, 3));
    node.cmp.op = static_cast<query::Op>(pick(rng, 0, 2));
    node.cmp.literal = random_literal(rng, node.cmp.field);
    return node;
}

// `banned` prevents a conjunction/disjunction from sitting directly
// inside one of the same kind, which the parser never produces.
query::Node random_node(Rng& rng, int elements, int depth,
                        query::Node::Kind banned = query::Node::Kind::comparison) {
    if (depth <= 0)
        return random_comparison(rng, elements);
    int roll = pick(rng, 0, 9);
    query::Node::Kind kind = roll < 4   ? query::Node::Kind::comparison
                             : roll < 6 ? query::Node::Kind::negation
                             : roll < 8 ? query::Node::Kind::conjunction
                                        : query::Node::Kind::disjunction;
    if (kind == banned)
        kind = query::Node::Kind::comparison;
    switch (kind) {
    case query::Node::Kind::comparison:
        return random_comparison(rng, elements);
    case query::Node::Kind::negation: {
        query::Node node;
        node.kind = kind;
        node.children.push_back(random_node(rng, elements, depth - 1));
        return node;
    }
    default: {
        query::Node node;
        node.kind = kind;
        int arity = pick(rng, 2, 3);
        for (int i = 0; i < arity; ++i)
            node.children.push_back(random_node(rng, elements, depth - 1, kind));
        return node;
    }
    }
}

} // namespace

query::Expr random_expression(Rng& rng, int elements, int max_depth) {
    query::Expr expr;
    expr.elements = elements;
    expr.root = random_node(rng, elements, max_depth);
    return expr;
}

std::vector<ElementQuad> random_quads(Rng& rng, int count) {
    static const std::vector<std::string> tags = {"title", "creator", "subject", "language"};
    static const std::vector<std::string> types = {"", "olac:language", "olac:role"};
    static const std::vector<std::string> codes = {"", "en", "x-sil-BAN", "editor"};
    std::vector<ElementQuad> quads;
    for (int i = 0; i < count; ++i) {
        ElementQuad quad;
        quad.tag = pick_one(rng, tags);
        quad.content = pick_one(rng, content_pool());
        quad.type = pick_one(rng, types);
        quad.code = pick_one(rng, codes);
        quads.push_back(std::move(quad));
    }
    return quads;
}

namespace {

char lower_char(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool oracle_eval(const query::Node& node, const std::vector<ElementQuad>& quads,
                 const std::vector<size_t>& assignment) {
    using Kind = query::Node::Kind;
    switch (node.kind) {
    case Kind::comparison: {
        const ElementQuad& quad = quads[assignment[static_cast<size_t>(node.cmp.alias - 1)]];
        const std::string& value = node.cmp.field == query::Field::tag       ? quad.tag
                                   : node.cmp.field == query::Field::content ? quad.content
                                   : node.cmp.field == query::Field::type    ? quad.type
                                                                             : quad.code;
        switch (node.cmp.op) {
        case query::Op::eq: return value == node.cmp.literal;
        case query::Op::ne: return value != node.cmp.literal;
        case query::Op::like: return oracle_like(value, node.cmp.literal);
        }
        return false;
    }
    case Kind::negation:
        return !oracle_eval(node.children.front(), quads, assignment);
    case Kind::conjunction:
        for (const query::Node& child : node.children)
            if (!oracle_eval(child, quads, assignment))
                return false;
        return true;
    case Kind::disjunction:
        for (const query::Node& child : node.children)
            if (oracle_eval(child, quads, assignment))
                return true;
        return false;
    }
    return false;
}

} // namespace

bool oracle_matches(const query::Expr& expr, const std::vector<ElementQuad>& quads) {
    if (quads.empty())
        return false;
    size_t n = static_cast<size_t>(expr.elements);
    std::vector<size_t> assignment(n, 0);
    for (;;) {
        if (oracle_eval(expr.root, quads, assignment))
            return true;
        // odometer over all |quads|^n assignments
        size_t i = 0;
        while (i < n && ++assignment[i] == quads.size()) {
            assignment[i] = 0;
            ++i;
        }
        if (i == n)
            return false;
    }
}

bool oracle_like(std::string_view text, std::string_view pattern) {
    if (pattern.empty())
        return text.empty();
    char p = pattern.front();
    if (p == '%')
        return oracle_like(text, pattern.substr(1))
               || (!text.empty() && oracle_like(text.substr(1), pattern));
    if (text.empty())
        return false;
    if (p == '_' || lower_char(p) == lower_char(text.front()))
        return oracle_like(text.substr(1), pattern.substr(1));
    return false;
}

void ScriptedFetcher::route(const std::string& url_or_prefix, Handler handler) {
    routes_.emplace_back(url_or_prefix, std::move(handler));
}

void ScriptedFetcher::route_text(const std::string& url, std::string body, int status) {
    route(url, [body = std::move(body), status](const std::string&) {
        return FetchResult{status, body, ""};
    });
}

FetchResult ScriptedFetcher::fetch(const std::string& url) {
    calls_ += 1;
    urls_.push_back(url);
    for (const auto& [key, handler] : routes_) {
        if (!key.empty() && key.back() == '*') {
            if (url.rfind(key.substr(0, key.size() - 1), 0) == 0)
                return handler(url);
        } else if (url == key) {
            return handler(url);
        }
    }
    return FetchResult{0, "", "no route for " + url};
}

ScriptedFetcher::Handler provider_route(std::shared_ptr<const RepositoryDocument> doc,
                                        ProviderConfig config) {
    return [doc = std::move(doc), config = std::move(config)](const std::string& url) {
        OryxSource source(doc);
        ProtocolRequest req = request_from_url(url);
        ProtocolResponse res = handle_request(req, source, config);
        return FetchResult{res.http_status, res.body, ""};
    };
}

ScriptedFetcher::Handler vida_route(std::shared_ptr<VidaGateway> gateway, ProviderConfig config) {
    return [gateway = std::move(gateway), config = std::move(config)](const std::string& url) {
        size_t scheme = url.find("://");
        size_t path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        std::string target = path_start == std::string::npos ? "/" : url.substr(path_start);
        std::string path = target.substr(0, target.find('?'));
        ProtocolRequest req = request_from_url(url);
        ProtocolResponse response;
        try {
            std::shared_ptr<RepositorySource> source = gateway->resolve(path);
            response = handle_request(req, *source, config);
        } catch (const VidaError& err) {
            response = make_error_response(req, config, err.code, err.what(), err.http_status);
        }
        return FetchResult{response.http_status, response.body, ""};
    };
}

ProtocolRequest request_from_url(const std::string& url) {
    ProtocolRequest req;
    size_t mark = url.find('?');
    if (mark == std::string::npos)
        return req;
    std::string query = url.substr(mark + 1);
    size_t pos = 0;
    while (pos <= query.size()) {
        size_t amp = query.find('&', pos);
        std::string piece = query.substr(pos, amp == std::string::npos ? std::string::npos
                                                                       : amp - pos);
        pos = amp == std::string::npos ? query.size() + 1 : amp + 1;
        if (piece.empty())
            continue;
        size_t eq = piece.find('=');
        std::string key = url_decode(piece.substr(0, eq == std::string::npos ? piece.size() : eq));
        std::string value = eq == std::string::npos ? "" : url_decode(piece.substr(eq + 1));
        if (key == "verb" && req.verb.empty())
            req.verb = value;
        else
            req.arguments.emplace_back(std::move(key), std::move(value));
    }
    return req;
}

TempDir::TempDir() {
    static std::mutex mutex;
    static int counter = 0;
    std::lock_guard<std::mutex> lock(mutex);
    fs::path base = fs::temp_directory_path() / "olac-tests";
    fs::create_directories(base);
    path_ = (base / ("t" + std::to_string(::getpid()) + "-" + std::to_string(counter++))).string();
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

} // namespace olac::test
