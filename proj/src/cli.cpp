#include "olac/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "olac/aggregator.hpp"
#include "olac/oryx.hpp"
#include "olac/query.hpp"
#include "olac/service.hpp"
#include "olac/viser.hpp"

namespace fs = std::filesystem;

namespace olac {

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    out << content;
    if (!out)
        throw IoError("short write to " + path);
}

int parse_config_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        int parsed = std::stoi(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' needs an integer, got '" + value + "'");
    }
}

void apply_config_pair(ToolConfig& config, const std::string& key, const std::string& value) {
    if (key == "data_dir")
        config.data_dir = value;
    else if (key == "profile")
        config.profile_path = value;
    else if (key == "page_size")
        config.page_size = parse_config_int(key, value);
    else if (key == "vida_ttl_seconds")
        config.vida_ttl_seconds = parse_config_int(key, value);
    else if (key == "token_expiry_hours")
        config.token_expiry_hours = parse_config_int(key, value);
    else if (key == "vida_listen")
        config.vida_listen = value;
    else if (key == "provider_listen")
        config.provider_listen = value;
    else if (key == "aggregator_listen")
        config.aggregator_listen = value;
    else if (key == "viser_listen")
        config.viser_listen = value;
    else if (key == "aggregator_url")
        config.aggregator_url = value;
    else
        throw Error("unknown config key '" + key + "'");
}

const std::pair<const char*, const char*> kEnvKeys[] = {
    {"OLAC_DATA_DIR", "data_dir"},
    {"OLAC_PROFILE", "profile"},
    {"OLAC_PAGE_SIZE", "page_size"},
    {"OLAC_VIDA_TTL_SECONDS", "vida_ttl_seconds"},
    {"OLAC_TOKEN_EXPIRY_HOURS", "token_expiry_hours"},
    {"OLAC_VIDA_LISTEN", "vida_listen"},
    {"OLAC_PROVIDER_LISTEN", "provider_listen"},
    {"OLAC_AGGREGATOR_LISTEN", "aggregator_listen"},
    {"OLAC_VISER_LISTEN", "viser_listen"},
    {"OLAC_AGGREGATOR_URL", "aggregator_url"},
};

// All option targets live here so CLI11 callbacks can bind safely.
struct CliState {
    std::string config_path;
    std::string data_dir_flag;
    std::string profile_flag;

    // repo
    std::string repo_file;
    std::string local_id;
    std::string repo_id;
    ArchiveDescription description;
    std::vector<std::string> set_decls;
    std::vector<std::string> elements; // groups of 4: tag type code content
    std::vector<std::string> xmlns_decls;
    std::string out_path;
    std::string public_url;
    bool force = false;

    // serve
    std::string listen;
    std::string base_url;
    int ttl_override = -1;

    // aggregator commands
    std::string provider_url;
    std::string archive_id;
    bool harvest_all = false;
    bool harvest_full = false;
    std::string sql;
    int query_elements = 1;
    bool query_full = false;
    std::string remote_url;
};

ToolConfig effective_config(const CliState& state) {
    std::string path = state.config_path;
    if (path.empty() && fs::exists("olac.conf"))
        path = "olac.conf";
    ToolConfig config = load_tool_config(path);
    if (!state.data_dir_flag.empty())
        config.data_dir = state.data_dir_flag;
    if (!state.profile_flag.empty())
        config.profile_path = state.profile_flag;
    return config;
}

std::shared_ptr<const ApplicationProfile> load_profile(const ToolConfig& config) {
    std::string path = config.profile_path;
    if (path.empty() && fs::exists("fixtures/profile.json"))
        path = "fixtures/profile.json";
    if (path.empty())
        throw Error("no application profile: pass --profile or set OLAC_PROFILE");
    return std::make_shared<const ApplicationProfile>(ApplicationProfile::load(path));
}

std::string prompt_or_fail(const std::string& field, std::ostream& out) {
    if (!isatty(STDIN_FILENO))
        throw Error("missing required value for " + field + " (no terminal to prompt on)");
    out << field << ": " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line))
        throw Error("no input for " + field);
    return trim(line);
}

void fill_description_interactively(ArchiveDescription& desc, std::ostream& out) {
    const std::pair<const char*, std::string ArchiveDescription::*> fields[] = {
        {"archive name", &ArchiveDescription::archive_name},
        {"archive URL", &ArchiveDescription::archive_url},
        {"curator", &ArchiveDescription::curator},
        {"location", &ArchiveDescription::location},
        {"institution name", &ArchiveDescription::institution_name},
        {"institution URL", &ArchiveDescription::institution_url},
        {"synopsis", &ArchiveDescription::synopsis},
        {"access terms", &ArchiveDescription::access_terms},
    };
    for (const auto& [label, member] : fields)
        if ((desc.*member).empty())
            desc.*member = prompt_or_fail(label, out);
}

QName resolve_type(const std::string& text, const ApplicationProfile& profile,
                   const std::vector<std::pair<std::string, std::string>>& extra_namespaces) {
    size_t colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw Error("type '" + text + "' must be written prefix:name");
    QName name;
    name.prefix = text.substr(0, colon);
    name.local = text.substr(colon + 1);
    if (name.prefix == "olac")
        name.ns_uri = profile.olac_namespace_uri;
    else if (name.prefix == "dcterms")
        name.ns_uri = kDctermsNamespace;
    else if (name.prefix == "dc")
        name.ns_uri = kDcNamespace;
    else {
        for (const auto& [prefix, uri] : extra_namespaces)
            if (prefix == name.prefix)
                name.ns_uri = uri;
        if (name.ns_uri.empty())
            throw Error("type prefix '" + name.prefix + "' is not declared; add --xmlns " +
                        name.prefix + "=URI");
    }
    return name;
}

std::vector<std::pair<std::string, std::string>>
parse_pair_flags(const std::vector<std::string>& decls, const char* what) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string& decl : decls) {
        size_t eq = decl.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(std::string(what) + " '" + decl + "' must be written NAME=VALUE");
        out.emplace_back(decl.substr(0, eq), decl.substr(eq + 1));
    }
    return out;
}

MetadataRecord build_record(const CliState& state, const ApplicationProfile& profile) {
    if (state.elements.empty() || state.elements.size() % 4 != 0)
        throw Error("pass elements as -e TAG TYPE CODE CONTENT (use '-' for an empty type or code)");
    MetadataRecord rec;
    rec.namespace_decls = parse_pair_flags(state.xmlns_decls, "--xmlns");
    for (size_t i = 0; i < state.elements.size(); i += 4) {
        QualifiedElement el;
        el.tag = state.elements[i];
        if (!is_dc_element_name(el.tag))
            throw Error("'" + el.tag + "' is not a Dublin Core element name");
        const std::string& type = state.elements[i + 1];
        if (type != "-")
            el.refinement_type = resolve_type(type, profile, rec.namespace_decls);
        if (state.elements[i + 2] != "-")
            el.code = state.elements[i + 2];
        el.content = trim(state.elements[i + 3]);
        rec.elements.push_back(std::move(el));
    }
    return rec;
}

void print_findings(const std::vector<Finding>& findings, const std::string& where,
                    std::ostream& out) {
    for (const Finding& finding : findings) {
        const char* severity = finding.severity == Finding::Severity::error     ? "error"
                               : finding.severity == Finding::Severity::warning ? "warning"
                                                                                : "info";
        out << severity << ": " << where;
        if (finding.element_index >= 0)
            out << " element " << (finding.element_index + 1);
        out << ": " << finding.message << "\n";
    }
}

std::string vida_suffix_for(const std::string& public_url) {
    if (public_url.rfind("http://", 0) == 0)
        return public_url.substr(7);
    if (public_url.rfind("https://", 0) == 0)
        return "https/" + public_url.substr(8);
    return public_url;
}

// --- repo commands ---------------------------------------------------------

int repo_init(const CliState& state, std::ostream& out) {
    if (fs::exists(state.repo_file))
        throw Error(state.repo_file + " already exists");
    RepositoryDocument repo;
    repo.repository_id = state.repo_id;
    if (!valid_repository_id(repo.repository_id))
        throw Error("repository id '" + repo.repository_id +
                    "' must match [a-zA-Z][a-zA-Z0-9-]*");
    repo.description = state.description;
    fill_description_interactively(repo.description, out);
    for (const auto& [spec, name] : parse_pair_flags(state.set_decls, "--set"))
        repo.sets.push_back(RepositorySet{spec, name});
    if (!looks_like_url(repo.description.archive_url))
        throw Error("archive URL '" + repo.description.archive_url + "' is not an http(s) URL");
    write_file(state.repo_file, serialize_repository(repo));
    out << "created " << state.repo_file << " (repository " << repo.repository_id << ")\n";
    return 0;
}

int repo_edit(const CliState& state, bool replace_existing, std::ostream& out,
              std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    RepositoryDocument repo = parse_repository(read_file(state.repo_file));
    const RepositoryRecord* existing = repo.find(state.local_id);
    if (!replace_existing && existing && !existing->deleted)
        throw Error("record '" + state.local_id + "' already exists; use 'repo set' to replace it");
    if (replace_existing && !existing)
        throw Error("record '" + state.local_id + "' does not exist; use 'repo add' to create it");

    MetadataRecord rec = build_record(state, *profile);
    auto result = upsert_record(repo, state.local_id, std::move(rec), UtcTimestamp::now(), *profile);
    if (const UpsertRejected* rejected = std::get_if<UpsertRejected>(&result)) {
        print_findings(rejected->findings, state.local_id, err);
        return 1;
    }
    write_file(state.repo_file, serialize_repository(std::get<RepositoryDocument>(result)));
    out << (replace_existing ? "replaced " : "added ") << state.local_id << "\n";
    return 0;
}

int repo_remove(const CliState& state, std::ostream& out) {
    RepositoryDocument repo = parse_repository(read_file(state.repo_file));
    DeleteResult result = delete_record(repo, state.local_id, UtcTimestamp::now());
    write_file(state.repo_file, serialize_repository(result.repo));
    out << (result.was_noop ? "already deleted " : "deleted ") << state.local_id << "\n";
    return 0;
}

int repo_validate(const CliState& state, std::ostream& out) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    RepositoryDocument repo = parse_repository(read_file(state.repo_file));
    bool any_errors = false;
    for (const RepositoryRecord& rec : repo.records) {
        if (rec.deleted || !rec.metadata)
            continue;
        std::vector<Finding> findings = validate_record(*rec.metadata, *profile);
        print_findings(findings, rec.local_id, out);
        any_errors = any_errors || has_errors(findings);
    }
    out << (any_errors ? "validation failed\n" : "validation passed\n");
    return any_errors ? 1 : 0;
}

int repo_publish(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    RepositoryDocument repo = parse_repository(read_file(state.repo_file));
    bool any_errors = false;
    for (const RepositoryRecord& rec : repo.records) {
        if (rec.deleted || !rec.metadata)
            continue;
        std::vector<Finding> findings = validate_record(*rec.metadata, *profile);
        if (has_errors(findings)) {
            print_findings(findings, rec.local_id, err);
            any_errors = true;
        }
    }
    if (any_errors && !state.force) {
        err << "validation errors block publishing (use --force to override)\n";
        return 1;
    }
    std::string out_path = state.out_path.empty() ? state.repo_file : state.out_path;
    write_file(out_path, serialize_repository(repo));
    out << "published " << out_path << "\n";
    if (!state.public_url.empty())
        out << "register this path with a Vida gateway: " << vida_suffix_for(state.public_url)
            << "\n";
    else
        out << "pass --public-url to print the Vida path for this document\n";
    return 0;
}

// --- services ----------------------------------------------------------------

std::atomic<Service*> g_active_service{nullptr};

void handle_interrupt(int) {
    if (Service* service = g_active_service.load())
        service->stop();
}

ServiceOptions make_service_options(const ToolConfig& config, const std::string& listen,
                                    const std::string& base_url_flag,
                                    std::shared_ptr<const ApplicationProfile> profile,
                                    std::ostream& out) {
    ServiceOptions options;
    options.page_size = config.page_size;
    options.token_expiry_hours = config.token_expiry_hours;
    options.profile = std::move(profile);
    options.base_url = base_url_flag.empty() ? "http://" + listen + "/" : base_url_flag;
    auto log_mutex = std::make_shared<std::mutex>();
    options.log = [&out, log_mutex](const std::string& line) {
        std::lock_guard<std::mutex> lock(*log_mutex);
        out << line << "\n" << std::flush;
    };
    return options;
}

int serve_blocking(Service& service, const std::string& listen, std::ostream& out,
                   std::ostream& err) {
    std::string host;
    int port = 0;
    if (!split_listen_address(listen, host, port)) {
        err << "error: listen address '" << listen << "' is not host:port\n";
        return 1;
    }
    g_active_service.store(&service);
    std::signal(SIGINT, handle_interrupt);
    std::signal(SIGTERM, handle_interrupt);
    out << "listening on http://" << host << ":" << port << "/\n" << std::flush;
    bool ok = service.listen(host, port);
    g_active_service.store(nullptr);
    if (!ok) {
        err << "error: cannot serve on " << host << ":" << port << " (address in use?)\n";
        return 2;
    }
    return 0;
}

int serve_vida(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    std::string listen = state.listen.empty() ? config.vida_listen : state.listen;
    int ttl = state.ttl_override >= 0 ? state.ttl_override : config.vida_ttl_seconds;
    auto gateway = std::make_shared<VidaGateway>(std::make_shared<HttpFetcher>(), ttl);
    Service service;
    service.mount_vida(gateway, make_service_options(config, listen, state.base_url, profile, out));
    return serve_blocking(service, listen, out, err);
}

int serve_provider(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    auto document =
        std::make_shared<const RepositoryDocument>(parse_repository(read_file(state.repo_file)));
    std::string listen = state.listen.empty() ? config.provider_listen : state.listen;
    Service service;
    service.mount_provider(document,
                           make_service_options(config, listen, state.base_url, profile, out));
    return serve_blocking(service, listen, out, err);
}

int serve_aggregator(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    auto aggregator = std::make_shared<Aggregator>(config.data_dir, std::make_shared<HttpFetcher>(),
                                                   profile);
    std::string listen = state.listen.empty() ? config.aggregator_listen : state.listen;
    Service service;
    service.mount_aggregator(aggregator,
                             make_service_options(config, listen, state.base_url, profile, out));
    return serve_blocking(service, listen, out, err);
}

int serve_viser(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);
    std::string aggregator_url = !state.remote_url.empty() ? state.remote_url
                                 : !config.aggregator_url.empty()
                                     ? config.aggregator_url
                                     : "http://" + config.aggregator_listen + "/";
    auto fetcher = std::make_shared<HttpFetcher>();
    auto client = std::make_shared<HttpQueryClient>(aggregator_url, fetcher);
    ViserConfig viser;
    viser.profile = profile;
    std::string listen = state.listen.empty() ? config.viser_listen : state.listen;
    Service service;
    service.mount_viser(client, fetcher, viser,
                        make_service_options(config, listen, state.base_url, profile, out));
    return serve_blocking(service, listen, out, err);
}

// --- aggregator commands -------------------------------------------------------

Aggregator open_aggregator(const ToolConfig& config) {
    return Aggregator(config.data_dir, std::make_shared<HttpFetcher>(), load_profile(config));
}

int do_register(const CliState& state, std::ostream& out) {
    ToolConfig config = effective_config(state);
    Aggregator aggregator = open_aggregator(config);
    RegistryEntry entry = aggregator.register_provider(state.provider_url);
    out << "registered " << entry.archive_id << " (" << entry.description.archive_name << ")\n";
    return 0;
}

void print_report(const HarvestReport& report, std::ostream& out) {
    out << report.archive_id << ": "
        << (report.mode == HarvestMode::full ? "full" : "incremental") << " harvest"
        << " added=" << report.added << " updated=" << report.updated
        << " deleted=" << report.deleted << " unchanged=" << report.unchanged << "\n";
    for (const HarvestError& error : report.errors)
        out << "  error[" << error.stage << "]: " << error.message << "\n";
}

int do_harvest(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    Aggregator aggregator = open_aggregator(config);
    std::vector<std::string> targets;
    if (state.harvest_all) {
        for (const RegistryEntry& entry : aggregator.registry())
            targets.push_back(entry.archive_id);
        if (targets.empty()) {
            err << "error: no archives registered\n";
            return 1;
        }
    } else if (!state.archive_id.empty()) {
        targets.push_back(state.archive_id);
    } else {
        err << "error: name an archive id or pass --all\n";
        return 1;
    }
    HarvestMode mode = state.harvest_full ? HarvestMode::full : HarvestMode::incremental;
    bool transport_trouble = false;
    bool record_trouble = false;
    for (const std::string& target : targets) {
        HarvestReport report = aggregator.harvest(target, mode);
        print_report(report, out);
        transport_trouble = transport_trouble || !report.transport_clean();
        record_trouble = record_trouble || !report.errors.empty();
    }
    if (transport_trouble)
        return 2;
    return record_trouble ? 1 : 0;
}

int do_query(const CliState& state, std::ostream& out, std::ostream& err) {
    ToolConfig config = effective_config(state);
    auto profile = load_profile(config);

    std::optional<Aggregator> local; // keeps the store alive for the local client
    std::unique_ptr<QueryClient> client;
    if (!state.remote_url.empty()) {
        client = std::make_unique<HttpQueryClient>(state.remote_url,
                                                   std::make_shared<HttpFetcher>());
    } else {
        local.emplace(config.data_dir, std::make_shared<HttpFetcher>(), profile);
        ProviderConfig provider;
        provider.page_size = config.page_size;
        provider.token_expiry_hours = config.token_expiry_hours;
        provider.profile = profile;
        client = std::make_unique<LocalQueryClient>(*local, provider);
    }

    ProtocolRequest request;
    request.verb = "Query";
    request.arguments.emplace_back("elements", std::to_string(state.query_elements));
    request.arguments.emplace_back("sql", state.sql);
    long matched = 0;
    for (;;) {
        ParsedList page = parse_list_response(client->request(request));
        if (page.error_code == "noRecordsMatch")
            break;
        if (!page.error_code.empty()) {
            err << "error: " << page.error_code << ": " << page.error_message << "\n";
            return 1;
        }
        for (const SourceRecord& rec : page.records) {
            matched += 1;
            out << rec.identifier << "\n";
            if (state.query_full && rec.metadata)
                out << serialize_record(*rec.metadata);
        }
        if (page.resumption_token.empty())
            break;
        request.arguments = {{"resumptionToken", page.resumption_token}};
    }
    err << matched << " record(s) matched\n";
    return 0;
}

int dispatch(const CLI::App& app, CliState& state, std::ostream& out, std::ostream& err) {
    const CLI::App* repo = app.get_subcommand("repo");
    const CLI::App* serve = app.get_subcommand("serve");
    if (repo->get_subcommand("init")->parsed())
        return repo_init(state, out);
    if (repo->get_subcommand("add")->parsed())
        return repo_edit(state, false, out, err);
    if (repo->get_subcommand("set")->parsed())
        return repo_edit(state, true, out, err);
    if (repo->get_subcommand("remove")->parsed())
        return repo_remove(state, out);
    if (repo->get_subcommand("validate")->parsed())
        return repo_validate(state, out);
    if (repo->get_subcommand("publish")->parsed())
        return repo_publish(state, out, err);
    if (serve->get_subcommand("vida")->parsed())
        return serve_vida(state, out, err);
    if (serve->get_subcommand("provider")->parsed())
        return serve_provider(state, out, err);
    if (serve->get_subcommand("aggregator")->parsed())
        return serve_aggregator(state, out, err);
    if (serve->get_subcommand("viser")->parsed())
        return serve_viser(state, out, err);
    if (app.get_subcommand("register")->parsed())
        return do_register(state, out);
    if (app.get_subcommand("harvest")->parsed())
        return do_harvest(state, out, err);
    if (app.get_subcommand("query")->parsed())
        return do_query(state, out, err);
    err << app.help();
    return 1;
}

} // namespace

ToolConfig load_tool_config(const std::string& config_path) {
    ToolConfig config;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in)
            throw Error("cannot read config file " + config_path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            line_no += 1;
            std::string stripped = trim(line);
            if (stripped.empty() || stripped.front() == '#')
                continue;
            size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                throw Error(config_path + ":" + std::to_string(line_no) +
                            ": expected key=value, got '" + stripped + "'");
            apply_config_pair(config, trim(stripped.substr(0, eq)),
                              trim(stripped.substr(eq + 1)));
        }
    }
    for (const auto& [env_name, key] : kEnvKeys)
        if (const char* value = std::getenv(env_name))
            apply_config_pair(config, key, value);
    if (config.page_size < 1)
        throw Error("page_size must be at least 1");
    return config;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Language-archive metadata toolkit: author repositories, serve the harvesting "
                 "protocol, aggregate archives, query and render the union catalog."};
    app.require_subcommand(1);
    app.fallthrough();

    CliState state;
    app.add_option("--config", state.config_path, "Config file (key=value lines)");
    app.add_option("--data-dir", state.data_dir_flag, "Aggregator data directory");
    app.add_option("--profile", state.profile_flag, "Application-profile manifest path");

    CLI::App* repo = app.add_subcommand("repo", "Author and maintain a repository document");
    repo->require_subcommand(1);

    CLI::App* init = repo->add_subcommand("init", "Create a new repository file");
    init->add_option("file", state.repo_file, "Repository file to create")->required();
    init->add_option("--id", state.repo_id, "Repository id ([a-zA-Z][a-zA-Z0-9-]*)")->required();
    init->add_option("--name", state.description.archive_name, "Archive name");
    init->add_option("--archive-url", state.description.archive_url, "Archive home URL");
    init->add_option("--curator", state.description.curator, "Curator");
    init->add_option("--location", state.description.location, "Location");
    init->add_option("--institution", state.description.institution_name, "Institution name");
    init->add_option("--institution-url", state.description.institution_url, "Institution URL");
    init->add_option("--synopsis", state.description.synopsis, "Synopsis");
    init->add_option("--access-terms", state.description.access_terms, "Access terms");
    init->add_option("--set", state.set_decls, "Declare a set as SPEC=NAME (repeatable)");

    auto add_element_options = [&state](CLI::App* cmd) {
        cmd->add_option("file", state.repo_file, "Repository file")->required();
        cmd->add_option("local-id", state.local_id, "Record id within the repository")->required();
        cmd->add_option("-e,--element", state.elements,
                        "One element: TAG TYPE CODE CONTENT ('-' = empty type/code)")
            ->type_size(4);
        cmd->add_option("--xmlns", state.xmlns_decls,
                        "Declare an extension namespace as PREFIX=URI (repeatable)");
    };
    add_element_options(repo->add_subcommand("add", "Add a new record"));
    add_element_options(repo->add_subcommand("set", "Replace an existing record"));

    CLI::App* remove = repo->add_subcommand("remove", "Tombstone a record");
    remove->add_option("file", state.repo_file, "Repository file")->required();
    remove->add_option("local-id", state.local_id, "Record id")->required();

    CLI::App* validate = repo->add_subcommand("validate", "Validate all records");
    validate->add_option("file", state.repo_file, "Repository file")->required();

    CLI::App* publish = repo->add_subcommand("publish", "Validate and write the publishable file");
    publish->add_option("file", state.repo_file, "Repository file")->required();
    publish->add_option("--out", state.out_path, "Output path (default: in place)");
    publish->add_option("--public-url", state.public_url,
                        "Where the file will be hosted; prints the Vida path");
    publish->add_flag("--force", state.force, "Publish despite validation errors");

    CLI::App* serve = app.add_subcommand("serve", "Run one of the services");
    serve->require_subcommand(1);
    CLI::App* vida = serve->add_subcommand("vida", "Virtual data provider gateway");
    vida->add_option("--listen", state.listen, "host:port");
    vida->add_option("--base-url", state.base_url, "Advertised base URL");
    vida->add_option("--ttl", state.ttl_override, "Upstream cache TTL in seconds");
    CLI::App* provider = serve->add_subcommand("provider", "Serve one repository file");
    provider->add_option("file", state.repo_file, "Repository file")->required();
    provider->add_option("--listen", state.listen, "host:port");
    provider->add_option("--base-url", state.base_url, "Advertised base URL");
    CLI::App* aggregator = serve->add_subcommand("aggregator", "Serve the union catalog");
    aggregator->add_option("--listen", state.listen, "host:port");
    aggregator->add_option("--base-url", state.base_url, "Advertised base URL");
    CLI::App* viser = serve->add_subcommand("viser", "Serve rendered query pages");
    viser->add_option("--listen", state.listen, "host:port");
    viser->add_option("--aggregator-url", state.remote_url, "Aggregator endpoint");

    CLI::App* register_cmd = app.add_subcommand("register", "Register a provider with the aggregator");
    register_cmd->add_option("base-url", state.provider_url, "Provider base URL")->required();

    CLI::App* harvest = app.add_subcommand("harvest", "Harvest registered providers");
    harvest->add_option("archive-id", state.archive_id, "Archive to harvest");
    harvest->add_flag("--all", state.harvest_all, "Harvest every registered archive");
    harvest->add_flag("--full", state.harvest_full, "Full harvest (default: incremental)");

    CLI::App* query = app.add_subcommand("query", "Query the aggregate store");
    query->add_option("--sql", state.sql, "WHERE-clause expression")->required();
    query->add_option("--elements", state.query_elements, "Alias count N (e1..eN)")->required();
    query->add_flag("--full", state.query_full, "Print full records, not just identifiers");
    query->add_option("--url", state.remote_url, "Query a remote aggregator endpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::stringstream capture_out, capture_err;
        int code = app.exit(e, capture_out, capture_err);
        out << capture_out.str();
        err << capture_err.str();
        return code == 0 ? 0 : 1;
    }

    try {
        return dispatch(app, state, out, err);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const RegistrationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const VidaError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const xml::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const query::SyntaxError& e) {
        err << "error: " << e.what() << " (position " << e.position << ")\n";
        return 1;
    } catch (const BadTimestampError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int run_cli(int argc, const char* const* argv) {
    return run_cli(argc, argv, std::cout, std::cerr);
}

} // namespace olac
