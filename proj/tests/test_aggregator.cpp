#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "support/generators.hpp"

using namespace olac;
using test::fixture_profile;
using test::ts;

namespace {

// A handful of providers behind one ScriptedFetcher. Published documents
// stay mutable through replace(), which is how the incremental-harvest
// tests simulate archives changing between visits.
struct World {
    test::TempDir dir;
    std::shared_ptr<test::ScriptedFetcher> fetcher = std::make_shared<test::ScriptedFetcher>();
    test::FakeClock clock;
    std::shared_ptr<const ApplicationProfile> profile = fixture_profile();
    std::map<std::string, std::shared_ptr<std::shared_ptr<const RepositoryDocument>>> docs;
    int next_dir = 0;

    static std::string base(const std::string& id) { return "http://" + id + ".example.org/"; }

    void publish(const std::string& id, RepositoryDocument doc) {
        auto holder = std::make_shared<std::shared_ptr<const RepositoryDocument>>(
            std::make_shared<const RepositoryDocument>(std::move(doc)));
        docs[id] = holder;
        ProviderConfig config;
        config.base_url = base(id);
        config.profile = profile;
        config.now = clock.fn();
        fetcher->route(base(id) + "*", [holder, config](const std::string& url) {
            return test::provider_route(*holder, config)(url);
        });
    }

    void replace(const std::string& id, RepositoryDocument doc) {
        *docs.at(id) = std::make_shared<const RepositoryDocument>(std::move(doc));
    }

    const RepositoryDocument& doc(const std::string& id) const { return **docs.at(id); }

    std::string fresh_data_dir() {
        std::string path = dir.path() + "/agg" + std::to_string(next_dir++);
        std::filesystem::create_directories(path);
        return path;
    }

    Aggregator make(const std::string& data_dir) {
        return Aggregator(data_dir, fetcher, profile, {}, clock.fn());
    }
};

RepositoryDocument sample_repo(unsigned seed, const std::string& id, int records) {
    test::Rng rng(seed);
    return test::random_repository(rng, *fixture_profile(), id, records);
}

} // namespace

TEST_CASE("sanitize_archive_id produces usable identifiers") {
    CHECK(sanitize_archive_id("My Archive!") == "my-archive");
    CHECK(sanitize_archive_id("ELAR") == "elar");
    CHECK(sanitize_archive_id("  spaced   out  ") == "spaced-out");
    CHECK(sanitize_archive_id("9lives") == "a-9lives"); // must start with a letter
    CHECK(sanitize_archive_id("--- ---") == "");
    CHECK(sanitize_archive_id("a.b.c") == "a-b-c");
    for (const char* name : {"My Archive!", "9lives", "x", "Pacific & Regional Archive"}) {
        std::string id = sanitize_archive_id(name);
        CHECK(valid_repository_id(id));
    }
}

TEST_CASE("registration captures the provider card") {
    World world;
    world.publish("alpha", sample_repo(7200, "alpha", 4));
    Aggregator agg = world.make(world.fresh_data_dir());

    RegistryEntry entry = agg.register_provider(World::base("alpha"));
    CHECK(entry.archive_id == "alpha");
    CHECK(entry.base_url == "http://alpha.example.org/");
    CHECK(entry.status == ArchiveStatus::active);
    CHECK(entry.consecutive_failures == 0);
    CHECK_FALSE(entry.last_successful_harvest.has_value());
    CHECK(entry.description == world.doc("alpha").description);

    CHECK(agg.registry().size() == 1);
    REQUIRE(agg.entry("alpha").has_value());
    CHECK(*agg.entry("alpha") == entry);
    CHECK_FALSE(agg.entry("beta").has_value());

    SUBCASE("the registry survives a restart") {
        Aggregator reopened = world.make(agg.data_dir());
        REQUIRE(reopened.entry("alpha").has_value());
        CHECK(*reopened.entry("alpha") == entry);
    }
    SUBCASE("re-registering the same base URL refreshes the description") {
        RepositoryDocument changed = world.doc("alpha");
        changed.description.synopsis = "Rewritten catalogue blurb";
        world.replace("alpha", changed);

        RegistryEntry refreshed = agg.register_provider(World::base("alpha"));
        CHECK(refreshed.archive_id == "alpha");
        CHECK(refreshed.description.synopsis == "Rewritten catalogue blurb");
        CHECK(agg.registry().size() == 1);
    }
    SUBCASE("a different URL claiming the same id is refused") {
        world.publish("alpha2", sample_repo(7201, "alpha", 2)); // same repository_id
        CHECK_THROWS_AS(agg.register_provider(World::base("alpha2")), RegistrationError);
        CHECK(agg.registry().size() == 1);
    }
}

TEST_CASE("registration failure modes") {
    World world;
    Aggregator agg = world.make(world.fresh_data_dir());

    SUBCASE("non-URL input") {
        CHECK_THROWS_AS(agg.register_provider("not a url"), RegistrationError);
        CHECK_THROWS_AS(agg.register_provider(""), RegistrationError);
        CHECK_THROWS_AS(agg.register_provider("ftp://files.example.org/"), RegistrationError);
    }
    SUBCASE("unreachable host") {
        CHECK_THROWS_AS(agg.register_provider("http://down.example.org/"), RegistrationError);
    }
    SUBCASE("an error envelope instead of Identify") {
        ProviderConfig config;
        config.profile = world.profile;
        ProtocolRequest req;
        req.verb = "Identify";
        ProtocolResponse error =
            make_error_response(req, config, "badVerb", "no such verb here");
        world.fetcher->route_text("http://cranky.example.org/?verb=Identify", error.body);
        try {
            agg.register_provider("http://cranky.example.org/");
            FAIL("expected BadRepositoryError");
        } catch (const BadRepositoryError& e) {
            CHECK(std::string(e.what()).find("badVerb") != std::string::npos);
        }
    }
    SUBCASE("unparseable response body") {
        world.fetcher->route_text("http://noise.example.org/?verb=Identify", "<oops");
        CHECK_THROWS_AS(agg.register_provider("http://noise.example.org/"), BadRepositoryError);
    }
    SUBCASE("a description missing required fields names them") {
        world.publish("gamma", sample_repo(7202, "gamma", 2));
        FetchResult full = world.fetcher->fetch("http://gamma.example.org/?verb=Identify");
        std::string body = full.body;
        size_t open = body.find("<curator>");
        size_t close = body.find("</curator>");
        REQUIRE(open != std::string::npos);
        body.erase(open, close + std::string("</curator>").size() - open);
        world.fetcher->route_text("http://nocurator.example.org/?verb=Identify", body);
        try {
            agg.register_provider("http://nocurator.example.org/");
            FAIL("expected BadRepositoryError");
        } catch (const BadRepositoryError& e) {
            CHECK(std::string(e.what()).find("curator") != std::string::npos);
        }
    }
    SUBCASE("an Identify without a description block") {
        world.fetcher->route_text(
            "http://bare.example.org/?verb=Identify",
            "<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\">"
            "<responseDate>2026-01-01T00:00:00Z</responseDate>"
            "<request verb=\"Identify\">http://bare.example.org/</request>"
            "<Identify><repositoryName>Bare</repositoryName>"
            "<repositoryIdentifier>bare</repositoryIdentifier></Identify></OAI-PMH>");
        try {
            agg.register_provider("http://bare.example.org/");
            FAIL("expected BadRepositoryError");
        } catch (const BadRepositoryError& e) {
            CHECK(std::string(e.what()).find("description") != std::string::npos);
        }
    }
    SUBCASE("an unusable repositoryIdentifier falls back to the sanitized name") {
        world.publish("delta", sample_repo(7203, "delta", 2));
        FetchResult full = world.fetcher->fetch("http://delta.example.org/?verb=Identify");
        std::string body = full.body;
        size_t open = body.find("<repositoryIdentifier>delta</repositoryIdentifier>");
        REQUIRE(open != std::string::npos);
        body.replace(open, std::string("<repositoryIdentifier>delta</repositoryIdentifier>").size(),
                     "<repositoryIdentifier>###</repositoryIdentifier>");
        world.fetcher->route_text("http://odd-id.example.org/?verb=Identify", body);
        RegistryEntry entry = agg.register_provider("http://odd-id.example.org/");
        CHECK(entry.archive_id == sanitize_archive_id(world.doc("delta").description.archive_name));
    }
}

TEST_CASE("a full harvest copies the provider record for record") {
    World world;
    world.clock.set(ts("2026-01-01T00:00:00Z"));
    RepositoryDocument alpha = sample_repo(7210, "alpha", 6);
    alpha = delete_record(alpha, "rec2", ts("2024-03-01T00:00:00Z")).repo;
    world.publish("alpha", alpha);
    world.publish("beta", sample_repo(7211, "beta", 9));

    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider(World::base("alpha"));
    agg.register_provider(World::base("beta"));

    HarvestReport report = agg.harvest("alpha", HarvestMode::full);
    CHECK(report.archive_id == "alpha");
    CHECK(report.mode == HarvestMode::full);
    CHECK(report.added == 6); // tombstones are records too
    CHECK(report.updated == 0);
    CHECK(report.deleted == 0);
    CHECK(report.unchanged == 0);
    CHECK(report.errors.empty());
    CHECK(report.transport_clean());
    CHECK(report.started_at == ts("2026-01-01T00:00:00Z"));

    HarvestReport beta_report = agg.harvest("beta", HarvestMode::full);
    CHECK(beta_report.added == 9);

    REQUIRE(agg.entry("alpha")->last_successful_harvest.has_value());
    CHECK(*agg.entry("alpha")->last_successful_harvest == report.started_at);

    std::vector<ProvenancedRecord> stored = agg.stored_records();
    REQUIRE(stored.size() == 15);
    // Total order (datestamp, identifier), provenance on every record,
    // quads only for live records.
    for (size_t i = 1; i < stored.size(); ++i) {
        bool ordered = stored[i - 1].datestamp < stored[i].datestamp ||
                       (stored[i - 1].datestamp == stored[i].datestamp &&
                        stored[i - 1].identifier < stored[i].identifier);
        CHECK(ordered);
    }
    std::set<std::string> archives;
    for (const ProvenancedRecord& rec : stored) {
        archives.insert(rec.source_archive);
        CHECK(rec.record.has_value() == !rec.deleted);
        if (rec.deleted)
            CHECK(rec.quads.empty());
        else
            CHECK(rec.quads == extract_quads(*rec.record));
    }
    CHECK(archives == std::set<std::string>{"alpha", "beta"});

    // Every provider record arrived under the aggregator's identifier.
    const RepositoryRecord* tombstone = world.doc("alpha").find("rec2");
    REQUIRE(tombstone != nullptr);
    bool found_tombstone = false;
    for (const ProvenancedRecord& rec : stored)
        if (rec.identifier == "oai:alpha:rec2") {
            found_tombstone = true;
            CHECK(rec.deleted);
            CHECK(rec.datestamp == tombstone->datestamp);
        }
    CHECK(found_tombstone);

    SUBCASE("the store survives a restart") {
        Aggregator reopened = world.make(agg.data_dir());
        CHECK(reopened.stored_records() == stored);
        CHECK(*reopened.entry("alpha") == *agg.entry("alpha"));
        CHECK(*reopened.entry("beta") == *agg.entry("beta"));
    }
    SUBCASE("re-harvesting in full mode reports everything unchanged") {
        world.clock.advance_seconds(3600);
        HarvestReport again = agg.harvest("alpha", HarvestMode::full);
        CHECK(again.added == 0);
        CHECK(again.updated == 0);
        CHECK(again.deleted == 0);
        CHECK(again.unchanged == 6);
        CHECK(agg.stored_records() == stored);
    }
    SUBCASE("harvesting an unregistered archive throws") {
        CHECK_THROWS_AS(agg.harvest("nobody", HarvestMode::full), NotFoundError);
    }
}

TEST_CASE("incremental harvests pick up edits, deletions, and additions") {
    World world;
    world.clock.set(ts("2026-01-01T00:00:00Z"));
    world.publish("alpha", sample_repo(7220, "alpha", 10));
    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider(World::base("alpha"));
    agg.harvest("alpha", HarvestMode::full);
    REQUIRE(agg.stored_records().size() == 10);

    // The archive moves on after the first visit.
    world.clock.advance_seconds(24 * 3600);
    UtcTimestamp edit_stamp = ts("2026-01-01T12:00:00Z");
    RepositoryDocument next = world.doc("alpha");
    test::Rng rng(7221);
    for (const char* local : {"rec3", "rec7"}) {
        MetadataRecord changed = *next.find(local)->metadata;
        QualifiedElement extra;
        extra.tag = "description";
        extra.content = "Revised after field check";
        changed.elements.push_back(extra);
        next = std::get<RepositoryDocument>(
            upsert_record(next, local, changed, edit_stamp, *world.profile));
    }
    next = delete_record(next, "rec5", edit_stamp).repo;
    MetadataRecord fresh = test::random_record(rng, *world.profile);
    next = std::get<RepositoryDocument>(
        upsert_record(next, "rec11", fresh, edit_stamp, *world.profile));
    world.replace("alpha", next);

    HarvestReport incremental = agg.harvest("alpha", HarvestMode::incremental);
    CHECK(incremental.mode == HarvestMode::incremental);
    CHECK(incremental.added == 1);
    CHECK(incremental.updated == 2);
    CHECK(incremental.deleted == 1);
    CHECK(incremental.unchanged == 0); // untouched records fall outside the window
    CHECK(incremental.errors.empty());
    CHECK(agg.stored_records().size() == 11);

    // The selective harvest converged on the same store a full one builds.
    std::string dir_b = world.fresh_data_dir();
    Aggregator fresh_agg = world.make(dir_b);
    fresh_agg.register_provider(World::base("alpha"));
    fresh_agg.harvest("alpha", HarvestMode::full);
    CHECK(fresh_agg.stored_records() == agg.stored_records());

    // Harvesting again with nothing new is a clean no-op (fixpoint).
    world.clock.advance_seconds(3600);
    HarvestReport quiet = agg.harvest("alpha", HarvestMode::incremental);
    CHECK(quiet.added == 0);
    CHECK(quiet.updated == 0);
    CHECK(quiet.deleted == 0);
    CHECK(quiet.unchanged == 0);
    CHECK(quiet.errors.empty());
    CHECK(quiet.transport_clean()); // noRecordsMatch counts as success
    CHECK(*agg.entry("alpha")->last_successful_harvest == quiet.started_at);
}

TEST_CASE("an incremental harvest without history behaves like a full one") {
    World world;
    world.publish("alpha", sample_repo(7230, "alpha", 5));
    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider(World::base("alpha"));
    HarvestReport report = agg.harvest("alpha", HarvestMode::incremental);
    CHECK(report.added == 5);
    CHECK(agg.stored_records().size() == 5);
}

TEST_CASE("transport failures escalate to failing and recover") {
    World world;
    world.clock.set(ts("2026-01-01T00:00:00Z"));

    // A provider whose availability the test controls.
    auto broken = std::make_shared<bool>(false);
    auto holder = std::make_shared<std::shared_ptr<const RepositoryDocument>>(
        std::make_shared<const RepositoryDocument>(sample_repo(7240, "flaky", 4)));
    ProviderConfig config;
    config.base_url = "http://flaky.example.org/";
    config.profile = world.profile;
    world.fetcher->route("http://flaky.example.org/*",
                         [broken, holder, config](const std::string& url) {
                             if (*broken)
                                 return FetchResult{0, "", "connection refused"};
                             return test::provider_route(*holder, config)(url);
                         });

    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider("http://flaky.example.org/");
    HarvestReport good = agg.harvest("flaky", HarvestMode::full);
    CHECK(good.transport_clean());
    UtcTimestamp last_good = *agg.entry("flaky")->last_successful_harvest;

    *broken = true;
    for (int attempt = 1; attempt <= 3; ++attempt) {
        world.clock.advance_seconds(600);
        HarvestReport failed = agg.harvest("flaky", HarvestMode::incremental);
        CHECK_FALSE(failed.transport_clean());
        REQUIRE(failed.errors.size() == 1);
        CHECK(failed.errors[0].stage == "transport");
        CHECK(failed.errors[0].message.find("connection refused") != std::string::npos);
        CHECK(agg.entry("flaky")->consecutive_failures == attempt);
        CHECK(agg.entry("flaky")->status
              == (attempt < 3 ? ArchiveStatus::active : ArchiveStatus::failing));
    }
    // The failure streak never touched the harvest bookmark or the store.
    CHECK(*agg.entry("flaky")->last_successful_harvest == last_good);
    CHECK(agg.stored_records().size() == 4);

    *broken = false;
    world.clock.advance_seconds(600);
    HarvestReport recovered = agg.harvest("flaky", HarvestMode::incremental);
    CHECK(recovered.transport_clean());
    CHECK(agg.entry("flaky")->status == ArchiveStatus::active);
    CHECK(agg.entry("flaky")->consecutive_failures == 0);
}

TEST_CASE("a suspended archive is not harvested") {
    World world;
    world.publish("alpha", sample_repo(7250, "alpha", 3));
    std::string data_dir = world.fresh_data_dir();
    {
        Aggregator agg = world.make(data_dir);
        agg.register_provider(World::base("alpha"));
        agg.harvest("alpha", HarvestMode::full);
    }
    // The curator suspends the archive by editing the registry file.
    std::string registry_path = data_dir + "/registry.json";
    std::ifstream in(registry_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    in.close();
    std::string text = buffer.str();
    size_t pos = text.find("\"active\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"active\"").size(), "\"suspended\"");
    std::ofstream out(registry_path);
    out << text;
    out.close();

    Aggregator agg = world.make(data_dir);
    REQUIRE(agg.entry("alpha").has_value());
    CHECK(agg.entry("alpha")->status == ArchiveStatus::suspended);
    CHECK(agg.stored_records().size() == 3); // records stay visible
    try {
        agg.harvest("alpha", HarvestMode::full);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("suspended") != std::string::npos);
    }
}

TEST_CASE("one bad record is quarantined without sinking the page") {
    World world;
    world.publish("alpha", sample_repo(7260, "alpha", 5));
    ProviderConfig config;
    config.base_url = "http://mangled.example.org/";
    config.profile = world.profile;
    auto inner = test::provider_route(
        std::make_shared<const RepositoryDocument>(world.doc("alpha")), config);
    world.fetcher->route("http://mangled.example.org/*", [inner](const std::string& url) {
        FetchResult result = inner(url);
        // Corrupt the first metadata body on list pages only.
        if (url.find("ListRecords") != std::string::npos) {
            size_t pos = result.body.find("<olac:olac");
            if (pos != std::string::npos) {
                size_t end = result.body.find('>', pos);
                result.body.insert(end + 1, "<frobnicate>boom</frobnicate>");
            }
        }
        return result;
    });

    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider("http://mangled.example.org/");
    HarvestReport report = agg.harvest("alpha", HarvestMode::full);
    CHECK(report.added == 4);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].stage == "record");
    CHECK(report.errors[0].message.find("oai:alpha:") != std::string::npos);
    CHECK(report.transport_clean()); // record trouble does not fail the archive
    CHECK(agg.entry("alpha")->consecutive_failures == 0);
    CHECK(agg.entry("alpha")->last_successful_harvest.has_value());
    CHECK(agg.stored_records().size() == 4);
}

TEST_CASE("harvests page through long lists") {
    World world;
    RepositoryDocument big = sample_repo(7270, "alpha", 34);
    auto holder = std::make_shared<std::shared_ptr<const RepositoryDocument>>(
        std::make_shared<const RepositoryDocument>(std::move(big)));
    ProviderConfig config;
    config.base_url = "http://alpha.example.org/";
    config.profile = world.profile;
    config.page_size = 7; // forces five pages
    world.fetcher->route("http://alpha.example.org/*",
                         [holder, config](const std::string& url) {
                             return test::provider_route(*holder, config)(url);
                         });

    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider("http://alpha.example.org/");
    HarvestReport report = agg.harvest("alpha", HarvestMode::full);
    CHECK(report.added == 34);
    CHECK(report.errors.empty());
    CHECK(agg.stored_records().size() == 34);

    // Identify + five list pages.
    long list_calls = 0;
    for (const std::string& url : world.fetcher->urls())
        if (url.find("verb=ListRecords") != std::string::npos)
            list_calls += 1;
    CHECK(list_calls == 5);
}

TEST_CASE("the aggregate source re-exposes the union with provenance") {
    World world;
    world.clock.set(ts("2026-01-01T00:00:00Z"));
    world.publish("alpha", sample_repo(7280, "alpha", 4));
    world.publish("beta", sample_repo(7281, "beta", 3));
    Aggregator agg = world.make(world.fresh_data_dir());
    agg.register_provider(World::base("alpha"));
    agg.register_provider(World::base("beta"));
    agg.harvest("alpha", HarvestMode::full);
    agg.harvest("beta", HarvestMode::full);

    std::shared_ptr<RepositorySource> source = agg.aggregate_source();
    REQUIRE(source != nullptr);
    CHECK(source->supports_query());
    CHECK(source->description().repository_id == "aggregate");
    CHECK_FALSE(source->description().description.archive_name.empty());

    ProviderConfig config;
    config.base_url = "http://aggregate.example.org/";
    config.profile = world.profile;
    config.now = world.clock.fn();

    SUBCASE("ListRecords covers both archives and carries provenance") {
        ProtocolRequest req;
        req.verb = "ListRecords";
        req.arguments = {{"metadataPrefix", "olac"}};
        ProtocolResponse res = handle_request(req, *source, config);
        REQUIRE(res.error_code.empty());
        xml::Element root = xml::parse(res.body);
        auto records = root.find_child("ListRecords")->children_named("record");
        REQUIRE(records.size() == 7);
        std::map<std::string, int> by_archive;
        for (const xml::Element* rec : records) {
            const xml::Element* about = rec->find_child("about");
            REQUIRE(about != nullptr);
            const xml::Element* prov = about->find_child("provenance");
            REQUIRE(prov != nullptr);
            const std::string* archive_id = prov->attribute("archiveId");
            REQUIRE(archive_id != nullptr);
            by_archive[*archive_id] += 1;
            REQUIRE(prov->attribute("baseURL") != nullptr);
            CHECK(*prov->attribute("baseURL") == World::base(*archive_id));
            REQUIRE(prov->attribute("archiveName") != nullptr);
            CHECK(*prov->attribute("archiveName")
                  == world.doc(*archive_id).description.archive_name);
        }
        CHECK(by_archive["alpha"] == 4);
        CHECK(by_archive["beta"] == 3);
    }
    SUBCASE("GetRecord resolves aggregated identifiers") {
        ProtocolRequest req;
        req.verb = "GetRecord";
        req.arguments = {{"identifier", "oai:beta:rec2"}, {"metadataPrefix", "olac"}};
        ProtocolResponse res = handle_request(req, *source, config);
        REQUIRE(res.error_code.empty());
        xml::Element root = xml::parse(res.body);
        const xml::Element* metadata =
            root.find_child("GetRecord")->find_child("record")->find_child("metadata");
        REQUIRE(metadata != nullptr);
        MetadataRecord served = record_from_element(*metadata->child_elements().front());
        CHECK(served == *world.doc("beta").find("rec2")->metadata);
    }
    SUBCASE("the aggregate declares no set hierarchy") {
        ProtocolRequest req;
        req.verb = "ListSets";
        ProtocolResponse res = handle_request(req, *source, config);
        CHECK(res.error_code == "noSetHierarchy");
    }
    SUBCASE("the aggregate answers Query") {
        ProtocolRequest req;
        req.verb = "Query";
        req.arguments = {{"elements", "1"}, {"sql", "e1.tag != 'nonexistent-tag'"}};
        ProtocolResponse res = handle_request(req, *source, config);
        REQUIRE(res.error_code.empty());
        xml::Element root = xml::parse(res.body);
        auto records = root.find_child("ListRecords")->children_named("record");
        CHECK(records.size() == 7);
    }
    SUBCASE("the snapshot is immutable while new harvests land") {
        RepositoryDocument changed = world.doc("alpha");
        changed = delete_record(changed, "rec1", ts("2026-02-01T00:00:00Z")).repo;
        world.replace("alpha", changed);
        world.clock.advance_seconds(3600);
        agg.harvest("alpha", HarvestMode::incremental);

        // The old snapshot still sees the record alive; a new one does not.
        ProtocolRequest req;
        req.verb = "GetRecord";
        req.arguments = {{"identifier", "oai:alpha:rec1"}, {"metadataPrefix", "olac"}};
        ProtocolResponse before = handle_request(req, *source, config);
        CHECK(before.error_code.empty());
        CHECK(before.body.find("status=\"deleted\"") == std::string::npos);

        ProtocolResponse after = handle_request(req, *agg.aggregate_source(), config);
        CHECK(after.body.find("status=\"deleted\"") != std::string::npos);
    }
}

TEST_CASE("archive partitions on disk are valid repository documents") {
    World world;
    world.publish("alpha", sample_repo(7290, "alpha", 5));
    std::string data_dir = world.fresh_data_dir();
    Aggregator agg = world.make(data_dir);
    agg.register_provider(World::base("alpha"));
    agg.harvest("alpha", HarvestMode::full);

    std::ifstream in(data_dir + "/archives/alpha.xml");
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    RepositoryDocument partition = parse_repository(buffer.str());
    CHECK(partition.repository_id == "alpha");
    CHECK(partition.records.size() == 5);
    CHECK(partition.description == world.doc("alpha").description);
}
