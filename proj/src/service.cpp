#include "olac/service.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <httplib.h>

namespace olac {

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    long elapsed_ms() const {
        return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - start)
                                     .count());
    }
};

std::string request_target(const httplib::Request& req) {
    if (req.params.empty())
        return req.path;
    std::string query;
    for (const auto& [name, value] : req.params) {
        query += query.empty() ? '?' : '&';
        query += url_encode(name) + "=" + url_encode(value);
    }
    return req.path + query;
}

void log_request(const ServiceOptions& options, const httplib::Request& req, int status,
                 const Timer& timer) {
    if (!options.log)
        return;
    options.log(UtcTimestamp::now().to_string() + " " + req.method + " " + request_target(req) +
                " " + std::to_string(status) + " " + std::to_string(timer.elapsed_ms()) + "ms");
}

// Exactly one verb parameter is the transport-level precondition; the
// rest of the argument checking happens inside handle_request.
ProtocolRequest request_from_params(const httplib::Params& params, bool& verb_ok) {
    ProtocolRequest out;
    verb_ok = params.count("verb") == 1;
    for (const auto& [name, value] : params) {
        if (name == "verb") {
            out.verb = value;
            continue;
        }
        out.arguments.emplace_back(name, value);
    }
    return out;
}

void respond(httplib::Response& res, const ProtocolResponse& pr) {
    res.status = pr.http_status;
    res.set_content(pr.body, "text/xml; charset=utf-8");
}

ProviderConfig provider_config_from(const ServiceOptions& options) {
    ProviderConfig config;
    if (!options.base_url.empty())
        config.base_url = options.base_url;
    config.page_size = options.page_size;
    config.token_expiry_hours = options.token_expiry_hours;
    config.profile = options.profile;
    return config;
}

} // namespace

FetchResult HttpFetcher::fetch(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        return FetchResult{0, "", "URL '" + url + "' has no scheme"};
    std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        return FetchResult{0, "", "unsupported URL scheme '" + scheme + "'"};
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https")
        return FetchResult{0, "", "this build fetches plain http only"};
#endif
    size_t host_start = scheme_end + 3;
    size_t path_start = url.find('/', host_start);
    std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    httplib::Result res = client.Get(path);
    if (!res)
        return FetchResult{0, "", httplib::to_string(res.error())};
    return FetchResult{res->status, res->body, ""};
}

struct Service::Impl {
    httplib::Server server;
    ServiceOptions options;
};

Service::Service() : impl_(std::make_unique<Impl>()) {}
Service::~Service() = default;

void Service::mount_vida(std::shared_ptr<VidaGateway> gateway, ServiceOptions options) {
    impl_->options = std::move(options);
    auto handler = [this, gateway](const httplib::Request& req, httplib::Response& res) {
        Timer timer;
        ProviderConfig config = provider_config_from(impl_->options);
        bool verb_ok = false;
        ProtocolRequest preq = request_from_params(req.params, verb_ok);
        ProtocolResponse pr;
        if (!verb_ok) {
            pr = make_error_response(preq, config, "badVerb",
                                     "the request must carry exactly one verb");
        } else {
            std::string suffix = req.path;
            try {
                std::shared_ptr<RepositorySource> source = gateway->resolve(suffix);
                pr = handle_request(preq, *source, config);
            } catch (const VidaError& err) {
                pr = make_error_response(preq, config, err.code, err.what(), err.http_status);
            }
        }
        respond(res, pr);
        log_request(impl_->options, req, pr.http_status, timer);
    };
    impl_->server.Get(R"(/.*)", handler);
    impl_->server.Post(R"(/.*)", handler);
}

void Service::mount_provider(std::shared_ptr<const RepositoryDocument> document,
                             ServiceOptions options) {
    impl_->options = std::move(options);
    auto handler = [this, document](const httplib::Request& req, httplib::Response& res) {
        Timer timer;
        ProviderConfig config = provider_config_from(impl_->options);
        bool verb_ok = false;
        ProtocolRequest preq = request_from_params(req.params, verb_ok);
        ProtocolResponse pr;
        if (!verb_ok) {
            pr = make_error_response(preq, config, "badVerb",
                                     "the request must carry exactly one verb");
        } else {
            OryxSource source(document);
            pr = handle_request(preq, source, config);
        }
        respond(res, pr);
        log_request(impl_->options, req, pr.http_status, timer);
    };
    impl_->server.Get(R"(/.*)", handler);
    impl_->server.Post(R"(/.*)", handler);
}

void Service::mount_aggregator(std::shared_ptr<Aggregator> aggregator, ServiceOptions options) {
    impl_->options = std::move(options);
    auto handler = [this, aggregator](const httplib::Request& req, httplib::Response& res) {
        Timer timer;
        ProviderConfig config = provider_config_from(impl_->options);
        bool verb_ok = false;
        ProtocolRequest preq = request_from_params(req.params, verb_ok);
        ProtocolResponse pr;
        if (!verb_ok) {
            pr = make_error_response(preq, config, "badVerb",
                                     "the request must carry exactly one verb");
        } else {
            std::shared_ptr<RepositorySource> source = aggregator->aggregate_source();
            pr = handle_request(preq, *source, config);
        }
        respond(res, pr);
        log_request(impl_->options, req, pr.http_status, timer);
    };
    impl_->server.Get(R"(/.*)", handler);
    impl_->server.Post(R"(/.*)", handler);
}

void Service::mount_viser(std::shared_ptr<QueryClient> client,
                          std::shared_ptr<Fetcher> template_fetcher, ViserConfig viser,
                          ServiceOptions options) {
    impl_->options = std::move(options);

    auto listing_handler = [this, client, template_fetcher,
                            viser](const httplib::Request& req, httplib::Response& res) {
        Timer timer;
        ViserRequest vreq;
        if (req.has_param("title"))
            vreq.title = req.get_param_value("title");
        if (req.has_param("sql"))
            vreq.sql = req.get_param_value("sql");
        if (req.has_param("elements")) {
            try {
                vreq.elements = std::stoi(req.get_param_value("elements"));
            } catch (const std::exception&) {
                vreq.elements = 0; // rejected downstream as badArgument
            }
        }
        if (req.has_param("resumptionToken"))
            vreq.resumption_token = req.get_param_value("resumptionToken");
        if (req.has_param("template")) {
            std::string source = req.get_param_value("template");
            if (source.find("://") != std::string::npos) {
                FetchResult fetched = template_fetcher->fetch(source);
                if (fetched.ok())
                    vreq.template_text = fetched.body;
                else
                    vreq.template_fetch_error =
                        source + ": " +
                        (fetched.status == 0 ? fetched.error
                                             : "HTTP status " + std::to_string(fetched.status));
            } else {
                std::ifstream in(source);
                if (in) {
                    std::stringstream buffer;
                    buffer << in.rdbuf();
                    vreq.template_text = buffer.str();
                } else {
                    vreq.template_fetch_error = source + ": cannot read file";
                }
            }
        }
        HtmlPage page = render_listing(vreq, *client, viser);
        res.status = page.http_status;
        res.set_content(page.body, "text/html; charset=utf-8");
        log_request(impl_->options, req, page.http_status, timer);
    };

    std::string record_pattern = viser.record_path + "(.*)";
    auto record_handler = [this, client, viser](const httplib::Request& req,
                                                httplib::Response& res) {
        Timer timer;
        std::string identifier = req.matches.size() > 1 ? std::string(req.matches[1]) : "";
        HtmlPage page = render_record_page(identifier, *client, viser);
        res.status = page.http_status;
        res.set_content(page.body, "text/html; charset=utf-8");
        log_request(impl_->options, req, page.http_status, timer);
    };

    impl_->server.Get(viser.listing_path, listing_handler);
    impl_->server.Get(record_pattern, record_handler);
}

bool Service::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int Service::bind(const std::string& host, int port) {
    if (port == 0)
        return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen_after_bind() {
    return impl_->server.listen_after_bind();
}

void Service::stop() {
    impl_->server.stop();
}

bool split_listen_address(const std::string& address, std::string& host, int& port) {
    std::string host_part = "127.0.0.1";
    std::string port_part = address;
    size_t colon = address.rfind(':');
    if (colon != std::string::npos) {
        if (colon > 0)
            host_part = address.substr(0, colon);
        port_part = address.substr(colon + 1);
    }
    if (port_part.empty())
        return false;
    try {
        size_t pos = 0;
        int value = std::stoi(port_part, &pos);
        if (pos != port_part.size() || value < 0 || value > 65535)
            return false;
        port = value;
    } catch (const std::exception&) {
        return false;
    }
    host = host_part;
    return true;
}

} // namespace olac
