#include "olac/viser.hpp"

#include <map>

#include "olac/crosswalk.hpp"

namespace olac {

namespace {

using VarMap = std::map<std::string, std::string, std::less<>>;

HtmlPage simple_page(int status, const std::string& title, const std::string& css_class,
                     const std::string& message, const std::string& identifier = "") {
    std::string out = "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>";
    out += html_escape(title);
    out += "</title></head>\n<body";
    if (!identifier.empty())
        out += " data-identifier=\"" + html_escape(identifier) + "\"";
    out += ">\n<h1>";
    out += html_escape(title);
    out += "</h1>\n<p class=\"" + css_class + "\">";
    out += html_escape(message);
    out += "</p>\n</body>\n</html>\n";
    return HtmlPage{out, status};
}

// --- template expansion ---------------------------------------------------

std::string expand(std::string_view text, const VarMap& vars, const ListingPage& page, bool top_level);

std::string expand_section(std::string_view name, std::string_view inner, const VarMap& vars,
                           const ListingPage& page) {
    std::string out;
    if (name == "items") {
        for (const ListingItem& item : page.items) {
            VarMap item_vars = vars;
            item_vars["display_title"] = item.display_title;
            item_vars["archive_name"] = item.archive_name;
            item_vars["record_identifier"] = item.record_identifier;
            item_vars["link"] = item.link;
            out += expand(inner, item_vars, page, false);
        }
        return out;
    }
    if (name == "more") {
        if (page.more_link) {
            VarMap more_vars = vars;
            more_vars["more_link"] = *page.more_link;
            out += expand(inner, more_vars, page, false);
        }
        return out;
    }
    if (name == "empty") {
        if (page.items.empty())
            out += expand(inner, vars, page, false);
        return out;
    }
    throw TemplateError("unknown template section '" + std::string(name) + "'");
}

std::string expand(std::string_view text, const VarMap& vars, const ListingPage& page,
                   bool top_level) {
    std::string out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out += text.substr(pos);
            break;
        }
        out += text.substr(pos, open - pos);
        size_t close = text.find("}}", open + 2);
        if (close == std::string_view::npos)
            throw TemplateError("unterminated placeholder");
        std::string_view name = text.substr(open + 2, close - open - 2);
        if (name.empty())
            throw TemplateError("empty placeholder");
        if (name.front() == '#') {
            name.remove_prefix(1);
            if (!top_level)
                throw TemplateError("section '" + std::string(name) + "' may not nest");
            std::string closing = "{{/" + std::string(name) + "}}";
            size_t end = text.find(closing, close + 2);
            if (end == std::string_view::npos)
                throw TemplateError("section '" + std::string(name) + "' is not closed");
            out += expand_section(name, text.substr(close + 2, end - close - 2), vars, page);
            pos = end + closing.size();
            continue;
        }
        if (name.front() == '/')
            throw TemplateError("stray section close '" + std::string(name.substr(1)) + "'");
        auto it = vars.find(name);
        if (it == vars.end())
            throw TemplateError("unknown placeholder '" + std::string(name) + "'");
        out += html_escape(it->second);
        pos = close + 2;
    }
    return out;
}

std::string capitalized(std::string word) {
    if (!word.empty() && word.front() >= 'a' && word.front() <= 'z')
        word.front() = static_cast<char>(word.front() - 'a' + 'A');
    return word;
}

const std::string* vocabulary_label(const QualifiedElement& el, const ApplicationProfile* profile) {
    if (!profile || !el.refinement_type || el.code.empty())
        return nullptr;
    const ControlledVocabulary* vocab = profile->vocabulary_for(*el.refinement_type);
    return vocab ? vocab->label(el.code) : nullptr;
}

std::string display_title_for(const SourceRecord& rec, const ApplicationProfile* profile) {
    if (rec.metadata) {
        for (const QualifiedElement& el : rec.metadata->elements)
            if (el.tag == "title" && !el.content.empty())
                return el.content;
        if (profile) {
            SimpleDCRecord dumb = dumbdown_record(*rec.metadata, *profile);
            for (const auto& [tag, text] : dumb.elements)
                if (tag == "title")
                    return text;
        }
    }
    return rec.identifier;
}

} // namespace

std::string html_escape(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c;
        }
    }
    return out;
}

const std::string& default_listing_template() {
    static const std::string tmpl = R"(<!DOCTYPE html>
<html>
<head><meta charset="utf-8"><title>{{title}}</title></head>
<body>
<h1>{{title}}</h1>
<ul class="results">
{{#items}}<li><a href="{{link}}">{{display_title}}</a> <span class="archive">{{archive_name}}</span></li>
{{/items}}</ul>
{{#empty}}<p class="empty">No resources matched this query.</p>
{{/empty}}{{#more}}<p class="more"><a href="{{more_link}}">More resources ...</a></p>
{{/more}}</body>
</html>
)";
    return tmpl;
}

std::string apply_template(const std::string& template_text, const ListingPage& page) {
    if (template_text.find("{{#items}}") == std::string::npos)
        throw TemplateError("template lacks the {{#items}} loop");
    VarMap vars;
    vars["title"] = page.title;
    return expand(template_text, vars, page, true);
}

std::string HttpQueryClient::request(const ProtocolRequest& req) {
    std::string query = "verb=" + url_encode(req.verb);
    for (const auto& [name, value] : req.arguments)
        query += "&" + url_encode(name) + "=" + url_encode(value);
    std::string url =
        base_url_ + (base_url_.find('?') == std::string::npos ? "?" : "&") + query;
    FetchResult result = fetcher_->fetch(url);
    if (!result.ok()) {
        std::string detail = result.status == 0 ? result.error
                                                : "HTTP status " + std::to_string(result.status);
        throw Error("aggregator at " + base_url_ + " is unreachable: " + detail);
    }
    return result.body;
}

HtmlPage render_listing(const ViserRequest& req, QueryClient& client, const ViserConfig& config) {
    std::string title = req.title.empty() ? config.default_title : req.title;

    ProtocolRequest preq;
    preq.verb = "Query";
    if (req.resumption_token) {
        preq.arguments.emplace_back("resumptionToken", *req.resumption_token);
    } else if (req.sql && req.elements) {
        preq.arguments.emplace_back("sql", *req.sql);
        preq.arguments.emplace_back("elements", std::to_string(*req.elements));
    } else {
        return simple_page(400, title, "error",
                           "the request needs sql and elements, or a resumptionToken");
    }

    std::string body;
    try {
        body = client.request(preq);
    } catch (const std::exception& err) {
        return simple_page(502, title, "error", err.what());
    }
    ParsedList list;
    try {
        list = parse_list_response(body);
    } catch (const std::exception& err) {
        return simple_page(502, title, "error",
                           std::string("the aggregator answered with an unparseable response: ") +
                               err.what());
    }
    if (!list.error_code.empty() && list.error_code != "noRecordsMatch")
        return simple_page(400, title, "error", list.error_code + ": " + list.error_message);

    ListingPage page;
    page.title = title;
    for (const SourceRecord& rec : list.records) {
        ListingItem item;
        item.display_title = display_title_for(rec, config.profile.get());
        if (rec.provenance)
            item.archive_name = rec.provenance->archive_name;
        item.record_identifier = rec.identifier;
        item.link = config.record_path + url_encode(rec.identifier);
        page.items.push_back(std::move(item));
    }
    if (!list.resumption_token.empty()) {
        std::string more = config.listing_path + "?resumptionToken=" + url_encode(list.resumption_token);
        if (!req.title.empty())
            more += "&title=" + url_encode(req.title);
        page.more_link = more;
    }

    std::string warning;
    std::string html;
    if (!req.template_fetch_error.empty()) {
        warning = "custom template unavailable: " + req.template_fetch_error;
    } else if (req.template_text) {
        try {
            html = apply_template(*req.template_text, page);
        } catch (const TemplateError& err) {
            warning = std::string("custom template rejected: ") + err.what();
        }
    }
    if (html.empty())
        html = apply_template(default_listing_template(), page);
    if (!warning.empty())
        html += "<!-- template warning: " + html_escape(warning) + " -->\n";
    return HtmlPage{html, 200};
}

HtmlPage render_record_page(const std::string& identifier, QueryClient& client,
                            const ViserConfig& config) {
    ProtocolRequest preq;
    preq.verb = "GetRecord";
    preq.arguments.emplace_back("identifier", identifier);
    preq.arguments.emplace_back("metadataPrefix", "olac");

    std::string body;
    try {
        body = client.request(preq);
    } catch (const std::exception& err) {
        return simple_page(502, identifier, "error", err.what());
    }
    ParsedList parsed;
    try {
        parsed = parse_list_response(body);
    } catch (const std::exception& err) {
        return simple_page(502, identifier, "error",
                           std::string("the aggregator answered with an unparseable response: ") +
                               err.what());
    }
    if (!parsed.error_code.empty() || parsed.records.empty())
        return simple_page(404, "Record not found",
                           "error", "no record with identifier " + identifier);

    const SourceRecord& rec = parsed.records.front();
    if (rec.deleted)
        return simple_page(200, "Record withdrawn", "withdrawn",
                           "This record was withdrawn by its archive.", rec.identifier);

    const ApplicationProfile* profile = config.profile.get();
    std::string title = display_title_for(rec, profile);

    std::string out = "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>";
    out += html_escape(title);
    out += "</title></head>\n<body>\n<h1>";
    out += html_escape(title);
    out += "</h1>\n<dl class=\"record\" data-identifier=\"" + html_escape(rec.identifier) + "\">\n";
    if (rec.metadata) {
        for (const QualifiedElement& el : rec.metadata->elements) {
            const std::string* label = vocabulary_label(el, profile);
            std::string value = !el.content.empty() ? el.content
                                : label              ? *label
                                                     : el.code;
            if (value.empty())
                continue;
            std::string field = capitalized(el.tag);
            if (label)
                field += " (" + *label + ")";
            out += "<dt>" + html_escape(field) + "</dt><dd>" + html_escape(value) + "</dd>\n";
        }
    }
    out += "</dl>\n";
    if (rec.provenance && !rec.provenance->archive_name.empty()) {
        out += "<p class=\"archive\">Held by <a href=\"" + html_escape(rec.provenance->base_url) +
               "\">" + html_escape(rec.provenance->archive_name) + "</a></p>\n";
    }
    out += "</body>\n</html>\n";
    return HtmlPage{out, 200};
}

} // namespace olac
