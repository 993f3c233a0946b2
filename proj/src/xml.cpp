#include "olac/xml.hpp"

#include <cctype>

namespace olac::xml {

namespace {

bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':';
}

bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

bool whitespace_only(const std::string& s) {
    for (char c : s)
        if (!is_ws(c))
            return false;
    return true;
}

class Parser {
public:
    explicit Parser(std::string_view doc) : doc_(doc) {}

    Element parse_document() {
        skip_prolog();
        Element root = parse_element();
        skip_misc();
        if (pos_ != doc_.size())
            fail("content after document root");
        return root;
    }

private:
    std::string_view doc_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, line_, col_);
    }

    bool eof() const { return pos_ >= doc_.size(); }

    char peek() const {
        if (eof())
            fail("unexpected end of input");
        return doc_[pos_];
    }

    char advance() {
        char c = peek();
        ++pos_;
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    bool starts_with(std::string_view prefix) const {
        return doc_.substr(pos_, prefix.size()) == prefix;
    }

    void expect(std::string_view token) {
        if (!starts_with(token))
            fail("expected '" + std::string(token) + "'");
        for (size_t i = 0; i < token.size(); ++i)
            advance();
    }

    void skip_ws() {
        while (!eof() && is_ws(doc_[pos_]))
            advance();
    }

    void skip_comment() {
        expect("<!--");
        while (!starts_with("-->")) {
            if (eof())
                fail("unterminated comment");
            advance();
        }
        expect("-->");
    }

    void skip_prolog() {
        skip_ws();
        if (starts_with("<?xml")) {
            while (!starts_with("?>")) {
                if (eof())
                    fail("unterminated XML declaration");
                advance();
            }
            expect("?>");
        }
        skip_misc();
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--"))
                skip_comment();
            else
                break;
        }
    }

    std::string parse_name() {
        if (eof() || !is_name_start(peek()))
            fail("expected a name");
        std::string name;
        name.push_back(advance());
        while (!eof() && is_name_char(doc_[pos_]))
            name.push_back(advance());
        return name;
    }

    std::string parse_reference() {
        expect("&");
        std::string entity;
        while (!eof() && peek() != ';') {
            entity.push_back(advance());
            if (entity.size() > 8)
                fail("malformed entity reference");
        }
        expect(";");
        if (entity == "amp") return "&";
        if (entity == "lt") return "<";
        if (entity == "gt") return ">";
        if (entity == "quot") return "\"";
        if (entity == "apos") return "'";
        if (!entity.empty() && entity[0] == '#') {
            int base = 10;
            size_t digits = 1;
            if (entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X')) {
                base = 16;
                digits = 2;
            }
            if (entity.size() == digits)
                fail("malformed character reference");
            unsigned long code = 0;
            for (size_t i = digits; i < entity.size(); ++i) {
                char c = entity[i];
                int v;
                if (c >= '0' && c <= '9') v = c - '0';
                else if (base == 16 && c >= 'a' && c <= 'f') v = c - 'a' + 10;
                else if (base == 16 && c >= 'A' && c <= 'F') v = c - 'A' + 10;
                else fail("malformed character reference");
                code = code * base + static_cast<unsigned long>(v);
                if (code > 0x10FFFF)
                    fail("character reference out of range");
            }
            return encode_utf8(code);
        }
        fail("unknown entity '&" + entity + ";'");
    }

    static std::string encode_utf8(unsigned long code) {
        std::string out;
        if (code < 0x80) {
            out.push_back(static_cast<char>(code));
        } else if (code < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (code >> 6)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (code >> 12)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (code >> 18)));
            out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        }
        return out;
    }

    std::string parse_attribute_value() {
        char quote = peek();
        if (quote != '"' && quote != '\'')
            fail("expected quoted attribute value");
        advance();
        std::string value;
        while (peek() != quote) {
            char c = peek();
            if (c == '<')
                fail("'<' in attribute value");
            if (c == '&')
                value += parse_reference();
            else
                value.push_back(advance());
        }
        advance();
        return value;
    }

    Element parse_element() {
        expect("<");
        Element el(parse_name());
        for (;;) {
            bool had_ws = !eof() && is_ws(doc_[pos_]);
            skip_ws();
            if (starts_with("/>")) {
                expect("/>");
                return el;
            }
            if (starts_with(">")) {
                expect(">");
                break;
            }
            if (!had_ws)
                fail("expected whitespace before attribute");
            std::string attr_name = parse_name();
            if (el.attribute(attr_name) != nullptr)
                fail("duplicate attribute '" + attr_name + "'");
            skip_ws();
            expect("=");
            skip_ws();
            el.attributes.emplace_back(std::move(attr_name), parse_attribute_value());
        }
        parse_content(el);
        return el;
    }

    void parse_content(Element& el) {
        std::string text;
        auto flush_text = [&] {
            if (!text.empty()) {
                el.children.emplace_back(Text{std::move(text)});
                text.clear();
            }
        };
        for (;;) {
            if (eof())
                fail("unterminated element '" + el.name + "'");
            if (starts_with("</")) {
                flush_text();
                expect("</");
                std::string close = parse_name();
                if (close != el.name)
                    fail("mismatched closing tag '" + close + "' for '" + el.name + "'");
                skip_ws();
                expect(">");
                break;
            }
            if (starts_with("<!--")) {
                skip_comment();
                continue;
            }
            if (starts_with("<![CDATA[")) {
                expect("<![CDATA[");
                while (!starts_with("]]>")) {
                    if (eof())
                        fail("unterminated CDATA section");
                    text.push_back(advance());
                }
                expect("]]>");
                continue;
            }
            if (starts_with("<!") || starts_with("<?"))
                fail("unsupported markup");
            if (peek() == '<') {
                flush_text();
                el.children.emplace_back(parse_element());
                continue;
            }
            if (peek() == '&') {
                text += parse_reference();
                continue;
            }
            text.push_back(advance());
        }
        // Indentation between child elements is layout, not data.
        bool has_element_child = false;
        for (const auto& child : el.children)
            if (std::holds_alternative<Element>(child))
                has_element_child = true;
        if (has_element_child) {
            std::vector<std::variant<Element, Text>> kept;
            kept.reserve(el.children.size());
            for (auto& child : el.children) {
                if (const Text* t = std::get_if<Text>(&child); t && whitespace_only(t->data))
                    continue;
                kept.push_back(std::move(child));
            }
            el.children = std::move(kept);
        }
    }
};

void write_element(const Element& el, std::string& out, int depth) {
    std::string indent(static_cast<size_t>(depth) * 2, ' ');
    out += indent;
    out += '<';
    out += el.name;
    for (const auto& [name, value] : el.attributes) {
        out += ' ';
        out += name;
        out += "=\"";
        out += escape_attribute(value);
        out += '"';
    }
    if (el.children.empty()) {
        out += "/>\n";
        return;
    }
    bool has_element_child = false;
    for (const auto& child : el.children)
        if (std::holds_alternative<Element>(child))
            has_element_child = true;
    out += '>';
    if (!has_element_child) {
        for (const auto& child : el.children)
            out += escape_text(std::get<Text>(child).data);
        out += "</";
        out += el.name;
        out += ">\n";
        return;
    }
    out += '\n';
    for (const auto& child : el.children) {
        if (const Element* e = std::get_if<Element>(&child))
            write_element(*e, out, depth + 1);
        else
            out += escape_text(std::get<Text>(child).data);
    }
    out += indent;
    out += "</";
    out += el.name;
    out += ">\n";
}

} // namespace

const std::string* Element::attribute(std::string_view attr_name) const {
    for (const auto& [name, value] : attributes)
        if (name == attr_name)
            return &value;
    return nullptr;
}

void Element::set_attribute(std::string name, std::string value) {
    for (auto& [existing, v] : attributes) {
        if (existing == name) {
            v = std::move(value);
            return;
        }
    }
    attributes.emplace_back(std::move(name), std::move(value));
}

Element& Element::add_child(Element child) {
    children.emplace_back(std::move(child));
    return std::get<Element>(children.back());
}

void Element::add_text(std::string data) {
    if (!data.empty())
        children.emplace_back(Text{std::move(data)});
}

const Element* Element::find_child(std::string_view child_name) const {
    for (const auto& child : children)
        if (const Element* e = std::get_if<Element>(&child); e && e->name == child_name)
            return e;
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
    std::vector<const Element*> out;
    for (const auto& child : children)
        if (const Element* e = std::get_if<Element>(&child); e && e->name == child_name)
            out.push_back(e);
    return out;
}

std::vector<const Element*> Element::child_elements() const {
    std::vector<const Element*> out;
    for (const auto& child : children)
        if (const Element* e = std::get_if<Element>(&child))
            out.push_back(e);
    return out;
}

std::string Element::text() const {
    std::string out;
    for (const auto& child : children)
        if (const Text* t = std::get_if<Text>(&child))
            out += t->data;
    return out;
}

Element parse(std::string_view doc) {
    return Parser(doc).parse_document();
}

std::string serialize(const Element& root) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    write_element(root, out, 0);
    return out;
}

std::string escape_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string escape_attribute(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\n': out += "&#10;"; break;
        case '\r': out += "&#13;"; break;
        case '\t': out += "&#9;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace olac::xml
