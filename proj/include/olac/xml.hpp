// Minimal XML document model used by every file format in this toolkit.
// Covers the subset the formats need: elements, attributes (order
// preserved), character data, comments, CDATA, the five named entities
// and numeric character references. No DTDs, no processing instructions.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace olac::xml {

struct ParseError : std::runtime_error {
    ParseError(const std::string& message, int line, int column)
        : std::runtime_error(message + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line(line), column(column) {}
    int line;
    int column;
};

struct Text {
    std::string data;
    bool operator==(const Text&) const = default;
};

class Element {
public:
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<std::variant<Element, Text>> children;

    Element() = default;
    explicit Element(std::string element_name) : name(std::move(element_name)) {}

    bool operator==(const Element&) const = default;

    // Attribute value, or nullptr when absent.
    const std::string* attribute(std::string_view attr_name) const;
    void set_attribute(std::string name, std::string value);

    Element& add_child(Element child);
    void add_text(std::string data);

    // First child element with the given name, or nullptr.
    const Element* find_child(std::string_view child_name) const;
    std::vector<const Element*> children_named(std::string_view child_name) const;
    std::vector<const Element*> child_elements() const;

    // Concatenated character data of all Text children.
    std::string text() const;
};

// Parses a complete document and returns its root element.
// Throws ParseError with 1-based line/column on malformed input.
Element parse(std::string_view doc);

// Serializes a document with a fixed layout: two-space indents, elements
// holding only character data stay on one line. Output is deterministic
// for a given tree and reparses to the same tree.
std::string serialize(const Element& root);

std::string escape_text(std::string_view raw);
std::string escape_attribute(std::string_view raw);

} // namespace olac::xml
