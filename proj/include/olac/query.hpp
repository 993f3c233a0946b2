// The Query verb's selection language: boolean combinations of
// comparisons over element aliases e1..eN, in SQL WHERE-clause syntax.
// A record matches when some assignment of its element quads to the
// aliases satisfies the expression.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "olac/model.hpp"

namespace olac::query {

struct SyntaxError : Error {
    SyntaxError(const std::string& message, size_t position)
        : Error(message + " at position " + std::to_string(position)), position(position) {}
    size_t position; // 1-based character offset into the expression
};

enum class Op { eq, ne, like };
enum class Field { tag, content, type, code };

struct Comparison {
    int alias = 1; // 1-based, as written (e1, e2, ...)
    Field field = Field::tag;
    Op op = Op::eq;
    std::string literal;

    bool operator==(const Comparison&) const = default;
};

struct Node {
    enum class Kind { conjunction, disjunction, negation, comparison };
    Kind kind = Kind::comparison;
    std::vector<Node> children; // conjunction/disjunction: >=2, negation: 1
    Comparison cmp;

    bool operator==(const Node& other) const;
};

struct Expr {
    int elements = 1; // the declared alias count N
    Node root;

    bool operator==(const Expr&) const = default;
};

// Parses a WHERE-clause expression. Keywords, field names, and alias
// prefixes are case-insensitive; literals are single-quoted with ''
// escaping a quote. Alias indices above `elements` are rejected.
Expr parse(std::string_view sql, int elements);

// Canonical rendering; parse(to_string(e), e.elements) == e.
std::string to_string(const Expr& expr);

// Exists-assignment semantics over the record's quads. '=' and '!='
// compare exactly; LIKE is case-insensitive with % and _ wildcards.
bool matches(const Expr& expr, std::span<const ElementQuad> quads);

bool like_match(std::string_view text, std::string_view pattern);

} // namespace olac::query
