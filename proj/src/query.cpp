#include "olac/query.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

namespace olac::query {

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

char lower_char(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

struct Token {
    enum class Kind { word, string, op_eq, op_ne, lparen, rparen, end };
    Kind kind;
    std::string text;
    size_t position; // 1-based offset of the first character
};

class Lexer {
public:
    explicit Lexer(std::string_view sql) : sql_(sql) { advance(); }

    const Token& current() const { return token_; }

    void advance() {
        while (pos_ < sql_.size() && std::isspace(static_cast<unsigned char>(sql_[pos_])))
            ++pos_;
        size_t start = pos_ + 1;
        if (pos_ >= sql_.size()) {
            token_ = {Token::Kind::end, "", start};
            return;
        }
        char c = sql_[pos_];
        if (c == '(') {
            ++pos_;
            token_ = {Token::Kind::lparen, "(", start};
        } else if (c == ')') {
            ++pos_;
            token_ = {Token::Kind::rparen, ")", start};
        } else if (c == '=') {
            ++pos_;
            token_ = {Token::Kind::op_eq, "=", start};
        } else if (c == '!') {
            if (pos_ + 1 >= sql_.size() || sql_[pos_ + 1] != '=')
                throw SyntaxError("expected '!='", start);
            pos_ += 2;
            token_ = {Token::Kind::op_ne, "!=", start};
        } else if (c == '<') {
            if (pos_ + 1 >= sql_.size() || sql_[pos_ + 1] != '>')
                throw SyntaxError("expected '<>'", start);
            pos_ += 2;
            token_ = {Token::Kind::op_ne, "<>", start};
        } else if (c == '\'') {
            ++pos_;
            std::string value;
            for (;;) {
                if (pos_ >= sql_.size())
                    throw SyntaxError("unterminated string literal", start);
                if (sql_[pos_] == '\'') {
                    if (pos_ + 1 < sql_.size() && sql_[pos_ + 1] == '\'') {
                        value.push_back('\'');
                        pos_ += 2;
                        continue;
                    }
                    ++pos_;
                    break;
                }
                value.push_back(sql_[pos_++]);
            }
            token_ = {Token::Kind::string, std::move(value), start};
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (pos_ < sql_.size()) {
                char w = sql_[pos_];
                if (std::isalnum(static_cast<unsigned char>(w)) || w == '_' || w == '.')
                    word.push_back(sql_[pos_++]);
                else
                    break;
            }
            token_ = {Token::Kind::word, std::move(word), start};
        } else {
            throw SyntaxError(std::string("unexpected character '") + c + "'", start);
        }
    }

private:
    std::string_view sql_;
    size_t pos_ = 0;
    Token token_{Token::Kind::end, "", 1};
};

class Parser {
public:
    Parser(std::string_view sql, int elements) : lexer_(sql), elements_(elements) {}

    Node parse_expression() {
        Node node = parse_or();
        if (lexer_.current().kind != Token::Kind::end)
            throw SyntaxError("unexpected trailing input '" + lexer_.current().text + "'",
                              lexer_.current().position);
        return node;
    }

private:
    Lexer lexer_;
    int elements_;

    bool at_keyword(const char* keyword) const {
        return lexer_.current().kind == Token::Kind::word && upper(lexer_.current().text) == keyword;
    }

    Node parse_or() {
        std::vector<Node> children;
        children.push_back(parse_and());
        while (at_keyword("OR")) {
            lexer_.advance();
            children.push_back(parse_and());
        }
        if (children.size() == 1)
            return std::move(children.front());
        Node node;
        node.kind = Node::Kind::disjunction;
        node.children = std::move(children);
        return node;
    }

    Node parse_and() {
        std::vector<Node> children;
        children.push_back(parse_unary());
        while (at_keyword("AND")) {
            lexer_.advance();
            children.push_back(parse_unary());
        }
        if (children.size() == 1)
            return std::move(children.front());
        Node node;
        node.kind = Node::Kind::conjunction;
        node.children = std::move(children);
        return node;
    }

    Node parse_unary() {
        if (at_keyword("NOT")) {
            lexer_.advance();
            Node node;
            node.kind = Node::Kind::negation;
            node.children.push_back(parse_unary());
            return node;
        }
        if (lexer_.current().kind == Token::Kind::lparen) {
            lexer_.advance();
            Node node = parse_or();
            if (lexer_.current().kind != Token::Kind::rparen)
                throw SyntaxError("expected ')'", lexer_.current().position);
            lexer_.advance();
            return node;
        }
        return parse_comparison();
    }

    Node parse_comparison() {
        const Token& token = lexer_.current();
        if (token.kind != Token::Kind::word)
            throw SyntaxError("expected an element reference like e1.code", token.position);
        Comparison cmp;
        parse_alias_field(token, cmp);
        lexer_.advance();

        const Token& op = lexer_.current();
        if (op.kind == Token::Kind::op_eq)
            cmp.op = Op::eq;
        else if (op.kind == Token::Kind::op_ne)
            cmp.op = Op::ne;
        else if (at_keyword("LIKE"))
            cmp.op = Op::like;
        else
            throw SyntaxError("expected '=', '!=' or LIKE", op.position);
        lexer_.advance();

        const Token& literal = lexer_.current();
        if (literal.kind != Token::Kind::string)
            throw SyntaxError("expected a quoted string literal", literal.position);
        cmp.literal = literal.text;
        lexer_.advance();

        Node node;
        node.kind = Node::Kind::comparison;
        node.cmp = std::move(cmp);
        return node;
    }

    void parse_alias_field(const Token& token, Comparison& cmp) {
        auto dot = token.text.find('.');
        if (dot == std::string::npos)
            throw SyntaxError("expected alias.field, got '" + token.text + "'", token.position);
        std::string alias = token.text.substr(0, dot);
        std::string field = token.text.substr(dot + 1);

        if (alias.size() < 2 || (alias[0] != 'e' && alias[0] != 'E'))
            throw SyntaxError("malformed element alias '" + alias + "'", token.position);
        int index = 0;
        for (size_t i = 1; i < alias.size(); ++i) {
            char c = alias[i];
            if (c < '0' || c > '9')
                throw SyntaxError("malformed element alias '" + alias + "'", token.position);
            index = index * 10 + (c - '0');
            if (index > 1000000)
                throw SyntaxError("element alias out of range", token.position);
        }
        if (index < 1 || index > elements_)
            throw SyntaxError("element alias '" + alias + "' exceeds elements=" + std::to_string(elements_),
                              token.position);
        cmp.alias = index;

        std::string f = upper(field);
        if (f == "TAG") cmp.field = Field::tag;
        else if (f == "CONTENT") cmp.field = Field::content;
        else if (f == "TYPE") cmp.field = Field::type;
        else if (f == "CODE") cmp.field = Field::code;
        else throw SyntaxError("unknown field '" + field + "'", token.position);
    }
};

const std::string& quad_field(const ElementQuad& quad, Field field) {
    switch (field) {
    case Field::tag: return quad.tag;
    case Field::content: return quad.content;
    case Field::type: return quad.type;
    case Field::code: return quad.code;
    }
    return quad.tag; // unreachable
}

bool compare(const ElementQuad& quad, const Comparison& cmp) {
    const std::string& value = quad_field(quad, cmp.field);
    switch (cmp.op) {
    case Op::eq: return value == cmp.literal;
    case Op::ne: return value != cmp.literal;
    case Op::like: return like_match(value, cmp.literal);
    }
    return false; // unreachable
}

// Three-valued evaluation under a partial alias assignment; nullopt
// means the value still depends on unassigned aliases.
std::optional<bool> eval_partial(const Node& node, std::span<const ElementQuad> quads,
                                 const std::vector<int>& assignment) {
    switch (node.kind) {
    case Node::Kind::comparison: {
        int slot = assignment[static_cast<size_t>(node.cmp.alias)];
        if (slot < 0)
            return std::nullopt;
        return compare(quads[static_cast<size_t>(slot)], node.cmp);
    }
    case Node::Kind::negation: {
        auto v = eval_partial(node.children.front(), quads, assignment);
        if (!v)
            return std::nullopt;
        return !*v;
    }
    case Node::Kind::conjunction: {
        bool unknown = false;
        for (const Node& child : node.children) {
            auto v = eval_partial(child, quads, assignment);
            if (v && !*v)
                return false;
            if (!v)
                unknown = true;
        }
        if (unknown)
            return std::nullopt;
        return true;
    }
    case Node::Kind::disjunction: {
        bool unknown = false;
        for (const Node& child : node.children) {
            auto v = eval_partial(child, quads, assignment);
            if (v && *v)
                return true;
            if (!v)
                unknown = true;
        }
        if (unknown)
            return std::nullopt;
        return false;
    }
    }
    return std::nullopt; // unreachable
}

void collect_aliases(const Node& node, std::set<int>& aliases) {
    if (node.kind == Node::Kind::comparison) {
        aliases.insert(node.cmp.alias);
        return;
    }
    for (const Node& child : node.children)
        collect_aliases(child, aliases);
}

bool search(const Node& root, std::span<const ElementQuad> quads,
            const std::vector<int>& alias_order, size_t depth, std::vector<int>& assignment) {
    auto value = eval_partial(root, quads, assignment);
    if (value)
        return *value; // determined: prune either way
    // value unknown implies some alias in alias_order[depth..] is unassigned
    int alias = alias_order[depth];
    for (size_t i = 0; i < quads.size(); ++i) {
        assignment[static_cast<size_t>(alias)] = static_cast<int>(i);
        if (search(root, quads, alias_order, depth + 1, assignment))
            return true;
    }
    assignment[static_cast<size_t>(alias)] = -1;
    return false;
}

void print_node(const Node& node, std::string& out, int parent_precedence);

int precedence(Node::Kind kind) {
    switch (kind) {
    case Node::Kind::disjunction: return 0;
    case Node::Kind::conjunction: return 1;
    case Node::Kind::negation: return 2;
    case Node::Kind::comparison: return 3;
    }
    return 3;
}

void print_node(const Node& node, std::string& out, int parent_precedence) {
    int self = precedence(node.kind);
    bool need_parens = self < parent_precedence;
    if (need_parens)
        out += '(';
    switch (node.kind) {
    case Node::Kind::comparison: {
        const Comparison& cmp = node.cmp;
        out += "e" + std::to_string(cmp.alias) + ".";
        switch (cmp.field) {
        case Field::tag: out += "tag"; break;
        case Field::content: out += "content"; break;
        case Field::type: out += "type"; break;
        case Field::code: out += "code"; break;
        }
        switch (cmp.op) {
        case Op::eq: out += " = "; break;
        case Op::ne: out += " != "; break;
        case Op::like: out += " LIKE "; break;
        }
        out += '\'';
        for (char c : cmp.literal) {
            out += c;
            if (c == '\'')
                out += '\'';
        }
        out += '\'';
        break;
    }
    case Node::Kind::negation:
        out += "NOT ";
        print_node(node.children.front(), out, precedence(Node::Kind::negation) + 1);
        break;
    case Node::Kind::conjunction:
    case Node::Kind::disjunction: {
        const char* joiner = node.kind == Node::Kind::conjunction ? " AND " : " OR ";
        bool first = true;
        for (const Node& child : node.children) {
            if (!first)
                out += joiner;
            first = false;
            print_node(child, out, self);
        }
        break;
    }
    }
    if (need_parens)
        out += ')';
}

} // namespace

bool Node::operator==(const Node& other) const {
    return kind == other.kind && children == other.children && cmp == other.cmp;
}

Expr parse(std::string_view sql, int elements) {
    if (elements < 1)
        throw SyntaxError("elements must be at least 1", 1);
    Expr expr;
    expr.elements = elements;
    expr.root = Parser(sql, elements).parse_expression();
    return expr;
}

std::string to_string(const Expr& expr) {
    std::string out;
    print_node(expr.root, out, 0);
    return out;
}

bool matches(const Expr& expr, std::span<const ElementQuad> quads) {
    if (quads.empty())
        return false; // no assignment of aliases to elements exists
    std::set<int> alias_set;
    collect_aliases(expr.root, alias_set);
    std::vector<int> alias_order(alias_set.begin(), alias_set.end());
    std::vector<int> assignment(static_cast<size_t>(expr.elements) + 1, -1);
    return search(expr.root, quads, alias_order, 0, assignment);
}

bool like_match(std::string_view text, std::string_view pattern) {
    size_t t = 0, p = 0;
    size_t star_p = std::string_view::npos, star_t = 0;
    while (t < text.size()) {
        if (p < pattern.size()
            && (pattern[p] == '_' || lower_char(pattern[p]) == lower_char(text[t]))
            && pattern[p] != '%') {
            ++t;
            ++p;
        } else if (p < pattern.size() && pattern[p] == '%') {
            star_p = p++;
            star_t = t;
        } else if (star_p != std::string_view::npos) {
            p = star_p + 1;
            t = ++star_t;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '%')
        ++p;
    return p == pattern.size();
}

} // namespace olac::query
