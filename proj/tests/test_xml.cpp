#include "doctest.h"

#include "olac/xml.hpp"

using namespace olac;

TEST_CASE("parses elements, attributes and text") {
    auto root = xml::parse("<a x=\"1\" y='two'><b>hi</b><c/></a>");
    CHECK(root.name == "a");
    REQUIRE(root.attributes.size() == 2);
    CHECK(root.attributes[0] == std::pair<std::string, std::string>{"x", "1"});
    CHECK(root.attributes[1] == std::pair<std::string, std::string>{"y", "two"});
    REQUIRE(root.child_elements().size() == 2);
    CHECK(root.find_child("b")->text() == "hi");
    CHECK(root.find_child("c")->children.empty());
}

TEST_CASE("decodes entities and character references") {
    auto root = xml::parse("<t a=\"&quot;&#65;&amp;\">&lt;x&gt; &#x2603;</t>");
    CHECK(*root.attribute("a") == "\"A&");
    CHECK(root.text() == "<x> \xE2\x98\x83");
}

TEST_CASE("skips prolog and comments") {
    auto root = xml::parse("<?xml version=\"1.0\"?>\n<!-- hello -->\n<r><!-- in -->ok<!-- out --></r>\n");
    CHECK(root.name == "r");
    CHECK(root.text() == "ok");
}

TEST_CASE("drops indentation between child elements but keeps real text") {
    auto root = xml::parse("<r>\n  <a>x</a>\n  <b> spaced </b>\n</r>");
    CHECK(root.children.size() == 2);
    CHECK(root.find_child("b")->text() == " spaced ");
}

TEST_CASE("reports line and column on malformed input") {
    try {
        xml::parse("<a>\n  <b></c>\n</a>");
        FAIL("expected ParseError");
    } catch (const xml::ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column > 1);
        CHECK(std::string(e.what()).find("mismatched") != std::string::npos);
    }
}

TEST_CASE("rejects duplicate attributes and stray content") {
    CHECK_THROWS_AS(xml::parse("<a x=\"1\" x=\"2\"/>"), xml::ParseError);
    CHECK_THROWS_AS(xml::parse("<a/><b/>"), xml::ParseError);
    CHECK_THROWS_AS(xml::parse("<a>&bogus;</a>"), xml::ParseError);
    CHECK_THROWS_AS(xml::parse("<a"), xml::ParseError);
}

TEST_CASE("serialization round-trips including escapes") {
    xml::Element root("r");
    root.set_attribute("attr", "a&b\"<>\n\ttail");
    xml::Element child("c");
    child.add_text("1 < 2 & 3 > 2");
    root.add_child(std::move(child));
    root.add_child(xml::Element("empty"));

    std::string text = xml::serialize(root);
    auto reparsed = xml::parse(text);
    CHECK(reparsed == root);
    CHECK(xml::serialize(reparsed) == text);
}

TEST_CASE("CDATA becomes plain text") {
    auto root = xml::parse("<r><![CDATA[<raw & stuff>]]></r>");
    CHECK(root.text() == "<raw & stuff>");
}
