// Dumbdown: the lossy crosswalk from qualified records to simple DC,
// translating vocabulary codes to display labels on the way.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "olac/model.hpp"

namespace olac {

struct SimpleDCRecord {
    // (tag, text) pairs; tags are plain DC names, texts are non-empty.
    std::vector<std::pair<std::string, std::string>> elements;

    bool operator==(const SimpleDCRecord&) const = default;
};

// Per element, in order: the target tag is the element's DC tag (dcterms
// refinements land on their parent element); the text is the content if
// present, else the vocabulary label for the code, else the raw code;
// elements with none of those are dropped.
SimpleDCRecord dumbdown_record(const MetadataRecord& rec, const ApplicationProfile& profile);

// Serializes into the oai_dc container format.
xml::Element simple_dc_to_element(const SimpleDCRecord& rec);
std::string serialize_simple_dc(const SimpleDCRecord& rec);

} // namespace olac
