#include "olac/crosswalk.hpp"

namespace olac {

SimpleDCRecord dumbdown_record(const MetadataRecord& rec, const ApplicationProfile& profile) {
    SimpleDCRecord out;
    for (const QualifiedElement& el : rec.elements) {
        std::string tag = el.tag;
        if (el.refinement_type && el.refinement_type->ns_uri == kDctermsNamespace) {
            auto parent = dcterms_refinement_parents().find(el.refinement_type->local);
            if (parent != dcterms_refinement_parents().end())
                tag = parent->second;
        }
        std::string text = el.content;
        if (text.empty() && !el.code.empty()) {
            const ControlledVocabulary* vocab =
                el.refinement_type ? profile.vocabulary_for(*el.refinement_type) : nullptr;
            const std::string* label = vocab ? vocab->label(el.code) : nullptr;
            text = label ? *label : el.code;
        }
        if (text.empty())
            continue;
        out.elements.emplace_back(std::move(tag), std::move(text));
    }
    return out;
}

xml::Element simple_dc_to_element(const SimpleDCRecord& rec) {
    xml::Element root("oai_dc:dc");
    root.set_attribute("xmlns:oai_dc", "http://www.openarchives.org/OAI/2.0/oai_dc/");
    root.set_attribute("xmlns:dc", kDcNamespace);
    for (const auto& [tag, text] : rec.elements) {
        xml::Element el("dc:" + tag);
        el.add_text(text);
        root.add_child(std::move(el));
    }
    return root;
}

std::string serialize_simple_dc(const SimpleDCRecord& rec) {
    return xml::serialize(simple_dc_to_element(rec));
}

} // namespace olac
