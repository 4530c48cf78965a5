#pragma once

#include "facegen/core/schema.hpp"

#include <json.hpp>

#include <string>

namespace facegen {

// Annotation record: {"id": ..., "attributes": {name: option}, "freeform": ...}.
// Attributes missing from a record are "unspecified".
struct AnnotationRecord {
    std::string id;
    DescriptiveCode code;
    std::string freeform;
};

nlohmann::json code_to_json(const DescriptiveCode& code, const AttributeSchema& schema);
// Throws SchemaError naming the offending attribute or option token.
DescriptiveCode code_from_json(const nlohmann::json& attributes, const AttributeSchema& schema);

nlohmann::json record_to_json(const AnnotationRecord& record, const AttributeSchema& schema);
AnnotationRecord record_from_json(const nlohmann::json& j, const AttributeSchema& schema);

std::string serialize_record(const AnnotationRecord& record, const AttributeSchema& schema);
AnnotationRecord parse_record(const std::string& text, const AttributeSchema& schema);

}  // namespace facegen
