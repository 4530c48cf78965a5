#include "facegen/core/code_io.hpp"

#include "facegen/core/error.hpp"

namespace facegen {

nlohmann::json code_to_json(const DescriptiveCode& code, const AttributeSchema& schema) {
    code.validate(schema);
    nlohmann::json attrs = nlohmann::json::object();
    for (std::size_t i = 0; i < schema.size(); ++i) attrs[schema[i].name] = schema[i].options[code[i]];
    return attrs;
}

DescriptiveCode code_from_json(const nlohmann::json& attributes, const AttributeSchema& schema) {
    if (!attributes.is_object()) throw SchemaError("'attributes' must be an object");
    auto code = DescriptiveCode::unspecified(schema);
    for (const auto& [name, value] : attributes.items()) {
        const std::size_t row = schema.index_of(name);
        if (!value.is_string())
            throw SchemaError("option for attribute '" + name + "' must be a string");
        code[row] = schema.option_index(row, value.get<std::string>());
    }
    return code;
}

nlohmann::json record_to_json(const AnnotationRecord& record, const AttributeSchema& schema) {
    nlohmann::json j;
    j["id"] = record.id;
    j["attributes"] = code_to_json(record.code, schema);
    j["freeform"] = record.freeform;
    return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j, const AttributeSchema& schema) {
    if (!j.is_object()) throw SchemaError("annotation record must be an object");
    AnnotationRecord r;
    if (j.contains("id")) r.id = j.at("id").get<std::string>();
    if (j.contains("freeform")) r.freeform = j.at("freeform").get<std::string>();
    r.code = j.contains("attributes") ? code_from_json(j.at("attributes"), schema)
                                      : DescriptiveCode::unspecified(schema);
    for (const auto& [key, _] : j.items())
        if (key != "id" && key != "attributes" && key != "freeform")
            throw SchemaError("unknown record field '" + key + "'");
    return r;
}

std::string serialize_record(const AnnotationRecord& record, const AttributeSchema& schema) {
    return record_to_json(record, schema).dump(2) + "\n";
}

AnnotationRecord parse_record(const std::string& text, const AttributeSchema& schema) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), 1);
    }
    return record_from_json(j, schema);
}

}  // namespace facegen
