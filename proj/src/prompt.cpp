#include "ccmatch/prompt.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccmatch/errors.hpp"

namespace ccm {

using nlohmann::json;
using nlohmann::ordered_json;

InstructionSetting parse_setting(const std::string& name) {
    if (name == "open-vocabulary") return InstructionSetting::OpenVocabulary;
    if (name == "open-ended") return InstructionSetting::OpenEnded;
    if (name == "open-subclass") return InstructionSetting::OpenSubclass;
    throw usage_error("unknown setting \"" + name +
                      "\" (expected open-vocabulary, open-ended, or open-subclass)");
}

std::string setting_name(InstructionSetting setting) {
    switch (setting) {
        case InstructionSetting::OpenVocabulary: return "open-vocabulary";
        case InstructionSetting::OpenEnded: return "open-ended";
        case InstructionSetting::OpenSubclass: return "open-subclass";
    }
    return "?";
}

PromptSpec PromptSpec::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open prompt spec " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw input_error("malformed prompt spec " + path.string() + ": " + e.what());
    }
    PromptSpec spec;
    spec.setting = parse_setting(doc.value("setting", "open-vocabulary"));
    spec.persona = doc.value("persona", "");
    spec.task = doc.value("task", "");
    if (doc.contains("instructions"))
        spec.instructions = doc["instructions"].get<std::vector<std::string>>();
    spec.output_format = doc.value("output_format", "");
    if (doc.contains("examples"))
        for (const auto& ex : doc["examples"])
            spec.examples.push_back(ex.is_string() ? ex.get<std::string>() : ex.dump());
    std::string fmt = doc.value("format", "json");
    if (fmt == "json") spec.format = PromptFormat::Json;
    else if (fmt == "markdown") spec.format = PromptFormat::Markdown;
    else throw usage_error("unknown prompt format \"" + fmt + "\"");
    return spec;
}

namespace {

const char* trailing_key(InstructionSetting setting) {
    return setting == InstructionSetting::OpenVocabulary ? "Examples" : "Answer";
}

// An example that parses as JSON is embedded structurally; anything else
// stays a plain string.
ordered_json example_value(const std::string& text) {
    auto parsed = json::parse(text, nullptr, false);
    if (!parsed.is_discarded()) return ordered_json::parse(text);
    return text;
}

}  // namespace

std::string build_count_prompt(const PromptSpec& spec) {
    if (spec.format == PromptFormat::Json) {
        ordered_json doc;
        doc["Persona"] = spec.persona;
        doc["Task"] = spec.task;
        doc["Instructions"] = spec.instructions;
        doc["Output format"] = spec.output_format;
        ordered_json tail = ordered_json::array();
        for (const auto& ex : spec.examples) tail.push_back(example_value(ex));
        doc[trailing_key(spec.setting)] = tail;
        return doc.dump(4);
    }

    std::ostringstream out;
    out << "# Persona\n" << spec.persona << "\n\n";
    out << "# Task\n" << spec.task << "\n\n";
    out << "# Instructions\n";
    for (const auto& line : spec.instructions) out << "- " << line << "\n";
    out << "\n# Output format\n" << spec.output_format << "\n\n";
    out << "# " << trailing_key(spec.setting) << "\n";
    for (const auto& ex : spec.examples) out << "- " << ex << "\n";
    return out.str();
}

}  // namespace ccm
