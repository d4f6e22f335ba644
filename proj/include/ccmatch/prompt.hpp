#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ccm {

enum class InstructionSetting { OpenVocabulary, OpenEnded, OpenSubclass };
enum class PromptFormat { Json, Markdown };

InstructionSetting parse_setting(const std::string& name);
std::string setting_name(InstructionSetting setting);

// Structured counting prompt: Persona / Task / Instructions / Output format /
// Examples (open-vocabulary) or Answer (open-ended, open-subclass), rendered
// in that fixed key order.
struct PromptSpec {
    InstructionSetting setting = InstructionSetting::OpenVocabulary;
    std::string persona;
    std::string task;
    std::vector<std::string> instructions;
    std::string output_format;
    std::vector<std::string> examples;  // trailing Examples/Answer entries
    PromptFormat format = PromptFormat::Json;

    static PromptSpec from_json_file(const std::filesystem::path& path);
};

// Deterministic rendering; Json emits the structured JSON object, Markdown a
// heading/bullet rendering of the same fields.
std::string build_count_prompt(const PromptSpec& spec);

}  // namespace ccm
