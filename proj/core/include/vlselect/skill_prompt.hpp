#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vlselect {

inline constexpr std::string_view kSkillPromptHeader = "Here is a list of questions about an image:";
inline constexpr std::string_view kSkillPromptInstruction =
    "Don't answer the above questions directly. What visual skills are required to answer these "
    "questions? Answer in one short sentence with less than 20 words without any extra reasoning.";

// Header line, one question per line (embedded newlines become spaces), a
// blank line, then the instruction. Throws EmptyInputError for no questions.
std::string build_skill_prompt(const std::vector<std::string>& questions);

// Collapses a model response to its first non-empty line, trimmed.
std::string first_line(std::string_view response);

}  // namespace vlselect
