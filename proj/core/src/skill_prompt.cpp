#include "vlselect/skill_prompt.hpp"

#include "vlselect/errors.hpp"

namespace vlselect {

namespace {

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n\f\v");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string build_skill_prompt(const std::vector<std::string>& questions) {
  if (questions.empty()) throw EmptyInputError("skill prompt needs at least one question");
  std::string prompt(kSkillPromptHeader);
  prompt += '\n';
  for (const auto& q : questions) {
    std::string line = q;
    for (char& c : line) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    prompt += line;
    prompt += '\n';
  }
  prompt += '\n';
  prompt += kSkillPromptInstruction;
  return prompt;
}

std::string first_line(std::string_view response) {
  response = trim(response);
  const auto nl = response.find_first_of("\r\n");
  return std::string(trim(response.substr(0, nl)));
}

}  // namespace vlselect
