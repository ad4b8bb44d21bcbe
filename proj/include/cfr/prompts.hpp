// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace cfr {

/// A prompt shipped with the library (assets/prompts/<name>.<version>.txt).
/// Sent unfilled in the "prompt_template" request field; placeholders are
/// {claim}, {question}, {passage}, {evidence} and {labels}.
struct PromptTemplate {
    std::string_view name;
    std::string_view version;
    std::string_view text;
};

const PromptTemplate& relevance_prompt();
const PromptTemplate& answer_prompt();
const PromptTemplate& veracity_prompt();
const PromptTemplate& synthetic_prompt();

}  // namespace cfr
