#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace atf {

/// A versioned prompt body. Placeholders are `{question}`, `{columns}` and
/// `{answer_type}`; nothing else in a body is substituted.
struct PromptTemplate {
    std::string_view id;
    std::string_view body;
};

const PromptTemplate& entity_type_template();
const PromptTemplate& essential_columns_template();
const PromptTemplate& column_description_template();
const PromptTemplate& column_scoring_template();

/// SHA-256 of id and body; part of every cache key.
std::string template_digest(const PromptTemplate& t);

struct ColumnSamples {
    std::string column;
    std::vector<std::string> samples;
};

struct ColumnDescription {
    std::string column;
    std::string text;
    /// True when the text was back-filled locally instead of returned by the model.
    bool synthetic = false;
};

std::string render_entity_prompt(std::string_view question);
std::string render_essential_prompt(std::string_view question, std::span<const std::string> headers,
                                    const std::optional<std::string>& answer_type);
std::string render_description_prompt(std::string_view question, const std::optional<std::string>& answer_type,
                                      std::span<const ColumnSamples> columns);
std::string render_scoring_prompt(std::string_view question, const std::optional<std::string>& answer_type,
                                  std::span<const ColumnDescription> descriptions);

} // namespace atf
