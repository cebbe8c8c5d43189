#include "atf/prompts.hpp"

#include <json.hpp>

#include "atf/digest.hpp"

namespace atf {

namespace {

constexpr std::string_view kEntityBody = R"(You are a Question Answering expert.

First, carefully read the question and rephrase it in a clearer and more specific way that makes the target of the answer obvious.

Then, based on the rephrased question, determine what type of entity the answer is asking for. This might be:
- a person (e.g., someone's name),
- an organization (e.g., a team, company, etc.),
- a date (e.g., a specific day),
- a number (e.g., age, count, price),
- a location (e.g., country, city, place),
- or some other type.

You may include new types if needed. Then, assign a confidence score (0.0 to 1.0) to each type, depending on how likely it is to be the expected answer.

Respond in exactly this JSON format:
{
   "EntityType1": score,
   "EntityType2": score
}

Question: {question})";

constexpr std::string_view kEssentialBody = R"(You are a table question answering expert.

Your task is to identify the essential table columns required to answer a given question, from the list of available columns.

Please strictly follow these instructions:
- Output only a Python list of column names (e.g., ["ColumnA", "ColumnB"])
- Do not include any explanation or extra text.
- If you're unsure, choose conservatively by selecting columns that appear most relevant to keywords in the question.
- Use exact column names as they appear in the list.

Question: {question}
Available Columns: {columns}

{answer_type}Essential Columns:)";

constexpr std::string_view kDescriptionBody = R"(You are a table analysis expert. Generate concise, consistent descriptions for each column.

Question Context: {question}
{answer_type}
Columns with Examples:
{columns}

Rules:
1. Keep descriptions factual and concise (max 15 words)
2. Focus on what the column represents, not just examples
3. Use consistent terminology
4. Include data type when relevant

Format:
Column1: description
Column2: description)";

constexpr std::string_view kScoringBody = R"(You are an expert in question-answering with tabular data.

Question: {question}
{answer_type}
Table Columns:
{columns}

Rate each column's relevance for answering the question (0.0 to 1.0):
- 1.0: Essential/Primary key for the answer
- 0.8: Highly relevant, likely needed
- 0.6: Moderately relevant, could be useful
- 0.4: Somewhat relevant, might provide context
- 0.2: Low relevance, probably not needed
- 0.0: Not relevant at all

Be consistent and precise. Consider:
1. Direct relevance to the question
2. Potential for filtering/grouping
3. Contextual importance

Format (exact format required):
column_name: score)";

const PromptTemplate kEntity{"entity_type/v1", kEntityBody};
const PromptTemplate kEssential{"essential_columns/v1", kEssentialBody};
const PromptTemplate kDescription{"column_description/v1", kDescriptionBody};
const PromptTemplate kScoring{"column_scoring/v1", kScoringBody};

// Substitutes in a single left-to-right pass, so placeholder-like text inside
// a question or a column name is never expanded.
std::string render(std::string_view body, std::string_view question, std::string_view columns,
                   std::string_view answer_type) {
    std::string out;
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            if (body.substr(i, 10) == "{question}") {
                out.append(question);
                i += 10;
                continue;
            }
            if (body.substr(i, 9) == "{columns}") {
                out.append(columns);
                i += 9;
                continue;
            }
            if (body.substr(i, 13) == "{answer_type}") {
                out.append(answer_type);
                i += 13;
                continue;
            }
        }
        out.push_back(body[i++]);
    }
    return out;
}

std::string answer_type_line(const std::optional<std::string>& answer_type, std::string_view trailer) {
    if (!answer_type || answer_type->empty()) {
        return "";
    }
    std::string s = "Expected Answer Type: " + *answer_type;
    s.append(trailer);
    return s;
}

} // namespace

const PromptTemplate& entity_type_template() { return kEntity; }
const PromptTemplate& essential_columns_template() { return kEssential; }
const PromptTemplate& column_description_template() { return kDescription; }
const PromptTemplate& column_scoring_template() { return kScoring; }

std::string template_digest(const PromptTemplate& t) {
    std::string material(t.id);
    material.push_back('\0');
    material.append(t.body);
    return sha256_hex(material);
}

std::string render_entity_prompt(std::string_view question) { return render(kEntityBody, question, "", ""); }

std::string render_essential_prompt(std::string_view question, std::span<const std::string> headers,
                                    const std::optional<std::string>& answer_type) {
    const std::string columns = nlohmann::json(std::vector<std::string>(headers.begin(), headers.end())).dump();
    return render(kEssentialBody, question, columns, answer_type_line(answer_type, "\n\n"));
}

std::string render_description_prompt(std::string_view question, const std::optional<std::string>& answer_type,
                                      std::span<const ColumnSamples> columns) {
    std::string lines;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i > 0) {
            lines.push_back('\n');
        }
        lines += columns[i].column + " (Examples: ";
        for (std::size_t j = 0; j < columns[i].samples.size(); ++j) {
            if (j > 0) {
                lines += ", ";
            }
            lines += columns[i].samples[j];
        }
        lines += ")";
    }
    return render(kDescriptionBody, question, lines, answer_type_line(answer_type, "\n"));
}

std::string render_scoring_prompt(std::string_view question, const std::optional<std::string>& answer_type,
                                  std::span<const ColumnDescription> descriptions) {
    std::string lines;
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
        if (i > 0) {
            lines.push_back('\n');
        }
        lines += descriptions[i].column + ": " + descriptions[i].text;
    }
    return render(kScoringBody, question, lines, answer_type_line(answer_type, "\n"));
}

} // namespace atf
