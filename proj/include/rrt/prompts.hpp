// Prompt templates for annotation, training, and inference. Placeholders are
// {modality_path}, {question}, {answer_a}, {answer_b}; the literal token
// <modality> is replaced by the modality name.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rrt {

enum class TemplateId { StrongAnnotation, Sft, Grpo, Inference };

inline std::optional<TemplateId> template_from_string(std::string_view s) {
  if (s == "strong_annotation") return TemplateId::StrongAnnotation;
  if (s == "sft") return TemplateId::Sft;
  if (s == "grpo") return TemplateId::Grpo;
  if (s == "inference") return TemplateId::Inference;
  return std::nullopt;
}

namespace prompts {

inline constexpr std::string_view kSharedHeader = R"(You are a helpful and thoughtful AI assistant with experience in multi-modal reasoning.

Task
Two candidate answers (Model A & Model B) are provided for a question related to a <modality>. Your task is to analyze and give a comparative evaluation of their quality and accuracy based on five key dimensions.

Evaluation Dimensions
1. Fluency and coherence
2. Relevance to the question and <modality>
3. Accuracy and completeness
4. Reasoning quality
5. Safety and ethical alignment

Scoring Guidelines
- 9-10: Excellent in all dimensions
- 6-8: Good overall with minor issues in 1-2 dimensions
- 3-5: Deficient in 2-3 dimensions
- 0-2: Poor in 4-5 dimensions

Evaluation Process
1. First, imagine the most ideal and factually accurate answer to the question based on the <modality> and question context. This reference_answer will serve as the gold standard.
2. Evaluate both answers across all five dimensions.
3. Assign each model an integer score from 0 to 10 based on the dimensional analysis.
4. Decide which model performed better overall ("A", "B", or "equal").
5. Provide detailed reasoning covering all five dimensions.
)";

inline constexpr std::string_view kContextBlock = R"(
Context
<modality> file: {modality_path}
Question: {question}
Candidate A: {answer_a}
Candidate B: {answer_b}
)";

inline const std::string kStrongAnnotation = std::string(kSharedHeader) + R"(
Output Instructions
- Output must be a strictly valid JSON object.
- Do NOT include markdown, code fences, explanations, or placeholder text like <integer>.
- All field names and string values must be enclosed in double quotes.
- Put all reasoning in a single string under the "reasoning" key.
- The final verdict should be one of: "<answer>[[A]]</answer>", "<answer>[[B]]</answer>", or "<answer>[[equal]]</answer>".

Required Output Keys
{
  "score_A": [integer between 0 and 10],
  "score_B": [integer between 0 and 10],
  "better": "A" or "B" or "equal",
  "reasoning": "<think>...</think>",
  "final_verdict": "<answer>[[A]]</answer>"
}
)" + std::string(kContextBlock);

inline const std::string kSft = std::string(kSharedHeader) + R"(
Output Instructions
- Output must be a strictly valid JSON object.
- Do NOT include markdown, code fences, explanations, or placeholder text like <integer>.
- All field names and string values must be enclosed in double quotes.
- Put the reasoning in a single string under the "reasoning" key.
- The final verdict should be exactly one of: "<answer>[[A]]</answer>", "<answer>[[B]]</answer>", or "<answer>[[equal]]</answer>".

Required Output Keys
{
  "score_A": [integer between 0 and 10],
  "score_B": [integer between 0 and 10],
  "better": "A" or "B" or "equal",
  "reasoning": "<think>Part 1: In terms of Fluency and Coherence, ... For Relevance to the Question and <modality>, ... Regarding Accuracy and Completeness, ... In terms of Reasoning Quality, ... Part 2: In terms of Safety and Ethical Alignment, ...</think>",
  "final_verdict": "<answer>[[A]]</answer>"
}
)" + std::string(kContextBlock);

inline const std::string kGrpo = std::string(kSharedHeader) + R"(
Output Schema (STRICT)
- Start your reply exactly with "{" and end with "}".
- Never output ```json, ```, or any other Markdown fence.
- Keys must be exactly: score_A, score_B, better, reasoning, final_verdict.
- The value of better must be "A", "B", or "equal".
- final_verdict must be one of: "<answer>[[A]]</answer>", "<answer>[[B]]</answer>", "<answer>[[equal]]</answer>".
- The letter inside final_verdict must match the value of better.
- reasoning must be a single JSON string, using "\n" for line breaks.
- Do not include explanatory text outside the JSON object.

Required Output Keys
{
  "score_A": [integer between 0 and 10],
  "score_B": [integer between 0 and 10],
  "better": "A" or "B" or "equal",
  "reasoning": "<think>Part 1:...</think>",
  "final_verdict": "<answer>[[A]]</answer>"
}
)" + std::string(kContextBlock);

inline const std::string kInference = R"(You are a helpful and thoughtful AI assistant with expertise in multi-modal reasoning.

Please analyze the following <modality> and question, then determine which of the two provided answers is better based on five evaluation dimensions:
1. Fluency and coherence
2. Relevance to the question and <modality>
3. Accuracy and completeness
4. Reasoning quality
5. Safety and ethical alignment

Before making your judgment
- First, imagine the most ideal and factually accurate answer (a reference answer) based on the <modality> and the question.
- Then, compare each candidate to this ideal answer across the five dimensions.
- Provide integer scores (0-10) for both answers.
- Write a clear reasoning summary covering all five dimensions.
- Finally, decide which answer is better.

Required Output Format (STRICT JSON)
{
  "score_A": [0-10],
  "score_B": [0-10],
  "better": "A" or "B" or "equal",
  "reasoning": "<think>[detailed analysis across five dimensions]</think>",
  "final_verdict": "<answer>[[A]]</answer>"
}

Hard Rules
- OUTPUT MUST BE VALID JSON
- Include ALL specified fields exactly
- final_verdict MUST match the better field
- Scores MUST be integers 0-10
- Do NOT include markdown, code fences, or text outside JSON

Evaluation Context
Question: {question}
Answer A: {answer_a}
Answer B: {answer_b}
)";

}  // namespace prompts

struct PromptTemplate {
  TemplateId id;
  std::string body;
};

inline PromptTemplate get_template(TemplateId id) {
  switch (id) {
    case TemplateId::StrongAnnotation:
      return {id, prompts::kStrongAnnotation};
    case TemplateId::Sft: return {id, prompts::kSft};
    case TemplateId::Grpo: return {id, prompts::kGrpo};
    case TemplateId::Inference: return {id, prompts::kInference};
  }
  throw std::invalid_argument("unknown template");
}

// Substitutes every {placeholder} and the <modality> token. Throws if a
// placeholder present in the body has no binding.
inline std::string render_prompt(const PromptTemplate& t,
                                 const std::map<std::string, std::string>& bindings) {
  std::string out = t.body;
  if (out.find("<modality>") != std::string::npos) {
    auto it = bindings.find("modality");
    if (it == bindings.end())
      throw std::invalid_argument("unbound placeholder: modality");
    const std::string_view token = "<modality>";
    size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), it->second);
      pos += it->second.size();
    }
  }
  for (const char* name : {"modality_path", "question", "answer_a", "answer_b"}) {
    const std::string token = std::string("{") + name + "}";
    size_t pos = out.find(token);
    if (pos == std::string::npos) continue;
    auto it = bindings.find(name);
    if (it == bindings.end())
      throw std::invalid_argument(std::string("unbound placeholder: ") + name);
    while (pos != std::string::npos) {
      out.replace(pos, token.size(), it->second);
      pos = out.find(token, pos + it->second.size());
    }
  }
  return out;
}

}  // namespace rrt
