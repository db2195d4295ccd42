#include "stepforge/prompts.hpp"

#include <utility>

#include "stepforge/plan/planner.hpp"
#include "stepforge/rubrics.hpp"

namespace stepforge::prompts {

namespace {

using Vars = std::vector<std::pair<std::string_view, std::string>>;

// Replaces every ${name} in the template.
std::string render(std::string_view tmpl, const Vars& vars) {
  std::string out(tmpl);
  for (const auto& [name, value] : vars) {
    const std::string token = "${" + std::string(name) + "}";
    for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos + value.size()))
      out.replace(pos, token.size(), value);
  }
  return out;
}

std::string speaker(Role role) { return role == Role::Counselor ? "Counselor" : "Client"; }

template <std::size_t N>
std::string rubric_block(const std::array<rubrics::Item, N>& items, std::string_view scale) {
  std::string out;
  int i = 1;
  for (const auto& item : items) {
    out += std::to_string(i++) + ". " + std::string(item.key) + " (" + std::string(scale) + "): " +
           std::string(item.description) + "\n";
  }
  return out;
}

template <std::size_t N>
std::string score_reason_format(const std::array<rubrics::Item, N>& items, std::string_view range,
                                std::string_view reason_suffix) {
  std::string out = "{\n";
  for (std::size_t i = 0; i < N; ++i) {
    std::string key(items[i].key);
    out += "  \"" + key + "\": <" + std::string(range) + ">,\n";
    out += "  \"" + key + std::string(reason_suffix) + "\": \"<reason>\"" + (i + 1 < N ? ",\n" : "\n");
  }
  return out + "}";
}

std::string json_list(const std::vector<std::string>& items) { return json(items).dump(); }

constexpr std::string_view kDecompose = R"(You are a professional mental health counselor trained in Cognitive Behavioral Therapy (CBT).
Your task is to extract and infer a CBT-relevant client profile from the client's expressed thoughts and personality characteristics.

Client Thought:
${thought}

Personality Profile:
${persona}

Based on the information above, generate the following elements of the client profile:
- Surface-Level Problem: the observable and consciously reported problem or symptom
- Triggering Situation: the external context or internal cue that elicits emotional distress
- Automatic Thoughts: rapid, involuntary interpretations or beliefs containing cognitive distortions. Separate multiple thoughts with ";".
- Basic Information: a plausible client background consistent with the personality profile, as an object with the keys name, age, gender, occupation, education, marital_status, family_details, functioning, interpersonal_relationships, daily_life, past_history, social_support.

Output Format:
Return the extracted information in JSON format.
If any element is unclear or not mentioned, set its value to "unknown".
All keys should be written in lowercase with underscores.

Expected Output Format:
{"surface_level_problem": "...", "triggering_situation": "...", "automatic_thoughts": "...", "basic_information": {"name": "...", "age": "..."}})";

constexpr std::string_view kDiagnosticStage = R"(Generate turn-by-turn dialogue with this description.

This is not a complete counseling session.
Do not close the session.

Session Goal (Understanding Phase)
The dialogue should follow the natural progression of CBT's understanding phase.

First, understand the surface-level problem (what the client came in for).
Second, understand the triggering situation (what happened).
Third, understand the client's automatic thoughts (what went through their mind).
Finally, integrate these insights to indicate readiness for cognitive reframing.

The counselor must accomplish all four goals within the dialogue.

Client Instructions

Client's basic profile:
${basic_information}

Client's personality traits:
${personality}

Client behavior constraints:
The client shows natural hesitancy or mild resistance based on their personality.
The client clearly knows their surface-level problem.
The client does not initially recognize deeper cognitive patterns.
Deeper-level information should not be revealed before turn 5.

Client experiences:
-- Surface-level problem: ${surface_level_problem}
Deeper-level information (to emerge gradually, not early):
-- Triggering situation: ${triggering_situation}
-- Automatic thoughts during the situation: ${automatic_thoughts}

Counselor Instructions

Counselor stance:
Warm, grounded, slow-paced, and empathetic.
Use reflective listening followed by gentle, open-ended questions.
Avoid giving advice or cognitive reframing.

Planning constraints:
Plan for Stage 1 progress: ${plan}
Action order for Stage 1: ${action_order}

Action rules:
Actions must follow the given order monotonically.
Repeating the same action is allowed if necessary.
No action may be skipped.
No actions outside the given list may be introduced.

Output Format (Strict)
Return the dialogue as a list of dictionaries, one dictionary per utterance.
Each dictionary must follow exactly this structure:
{
  "turn_num": <int>,
  "role": "counselor" or "client",
  "action_reasoning": "<brief reasoning; use 'n/a' for client turns>",
  "action": "<one action from the action order; use 'n/a' for client turns>",
  "utterance": "<spoken text>"
}

Hard Constraints
Less than 15 turns.
Start with the counselor and alternate strictly.
End with the counselor.
Use n/a for client action and action_reasoning fields.
Do not include any extra commentary outside the list.)";

constexpr std::string_view kInterventionStage = R"(Generate turn-by-turn dialogue with this description.

Session Goal (Intervention Phase Only)
The dialogue should focus on CBT intervention based on previously identified client information.

Dialogue History
${history}

Client Context (Already Identified)

Client's basic profile:
${basic_information}

Client's personality traits:
${personality}

Previously identified information:
Surface-level problem: ${surface_level_problem}
Triggering situation: ${triggering_situation}
Automatic thoughts: ${automatic_thoughts}

Client behavior constraints:
The client may show mild hesitation or ambivalence toward cognitive change.
The client is aware of their automatic thoughts but may still partially endorse them.
Cognitive change should emerge gradually, not instantly.

Counselor Instructions
Warm, collaborative, and supportive.
More directive than the understanding phase, but still gentle and respectful.

Planning constraints:
Plan for Stage 2 progress: ${plan}
Action order for Stage 2: ${action_order}

Action rules:
Actions must follow the given order monotonically.
Repeating the same action is allowed if necessary.
No action may be skipped.
No actions outside the given list may be introduced.

Output Format (Strict)
Return the dialogue as a list of dictionaries, one dictionary per utterance.
Each dictionary must follow exactly this structure:
{
  "turn_num": <int>,
  "role": "counselor" or "client",
  "action_reasoning": "<brief reasoning; use 'n/a' for client turns>",
  "action": "<one action from the action order; use 'n/a' for client turns>",
  "utterance": "<spoken text>"
}

Hard Constraints
Less than 21 turns.
Start with the counselor.
Alternate strictly between counselor and client.
End with the counselor.
Use n/a for client action and action_reasoning fields.
No extra commentary outside the list.)";

constexpr std::string_view kPlanner = R"(You are a CBT expert therapist.
Stage 1 focuses on understanding the client, and Stage 2 focuses on performing cognitive reframing.

Your task is to take the Stage 1 dialogue history and the specified CBT strategy, and generate a structured intervention plan for the Stage 2 dialogue.

Specifically, you must generate a sequence of intervention action order keys that the counselor will follow during Stage 2.

Action Constraints
Each action key must satisfy the following constraints.
Each key must consist of 3-5 words.
Each key must describe a specific and observable counselor action.
Each key should clearly indicate what the counselor will do or ask.
The final key must always be End session.

All keys must align with the overall plan to ensure a coherent therapeutic flow.

Input Format

Stage 1 dialogue history:
${history}

CBT strategies (name the one you use in the plan):
${strategies}

Output Requirements

The output must include the following fields.

"plan": A short summary of the CBT strategy, explaining how the intervention plan will help the client and what therapeutic goals it aims to achieve.

"reason_for_these_order": A brief explanation of why these specific action keys were selected and why they are ordered in this sequence.

"action_order": A list of 5-7 action keys, where each key consists of 3-5 words and represents a concrete counselor action, followed by "End session".

Expected Output Format
{
  "plan": "<Short description of which CBT strategy will use and therapeutic goals>",
  "reason_for_these_order": "<Explanation of how and why the action order was designed>",
  "action_order": [
    "restate feared weight thought",
    "rate belief intensity now",
    ...
    "End session"
  ]
})";

constexpr std::string_view kCtrs8 = R"(You are a CBT expert trained in the Cognitive Therapy Rating Scale (CTRS).
This task uses an 8-item reduced version of CTRS.

Your job:
- Read the session transcript carefully
- Assign a score from 0-6 for each item
- Base all scores strictly on the scoring definitions below
- Provide a JSON object with both score and score_reason fields
- Do not include any text outside the JSON object

CTRS Items (0 = absent or harmful, 2 = weak, 4 = adequate, 6 = excellent; 1/3/5 fall between adjacent descriptors)
${rubric}
Session Transcript
The following is the session transcript. Do not summarize or rewrite it.
${history}

Output Format (JSON only)
${format}

Return only this JSON object.)";

constexpr std::string_view kAdherence = R"(You are an expert supervisor of CBT counseling dialogue systems.
Your task is to evaluate the clinical quality and structural consistency of a counseling plan, its expanded action list, and the follow-up dialogue.

You must assess the materials using three evaluation metrics defined below.
All scores are on a 1-5 scale (1 = poor, 3 = moderate, 5 = excellent).

Evaluation Metrics
${rubric}
Input Materials

[Dial1: Initial dialogue used to generate plan/action]
${dial1}

[Plan]
${plan}

[Action_List]
${action}

[Dial2: Dialogue expected to follow plan/action]
${dial2}

Output Format (JSON only)
${format}

Return only this JSON object.)";

constexpr std::string_view kClient = R"(You are simulating the role of a client in a counseling session.

Client Basic Profile
${basic_information}

Personality Traits
${personality}

Surface-Level Problem
${surface_level_problem}

Hidden Information (Do NOT reveal early in the session)
- Triggering situation: ${triggering_situation}
- Automatic thoughts: ${automatic_thoughts}

Response Rules
- Respond only as the client
- Be natural, consistent, and emotionally authentic
- Do not reveal deeper-level information too early
- Do not step out of character
- Do not provide explanations or meta-comments
- If you are likely to disengage, or the session goals are sufficiently addressed, reply with the utterance "exit"

Dialogue History
${history}

Generate the client's next turn.
${additional_instruction}

Output Format (JSON only)
{
  "thoughts": "<internal thoughts>",
  "utterance": "<spoken response>"
}

Return only this JSON object.)";

constexpr std::string_view kCounselor = R"(You are a highly skilled Cognitive Behavioral Therapy (CBT) counselor conducting a structured session.

Client name: ${name}

Stage: ${stage}
Stage plan: ${plan}
${order_marker}${action_order}

${turn_marker}${turn_num} of ${max_turns}.
${current_marker}${current_action}
${next_marker}${next_action}

Decide whether the current action's objective has been met. If it has, move to the next action candidate; otherwise repeat the current action. Never skip an action and never use an action outside the list. When the action is "End session", close the session warmly.

Dialogue History
${history}

Output Format (JSON only)
{
  "action_reasoning": "<why you stay or move on>",
  "action": "<the action you perform this turn>",
  "utterance": "<what you say to the client>"
}

Return only this JSON object.)";

constexpr std::string_view kEvalUtterances = R"(You are a highly skilled clinical psychologist conducting a CBT-informed counseling session.

Client Profile
${profile}

Dialogue History
${history}

Candidate Counselor Utterances (Next Turn)
The following are multiple candidate counselor utterances generated for the next turn.
${candidates}

Your Task
For each candidate utterance, evaluate whether it satisfies the evaluation metrics defined below.
Use the provided rubric to guide your judgment.

Evaluation Metric and Rubric (each 1-5)
${rubric}
Strict Output Format
Return a JSON list with exactly ${count} elements, where each element corresponds to exactly one candidate utterance, in order.
Do not rewrite, modify, or paraphrase any candidate. Only evaluate them.
Each element:
${format}

Return only this JSON list. Do not include any explanations or additional text.)";

constexpr std::string_view kEvalPlans = R"(You are a highly skilled clinical psychologist specializing in CBT-based structured counseling.
Your task is to evaluate multiple candidate plans for the next therapeutic step.

Dialogue History
${history}

Candidate Plans for the Next Step
The following are multiple candidate counseling plans proposed for the next stage.
${candidates}

Evaluation Metric and Rubric (each 1-5)
${rubric}
Strict Output Format
Return a JSON list with exactly ${count} elements, where each entry corresponds to exactly one candidate plan, in order.
Do not add any text outside the JSON output.
Each element:
${format}

Return only this JSON list.)";

constexpr std::string_view kCtrs7 = R"(You are a CBT expert trained in the Cognitive Therapy Rating Scale (CTRS).
Evaluate the counselor in the session transcript below on the following items.

Your job:
- Read the session transcript carefully
- Assign a score from 0-6 for each item (0 = absent or harmful, 2 = weak, 4 = adequate, 6 = excellent)
- Give a short reason for each score
- Do not include any text outside the JSON object

Items
${rubric}
Session Transcript
${history}

Output Format (JSON only)
${format}

Return only this JSON object.)";

constexpr std::string_view kSrs = R"(You are an expert evaluator of psychotherapy sessions.

You will be provided with a transcript of a counseling session between a client and a therapist.
Your task is to evaluate the client's subjective experience after the session, based only on the given conversation.

You must infer how the client is likely to feel at the end of the session, as if the client were completing a post-session questionnaire.

Important Instructions
- Do not evaluate the therapist directly
- Do not summarize or describe what happened in the session
- Infer the client's internal reactions and lived experience
- Base your judgment on the overall dialogue, not isolated turns

Counseling Session Transcript
${dialogue}

Scoring Scale (Likert 1-5)
1 = Not at all
2 = Slightly
3 = Somewhat
4 = Quite a bit
5 = Very much

Evaluation Metrics
${metrics}
Output Format (JSON only)
{
  "Metric_1": {
    "score": <integer 1-5>,
    "reason": "<brief explanation grounded in the conversation>"
  },
  ...
}

Output Rules
- Use all metrics listed above
- Scores must be integers from 1 to 5
- Reasons must reference concrete cues from the dialogue
- Return only the JSON object)";

constexpr std::string_view kTarget = R"(You are given a transcript of a counseling session between a client and a therapist conducted in a Cognitive Behavioral Therapy (CBT) setting.

Your task is to extract the main therapeutic target discussed in the session.

Therapeutic targets refer to the core cognitive or emotional elements that the therapist and client focused on during the conversation.

Important Instructions
- Preserve the original wording as much as possible when extracting the target
- If a target is implied but not explicitly stated, infer it conservatively and phrase it naturally
- Do not summarize the session or add explanatory commentary
- Extract one primary therapeutic target that best represents the session's focus

Counseling Session Transcript
${dialogue}

Output Format (JSON only)
{
  "therapeutic_targets": "one target sentence"
}

Output Rules
- Return only the JSON object
- The target should be a single, concise sentence)";

constexpr std::string_view kTagging = R"(You are an expert annotator trained in CBT-informed micro-level interaction analysis.

You will be provided with a numbered, multi-turn dialogue between a client and a counselor (e.g., "1 Counselor: ... 2 Client: ...").

Your task is to analyze ONLY the counselor's utterances and assign appropriate CBT-informed micro-action tags based on the predefined tag sets below.

--------------------------------
CBT QUESTION TAG SET (USE ONLY THESE)
--------------------------------
- Q_Evid: Asking the client to identify evidence that supports or contradicts their thoughts.
- Q_Alt: Asking the client to consider how others might interpret the same situation.
- Q_Worst: Asking the client to describe the worst possible outcome they fear.
- Q_Util: Asking the client to evaluate how helpful or unhelpful a thought is in real life.
- Q_Adv: Asking the client to identify potential benefits of maintaining a thought or behavior.
- Q_Disadv: Asking the client to identify negative consequences of holding a thought or behavior.
- Q_Real: Asking the client to examine how well their thoughts align with observable reality.
- Q_Cont: Asking the client to place their experience on a spectrum between two extremes.
- Q_Wish: Asking the client to replace rigid wishes with more realistic alternatives.
- Q_Identify: Asking the client to identify concrete problems and explore solutions.

--------------------------------
CBT REFLECTION TAG SET (USE ONLY THESE)
--------------------------------
- R_Simple: Repeating or lightly paraphrasing the client's statement without interpretation.
- R_Emo: Reflecting the client's emotional or affective state.
- R_Thought: Reflecting the client's automatic thoughts or beliefs.
- R_Meaning: Reflecting implied meaning or deeper significance.
- R_Reframe: Reflecting while subtly shifting toward a more adaptive interpretation.
- R_Summary: Synthesizing multiple client statements into a coherent reflection.

--------------------------------
ANNOTATION RULES (IMPORTANT)
--------------------------------
- Annotate ONLY counselor utterances
- Assign tags ONLY if the utterance functions as a question or a reflection
- A single counselor utterance may receive multiple tags
- If an utterance is neither a question nor a reflection, return an empty list []
- Base your decision on the therapeutic function, not surface wording
- Do not invent new tags or add explanations

--------------------------------
OUTPUT FORMAT (STRICT)
--------------------------------
Return a dictionary where:
- Keys are counselor utterance indices: counselor_1, counselor_2, ... (there are ${count} counselor utterances)
- Values are lists of tags (Q_* and/or R_*)

Example
{
  "counselor_1": ["Q_Evid"],
  "counselor_2": ["R_Emo"],
  "counselor_3": ["Q_Alt", "Q_Real", "R_Thought"],
  "counselor_4": []
}

--------------------------------
DIALOGUE
--------------------------------
${dialogue}

--------------------------------
Return ONLY the dictionary.)";

constexpr std::string_view kHeadToHead = R"(You are an expert CBT supervisor comparing two counseling sessions held with the same client.

Counselor A transcript:
${first}

Counselor B transcript:
${second}

For each criterion below, answer "A", "B", or "Tie".
${criteria}
Output Format (JSON only)
${format}

Return only this JSON object.)";

}  // namespace

// ---------------------------------------------------------------------------

std::string format_history(std::span<const DialogueTurn> turns) {
  std::string out;
  for (const auto& t : turns) {
    if (!out.empty()) out += '\n';
    out += speaker(t.role) + ": " + t.utterance;
  }
  return out.empty() ? "(no dialogue yet)" : out;
}

std::string format_numbered(std::span<const DialogueTurn> turns) {
  std::string out;
  int i = 1;
  for (const auto& t : turns) {
    if (!out.empty()) out += '\n';
    out += std::to_string(i++) + " " + speaker(t.role) + ": " + t.utterance;
  }
  return out;
}

std::string format_basic_information(const ClientProfile& profile) {
  std::string out = "name: " + profile.name;
  for (const auto& [k, v] : profile.basic_information) {
    if (k == "name") continue;
    out += "\n" + k + ": " + v;
  }
  return out;
}

std::string format_personality(const ClientProfile& profile) {
  return std::string(style_description(profile.attitude.style)) + " (engagement: " +
         std::string(to_string(profile.attitude.engagement_type())) + ")";
}

std::string format_automatic_thoughts(const ClientProfile& profile) {
  std::string out;
  for (const auto& t : profile.automatic_thoughts) {
    if (!out.empty()) out += "; ";
    out += t;
  }
  return out;
}

std::string decompose(const std::string& persona, const std::string& negative_thought) {
  return render(kDecompose, {{"thought", negative_thought}, {"persona", persona}});
}

std::string diagnostic_stage(const ClientProfile& profile, const StagePlan& plan) {
  return render(kDiagnosticStage, {{"basic_information", format_basic_information(profile)},
                                   {"personality", format_personality(profile)},
                                   {"surface_level_problem", profile.surface_level_problem},
                                   {"triggering_situation", profile.triggering_situation},
                                   {"automatic_thoughts", format_automatic_thoughts(profile)},
                                   {"plan", plan.plan_text},
                                   {"action_order", json_list(plan.actions.keys)}});
}

std::string intervention_stage(const ClientProfile& profile, const StagePlan& plan,
                               std::span<const DialogueTurn> diagnostic_history) {
  return render(kInterventionStage, {{"history", format_history(diagnostic_history)},
                                     {"basic_information", format_basic_information(profile)},
                                     {"personality", format_personality(profile)},
                                     {"surface_level_problem", profile.surface_level_problem},
                                     {"triggering_situation", profile.triggering_situation},
                                     {"automatic_thoughts", format_automatic_thoughts(profile)},
                                     {"plan", plan.plan_text},
                                     {"action_order", json_list(plan.actions.keys)}});
}

std::string planner(std::span<const DialogueTurn> diagnostic_history, std::span<const CbtStrategy> strategies) {
  std::string list;
  for (const auto& s : strategies)
    list += std::string(marker::kStrategyLine) + std::string(plan::display_name(s.name)) + ": " + s.description + "\n";
  return render(kPlanner, {{"history", format_history(diagnostic_history)}, {"strategies", list}});
}

std::string ctrs8(std::span<const DialogueTurn> transcript) {
  return render(kCtrs8, {{"rubric", rubric_block(rubrics::kCtrs8, "0-6")},
                         {"history", format_history(transcript)},
                         {"format", score_reason_format(rubrics::kCtrs8, "0-6", "_score_reason")}});
}

std::string adherence(std::span<const DialogueTurn> diagnostic, const StagePlan& plan,
                      std::span<const DialogueTurn> intervention) {
  return render(kAdherence, {{"rubric", rubric_block(rubrics::kAdherence, "1-5")},
                             {"dial1", format_history(diagnostic)},
                             {"plan", plan.plan_text},
                             {"action", json_list(plan.actions.keys)},
                             {"dial2", format_history(intervention)},
                             {"format", score_reason_format(rubrics::kAdherence, "1-5", "_reason")}});
}

std::string client(const ClientProfile& profile, std::span<const DialogueTurn> history,
                   const std::string& additional_instruction) {
  return render(kClient, {{"basic_information", format_basic_information(profile)},
                          {"personality", format_personality(profile)},
                          {"surface_level_problem", profile.surface_level_problem},
                          {"triggering_situation", profile.triggering_situation},
                          {"automatic_thoughts", format_automatic_thoughts(profile)},
                          {"history", format_history(history)},
                          {"additional_instruction", additional_instruction}});
}

std::string counselor(std::span<const DialogueTurn> history, const CounselorContext& ctx) {
  const bool diag = ctx.plan == nullptr || ctx.plan->stage == Stage::Diagnostic;
  return render(kCounselor,
                {{"name", ctx.profile ? ctx.profile->name : std::string("the client")},
                 {"stage", diag ? "diagnostic (understanding)" : "intervention (cognitive reframing)"},
                 {"plan", ctx.plan ? ctx.plan->plan_text : std::string()},
                 {"order_marker", diag ? marker::kStageOneOrder : marker::kStageTwoOrder},
                 {"action_order", ctx.plan ? json_list(ctx.plan->actions.keys) : std::string("[]")},
                 {"turn_marker", marker::kTurnOf},
                 {"turn_num", std::to_string(ctx.turn_num)},
                 {"max_turns", std::to_string(ctx.max_turns)},
                 {"current_marker", marker::kCurrentAction},
                 {"current_action", ctx.current_action},
                 {"next_marker", marker::kNextAction},
                 {"next_action", ctx.next_action},
                 {"history", format_history(history)}});
}

namespace {

std::string candidate_block(std::span<const std::string> candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out += std::string(marker::kCandidate) + std::to_string(i + 1) + ": " + candidates[i] + "\n";
  return out;
}

}  // namespace

std::string evaluate_utterances(const ClientProfile& profile, std::span<const DialogueTurn> history,
                                std::span<const std::string> candidates) {
  std::string profile_text = format_basic_information(profile) + "\npersonality: " + format_personality(profile) +
                             "\nsurface-level problem: " + profile.surface_level_problem +
                             "\ntriggering situation: " + profile.triggering_situation +
                             "\nautomatic thoughts: " + format_automatic_thoughts(profile);
  return render(kEvalUtterances, {{"profile", profile_text},
                                  {"history", format_history(history)},
                                  {"candidates", candidate_block(candidates)},
                                  {"rubric", rubric_block(rubrics::kUtterance, "1-5")},
                                  {"count", std::to_string(candidates.size())},
                                  {"format", score_reason_format(rubrics::kUtterance, "1-5", "_reason")}});
}

std::string evaluate_plans(std::span<const DialogueTurn> history, std::span<const std::string> candidates) {
  return render(kEvalPlans, {{"history", format_history(history)},
                             {"candidates", candidate_block(candidates)},
                             {"rubric", rubric_block(rubrics::kPlan, "1-5")},
                             {"count", std::to_string(candidates.size())},
                             {"format", score_reason_format(rubrics::kPlan, "1-5", "_reason")}});
}

std::string ctrs7(std::span<const DialogueTurn> transcript) {
  return render(kCtrs7, {{"rubric", rubric_block(rubrics::kCtrs7, "0-6")},
                         {"history", format_history(transcript)},
                         {"format", score_reason_format(rubrics::kCtrs7, "0-6", "_score_reason")}});
}

std::string srs(std::span<const DialogueTurn> transcript) {
  std::string metrics;
  for (std::size_t i = 0; i < rubrics::kSrs.size(); ++i)
    metrics += "- Metric " + std::to_string(i + 1) + ": " + std::string(rubrics::kSrs[i].key) + "\n  " +
               std::string(rubrics::kSrs[i].description) + "\n";
  return render(kSrs, {{"dialogue", format_history(transcript)}, {"metrics", metrics}});
}

std::string target(std::span<const DialogueTurn> transcript) {
  return render(kTarget, {{"dialogue", format_history(transcript)}});
}

std::string tagging(std::span<const DialogueTurn> transcript) {
  std::size_t counselors = 0;
  for (const auto& t : transcript) counselors += t.role == Role::Counselor;
  return render(kTagging, {{"dialogue", format_numbered(transcript)}, {"count", std::to_string(counselors)}});
}

std::string head_to_head(std::span<const DialogueTurn> first, std::span<const DialogueTurn> second,
                         std::span<const std::string> criteria) {
  std::string list;
  std::string format = "{\n";
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string_view question;
    for (const auto& item : rubrics::kHeadToHead)
      if (item.key == criteria[i]) question = item.description;
    list += "- " + criteria[i] + (question.empty() ? std::string() : ": " + std::string(question)) + "\n";
    format += "  \"" + criteria[i] + "\": \"A\" | \"B\" | \"Tie\"" + (i + 1 < criteria.size() ? ",\n" : "\n");
  }
  format += "}";
  return render(kHeadToHead, {{"first", format_history(first)},
                              {"second", format_history(second)},
                              {"criteria", list},
                              {"format", format}});
}

}  // namespace stepforge::prompts
