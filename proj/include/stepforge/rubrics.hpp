#pragma once

// Item catalogs for every rubric the judges score.

#include <array>
#include <string_view>

namespace stepforge::rubrics {

struct Item {
  std::string_view key;
  std::string_view description;
};

/// Reduced CTRS used for corpus filtering, 0-6.
inline constexpr std::array<Item, 8> kCtrs8 = {{
    {"Feedback", "Elicits and responds to feedback on the client's understanding and reactions."},
    {"Understanding", "Grasps and communicates the client's internal reality."},
    {"Interpersonal", "Warmth, confidence, genuineness and professionalism."},
    {"Collaboration", "Works with the client as an active partner on an important problem."},
    {"Guided_discovery", "Uses questioning to let the client reach conclusions instead of persuading."},
    {"Focusing", "Elicits and stays on the cognitions or behaviors most relevant to change."},
    {"Strategy", "Selects a coherent, promising CBT strategy."},
    {"CBTtechniques", "Applies CBT techniques skillfully."},
}};

/// Plan, action list and dialogue consistency, 1-5.
inline constexpr std::array<Item, 3> kAdherence = {{
    {"Clinical_Appropriateness", "How clinically appropriate and well grounded the plan is."},
    {"Plan_Action_Alignment", "How well the action list operationalizes the plan."},
    {"Dialogue_Adherence", "How faithfully the intervention dialogue follows the plan and action list."},
}};

/// Candidate counselor utterance rubric, 1-5.
inline constexpr std::array<Item, 3> kUtterance = {{
    {"AlignmentWithAction", "Follows the expected therapeutic progress given the context and planned action."},
    {"ValidationWarmth", "Validates the client's experience with warmth, empathy and no judgment."},
    {"Clarity", "Clear, understandable and accessible for the client."},
}};

/// Candidate plan and action sequence rubric, 1-5.
inline constexpr std::array<Item, 3> kPlan = {{
    {"Completeness", "Includes the essential elements of a CBT-informed therapeutic step."},
    {"Feasibility", "Realistic and achievable given the client's current state."},
    {"Alignment", "Fits what the next therapeutic action should reasonably accomplish."},
}};

/// Counselor competence, 0-6.
inline constexpr std::array<Item, 7> kCtrs7 = {{
    {"Understanding", "Accurately understands and reflects explicit and implicit concerns."},
    {"InterpersonalEffectiveness", "Maintains a positive therapeutic relationship."},
    {"Collaboration", "Engages the client as an active partner in goals and decisions."},
    {"GuidedDiscovery", "Uses questioning and guided exploration rather than lecturing."},
    {"Focus", "Keeps attention on the key cognitions or behaviors relevant to change."},
    {"Strategy", "Applies a coherent, appropriate CBT strategy."},
    {"AutomaticThoughtCoverage", "Identifies and addresses the client's core automatic thoughts."},
}};

/// Client-reported session reactions, 1-5, in questionnaire order.
inline constexpr std::array<Item, 14> kSrs = {{
    {"Insight", "I realized something new about myself or other people."},
    {"PerceivedSupport", "I feel understood, supported, or reassured by my therapist."},
    {"CognitiveDistance", "I feel more distanced from certain feelings, thoughts, or memories."},
    {"Empowerment", "I feel more empowered, hopeful, or positive about myself."},
    {"TherapeuticStuckness", "I feel stuck, blocked, or unable to progress in therapy. (Higher score indicates greater stuckness.)"},
    {"InterpersonalHope", "I feel more positively or hopeful about another person or people."},
    {"GoalClarity", "I have become clearer about the problems or goals for me to work on."},
    {"InterventionDiscomfort", "I feel uncomfortable doing what my therapist is suggesting for me to do. (Higher score indicates greater discomfort.)"},
    {"CopingSkills", "I feel I have improved my skills or learned new strategies to cope with my problems."},
    {"EmotionalDeterioration", "I now feel worse than when I started the session. (Higher score indicates worse emotional state.)"},
    {"Engagement", "I feel personally invested in what I need to do in therapy to achieve my goals."},
    {"GuidanceDeficit", "I feel a lack of direction or guidance from my therapist. (Higher score indicates less perceived guidance.)"},
    {"EmotionalRelief", "I feel emotionally relieved or less burdened."},
    {"SelfAcceptance", "I have accepted some aspects of myself or my situation more than before."},
}};

/// Head-to-head transcript comparison criteria.
inline constexpr std::array<Item, 7> kHeadToHead = {{
    {"Understanding", "Which counselor better understood the client's experiences, thoughts, and emotional state?"},
    {"InterpersonalEffectiveness", "Which counselor showed stronger empathy, warmth, validation, and responsiveness?"},
    {"GuidedCounseling", "Which counselor gave clearer and more effective guidance?"},
    {"StrategyAppropriateness", "Which counselor selected and applied more appropriate therapeutic strategies?"},
    {"SpecificityOfCounseling", "Which counselor gave more specific, concrete responses tailored to the client?"},
    {"AutomaticThoughtCoverage", "Which counselor more effectively identified the client's automatic thoughts?"},
    {"OverallPreference", "Overall, which counselor would you prefer for this client?"},
}};

/// Human dataset-quality rating dimensions, 1-5 Likert.
inline constexpr std::array<Item, 6> kLikertDimensions = {{
    {"CoherenceSurfaceAutomatic", "Coherence between Surface-Level Problems and Automatic Thoughts"},
    {"SurfaceProblemCoverage", "Surface Problem Coverage"},
    {"AutomaticThoughtElicitation", "Automatic Thought Elicitation"},
    {"PlanActionAppropriateness", "Plan-Action Appropriateness"},
    {"ActionExecutionFidelity", "Action Execution Fidelity"},
    {"InterpersonalEffectiveness", "Interpersonal Effectiveness"},
}};

}  // namespace stepforge::rubrics
