#ifndef SAS_PLANNER_HPP
#define SAS_PLANNER_HPP

#include <optional>
#include <span>
#include <vector>

#include "sas/catalogue.hpp"
#include "sas/environment.hpp"
#include "sas/policy.hpp"

namespace sas {

struct CandidateEvaluation {
    int action_index = -1;
    bool legal = false;                   // static rule check
    std::optional<double> predicted_risk; // present iff legal and simulated
    bool predicted_done = false;
    TerminationReason predicted_reason = TerminationReason::none;
    std::vector<ViolationKind> violations;
};

struct EvaluationBatch {
    std::vector<CandidateEvaluation> evaluations;  // order-preserving
    bool budget_exhausted = false;                 // remaining candidates were not simulated
};

// One simulate() per statically-legal candidate, in the given order. The
// environment is left untouched. A finite simulation budget running out is
// reported in-band with the evaluations gathered so far.
EvaluationBatch evaluate_candidates(Environment& env, const ActionCatalogue& catalogue,
                                    std::span<const int> indices);

struct SelectionDiagnostics {
    int chosen_index = 0;
    int k = 0;
    int considered = 0;      // candidates evaluated
    int survivors = 0;       // legal and not predicted to end the episode
    bool fallback = false;   // nothing survived; do-nothing returned
    double predicted_risk = 0.0;
    double chosen_probability = 0.0;
};

// One planning step: score the catalogue with the policy, keep the top-K,
// simulate each candidate, drop those that are illegal or predicted to
// collapse or finish the episode, and return the survivor with the lowest
// predicted risk. Ties break toward higher policy probability, then lower
// index. Falls back to do-nothing when nothing survives.
std::pair<Action, SelectionDiagnostics> select_action(Environment& env,
                                                      const ActionCatalogue& catalogue,
                                                      const PolicyParams& params, int k);

}  // namespace sas

#endif
