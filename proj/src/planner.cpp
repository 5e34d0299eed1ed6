#include "sas/planner.hpp"

#include "sas/errors.hpp"

namespace sas {

EvaluationBatch evaluate_candidates(Environment& env, const ActionCatalogue& catalogue,
                                    std::span<const int> indices) {
    EvaluationBatch batch;
    batch.evaluations.reserve(indices.size());
    for (const int index : indices) {
        CandidateEvaluation eval;
        eval.action_index = index;
        const Action& action = catalogue.at(index);

        const Legality legality = env.is_legal(action);
        eval.legal = legality.legal;
        eval.violations = legality.violations;
        if (!legality.legal) {
            // statically illegal candidates are filtered without spending budget
            batch.evaluations.push_back(std::move(eval));
            continue;
        }
        try {
            const SimOutcome sim = env.simulate(action);
            eval.predicted_risk = sim.risk;
            eval.predicted_done = sim.done;
            eval.predicted_reason = sim.reason;
        } catch (const SimulationBudgetExhausted&) {
            batch.budget_exhausted = true;
            batch.evaluations.push_back(std::move(eval));
            break;
        }
        batch.evaluations.push_back(std::move(eval));
    }
    return batch;
}

std::pair<Action, SelectionDiagnostics> select_action(Environment& env,
                                                      const ActionCatalogue& catalogue,
                                                      const PolicyParams& params, int k) {
    const std::vector<double> probs = forward(params, env.observation());
    const std::vector<int> candidates = top_k(probs, k);
    const EvaluationBatch batch = evaluate_candidates(env, catalogue, candidates);

    SelectionDiagnostics diag;
    diag.k = k;
    diag.considered = static_cast<int>(batch.evaluations.size());

    // survivors keep the episode alive; collapse shows up as predicted_done
    // with a terminal reason, end-of-scenario is filtered the same way
    const CandidateEvaluation* best = nullptr;
    for (const auto& eval : batch.evaluations) {
        if (!eval.legal || !eval.predicted_risk.has_value() || eval.predicted_done) continue;
        ++diag.survivors;
        if (best == nullptr) {
            best = &eval;
            continue;
        }
        const double risk = *eval.predicted_risk, best_risk = *best->predicted_risk;
        if (risk < best_risk) {
            best = &eval;
        } else if (risk == best_risk) {
            const double p = probs[static_cast<size_t>(eval.action_index)];
            const double bp = probs[static_cast<size_t>(best->action_index)];
            if (p > bp || (p == bp && eval.action_index < best->action_index)) best = &eval;
        }
    }

    if (best == nullptr) {
        diag.fallback = true;
        diag.chosen_index = 0;
        diag.predicted_risk = env.current_risk();
        diag.chosen_probability = probs.empty() ? 0.0 : probs[0];
        return {Action::nothing(), diag};
    }
    diag.chosen_index = best->action_index;
    diag.predicted_risk = *best->predicted_risk;
    diag.chosen_probability = probs[static_cast<size_t>(best->action_index)];
    return {catalogue.at(best->action_index), diag};
}

}  // namespace sas
