#include "bifield/model.hpp"

#include <cmath>
#include <string>

#include "bifield/errors.hpp"

namespace bifield {

double compute_gap(const ModelParams& params) noexcept {
    double spread = 0.0;
    for (std::size_t i = 0; i < params.split_rates.size(); ++i)
        spread += static_cast<double>(i + 1) * params.split_rates[i];
    return params.death_rate - spread;
}

double total_split_rate(const ModelParams& params) noexcept {
    double total = 0.0;
    for (double r : params.split_rates) total += r;
    return total;
}

double offspring_mean(const ModelParams& params) {
    double total = total_split_rate(params);
    if (total <= 0.0)
        throw Error(ErrorKind::division_by_zero_rate, "model has no splits");
    double spread = 0.0;
    for (std::size_t i = 0; i < params.split_rates.size(); ++i)
        spread += static_cast<double>(i + 1) * params.split_rates[i];
    return spread / total;
}

int suggest_max_offspring(double tail_coeff, double tail_ratio, double death_rate) {
    if (!(tail_ratio > 0.0 && tail_ratio < 1.0) || !(tail_coeff > 0.0) || !(death_rate > 0.0))
        throw Error(ErrorKind::validation_error, "tail certificate out of range");
    const double target = 1e-12 * death_rate;
    double tail = tail_coeff * tail_ratio * tail_ratio * tail_ratio / (1.0 - tail_ratio);
    int l = 2;
    while (tail >= target && l < 4096) {
        tail *= tail_ratio;
        ++l;
    }
    if (tail >= target)
        throw Error(ErrorKind::no_convergence_within_budget, "tail never negligible");
    return l;
}

ValidatedModel validate(const ModelParams& params) {
    if (params.dimension < 1 || params.dimension > 3)
        throw Error(ErrorKind::validation_error, "dimension must be 1, 2 or 3");
    if (!(params.death_rate > 0.0))
        throw Error(ErrorKind::validation_error, "death rate must be positive");
    if (params.jump_rate < 0.0)
        throw Error(ErrorKind::validation_error, "jump rate must be nonnegative");
    if (params.immigration_rate < 0.0)
        throw Error(ErrorKind::validation_error, "immigration rate must be nonnegative");
    for (double r : params.split_rates)
        if (r < 0.0)
            throw Error(ErrorKind::validation_error, "split rates must be nonnegative");
    if (!(params.tail_ratio > 0.0 && params.tail_ratio < 1.0))
        throw Error(ErrorKind::validation_error, "tail ratio must lie in (0,1)");
    if (!(params.tail_coeff > 0.0))
        throw Error(ErrorKind::validation_error, "tail coefficient must be positive");

    // Step laws: revalidate to guarantee canonical, checked entries.
    ValidatedModel model;
    model.params_ = params;
    if (params.jump_rate > 0.0 || !params.jump_law.entries.empty()) {
        try {
            model.params_.jump_law =
                validate_step_distribution(params.jump_law.entries, params.dimension);
        } catch (const Error& e) {
            throw Error(ErrorKind::invalid_step_distribution,
                        std::string("jump law: ") + e.what());
        }
    }
    const bool has_splits = total_split_rate(params) > 0.0;
    if (has_splits || !params.offspring_law.entries.empty()) {
        try {
            model.params_.offspring_law =
                validate_step_distribution(params.offspring_law.entries, params.dimension);
        } catch (const Error& e) {
            throw Error(ErrorKind::invalid_step_distribution,
                        std::string("offspring law: ") + e.what());
        }
    }
    if (params.jump_rate > 0.0 && model.params_.jump_law.entries.empty())
        throw Error(ErrorKind::invalid_step_distribution, "jump law missing");
    if (has_splits && model.params_.offspring_law.entries.empty())
        throw Error(ErrorKind::invalid_step_distribution, "offspring law missing");

    model.gap_ = compute_gap(params);
    if (!(model.gap_ > 0.0))
        throw Error(ErrorKind::not_subcritical,
                    "subcriticality gap is " + std::to_string(model.gap_));

    // Tail certificate covers every listed split rate.
    for (std::size_t i = 0; i < params.split_rates.size(); ++i) {
        const int l = static_cast<int>(i) + 2;
        const double cap = params.tail_coeff * std::pow(params.tail_ratio, l);
        if (params.split_rates[i] > cap * (1.0 + 1e-12))
            throw Error(ErrorKind::tail_violation,
                        "split rate for l=" + std::to_string(l) + " exceeds tail bound " +
                            std::to_string(cap));
    }

    model.split_total_ = total_split_rate(params);
    model.spread_weight_ = params.death_rate - model.gap_;
    if (model.spread_weight_ < 0.0) model.spread_weight_ = 0.0;

    if (params.jump_rate > 0.0 || model.spread_weight_ > 0.0) {
        model.walk_ = make_effective_walk(
            params.jump_rate, model.params_.jump_law,
            model.spread_weight_, model.params_.offspring_law);
    }
    return model;
}

}  // namespace bifield
