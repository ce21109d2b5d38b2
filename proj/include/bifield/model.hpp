// Model of the branching random walk with immigration on Z^d: particles
// jump at rate jump_rate with law jump_law, die at rate death_rate, split
// into l particles at rate split_rates[l-2] (the parent stays put, the
// l-1 new particles are displaced independently by offspring_law), and
// immigrants appear at every site at rate immigration_rate.
//
// Subcriticality gap:  gap = death_rate - sum_l (l-1) split_rates[l-2].
// Validation demands gap > 0 strictly, plus the certified geometric tail
// split_rates[l-2] <= tail_coeff * tail_ratio^l for every listed l.
#pragma once

#include <optional>
#include <vector>

#include "bifield/kernels.hpp"
#include "bifield/step_distribution.hpp"

namespace bifield {

struct ModelParams {
    int dimension = 1;
    double jump_rate = 0.0;
    StepDistribution jump_law;
    double death_rate = 0.0;
    // split_rates[i] is the rate of splitting into i + 2 particles.
    std::vector<double> split_rates;
    StepDistribution offspring_law;
    double immigration_rate = 0.0;
    // Tail certificate (coefficient, ratio) with ratio in (0, 1).
    double tail_coeff = 1.0;
    double tail_ratio = 0.5;

    // Largest offspring count carried by the explicit list (>= 2 when any
    // split rate is present; 1 for a pure death model).
    int max_offspring() const noexcept {
        return split_rates.empty() ? 1 : static_cast<int>(split_rates.size()) + 1;
    }

    double split_rate(int l) const {
        int i = l - 2;
        if (i < 0 || i >= static_cast<int>(split_rates.size())) return 0.0;
        return split_rates[i];
    }
};

double compute_gap(const ModelParams& params) noexcept;

// Total split rate per particle, sum of all split_rates.
double total_split_rate(const ModelParams& params) noexcept;

// Mean number of particles added per split, sum (l-1) rate_l / sum rate_l.
// Throws DivisionByZeroRate when there are no splits.
double offspring_mean(const ModelParams& params);

// Largest offspring count worth listing for a geometric family: smallest L
// with tail_coeff * tail_ratio^(L+1) / (1 - tail_ratio) below
// 1e-12 * death_rate, so the dropped tail cannot move any observable.
int suggest_max_offspring(double tail_coeff, double tail_ratio, double death_rate);

class ValidatedModel {
  public:
    const ModelParams& params() const noexcept { return params_; }
    int dimension() const noexcept { return params_.dimension; }
    double gap() const noexcept { return gap_; }
    // Weight of the branching smear term, sum (l-1) split_rates[l-2].
    double spread_weight() const noexcept { return spread_weight_; }
    double split_total() const noexcept { return split_total_; }
    int max_offspring() const noexcept { return params_.max_offspring(); }

    // Effective single-particle walk; absent when both the jump rate and
    // the spread weight vanish (the walk is then the identity kernel).
    const std::optional<EffectiveWalk>& walk() const noexcept { return walk_; }

    friend ValidatedModel validate(const ModelParams& params);

  private:
    ModelParams params_;
    double gap_ = 0.0;
    double spread_weight_ = 0.0;
    double split_total_ = 0.0;
    std::optional<EffectiveWalk> walk_;
};

// Checks all invariants and assembles the effective walk.  Idempotent:
// validating the params of a validated model succeeds with equal results.
ValidatedModel validate(const ModelParams& params);

}  // namespace bifield
