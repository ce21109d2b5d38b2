#include "bifield/moment_hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <ostream>
#include <unordered_map>
#include <utility>

#include "bifield/errors.hpp"
#include "bifield/kernels.hpp"
#include "bifield/math_util.hpp"

namespace bifield {

namespace {

using Field = std::vector<double>;

// Circulant products out(x) = sum_y kernel(x - y) f(y).  The site-difference
// table is precomputed when it fits comfortably in memory.
class Circulant {
  public:
    explicit Circulant(const TorusGeometry& geom) : geom_(geom) {
        std::int64_t v = geom.volume();
        if (v * v <= 4'194'304) {
            diff_.resize(static_cast<std::size_t>(v * v));
            for (std::int64_t x = 0; x < v; ++x)
                for (std::int64_t y = 0; y < v; ++y)
                    diff_[static_cast<std::size_t>(x * v + y)] =
                        static_cast<std::int32_t>(geom.subtract(x, y));
        }
    }

    void apply(const Field& kernel, const Field& f, Field& out) const {
        std::int64_t v = geom_.volume();
        out.assign(static_cast<std::size_t>(v), 0.0);
        if (!diff_.empty()) {
            for (std::int64_t x = 0; x < v; ++x) {
                const std::int32_t* row = diff_.data() + x * v;
                double acc = 0.0;
                for (std::int64_t y = 0; y < v; ++y) acc += kernel[row[y]] * f[y];
                out[static_cast<std::size_t>(x)] = acc;
            }
        } else {
            for (std::int64_t x = 0; x < v; ++x) {
                double acc = 0.0;
                for (std::int64_t y = 0; y < v; ++y)
                    acc += kernel[geom_.subtract(x, y)] * f[y];
                out[static_cast<std::size_t>(x)] = acc;
            }
        }
    }

  private:
    const TorusGeometry& geom_;
    std::vector<std::int32_t> diff_;
};

// Displacement index tables for the sparse offspring convolution
// (b conv f)(x) = sum_z b(z) f(x + z); symmetric laws make the sign
// convention immaterial.
struct SparseConv {
    std::vector<double> weights;
    std::vector<std::vector<std::int64_t>> shifted;  // per support entry, per site

    SparseConv() = default;
    SparseConv(const StepDistribution& law, const TorusGeometry& geom) {
        std::int64_t v = geom.volume();
        for (const auto& entry : law.entries) {
            weights.push_back(entry.second);
            std::vector<std::int64_t> idx(static_cast<std::size_t>(v));
            for (std::int64_t x = 0; x < v; ++x) idx[x] = geom.displaced(x, entry.first);
            shifted.push_back(std::move(idx));
        }
    }

    void apply(const Field& f, Field& out) const {
        std::size_t v = out.size();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t s = 0; s < weights.size(); ++s) {
            const double w = weights[s];
            const std::int64_t* idx = shifted[s].data();
            for (std::size_t x = 0; x < v; ++x) out[x] += w * f[idx[x]];
        }
    }
};

// Offspring-count weights W_i = sum_{l >= i+1} beta_l C(l-1, i): the rate of
// picking i marked offspring out of a split, summed over split sizes.
std::vector<double> offspring_pick_weights(const ModelParams& params) {
    int lmax = params.max_offspring();
    std::vector<double> w(static_cast<std::size_t>(std::max(lmax, 1)), 0.0);
    for (int l = 2; l <= lmax; ++l) {
        double beta = params.split_rate(l);
        if (beta <= 0.0) continue;
        for (int i = 1; i <= l - 1; ++i)
            w[static_cast<std::size_t>(i)] += beta * binomial(l - 1, i);
    }
    return w;  // index i, entry 0 unused
}

// Composition product sums CS[c][i](x) = sum over (j_1..j_i >= 1, sum = c)
// of prod_s conv[j_s](x), with conv[j] = (b conv reduced moment j).
struct SourceAssembler {
    const ValidatedModel& model;
    const TorusGeometry& geom;
    SparseConv bconv;
    std::vector<double> pick;  // W_i
    int max_parts;             // largest useful i
    mutable std::map<std::pair<int, int>, std::vector<std::vector<int>>> comp_cache_;

    SourceAssembler(const ValidatedModel& m, const TorusGeometry& g)
        : model(m), geom(g) {
        if (m.split_total() > 0.0) {
            bconv = SparseConv(m.params().offspring_law, g);
            pick = offspring_pick_weights(m.params());
            max_parts = m.max_offspring() - 1;
        } else {
            max_parts = 0;
        }
    }

    bool trivial() const { return max_parts == 0; }

    const std::vector<std::vector<int>>& comps(int total, int parts) const {
        auto key = std::make_pair(total, parts);
        auto it = comp_cache_.find(key);
        if (it == comp_cache_.end())
            it = comp_cache_.emplace(key, compositions(total, parts)).first;
        return it->second;
    }

    // Reduced sources for every order 1..K at once, from the reduced state.
    // out[k-1] is overwritten; order 1 gets zero.
    void reduced_sources(const std::vector<Field>& u, std::vector<Field>& out) const {
        std::size_t v = static_cast<std::size_t>(geom.volume());
        int kmax = static_cast<int>(u.size());
        for (auto& f : out) std::fill(f.begin(), f.end(), 0.0);
        if (trivial() || kmax < 2) return;

        std::vector<Field> conv(static_cast<std::size_t>(kmax));
        for (int j = 1; j <= kmax - 1; ++j) {
            conv[j - 1].resize(v);
            bconv.apply(u[j - 1], conv[j - 1]);
        }

        // cs[c][i] for c = 1..kmax, i = 1..min(c, max_parts); the single-part
        // sum at c = kmax would need conv[kmax] and is never consumed
        std::vector<std::vector<Field>> cs(static_cast<std::size_t>(kmax + 1));
        for (int c = 1; c <= kmax; ++c) {
            int itop = std::min(c, max_parts);
            int ilow = (c == kmax) ? 2 : 1;
            cs[c].assign(static_cast<std::size_t>(itop + 1), Field());
            for (int i = ilow; i <= itop; ++i) {
                Field acc(v, 0.0);
                Field prod(v);
                for (const auto& comp : comps(c, i)) {
                    std::fill(prod.begin(), prod.end(), 1.0);
                    for (int part : comp) {
                        const Field& cj = conv[part - 1];
                        for (std::size_t x = 0; x < v; ++x) prod[x] *= cj[x];
                    }
                    for (std::size_t x = 0; x < v; ++x) acc[x] += prod[x];
                }
                cs[c][i] = std::move(acc);
            }
        }

        // weighted composition sums H_c = sum_i W_i cs[c][i] starting at
        // i = 1 (parent carries a positive order) and i = 2 (parent idle)
        for (int k = 2; k <= kmax; ++k) {
            Field& sk = out[k - 1];
            for (int n = 1; n <= k - 1; ++n) {
                int c = k - n;
                int itop = std::min(c, max_parts);
                const Field& un = u[n - 1];
                for (int i = 1; i <= itop; ++i) {
                    double w = pick[static_cast<std::size_t>(i)];
                    if (w == 0.0) continue;
                    const Field& csf = cs[c][i];
                    for (std::size_t x = 0; x < v; ++x) sk[x] += w * un[x] * csf[x];
                }
            }
            int itop = std::min(k, max_parts);
            for (int i = 2; i <= itop; ++i) {
                double w = pick[static_cast<std::size_t>(i)];
                if (w == 0.0) continue;
                const Field& csf = cs[k][i];
                for (std::size_t x = 0; x < v; ++x) sk[x] += w * csf[x];
            }
        }
    }
};

Field propagator_field(const ValidatedModel& model, const TorusGeometry& geom, double t) {
    if (!model.walk()) {
        Field delta(static_cast<std::size_t>(geom.volume()), 0.0);
        delta[0] = 1.0;
        return delta;
    }
    Field f = torus_propagator(*model.walk(), geom.side(), geom.dimension(), t);
    // discrete cosine sums can leave tiny negative dust at remote sites
    for (double& x : f) x = std::max(x, 0.0);
    return f;
}

std::size_t origin_index() { return 0; }

}  // namespace

const std::vector<double>& MomentTable::field(int order, std::size_t time_index) const {
    return values.at(static_cast<std::size_t>(order - 1)).at(time_index);
}

double max_stable_step(const ValidatedModel& model) {
    const ModelParams& p = model.params();
    double scale = p.jump_rate + p.death_rate + model.split_total() * model.max_offspring();
    return 0.1 / scale;
}

struct HierarchyStepper::Impl {
    ValidatedModel model;
    TorusGeometry geom;
    Circulant circ;
    SourceAssembler assembler;
    double gap;
    double h_max;
    double now = 0.0;
    // half-step propagator kernels, cached per distinct step size
    std::unordered_map<std::uint64_t, Field> half_kernel;
    std::vector<Field> u;
    std::vector<Field> ka, kb, kc, kd, c1, c2, stage, tmp;

    Impl(const ValidatedModel& m, const TorusGeometry& g, int max_order)
        : model(m),
          geom(g),
          circ(geom),
          assembler(model, geom),
          gap(model.gap()),
          h_max(max_stable_step(model)) {
        std::size_t v = static_cast<std::size_t>(geom.volume());
        u.assign(static_cast<std::size_t>(max_order), Field(v, 0.0));
        u[0][origin_index()] = 1.0;
        for (auto* w : {&ka, &kb, &kc, &kd, &c1, &c2, &stage, &tmp})
            w->assign(u.size(), Field(v));
    }

    const Field* kernel_for(double h) {
        if (!model.walk()) return nullptr;
        std::uint64_t key;
        double half = 0.5 * h;
        static_assert(sizeof(key) == sizeof(half));
        std::memcpy(&key, &half, sizeof(key));
        auto it = half_kernel.find(key);
        if (it == half_kernel.end())
            it = half_kernel.emplace(key, propagator_field(model, geom, half)).first;
        return &it->second;
    }

    void advance(double h) {
        if (!(h > 0.0))
            throw Error(ErrorKind::validation_error, "step must be positive");
        if (h > h_max * (1.0 + 1e-12))
            throw Error(ErrorKind::unstable_step,
                        "time grid step " + std::to_string(h) +
                            " exceeds the stability bound " + std::to_string(h_max));
        std::size_t v = static_cast<std::size_t>(geom.volume());
        const Field* kern = kernel_for(h);
        const double damp_half = std::exp(-gap * 0.5 * h);
        auto apply_half = [&](const Field& f, Field& out) {
            if (kern) {
                circ.apply(*kern, f, out);
                for (double& x : out) x *= damp_half;
            } else {
                out = f;
                for (double& x : out) x *= damp_half;
            }
        };

        assembler.reduced_sources(u, ka);
        for (std::size_t k = 0; k < u.size(); ++k) {
            apply_half(u[k], c1[k]);
            apply_half(ka[k], c2[k]);
            for (std::size_t x = 0; x < v; ++x)
                stage[k][x] = c1[k][x] + 0.5 * h * c2[k][x];
        }
        assembler.reduced_sources(stage, kb);
        for (std::size_t k = 0; k < u.size(); ++k)
            for (std::size_t x = 0; x < v; ++x)
                stage[k][x] = c1[k][x] + 0.5 * h * kb[k][x];
        assembler.reduced_sources(stage, kc);
        for (std::size_t k = 0; k < u.size(); ++k) {
            for (std::size_t x = 0; x < v; ++x)
                tmp[k][x] = c1[k][x] + h * kc[k][x];
            apply_half(tmp[k], stage[k]);
        }
        assembler.reduced_sources(stage, kd);
        for (std::size_t k = 0; k < u.size(); ++k) {
            for (std::size_t x = 0; x < v; ++x)
                tmp[k][x] = c1[k][x] +
                            (h / 6.0) * (c2[k][x] + 2.0 * kb[k][x] + 2.0 * kc[k][x]);
            apply_half(tmp[k], u[k]);
            for (std::size_t x = 0; x < v; ++x) {
                u[k][x] += (h / 6.0) * kd[k][x];
                if (u[k][x] < 0.0) {
                    if (u[k][x] < -1e-10)
                        throw Error(ErrorKind::non_positive_detected,
                                    "negative moment value " + std::to_string(u[k][x]) +
                                        " at order " + std::to_string(k + 1));
                    u[k][x] = 0.0;
                }
            }
        }
        now += h;
    }
};

HierarchyStepper::HierarchyStepper(const ValidatedModel& model,
                                   const TorusGeometry& geom, int max_order) {
    if (max_order < 1)
        throw Error(ErrorKind::validation_error, "max_order must be at least 1");
    if (geom.dimension() != model.dimension())
        throw Error(ErrorKind::validation_error,
                    "lattice dimension does not match the model");
    impl_ = std::make_unique<Impl>(model, geom, max_order);
}

HierarchyStepper::~HierarchyStepper() = default;
HierarchyStepper::HierarchyStepper(HierarchyStepper&&) noexcept = default;
HierarchyStepper& HierarchyStepper::operator=(HierarchyStepper&&) noexcept = default;

void HierarchyStepper::advance(double step) { impl_->advance(step); }

double HierarchyStepper::time() const { return impl_->now; }

int HierarchyStepper::max_order() const { return static_cast<int>(impl_->u.size()); }

double HierarchyStepper::max_step() const { return impl_->h_max; }

const std::vector<std::vector<double>>& HierarchyStepper::reduced_state() const {
    return impl_->u;
}

double HierarchyStepper::reduced_mass(int order) const {
    if (order < 1 || order > max_order())
        throw Error(ErrorKind::validation_error, "order outside the stepper range");
    const Field& f = impl_->u[static_cast<std::size_t>(order - 1)];
    double acc = 0.0;
    for (double x : f) acc += x;
    return acc;
}

std::vector<double> source_term(int order,
                                const std::vector<std::vector<double>>& reduced_lower,
                                const ValidatedModel& model,
                                const TorusGeometry& geom) {
    if (order < 1)
        throw Error(ErrorKind::validation_error, "moment order must be at least 1");
    std::size_t v = static_cast<std::size_t>(geom.volume());
    if (static_cast<int>(reduced_lower.size()) < order - 1)
        throw Error(ErrorKind::validation_error,
                    "source_term needs all lower reduced moments");
    std::vector<Field> u(static_cast<std::size_t>(order));
    for (int j = 1; j <= order - 1; ++j) u[j - 1] = reduced_lower[j - 1];
    u[order - 1].assign(v, 0.0);

    SourceAssembler assembler(model, geom);
    std::vector<Field> out(static_cast<std::size_t>(order), Field(v, 0.0));
    assembler.reduced_sources(u, out);
    double scale = factorial(order);
    Field result = std::move(out[order - 1]);
    for (double& x : result) x *= scale;
    return result;
}

MomentTable solve_hierarchy(const ValidatedModel& model, int torus_side,
                            int max_order, const std::vector<double>& time_grid) {
    if (max_order < 1)
        throw Error(ErrorKind::validation_error, "max_order must be at least 1");
    if (time_grid.empty() || time_grid.front() != 0.0)
        throw Error(ErrorKind::validation_error, "time grid must start at 0");
    for (std::size_t i = 1; i < time_grid.size(); ++i)
        if (!(time_grid[i] > time_grid[i - 1]))
            throw Error(ErrorKind::validation_error, "time grid must increase strictly");

    TorusGeometry geom(model.dimension(), torus_side);
    HierarchyStepper stepper(model, geom, max_order);

    MomentTable table{geom, max_order, time_grid, {}};
    table.values.assign(static_cast<std::size_t>(max_order), {});
    for (int k = 1; k <= max_order; ++k)
        table.values[k - 1].reserve(time_grid.size());

    auto store_row = [&]() {
        const auto& u = stepper.reduced_state();
        for (int k = 1; k <= max_order; ++k) {
            Field row = u[k - 1];
            double scale = factorial(k);
            for (double& x : row) x *= scale;
            table.values[k - 1].push_back(std::move(row));
        }
    };
    store_row();

    for (std::size_t step = 1; step < time_grid.size(); ++step) {
        stepper.advance(time_grid[step] - time_grid[step - 1]);
        store_row();
    }
    return table;
}

double duhamel_residual(int order, const MomentTable& table,
                        const ValidatedModel& model) {
    if (order < 1 || order > table.max_order)
        throw Error(ErrorKind::validation_error, "order outside the solved table");
    const TorusGeometry& geom = table.geom;
    std::size_t v = static_cast<std::size_t>(geom.volume());
    std::size_t n = table.times.size();
    const double gap = model.gap();
    const double scale = factorial(order);
    Circulant circ(geom);
    SourceAssembler assembler(model, geom);

    // reduced sources at every grid time
    std::vector<Field> sources(n);
    if (order >= 2 && !assembler.trivial()) {
        std::vector<Field> u(static_cast<std::size_t>(order), Field(v));
        std::vector<Field> out(static_cast<std::size_t>(order), Field(v));
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 1; j <= order; ++j) {
                const Field& mj = table.field(j, i);
                double inv = 1.0 / factorial(j);
                for (std::size_t x = 0; x < v; ++x) u[j - 1][x] = mj[x] * inv;
            }
            assembler.reduced_sources(u, out);
            sources[i] = out[order - 1];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) sources[i].assign(v, 0.0);
    }

    // evaluation times thinned to keep the double loop affordable
    std::vector<std::size_t> evals;
    std::size_t stride = (n - 1) / 256 + 1;
    for (std::size_t i = 0; i < n; i += stride) evals.push_back(i);
    if (evals.back() != n - 1) evals.push_back(n - 1);

    std::unordered_map<std::uint64_t, Field> lag_kernel;
    auto kernel_for = [&](double lag) -> const Field& {
        std::uint64_t key;
        static_assert(sizeof(key) == sizeof(lag));
        std::memcpy(&key, &lag, sizeof(key));
        auto it = lag_kernel.find(key);
        if (it == lag_kernel.end())
            it = lag_kernel.emplace(key, propagator_field(model, geom, lag)).first;
        return it->second;
    };

    double worst = 0.0;
    Field rhs(v), term(v);
    for (std::size_t e : evals) {
        double t = table.times[e];
        std::fill(rhs.begin(), rhs.end(), 0.0);
        if (order == 1) {
            const Field& p = kernel_for(t);
            double damp = std::exp(-gap * t);
            for (std::size_t x = 0; x < v; ++x) rhs[x] = damp * p[x];
        }
        if (e > 0) {
            for (std::size_t j = 0; j <= e; ++j) {
                double w;
                if (j == 0)
                    w = 0.5 * (table.times[1] - table.times[0]);
                else if (j == e)
                    w = 0.5 * (table.times[e] - table.times[e - 1]);
                else
                    w = 0.5 * (table.times[j + 1] - table.times[j - 1]);
                double lag = t - table.times[j];
                const Field& p = kernel_for(lag);
                circ.apply(p, sources[j], term);
                double damp = w * std::exp(-gap * lag);
                for (std::size_t x = 0; x < v; ++x) rhs[x] += damp * term[x];
            }
        }
        const Field& stored = table.field(order, e);
        for (std::size_t x = 0; x < v; ++x)
            worst = std::max(worst, std::fabs(rhs[x] - stored[x] / scale));
    }
    return worst;
}

double m1_exact(const ValidatedModel& model, double t, const IntVec& x) {
    if (t < 0.0)
        throw Error(ErrorKind::validation_error, "time must be nonnegative");
    double damp = std::exp(-model.gap() * t);
    if (!model.walk()) return is_zero_vec(x) ? damp : 0.0;
    IntVec zero(static_cast<std::size_t>(model.dimension()), 0);
    return damp * transition_probability(*model.walk(), t, x, zero);
}

void write_csv(const MomentTable& table, std::ostream& out) {
    int d = table.geom.dimension();
    out << "order,time";
    for (int a = 0; a < d; ++a) out << ",x" << (a + 1);
    out << ",value\n";
    char buf[64];
    for (int k = 1; k <= table.max_order; ++k) {
        for (std::size_t i = 0; i < table.times.size(); ++i) {
            const auto& field = table.field(k, i);
            for (std::int64_t s = 0; s < table.geom.volume(); ++s) {
                IntVec c = table.geom.decode(s);
                out << k;
                std::snprintf(buf, sizeof buf, ",%.17g", table.times[i]);
                out << buf;
                for (int a = 0; a < d; ++a) out << ',' << c[a];
                std::snprintf(buf, sizeof buf, ",%.17g", field[static_cast<std::size_t>(s)]);
                out << buf << '\n';
            }
        }
    }
}

}  // namespace bifield
