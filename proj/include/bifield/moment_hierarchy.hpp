// Factorial moments m_k(t, x) of the descendant count at the origin for a
// single ancestor started at x, computed on a torus by integrating the
// moment equations.  All orders share the linear transport
//   d/dt m = (jump part + spread part - gap) m
// which is applied exactly through the torus propagator; the split sources
// couple each order to the lower ones and are advanced with a fourth order
// integrating factor Runge-Kutta scheme, so order 1 is exact up to roundoff.
#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "bifield/lattice.hpp"
#include "bifield/model.hpp"

namespace bifield {

struct MomentTable {
    TorusGeometry geom;
    int max_order = 0;
    std::vector<double> times;
    // values[k-1][i][site] = m_k(times[i], site), unnormalized (k! included).
    std::vector<std::vector<std::vector<double>>> values;

    const std::vector<double>& field(int order, std::size_t time_index) const;
};

// Step bound for the explicit part of the integrator,
// 0.1 / (jump_rate + death_rate + total_split_rate * max_offspring).
double max_stable_step(const ValidatedModel& model);

// Incremental integrator over the reduced moments m_k / k!.  Starts from the
// point-mass initial condition (order 1 is a delta at the origin, higher
// orders vanish) and advances in caller-chosen steps, so long horizons can be
// integrated without storing a full table.
class HierarchyStepper {
  public:
    HierarchyStepper(const ValidatedModel& model, const TorusGeometry& geom,
                     int max_order);
    ~HierarchyStepper();
    HierarchyStepper(HierarchyStepper&&) noexcept;
    HierarchyStepper& operator=(HierarchyStepper&&) noexcept;

    void advance(double step);
    double time() const;
    int max_order() const;
    double max_step() const;
    // reduced_state()[k-1][site] = m_k(time(), site) / k!
    const std::vector<std::vector<double>>& reduced_state() const;
    // Sum over sites of the reduced moment of one order.
    double reduced_mass(int order) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Integrates the hierarchy on the given grid; the grid is also the
// integration grid, so every increment must respect max_stable_step.
// The grid must start at 0 and increase strictly.
MomentTable solve_hierarchy(const ValidatedModel& model, int torus_side,
                            int max_order, const std::vector<double>& time_grid);

// Split source S_k of the unnormalized order-k equation (the k! scaling is
// included) given the reduced moments m_j / j! for j = 1..k-1 on the torus.
std::vector<double> source_term(int order,
                                const std::vector<std::vector<double>>& reduced_lower,
                                const ValidatedModel& model,
                                const TorusGeometry& geom);

// Sup-norm discrepancy between the stored reduced moment of one order and
// its independent integral representation (propagator applied to the initial
// condition plus the time-convolution of the propagator with the sources,
// trapezoid rule on the table grid).
double duhamel_residual(int order, const MomentTable& table,
                        const ValidatedModel& model);

// Closed form for the first moment on the full lattice:
// exp(-gap t) * transition probability of the effective walk.
double m1_exact(const ValidatedModel& model, double t, const IntVec& x);

// Rows "order,time,x1[,x2[,x3]],value" after a matching header.
void write_csv(const MomentTable& table, std::ostream& out);

}  // namespace bifield
