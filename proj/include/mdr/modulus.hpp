#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mdr/cohomology.hpp"
#include "mdr/report.hpp"

namespace mdr {

Divisor divisor_prime(const Divisor& D, int p);

// Divisors m_0 = D, ..., m_t = p D' with one multiplicity raised by one per
// step. mu[i] is the chart coordinate (1..d) raised between m_i and m_{i+1}.
struct FiltrationChain {
    int p = 3;
    std::vector<Divisor> steps;
    std::vector<int> mu;

    int length() const { return static_cast<int>(mu.size()); }
    // Multiplicity m_{mu(i), i} of the raised component before the step.
    int step_multiplicity(int i) const { return steps[i].at(mu[i]); }

    // Round robin over the components, starting from the largest multiplicity.
    static FiltrationChain canonical(const Divisor& D, int p);
    // Validates a user supplied sequence m_0, ..., m_t.
    static FiltrationChain from_steps(std::vector<Divisor> steps, int p);
};

// The sequence 0 -> omega_Y[-1] -> T^m O / T^{m+1} O (x) omega -> omega_Y -> 0
// on D-twisted complexes. The first map is y -> T_0^m (y ^ dlog T_0).
struct ParameterSequence {
    std::unique_ptr<GradedComplex> A, B, C;
    ShortExactSequence ses;
    int m = 0;

    MultiIndex b_cell(const MultiIndex& alpha) const;
};
std::unique_ptr<ParameterSequence> make_parameter_sequence(const Chart& chart, const Divisor& D, int m);

// Basis monomials (alpha, I) of the obstruction quotient
// (O_Y (x) omega^{q-1}_{D'}) / (O_Y (x) omega^{q-1}_D) inside the window.
std::vector<std::pair<MultiIndex, Mask>> obstruction_basis(const Chart& chart, const Divisor& D, int q);

CheckOutcome check_cartier_modulus(const Chart& chart, const Divisor& D, int q);
CheckOutcome check_graded_acyclicity(const Chart& chart, const FiltrationChain& chain, int random_forms = 100);
CheckOutcome check_quasi_iso_inclusion(const Chart& chart, const Divisor& D, int q);
CheckOutcome check_log_kernel(const Chart& chart, const Divisor& D, int q);
CheckOutcome check_Tm_sequences(const Chart& chart, const Divisor& D, int m, int q);
CheckOutcome check_connecting_identity(const Chart& chart, const Divisor& D, int m, int q);
CheckOutcome check_ml_transition(const Chart& chart, const Divisor& D1, const Divisor& D2, int q);

// dlog(1 + c T^gamma) ^ dlog T_J generators of the log part of Z^q in the
// window, as coefficient forms of the D-twist. Constants and pure dlog T_J
// are included when D = 0.
std::vector<LogForm> log_generators(const GradedComplex& C, int q);

}  // namespace mdr
