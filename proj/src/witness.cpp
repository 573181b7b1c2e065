#include <fmt/format.h>

#include "mdr/errors.hpp"
#include "mdr/modulus.hpp"
#include "mdr/report.hpp"
#include "mdr/syntomic.hpp"

namespace mdr {

namespace {

Divisor divisor_of(const Json& j) { return Divisor(j.get<std::vector<int>>()); }

// True iff w is d-closed and every homogeneous part is a coboundary.
bool is_exact(const GradedComplex& C, const LogForm& w)
{
    if (!C.d(w).is_zero())
        return false;
    for (auto& a : w.multidegrees()) {
        if (!C.contains_cell(a))
            return false;
        auto H = graded_cohomology(C, w.degree(), a);
        if (!H.is_coboundary(C.to_vector(w, a)))
            return false;
    }
    return true;
}

}  // namespace

CheckOutcome rerun_check(const std::string& check, const Json& params)
{
    Chart chart = chart_from_json(params.at("chart"));
    auto get = [&](const char* k) { return params.at(k).get<int>(); };
    if (check == "cartier")
        return check_cartier_modulus(chart, divisor_of(params.at("divisor")), get("q"));
    if (check == "quasi_iso_inclusion")
        return check_quasi_iso_inclusion(chart, divisor_of(params.at("divisor")), get("q"));
    if (check == "log_kernel")
        return check_log_kernel(chart, divisor_of(params.at("divisor")), get("q"));
    if (check == "tm_sequences")
        return check_Tm_sequences(chart, divisor_of(params.at("divisor")), get("m"), get("q"));
    if (check == "connecting")
        return check_connecting_identity(chart, divisor_of(params.at("divisor")), get("m"), get("q"));
    if (check == "ml_transition")
        return check_ml_transition(chart, divisor_of(params.at("D1")), divisor_of(params.at("D2")), get("q"));
    if (check == "acyclicity") {
        std::vector<Divisor> steps;
        for (auto& s : params.at("chain"))
            steps.push_back(divisor_of(s));
        return check_graded_acyclicity(chart, FiltrationChain::from_steps(steps, chart.p), get("random_forms"));
    }
    return rerun_syntomic_check(check, chart, params);
}

bool witness_violates(const Json& w)
{
    const std::string kind = w.at("kind").get<std::string>();
    if (kind == "recheck")
        return rerun_check(w.at("check").get<std::string>(), w.at("params")).status == Status::fail;
    if (kind == "transition") {
        Chart chart = chart_from_json(w.at("chart"));
        Divisor D1 = divisor_of(w.at("D1")), D2 = divisor_of(w.at("D2"));
        if (!w.contains("form"))
            return false;
        LogForm f = form_from_json(w.at("form"));
        bool claimed_zero = w.at("predicted_zero").get<bool>();
        for (auto& [k, c] : f.terms()) {
            bool in_K2 = k.first.dominates(D2.prime(chart.p).as_index()) && !k.first.dominates(D2.as_index());
            if (claimed_zero && in_K2 && !k.first.dominates(D1.as_index()))
                return true;
        }
        return false;
    }
    GradedComplex C = complex_from_json(w.at("complex"));
    if (kind == "cell_dim") {
        MultiIndex a(w.at("alpha").get<std::vector<int>>());
        int q = w.at("q").get<int>();
        return cell_dims(C, a).H[q] != w.at("expected_dim_H").get<int>();
    }
    LogForm f = form_from_json(w.at("form"));
    if (kind == "nonzero_class")
        return C.d(f).is_zero() && !is_exact(C, f);
    if (kind == "homotopy") {
        int mu = w.at("mu").get<int>();
        const Divisor& level = C.divisor();
        LogForm lhs = differential_twisted(residue(f, mu, level), level) +
                      residue(differential_twisted(f, level), mu, level);
        return lhs != f.scaled(f.ring()->from_int(level.at(mu)));
    }
    if (kind == "class_mismatch")
        return !is_exact(C, f - form_from_json(w.at("expected")));
    if (kind == "semilinear")
        return semilinear_defect(w.at("a").get<Scalar>(), C, f).has_value();
    throw ConfigError(fmt::format("unknown witness kind '{}'", kind));
}

}  // namespace mdr
