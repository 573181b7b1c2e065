#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mdr/cohomology.hpp"

namespace mdr {

using Json = nlohmann::ordered_json;

enum class Status { pass, fail, inconclusive, hypothesis_not_met };

std::string to_string(Status s);
Status status_from_string(const std::string& s);

// One row of a dimension table: named dimensions at degree q and multidegree alpha.
struct DimRow {
    int q = 0;
    std::vector<int> alpha;
    std::vector<std::pair<std::string, int>> values;

    bool operator==(const DimRow& o) const = default;
};

struct CheckOutcome {
    std::string name;
    Json params = Json::object();
    Status status = Status::pass;
    std::vector<DimRow> dims;
    // Rows beyond the cap are counted but not stored.
    int dims_dropped = 0;
    Json witness;  // null unless the check failed
    std::string note;

    static constexpr int kMaxRows = 200;

    void add_row(int q, const MultiIndex& alpha, std::vector<std::pair<std::string, int>> values);
    // Marks the outcome failed; the first witness is kept.
    void fail(const std::string& why, Json w);
    // Downgrades a pass to inconclusive.
    void inconclusive(const std::string& why);
    bool failed() const { return status == Status::fail; }

    bool operator==(const CheckOutcome& o) const;
};

Json outcome_to_json(const CheckOutcome& c);
CheckOutcome outcome_from_json(const Json& j);

Json chart_to_json(const Chart& c);
Chart chart_from_json(const Json& j);

// Forms as lists of [exponents, indices, coefficient] triples.
Json form_to_json(const LogForm& w);
LogForm form_from_json(const Json& j);

Json complex_to_json(const GradedComplex& C);
GradedComplex complex_from_json(const Json& j);

// Re-runs the claim recorded in a witness. True iff the violation it
// documents is reproduced.
bool witness_violates(const Json& witness);

// Witness constructors. Each records enough to rebuild its complex.
Json witness_nonzero_class(const GradedComplex& C, const LogForm& w);
Json witness_cell_dim(const GradedComplex& C, int q, const MultiIndex& alpha, int expected_dim_H);
Json witness_homotopy(const GradedComplex& C, int mu, const LogForm& w);
Json witness_class_mismatch(const GradedComplex& C, const LogForm& w, const LogForm& expected);
Json witness_semilinear(const GradedComplex& C, Scalar a, const LogForm& w);
// For bookkeeping failures without a single offending form: re-running the
// named check with the recorded parameters reproduces the failure.
Json witness_recheck(const std::string& check, const Json& params, const MultiIndex& cell);

// Runs a check by name from its recorded parameters.
CheckOutcome rerun_check(const std::string& check, const Json& params);

}  // namespace mdr
