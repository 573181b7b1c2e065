#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdr/report.hpp"

namespace mdr {

inline constexpr const char* kVersion = "mdr-verify 1.0.0";

const std::vector<std::string>& known_suites();

struct RunConfig {
    int p = 3;
    int s = 1;
    int d = 1;
    int window = 9;
    std::vector<std::vector<int>> mults;  // one divisor per entry; empty means all ones
    std::vector<EisensteinData> eisenstein{EisensteinData{}};
    // Inclusive ranges; unset ends default per suite.
    std::optional<int> q_lo, q_hi, r_lo, r_hi;
    std::optional<int> m_max;
    std::vector<std::string> suites;
    int jobs = 1;
    int random_symbols = 50;
    std::string report_path;
    bool strict = false;
};

// Throws ConfigError naming the offending field.
void validate(const RunConfig& c);

Json config_to_json(const RunConfig& c);
// Missing keys keep their defaults. Throws ConfigError on bad types or keys.
RunConfig config_from_json(const Json& j);

// "e=2;a=1,2"
EisensteinData parse_eisenstein(const std::string& s);
// "2,1,0"
std::vector<int> parse_int_list(const std::string& s);
// "1" or "0-2"
std::pair<int, int> parse_range(const std::string& s);
// Cartesian product of the values over d components.
std::vector<std::vector<int>> multiplicity_grid(const std::vector<int>& values, int d);

struct SuiteSummary {
    int pass = 0, fail = 0, inconclusive = 0, hypothesis_not_met = 0;
    int total() const { return pass + fail + inconclusive + hypothesis_not_met; }
    void count(Status s);
    bool operator==(const SuiteSummary& o) const = default;
};

struct SuiteReport {
    std::string version = kVersion;
    Json config = Json::object();
    std::vector<CheckOutcome> checks;
    SuiteSummary summary;
    std::map<std::string, double> suite_seconds;
    double wall_seconds = 0;
};

SuiteReport run(const RunConfig& config);

Json report_to_json(const SuiteReport& r);
SuiteReport report_from_json(const Json& j);
// The report without timing fields, for comparisons between runs.
Json report_fingerprint(const SuiteReport& r);

// Per-suite tallies and the first failures.
void print_table(const SuiteReport& r, std::ostream& os);
// Writes the report to `path` (skipped when empty) and the table to `os`.
// Throws std::runtime_error on I/O failure.
void emit_report(const SuiteReport& r, const std::string& path, std::ostream& os);

// 0: no failures; 1: a failure (or, with strict, an inconclusive check).
int exit_code(const SuiteReport& r, bool strict);

}  // namespace mdr
