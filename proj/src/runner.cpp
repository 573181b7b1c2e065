#include "mdr/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "mdr/errors.hpp"
#include "mdr/modulus.hpp"
#include "mdr/syntomic.hpp"

namespace mdr {

const std::vector<std::string>& known_suites()
{
    static const std::vector<std::string> names{"cartier",      "acyclicity",  "log_kernel", "tm_sequences",
                                                "connecting",   "ml_transition", "pd_envelope", "gr_structure",
                                                "symbols",      "product",     "base_change"};
    return names;
}

void SuiteSummary::count(Status s)
{
    switch (s) {
    case Status::pass: ++pass; break;
    case Status::fail: ++fail; break;
    case Status::inconclusive: ++inconclusive; break;
    case Status::hypothesis_not_met: ++hypothesis_not_met; break;
    }
}

// ---- parsing ------------------------------------------------------------

std::vector<int> parse_int_list(const std::string& s)
{
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        if (tok.empty())
            continue;
        try {
            size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::logic_error&) {
            throw ConfigError(fmt::format("not an integer list: '{}'", s));
        }
    }
    return out;
}

std::pair<int, int> parse_range(const std::string& s)
{
    auto dash = s.find('-', 1);
    if (dash == std::string::npos) {
        auto v = parse_int_list(s);
        if (v.size() != 1)
            throw ConfigError(fmt::format("not a range: '{}'", s));
        return {v[0], v[0]};
    }
    auto a = parse_int_list(s.substr(0, dash)), b = parse_int_list(s.substr(dash + 1));
    if (a.size() != 1 || b.size() != 1)
        throw ConfigError(fmt::format("not a range: '{}'", s));
    return {a[0], b[0]};
}

EisensteinData parse_eisenstein(const std::string& s)
{
    EisensteinData eis;
    bool have_e = false, have_a = false;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ';')) {
        auto eq = part.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("eisenstein: expected key=value in '{}'", part));
        std::string key = part.substr(0, eq), val = part.substr(eq + 1);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        if (key == "e") {
            auto v = parse_int_list(val);
            if (v.size() != 1)
                throw ConfigError("eisenstein: e takes one integer");
            eis.e = v[0];
            have_e = true;
        } else if (key == "a") {
            eis.a.clear();
            for (int x : parse_int_list(val))
                eis.a.push_back(static_cast<Scalar>(x));
            have_a = true;
        } else {
            throw ConfigError(fmt::format("eisenstein: unknown key '{}'", key));
        }
    }
    if (!have_e)
        throw ConfigError("eisenstein: missing e");
    if (!have_a)
        eis.a.assign(std::max(eis.e, 1), 1);
    return eis;
}

std::vector<std::vector<int>> multiplicity_grid(const std::vector<int>& values, int d)
{
    std::vector<int> vals = values;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<std::vector<int>> out{{}};
    for (int j = 0; j < d; ++j) {
        std::vector<std::vector<int>> next;
        for (auto& v : out)
            for (int x : vals) {
                auto w = v;
                w.push_back(x);
                next.push_back(std::move(w));
            }
        out = std::move(next);
    }
    return out;
}

// ---- config -------------------------------------------------------------

void validate(const RunConfig& c)
{
    if (c.p < 3 || !is_prime(c.p))
        throw ConfigError("p must be an odd prime");
    if (c.s < 1 || c.s > 6)
        throw ConfigError("field-exp must be between 1 and 6");
    if (c.d < 1 || c.d > kMaxVars - 2)
        throw ConfigError(fmt::format("dim must be between 1 and {}", kMaxVars - 2));
    if (c.window < c.p)
        throw ConfigError("window must be at least p");
    for (auto& m : c.mults) {
        if (static_cast<int>(m.size()) != c.d)
            throw ConfigError(fmt::format("mult: expected {} multiplicities, got {}", c.d, m.size()));
        for (int x : m)
            if (x < 0)
                throw ConfigError("mult: multiplicities must be >= 0");
    }
    if (c.eisenstein.empty())
        throw ConfigError("eisenstein: at least one entry needed");
    long long q = 1;
    for (int i = 0; i < c.s; ++i)
        q *= c.p;
    for (auto& e : c.eisenstein) {
        if (e.e < 1)
            throw ConfigError("eisenstein: e must be >= 1");
        if (static_cast<int>(e.a.size()) != e.e)
            throw ConfigError(fmt::format("eisenstein: e={} needs {} coefficients, got {}", e.e, e.e, e.a.size()));
        for (auto a : e.a)
            if (static_cast<long long>(a) >= q)
                throw ConfigError(fmt::format("eisenstein: coefficient {} is not an element of F_{}", a, q));
        if (e.a[0] == 0)
            throw ConfigError("eisenstein: a_0 must be nonzero");
    }
    if (c.q_lo && *c.q_lo < 0)
        throw ConfigError("q must be >= 0");
    if (c.q_lo && c.q_hi && *c.q_lo > *c.q_hi)
        throw ConfigError("q: empty range");
    if (c.r_lo && c.r_hi && *c.r_lo > *c.r_hi)
        throw ConfigError("r: empty range");
    if ((c.r_hi && *c.r_hi > c.p - 2) || (c.r_lo && *c.r_lo > c.p - 2))
        throw ConfigError("r must satisfy q <= r <= p-2");
    if (c.r_lo && *c.r_lo < 0)
        throw ConfigError("r must be >= 0");
    if (c.q_lo && c.r_hi && *c.q_lo > *c.r_hi)
        throw ConfigError("q must satisfy q <= r <= p-2");
    if (c.m_max && *c.m_max < 0)
        throw ConfigError("m-max must be >= 0");
    if (c.jobs < 1)
        throw ConfigError("jobs must be >= 1");
    if (c.random_symbols < 0)
        throw ConfigError("random-symbols must be >= 0");
    for (auto& s : c.suites)
        if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
            throw ConfigError(fmt::format("suite: unknown suite '{}'", s));
}

Json config_to_json(const RunConfig& c)
{
    Json j;
    j["p"] = c.p;
    j["field_exp"] = c.s;
    j["dim"] = c.d;
    j["window"] = c.window;
    j["mult"] = c.mults;
    Json eis = Json::array();
    for (auto& e : c.eisenstein)
        eis.push_back(Json{{"e", e.e}, {"a", e.a}});
    j["eisenstein"] = eis;
    auto opt = [](const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); };
    j["q"] = Json::array({opt(c.q_lo), opt(c.q_hi)});
    j["r"] = Json::array({opt(c.r_lo), opt(c.r_hi)});
    j["m_max"] = opt(c.m_max);
    j["suites"] = c.suites;
    j["random_symbols"] = c.random_symbols;
    j["strict"] = c.strict;
    return j;
}

RunConfig config_from_json(const Json& j)
{
    RunConfig c;
    if (!j.is_object())
        throw ConfigError("config: expected an object");
    auto range = [](const Json& v, std::optional<int>& lo, std::optional<int>& hi, const char* name) {
        if (v.is_number_integer()) {
            lo = hi = v.get<int>();
        } else if (v.is_string()) {
            auto [a, b] = parse_range(v.get<std::string>());
            lo = a;
            hi = b;
        } else if (v.is_array() && v.size() == 2) {
            if (!v[0].is_null())
                lo = v[0].get<int>();
            if (!v[1].is_null())
                hi = v[1].get<int>();
        } else {
            throw ConfigError(fmt::format("{}: expected an integer, \"lo-hi\" or [lo, hi]", name));
        }
    };
    try {
        for (auto& [key, v] : j.items()) {
            if (key == "p")
                c.p = v.get<int>();
            else if (key == "field_exp" || key == "s")
                c.s = v.get<int>();
            else if (key == "dim" || key == "d")
                c.d = v.get<int>();
            else if (key == "window")
                c.window = v.get<int>();
            else if (key == "mult")
                c.mults = v.get<std::vector<std::vector<int>>>();
            else if (key == "mult_grid")
                ;  // expanded below, once dim is known
            else if (key == "eisenstein") {
                c.eisenstein.clear();
                for (auto& e : v) {
                    if (e.is_string()) {
                        c.eisenstein.push_back(parse_eisenstein(e.get<std::string>()));
                        continue;
                    }
                    EisensteinData eis;
                    eis.e = e.at("e").get<int>();
                    eis.a = e.contains("a") ? e.at("a").get<std::vector<Scalar>>() : std::vector<Scalar>(eis.e, 1);
                    c.eisenstein.push_back(eis);
                }
            } else if (key == "q")
                range(v, c.q_lo, c.q_hi, "q");
            else if (key == "r")
                range(v, c.r_lo, c.r_hi, "r");
            else if (key == "m_max") {
                if (!v.is_null())
                    c.m_max = v.get<int>();
            } else if (key == "suites" || key == "suite")
                c.suites = v.get<std::vector<std::string>>();
            else if (key == "jobs")
                c.jobs = v.get<int>();
            else if (key == "random_symbols")
                c.random_symbols = v.get<int>();
            else if (key == "report")
                c.report_path = v.get<std::string>();
            else if (key == "strict")
                c.strict = v.get<bool>();
            else
                throw ConfigError(fmt::format("config: unknown key '{}'", key));
        }
        if (j.contains("mult_grid"))
            for (auto& m : multiplicity_grid(j.at("mult_grid").get<std::vector<int>>(), c.d))
                c.mults.push_back(m);
    } catch (const Json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    return c;
}

// ---- jobs ---------------------------------------------------------------

namespace {

struct Job {
    std::string suite;
    Json params;  // used only when the check throws
    std::function<CheckOutcome()> fn;
};

CheckOutcome run_job(const Job& job)
{
    auto errored = [&](Status st, const std::string& why) {
        CheckOutcome o;
        o.name = job.suite;
        o.params = job.params;
        o.status = st;
        o.note = why;
        return o;
    };
    try {
        return job.fn();
    } catch (const PreconditionError& e) {
        return errored(Status::hypothesis_not_met, e.what());
    } catch (const std::exception& e) {
        return errored(Status::fail, fmt::format("{}", e.what()));
    }
}

int ceil_frac(long long a, long long b) { return static_cast<int>((a + b - 1) / b); }

std::vector<Job> build_jobs(const RunConfig& c)
{
    std::vector<Job> jobs;
    int p = c.p, d = c.d;
    std::vector<std::vector<int>> mults = c.mults;
    if (mults.empty())
        mults.push_back(std::vector<int>(d, 1));
    int q_lo = c.q_lo.value_or(0);
    int q_hi_forms = std::min(c.q_hi.value_or(d), d);
    int r_lo = c.r_lo.value_or(0), r_hi = c.r_hi.value_or(p - 2);
    int q_hi_syn = std::min(c.q_hi.value_or(p - 2), r_hi);
    std::vector<std::pair<int, int>> pairs;
    for (int r = r_lo; r <= r_hi; ++r)
        for (int q = q_lo; q <= std::min(r, q_hi_syn); ++q)
            pairs.emplace_back(q, r);
    auto wants = [&](const std::string& s) { return std::find(c.suites.begin(), c.suites.end(), s) != c.suites.end(); };

    for (const auto& suite : known_suites()) {
        if (!wants(suite))
            continue;
        for (size_t ei = 0; ei < c.eisenstein.size(); ++ei) {
            Chart chart = make_chart(p, c.s, d, c.window, c.eisenstein[ei]);
            bool form_suite = suite == "cartier" || suite == "acyclicity" || suite == "log_kernel" ||
                              suite == "tm_sequences" || suite == "connecting" || suite == "ml_transition" ||
                              suite == "pd_envelope";
            // These do not see the Eisenstein data.
            if (form_suite && ei > 0)
                continue;
            int e = chart.eis.e;
            for (auto& mv : mults) {
                Divisor D(mv);
                auto base = [&](Json extra) {
                    Json j{{"chart", chart_to_json(chart)}, {"divisor", Json(D.mult())}};
                    for (auto& [k, v] : extra.items())
                        j[k] = v;
                    return j;
                };
                auto add = [&](Json extra, std::function<CheckOutcome()> fn) {
                    jobs.push_back({suite, base(std::move(extra)), std::move(fn)});
                };
                int m_forms = c.m_max.value_or(2 * p);
                if (suite == "cartier")
                    for (int q = q_lo; q <= q_hi_forms; ++q)
                        add({{"q", q}}, [=] { return check_cartier_modulus(chart, D, q); });
                if (suite == "acyclicity")
                    add(Json::object(), [=] { return check_graded_acyclicity(chart, FiltrationChain::canonical(D, p)); });
                if (suite == "log_kernel")
                    for (int q = q_lo; q <= q_hi_forms; ++q)
                        add({{"q", q}}, [=] { return check_log_kernel(chart, D, q); });
                if (suite == "tm_sequences" || suite == "connecting")
                    for (int m = 1; m <= m_forms; ++m)
                        for (int q = q_lo; q <= q_hi_forms; ++q)
                            add({{"m", m}, {"q", q}}, [=] {
                                return suite == "connecting" ? check_connecting_identity(chart, D, m, q)
                                                             : check_Tm_sequences(chart, D, m, q);
                            });
                if (suite == "ml_transition")
                    for (int q = q_lo; q <= q_hi_forms; ++q)
                        add({{"q", q}}, [=] { return check_ml_transition(chart, D, D.scaled(p), q); });
                if (suite == "pd_envelope")
                    add(Json::object(), [=] { return check_pd_envelope(chart, D); });
                if (suite == "gr_structure")
                    for (auto [q, r] : pairs) {
                        int top = c.m_max.value_or(ceil_frac(1LL * e * p * (r - q + 1), p - 1) + 1);
                        for (int m = 0; m <= top; ++m)
                            add({{"q", q}, {"r", r}, {"m", m}}, [=] { return check_gr_structure(chart, D, q, r, m); });
                    }
                if (suite == "symbols") {
                    int top = c.m_max.value_or(ceil_frac(1LL * e * p, p - 1));
                    int nsym = c.random_symbols;
                    for (auto [q, r] : pairs)
                        for (int m = 0; m <= top; ++m)
                            add({{"q", q}, {"r", r}, {"m", m}},
                                [=] { return check_graded_symbol_map(chart, D, q, r, m, nsym); });
                    // One explicit symbol per degree and filtration step.
                    if (c.s == 1)
                        for (int q = std::max(q_lo, 1); q <= std::min(q_hi_syn, d + 1); ++q)
                            for (int m = 1; m <= top; ++m)
                                add({{"q", q}, {"m", m}}, [=] {
                                    RingPtr z2 = make_ring(p, 2);
                                    int W = c.window + m + D.total() + 1;
                                    MultiIndex k = D.as_index();
                                    k.set(0, m);
                                    k.set(1, k[1] + 1);
                                    TruncatedPoly x = TruncatedPoly::constant(z2, d + 1, W, 1);
                                    x.add_term(k, 1);
                                    SymbolInput S{x, {}};
                                    for (int i = 0; i + 1 < q; ++i) {
                                        std::vector<int> mono(d + 1, 0);
                                        mono[(i + 1) % (d + 1)] = 1;
                                        TruncatedPoly u = TruncatedPoly::constant(z2, d + 1, W, 1);
                                        MultiIndex t(d + 1);
                                        t.set(i % (d + 1), 1);
                                        u.add_term(t, 1);
                                        S.a.push_back({u, mono});
                                    }
                                    return check_symbol_filtration(chart, D, S, m);
                                });
                }
                if (suite == "product")
                    for (auto [q, r] : pairs)
                        add({{"q", q}, {"r", r}}, [=] { return check_product_iso(chart, D, q, r); });
                if (suite == "base_change") {
                    std::vector<int> ws{1, 2, p};
                    for (auto [q, r] : pairs)
                        for (int w : ws)
                            add({{"q", q}, {"r", r}, {"w", w}},
                                [=] { return check_tame_base_change(chart, D, q, r, w); });
                }
            }
        }
    }
    return jobs;
}

}  // namespace

SuiteReport run(const RunConfig& config)
{
    validate(config);
    auto t0 = std::chrono::steady_clock::now();
    SuiteReport rep;
    rep.config = config_to_json(config);
    std::vector<Job> jobs = build_jobs(config);
    std::vector<CheckOutcome> results(jobs.size());
    std::vector<double> seconds(jobs.size(), 0);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < jobs.size(); i = next++) {
            auto a = std::chrono::steady_clock::now();
            results[i] = run_job(jobs[i]);
            seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
        }
    };
    int nthreads = std::max(1, std::min<int>(config.jobs, static_cast<int>(jobs.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (const auto& s : config.suites)
        rep.suite_seconds[s] = 0;
    for (size_t i = 0; i < jobs.size(); ++i) {
        rep.summary.count(results[i].status);
        rep.suite_seconds[jobs[i].suite] += seconds[i];
    }
    rep.checks = std::move(results);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---- reports ------------------------------------------------------------

namespace {

Json summary_json(const SuiteSummary& s)
{
    return Json{{"pass", s.pass},
                {"fail", s.fail},
                {"inconclusive", s.inconclusive},
                {"hypothesis_not_met", s.hypothesis_not_met},
                {"total", s.total()}};
}

}  // namespace

Json report_to_json(const SuiteReport& r)
{
    Json j = report_fingerprint(r);
    Json timing;
    timing["wall_seconds"] = r.wall_seconds;
    timing["suite_seconds"] = r.suite_seconds;
    j["timing"] = timing;
    return j;
}

Json report_fingerprint(const SuiteReport& r)
{
    Json j;
    j["version"] = r.version;
    j["config"] = r.config;
    Json checks = Json::array();
    for (auto& c : r.checks)
        checks.push_back(outcome_to_json(c));
    j["checks"] = checks;
    j["summary"] = summary_json(r.summary);
    return j;
}

SuiteReport report_from_json(const Json& j)
{
    SuiteReport r;
    try {
        r.version = j.at("version").get<std::string>();
        r.config = j.at("config");
        for (auto& c : j.at("checks"))
            r.checks.push_back(outcome_from_json(c));
        auto& s = j.at("summary");
        r.summary.pass = s.at("pass").get<int>();
        r.summary.fail = s.at("fail").get<int>();
        r.summary.inconclusive = s.at("inconclusive").get<int>();
        r.summary.hypothesis_not_met = s.at("hypothesis_not_met").get<int>();
        if (j.contains("timing")) {
            r.wall_seconds = j["timing"].value("wall_seconds", 0.0);
            if (j["timing"].contains("suite_seconds"))
                r.suite_seconds = j["timing"]["suite_seconds"].get<std::map<std::string, double>>();
        }
    } catch (const Json::exception& e) {
        throw ConfigError(fmt::format("report: {}", e.what()));
    }
    return r;
}

void print_table(const SuiteReport& r, std::ostream& os)
{
    std::map<std::string, SuiteSummary> per;
    for (auto& c : r.checks)
        per[c.name].count(c.status);
    os << fmt::format("{:<20} {:>7} {:>6} {:>6} {:>6} {:>6}\n", "check", "total", "pass", "fail", "inc", "hnm");
    for (auto& [name, s] : per)
        os << fmt::format("{:<20} {:>7} {:>6} {:>6} {:>6} {:>6}\n", name, s.total(), s.pass, s.fail, s.inconclusive,
                          s.hypothesis_not_met);
    const auto& s = r.summary;
    os << fmt::format("{:<20} {:>7} {:>6} {:>6} {:>6} {:>6}\n", "all", s.total(), s.pass, s.fail, s.inconclusive,
                      s.hypothesis_not_met);
    int shown = 0;
    for (auto& c : r.checks) {
        if (!c.failed())
            continue;
        if (shown++ == 10) {
            os << "...\n";
            break;
        }
        os << fmt::format("FAIL {} {}: {}\n", c.name, c.params.contains("divisor") ? c.params["divisor"].dump() : "",
                          c.note);
    }
    for (auto& [suite, sec] : r.suite_seconds)
        os << fmt::format("time {:<16} {:.2f}s\n", suite, sec);
    os << fmt::format("wall {:.2f}s\n", r.wall_seconds);
}

void emit_report(const SuiteReport& r, const std::string& path, std::ostream& os)
{
    if (!path.empty()) {
        std::ofstream f(path);
        if (!f)
            throw std::runtime_error(fmt::format("cannot open report file '{}'", path));
        f << report_to_json(r).dump(2) << "\n";
        if (!f)
            throw std::runtime_error(fmt::format("cannot write report file '{}'", path));
    }
    print_table(r, os);
}

int exit_code(const SuiteReport& r, bool strict)
{
    if (r.summary.fail > 0)
        return 1;
    if (strict && r.summary.inconclusive > 0)
        return 1;
    return 0;
}

}  // namespace mdr
