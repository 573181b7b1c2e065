#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mdr/errors.hpp"
#include "mdr/runner.hpp"

using namespace mdr;

int main(int argc, char** argv)
{
    CLI::App app{"Runs verification suites over a grid of charts and divisors."};
    std::string config_path;
    int p = 0, s = 0, d = 0, window = 0, jobs = 0, m_max = -1, random_symbols = -1;
    std::vector<std::string> mults, eis, suites;
    std::string mult_grid, q, r, report;
    bool strict = false;
    app.add_option("--config", config_path, "JSON config file; flags override its fields");
    app.add_option("--p", p, "odd prime");
    app.add_option("--field-exp", s, "residue field F_{p^s}");
    app.add_option("--dim", d, "number of divisor components");
    app.add_option("--window", window, "total degree window N (>= p)");
    app.add_option("--mult", mults, "multiplicities, e.g. \"2,1,0\" (repeatable)");
    app.add_option("--mult-grid", mult_grid, "values; runs every divisor with multiplicities among them");
    app.add_option("--eisenstein", eis, "e.g. \"e=2;a=1,2\" (repeatable)");
    app.add_option("--q", q, "degree q or range lo-hi");
    app.add_option("--r", r, "weight r or range lo-hi");
    app.add_option("--m-max", m_max, "largest filtration index");
    app.add_option("--suite", suites, "suite to run (repeatable)");
    app.add_option("--random-symbols", random_symbols, "random symbols per graded symbol check");
    app.add_option("--report", report, "write the JSON report here");
    app.add_flag("--strict", strict, "inconclusive checks fail the run");
    app.add_option("--jobs", jobs, "worker threads");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f)
                throw ConfigError("config: cannot open '" + config_path + "'");
            Json j;
            try {
                j = Json::parse(f);
            } catch (const Json::exception& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
            cfg = config_from_json(j);
        }
        if (app.count("--p"))
            cfg.p = p;
        if (app.count("--field-exp"))
            cfg.s = s;
        if (app.count("--dim"))
            cfg.d = d;
        if (app.count("--window"))
            cfg.window = window;
        else if (config_path.empty() && app.count("--p"))
            cfg.window = cfg.p * cfg.p;
        if (app.count("--mult") || app.count("--mult-grid")) {
            cfg.mults.clear();
            for (auto& m : mults)
                cfg.mults.push_back(parse_int_list(m));
            if (!mult_grid.empty())
                for (auto& m : multiplicity_grid(parse_int_list(mult_grid), cfg.d))
                    cfg.mults.push_back(m);
        }
        if (app.count("--eisenstein")) {
            cfg.eisenstein.clear();
            for (auto& e : eis)
                cfg.eisenstein.push_back(parse_eisenstein(e));
        }
        if (app.count("--q")) {
            auto [lo, hi] = parse_range(q);
            cfg.q_lo = lo;
            cfg.q_hi = hi;
        }
        if (app.count("--r")) {
            auto [lo, hi] = parse_range(r);
            cfg.r_lo = lo;
            cfg.r_hi = hi;
        }
        if (app.count("--m-max"))
            cfg.m_max = m_max;
        if (app.count("--suite"))
            cfg.suites = suites;
        if (app.count("--random-symbols"))
            cfg.random_symbols = random_symbols;
        if (app.count("--report"))
            cfg.report_path = report;
        if (strict)
            cfg.strict = true;
        if (app.count("--jobs"))
            cfg.jobs = jobs;
        validate(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    SuiteReport rep;
    try {
        rep = run(cfg);
        emit_report(rep, cfg.report_path, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code(rep, cfg.strict);
}
