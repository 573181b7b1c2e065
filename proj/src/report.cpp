#include "mdr/report.hpp"

#include <fmt/format.h>

#include "mdr/errors.hpp"

namespace mdr {

std::string to_string(Status s)
{
    switch (s) {
    case Status::pass:
        return "pass";
    case Status::fail:
        return "fail";
    case Status::inconclusive:
        return "inconclusive";
    case Status::hypothesis_not_met:
        return "hypothesis-not-met";
    }
    return "?";
}

Status status_from_string(const std::string& s)
{
    if (s == "pass")
        return Status::pass;
    if (s == "fail")
        return Status::fail;
    if (s == "inconclusive")
        return Status::inconclusive;
    if (s == "hypothesis-not-met")
        return Status::hypothesis_not_met;
    throw ConfigError(fmt::format("unknown status '{}'", s));
}

void CheckOutcome::add_row(int q, const MultiIndex& alpha, std::vector<std::pair<std::string, int>> values)
{
    if (static_cast<int>(dims.size()) >= kMaxRows) {
        ++dims_dropped;
        return;
    }
    dims.push_back(DimRow{q, alpha.to_vector(), std::move(values)});
}

void CheckOutcome::fail(const std::string& why, Json w)
{
    if (status == Status::fail)
        return;
    status = Status::fail;
    note = why;
    witness = std::move(w);
}

void CheckOutcome::inconclusive(const std::string& why)
{
    if (status != Status::pass)
        return;
    status = Status::inconclusive;
    note = why;
}

bool CheckOutcome::operator==(const CheckOutcome& o) const
{
    return name == o.name && params == o.params && status == o.status && dims == o.dims &&
           dims_dropped == o.dims_dropped && witness == o.witness && note == o.note;
}

Json outcome_to_json(const CheckOutcome& c)
{
    Json j;
    j["name"] = c.name;
    j["params"] = c.params;
    j["status"] = to_string(c.status);
    Json dims = Json::array();
    for (auto& r : c.dims) {
        Json row;
        row["q"] = r.q;
        row["alpha"] = r.alpha;
        Json vals = Json::object();
        for (auto& [k, v] : r.values)
            vals[k] = v;
        row["values"] = vals;
        dims.push_back(row);
    }
    j["dims"] = dims;
    if (c.dims_dropped)
        j["dims_dropped"] = c.dims_dropped;
    if (!c.note.empty())
        j["note"] = c.note;
    if (!c.witness.is_null())
        j["witness"] = c.witness;
    return j;
}

CheckOutcome outcome_from_json(const Json& j)
{
    CheckOutcome c;
    c.name = j.at("name").get<std::string>();
    c.params = j.at("params");
    c.status = status_from_string(j.at("status").get<std::string>());
    for (auto& row : j.at("dims")) {
        DimRow r;
        r.q = row.at("q").get<int>();
        r.alpha = row.at("alpha").get<std::vector<int>>();
        for (auto& [k, v] : row.at("values").items())
            r.values.emplace_back(k, v.get<int>());
        c.dims.push_back(std::move(r));
    }
    c.dims_dropped = j.value("dims_dropped", 0);
    c.note = j.value("note", std::string());
    if (j.contains("witness"))
        c.witness = j.at("witness");
    return c;
}

Json chart_to_json(const Chart& c)
{
    Json j;
    j["p"] = c.p;
    j["s"] = c.s;
    j["d"] = c.d;
    j["window"] = c.window;
    j["e"] = c.eis.e;
    j["a"] = c.eis.a;
    j["log_policy"] = c.log_policy == LogPolicy::safe ? "safe" : "extended";
    return j;
}

Chart chart_from_json(const Json& j)
{
    EisensteinData eis;
    eis.e = j.at("e").get<int>();
    eis.a = j.at("a").get<std::vector<Scalar>>();
    LogPolicy policy = j.value("log_policy", std::string("safe")) == "safe" ? LogPolicy::safe : LogPolicy::extended;
    return make_chart(j.at("p").get<int>(), j.at("s").get<int>(), j.at("d").get<int>(), j.at("window").get<int>(),
                      eis, policy);
}

namespace {

std::string mode_name(FormMode m)
{
    switch (m) {
    case FormMode::full:
        return "full";
    case FormMode::relative:
        return "relative";
    case FormMode::special_fiber:
        return "special_fiber";
    }
    return "?";
}

FormMode mode_from_name(const std::string& s)
{
    if (s == "full")
        return FormMode::full;
    if (s == "relative")
        return FormMode::relative;
    if (s == "special_fiber")
        return FormMode::special_fiber;
    throw ConfigError(fmt::format("unknown form mode '{}'", s));
}

}  // namespace

Json form_to_json(const LogForm& w)
{
    const auto& R = *w.ring();
    Json j;
    j["ring"] = {{"p", R.p()}, {"n", R.n()}, {"s", R.s()}};
    j["nvars"] = w.nvars();
    j["window"] = w.window();
    j["degree"] = w.degree();
    j["mode"] = mode_name(w.mode());
    Json terms = Json::array();
    for (auto& [k, c] : w.terms()) {
        std::vector<int> idx;
        for (int b = 0; b < w.nvars(); ++b)
            if (k.second >> b & 1)
                idx.push_back(b);
        terms.push_back(Json::array({k.first.to_vector(), idx, c}));
    }
    j["terms"] = terms;
    return j;
}

LogForm form_from_json(const Json& j)
{
    auto& r = j.at("ring");
    RingPtr ring = make_ring(r.at("p").get<int>(), r.at("n").get<int>(), r.at("s").get<int>());
    LogForm w(ring, j.at("nvars").get<int>(), j.at("window").get<int>(), j.at("degree").get<int>(),
              mode_from_name(j.at("mode").get<std::string>()));
    for (auto& t : j.at("terms")) {
        MultiIndex a(t.at(0).get<std::vector<int>>());
        Mask I = 0;
        for (int b : t.at(1).get<std::vector<int>>())
            I |= Mask(1) << b;
        w.add_term(a, I, t.at(2).get<Scalar>());
    }
    return w;
}

Json complex_to_json(const GradedComplex& C)
{
    Json j;
    j["chart"] = chart_to_json(C.chart());
    j["divisor"] = C.divisor().mult();
    j["mode"] = mode_name(C.mode());
    j["label"] = C.t0_label();
    j["window"] = C.window();
    return j;
}

GradedComplex complex_from_json(const Json& j)
{
    return GradedComplex(chart_from_json(j.at("chart")), Divisor(j.at("divisor").get<std::vector<int>>()),
                         mode_from_name(j.at("mode").get<std::string>()), j.at("label").get<int>(),
                         j.at("window").get<int>());
}

Json witness_nonzero_class(const GradedComplex& C, const LogForm& w)
{
    return Json{{"kind", "nonzero_class"}, {"complex", complex_to_json(C)}, {"form", form_to_json(w)}};
}

Json witness_cell_dim(const GradedComplex& C, int q, const MultiIndex& alpha, int expected_dim_H)
{
    return Json{{"kind", "cell_dim"},
                {"complex", complex_to_json(C)},
                {"q", q},
                {"alpha", alpha.to_vector()},
                {"expected_dim_H", expected_dim_H}};
}

Json witness_homotopy(const GradedComplex& C, int mu, const LogForm& w)
{
    return Json{{"kind", "homotopy"}, {"complex", complex_to_json(C)}, {"mu", mu}, {"form", form_to_json(w)}};
}

Json witness_class_mismatch(const GradedComplex& C, const LogForm& w, const LogForm& expected)
{
    return Json{{"kind", "class_mismatch"},
                {"complex", complex_to_json(C)},
                {"form", form_to_json(w)},
                {"expected", form_to_json(expected)}};
}

Json witness_semilinear(const GradedComplex& C, Scalar a, const LogForm& w)
{
    return Json{{"kind", "semilinear"}, {"complex", complex_to_json(C)}, {"a", a}, {"form", form_to_json(w)}};
}

Json witness_recheck(const std::string& check, const Json& params, const MultiIndex& cell)
{
    return Json{{"kind", "recheck"}, {"check", check}, {"params", params}, {"cell", cell.to_vector()}};
}

}  // namespace mdr
