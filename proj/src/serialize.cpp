#include "tonelab/serialize.hpp"

#include <fstream>

#include "json.hpp"
#include "tonelab/csv.hpp"
#include "tonelab/errors.hpp"

namespace tonelab {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

const char* kind_name(TermKind k) {
    switch (k) {
        case TermKind::parametric: return "parametric";
        case TermKind::smooth: return "smooth";
        case TermKind::by_smooth: return "by_smooth";
        case TermKind::tensor: return "tensor";
        case TermKind::factor_smooth: return "factor_smooth";
        case TermKind::random_intercept: return "random_intercept";
    }
    return "?";
}

TermKind kind_from_name(const std::string& s) {
    if (s == "parametric") return TermKind::parametric;
    if (s == "smooth") return TermKind::smooth;
    if (s == "by_smooth") return TermKind::by_smooth;
    if (s == "tensor") return TermKind::tensor;
    if (s == "factor_smooth") return TermKind::factor_smooth;
    if (s == "random_intercept") return TermKind::random_intercept;
    throw ParseError("unknown term kind \"" + s + "\"");
}

json term_spec_to_json(const TermSpec& t) {
    return json{{"kind", kind_name(t.kind)}, {"cov", t.cov},   {"cov2", t.cov2},
                {"factor", t.factor},        {"k", t.k},       {"k2", t.k2},
                {"m", t.m}};
}

TermSpec term_spec_from_json(const json& j) {
    TermSpec t;
    t.kind = kind_from_name(j.at("kind").get<std::string>());
    t.cov = j.at("cov").get<std::string>();
    t.cov2 = j.at("cov2").get<std::string>();
    t.factor = j.at("factor").get<std::string>();
    t.k = j.at("k").get<int>();
    t.k2 = j.at("k2").get<int>();
    t.m = j.at("m").get<int>();
    return t;
}

json layout_to_json(const ModelLayout& layout) {
    json j;
    j["scale"] = {{"name", layout.scale.name()}, {"ref_hz", layout.scale.ref_hz}};
    j["spec"] = {{"name", layout.spec.name}, {"core", layout.spec.core}};
    json specterms = json::array();
    for (const auto& t : layout.spec.terms) specterms.push_back(term_spec_to_json(t));
    j["spec"]["terms"] = specterms;
    j["genders"] = layout.genders;
    j["vowels"] = layout.vowels;
    j["speakers"] = layout.speakers;
    j["words"] = layout.words;
    j["senses"] = layout.senses;
    j["tones"] = layout.tones;
    j["tone_seqs"] = layout.tone_seqs;
    json ranges;
    for (const auto& [cov, r] : layout.cov_range) ranges[cov] = {r[0], r[1]};
    j["cov_range"] = ranges;
    j["n_cols"] = layout.n_cols;
    json terms = json::array();
    for (const auto& term : layout.terms) {
        json t;
        t["spec"] = term_spec_to_json(term.spec);
        t["col_start"] = term.col_start;
        t["width"] = term.width;
        t["knots"] = term.knots;
        t["knots2"] = term.knots2;
        json cons = json::array();
        for (const auto& c : term.constraints) cons.push_back(vec_to_json(c));
        t["constraints"] = cons;
        t["levels"] = term.levels;
        t["penalty_ids"] = term.penalty_ids;
        terms.push_back(t);
    }
    j["terms"] = terms;
    return j;
}

ModelLayout layout_from_json(const json& j) {
    ModelLayout layout;
    layout.scale = F0Scale::parse(j.at("scale").at("name").get<std::string>(),
                                  j.at("scale").at("ref_hz").get<double>());
    layout.spec.name = j.at("spec").at("name").get<std::string>();
    layout.spec.core = j.at("spec").at("core").get<std::string>();
    for (const auto& t : j.at("spec").at("terms"))
        layout.spec.terms.push_back(term_spec_from_json(t));
    layout.genders = j.at("genders").get<std::vector<std::string>>();
    layout.vowels = j.at("vowels").get<std::vector<std::string>>();
    layout.speakers = j.at("speakers").get<std::vector<std::string>>();
    layout.words = j.at("words").get<std::vector<std::string>>();
    layout.senses = j.at("senses").get<std::vector<std::string>>();
    layout.tones = j.at("tones").get<std::vector<std::string>>();
    layout.tone_seqs = j.at("tone_seqs").get<std::vector<std::string>>();
    for (const auto& [cov, r] : j.at("cov_range").items())
        layout.cov_range[cov] = {r.at(0).get<double>(), r.at(1).get<double>()};
    layout.n_cols = j.at("n_cols").get<int>();
    for (const auto& t : j.at("terms")) {
        TermLayout term;
        term.spec = term_spec_from_json(t.at("spec"));
        term.col_start = t.at("col_start").get<int>();
        term.width = t.at("width").get<int>();
        term.knots = t.at("knots").get<std::vector<double>>();
        term.knots2 = t.at("knots2").get<std::vector<double>>();
        for (const auto& c : t.at("constraints")) term.constraints.push_back(vec_from_json(c));
        term.levels = t.at("levels").get<std::vector<std::string>>();
        term.penalty_ids = t.at("penalty_ids").get<std::vector<int>>();
        layout.terms.push_back(std::move(term));
    }
    finalize_layout(layout);
    return layout;
}

}  // namespace

void save_fit(const FitResult& fit, const std::string& path) {
    json j;
    j["layout"] = layout_to_json(fit.layout);
    j["beta"] = vec_to_json(fit.beta);
    j["lambdas"] = fit.lambdas;
    j["rho"] = fit.rho;
    j["edf"] = fit.edf;
    j["sigma2"] = fit.sigma2;
    j["aic"] = fit.aic;
    j["gcv"] = fit.gcv;
    j["rss_w"] = fit.rss_w;
    j["tss_w"] = fit.tss_w;
    j["r2"] = fit.r2;
    j["n"] = fit.n;
    j["p"] = fit.p;
    j["term_edf"] = fit.term_edf;
    write_text_file(path, j.dump(2) + "\n");
}

FitResult load_fit(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        FitResult fit;
        fit.layout = layout_from_json(j.at("layout"));
        fit.beta = vec_from_json(j.at("beta"));
        fit.lambdas = j.at("lambdas").get<std::vector<double>>();
        fit.rho = j.at("rho").get<double>();
        fit.edf = j.at("edf").get<double>();
        fit.sigma2 = j.at("sigma2").get<double>();
        fit.aic = j.at("aic").get<double>();
        fit.gcv = j.at("gcv").get<double>();
        fit.rss_w = j.at("rss_w").get<double>();
        fit.tss_w = j.at("tss_w").get<double>();
        fit.r2 = j.at("r2").get<double>();
        fit.n = j.at("n").get<long>();
        fit.p = j.at("p").get<int>();
        fit.term_edf = j.at("term_edf").get<std::map<std::string, double>>();
        if (fit.beta.size() != static_cast<Eigen::Index>(fit.layout.n_cols))
            throw ParseError(path + ": coefficient count does not match layout");
        return fit;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string fit_summary_json(const FitResult& fit) {
    json j;
    j["model"] = fit.layout.spec.name;
    j["core"] = fit.layout.spec.core;
    j["n"] = fit.n;
    j["p"] = fit.p;
    j["rho"] = fit.rho;
    j["edf"] = fit.edf;
    j["sigma2"] = fit.sigma2;
    j["aic"] = fit.aic;
    j["gcv"] = fit.gcv;
    j["r2"] = fit.r2;
    j["lambdas"] = fit.lambdas;
    j["term_edf"] = fit.term_edf;
    return j.dump(2) + "\n";
}

}  // namespace tonelab
