#include "erwlab/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "erwlab/error.hpp"

namespace erwlab {

using nlohmann::json;

namespace {

const char* family_name(ScalarLaw::Family f) {
    switch (f) {
        case ScalarLaw::Family::Constant: return "constant";
        case ScalarLaw::Family::BernoulliScaled: return "bernoulli-scaled";
        case ScalarLaw::Family::DiscreteUniform: return "discrete-uniform";
        case ScalarLaw::Family::GeometricTruncated: return "geometric-truncated";
    }
    return "constant";
}

json bound(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
T field(const json& doc, const char* key) {
    if (!doc.contains(key)) throw Error(ErrorCode::ConfigInvalid, std::string("missing field '") + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

json model_to_json(const ModelSpec& m) {
    json doc;
    doc["name"] = m.name;
    doc["params"] = m.params;
    doc["s"] = m.s;
    doc["d"] = m.d;
    doc["r"] = m.r;
    json part = json::array();
    for (const auto& blk : m.partition) {
        json b = json::array();
        for (int c : blk) b.push_back(c + 1);
        part.push_back(b);
    }
    doc["partition"] = part;

    json law;
    switch (m.step_law.kind) {
        case StepLaw::Kind::PointMass:
            law["kind"] = "point-mass";
            law["value"] = m.step_law.atoms.front();
            break;
        case StepLaw::Kind::FiniteSupport:
            law["kind"] = "finite-support";
            law["atoms"] = m.step_law.atoms;
            law["probs"] = m.step_law.probs;
            break;
        case StepLaw::Kind::Product: {
            law["kind"] = "product";
            json factors = json::array();
            for (const auto& f : m.step_law.factors) {
                json j{{"family", family_name(f.family)}};
                switch (f.family) {
                    case ScalarLaw::Family::Constant: j["value"] = f.value; break;
                    case ScalarLaw::Family::BernoulliScaled:
                        j["value"] = f.value;
                        j["p"] = f.prob;
                        break;
                    case ScalarLaw::Family::DiscreteUniform:
                        j["lo"] = f.lo;
                        j["hi"] = f.hi;
                        break;
                    case ScalarLaw::Family::GeometricTruncated:
                        j["p"] = f.prob;
                        j["max"] = f.max;
                        break;
                }
                factors.push_back(j);
            }
            law["factors"] = factors;
            break;
        }
    }
    doc["step_law"] = law;

    json maps = json::array();
    for (const auto& p : m.prob_maps) maps.push_back(p.to_string());
    doc["prob_maps"] = maps;

    json A = json::array();
    for (Eigen::Index i = 0; i < m.A.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.A.cols(); ++j) row.push_back(m.A(i, j));
        A.push_back(row);
    }
    doc["A"] = A;
    doc["b"] = std::vector<double>(m.b.data(), m.b.data() + m.b.size());
    doc["initial"] = {{"atoms", m.initial.atoms}, {"probs", m.initial.probs}};

    json dom;
    dom["lower"] = m.domain.lower;
    json up = json::array();
    for (double v : m.domain.upper) up.push_back(bound(v));
    dom["upper"] = up;
    dom["clip"] = m.domain.clip;
    if (m.domain.sum_max) dom["sum_max"] = *m.domain.sum_max;
    doc["domain"] = dom;

    if (!m.overrides.empty()) {
        json ovs = json::array();
        for (const auto& ov : m.overrides) {
            json g = json::array(), h = json::array();
            for (const auto& e : ov.gradient) g.push_back(e.to_string());
            for (const auto& e : ov.higher) h.push_back(e.to_string());
            ovs.push_back({{"gradient", g}, {"higher", h}, {"higher_complete", ov.higher_complete}});
        }
        doc["derivative_overrides"] = ovs;
    }
    return doc;
}

ModelSpec model_from_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::ConfigInvalid, "model document must be an object");
    ModelSpec m;
    m.name = doc.value("name", std::string("custom"));
    if (doc.contains("params")) m.params = field<std::map<std::string, std::string>>(doc, "params");
    m.s = field<int>(doc, "s");
    m.d = field<int>(doc, "d");
    m.r = field<int>(doc, "r");
    for (const auto& blk : field<std::vector<std::vector<int>>>(doc, "partition")) {
        std::vector<int> b;
        for (int c : blk) b.push_back(c - 1);
        m.partition.push_back(b);
    }

    const json law = field<json>(doc, "step_law");
    const std::string kind = field<std::string>(law, "kind");
    if (kind == "point-mass") {
        m.step_law = StepLaw::point_mass(field<std::vector<double>>(law, "value"));
    } else if (kind == "finite-support") {
        m.step_law = StepLaw::finite_support(field<std::vector<std::vector<double>>>(law, "atoms"),
                                             field<std::vector<double>>(law, "probs"));
    } else if (kind == "product") {
        std::vector<ScalarLaw> factors;
        for (const auto& j : field<json>(law, "factors")) {
            ScalarLaw f;
            const std::string fam = field<std::string>(j, "family");
            if (fam == "constant") {
                f.family = ScalarLaw::Family::Constant;
                f.value = field<double>(j, "value");
            } else if (fam == "bernoulli-scaled") {
                f.family = ScalarLaw::Family::BernoulliScaled;
                f.value = field<double>(j, "value");
                f.prob = field<double>(j, "p");
            } else if (fam == "discrete-uniform") {
                f.family = ScalarLaw::Family::DiscreteUniform;
                f.lo = field<int>(j, "lo");
                f.hi = field<int>(j, "hi");
                if (f.hi < f.lo) throw Error(ErrorCode::ConfigInvalid, "discrete-uniform needs lo <= hi");
            } else if (fam == "geometric-truncated") {
                f.family = ScalarLaw::Family::GeometricTruncated;
                f.prob = field<double>(j, "p");
                f.max = field<int>(j, "max");
                if (f.max < 1 || !(f.prob > 0.0 && f.prob <= 1.0))
                    throw Error(ErrorCode::ConfigInvalid, "geometric-truncated needs 0 < p <= 1 and max >= 1");
            } else {
                throw Error(ErrorCode::MomentMissing, "unknown scalar family '" + fam + "'");
            }
            factors.push_back(f);
        }
        m.step_law = StepLaw::product(factors);
    } else {
        throw Error(ErrorCode::MomentMissing, "unknown step law kind '" + kind + "'");
    }

    for (const auto& text : field<std::vector<std::string>>(doc, "prob_maps"))
        m.prob_maps.push_back(FuncExpr::parse(text, m.s));

    const auto A = field<std::vector<std::vector<double>>>(doc, "A");
    m.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.size()), A.empty() ? 0 : static_cast<Eigen::Index>(A[0].size()));
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (A[i].size() != A[0].size()) throw Error(ErrorCode::ConfigInvalid, "A rows differ in length");
        for (std::size_t j = 0; j < A[i].size(); ++j) m.A(i, j) = A[i][j];
    }
    const auto b = field<std::vector<double>>(doc, "b");
    m.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));

    const json init = field<json>(doc, "initial");
    m.initial.atoms = field<std::vector<std::vector<double>>>(init, "atoms");
    m.initial.probs = field<std::vector<double>>(init, "probs");

    if (doc.contains("domain")) {
        const json dom = doc.at("domain");
        m.domain.lower = field<std::vector<double>>(dom, "lower");
        for (const auto& v : field<json>(dom, "upper"))
            m.domain.upper.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
        m.domain.clip = dom.value("clip", 10.0);
        if (dom.contains("sum_max")) m.domain.sum_max = dom.at("sum_max").get<double>();
    } else {
        m.domain = Domain::unit_box(m.s);
    }

    if (doc.contains("derivative_overrides")) {
        for (const auto& j : doc.at("derivative_overrides")) {
            DerivativeOverride ov;
            for (const auto& t : j.value("gradient", std::vector<std::string>{})) ov.gradient.push_back(FuncExpr::parse(t, m.s));
            for (const auto& t : j.value("higher", std::vector<std::string>{})) ov.higher.push_back(FuncExpr::parse(t, m.s));
            ov.higher_complete = j.value("higher_complete", false);
            m.overrides.push_back(ov);
        }
    }
    return m;
}

ModelSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open model file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, "'" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(doc);
}

std::string config_hash(const json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace erwlab
