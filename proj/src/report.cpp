#include "diffverify/report.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dv {

namespace {

using json = nlohmann::json;

Vector read_vector(const json& doc, const char* key)
{
    const auto values = doc.at(key).get<std::vector<double>>();
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = values[i];
    }
    return v;
}

json expr_json(const LinExpr& e)
{
    json syms = json::object();
    for (const SymTerm& t : e.syms()) {
        syms[std::to_string(t.id)] = t.coeff;
    }
    return {{"inputs", std::vector<double>(e.inputs().data(), e.inputs().data() + e.inputs().size())},
            {"symvars", std::move(syms)},
            {"constant", e.constant_term()}};
}

} // namespace

InputBox PropertySpec::box_for(const Network& net) const
{
    if (input_lower.size() != net.input_count()) {
        throw std::invalid_argument("property has " + std::to_string(input_lower.size())
                                    + " inputs, network expects "
                                    + std::to_string(net.input_count()));
    }
    InputBox box(input_lower, input_upper);
    return normalized ? normalize_box(net, box) : box;
}

PropertySpec parse_property(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid property JSON: ") + e.what(), 0);
    }
    PropertySpec spec;
    try {
        spec.input_lower = read_vector(doc, "input_lower");
        spec.input_upper = read_vector(doc, "input_upper");
        spec.epsilon = doc.at("epsilon").get<double>();
        spec.normalized = doc.value("normalized", false);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed property: ") + e.what(), 0);
    }
    if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) {
        throw ParseError("property epsilon must be a positive finite number", 0);
    }
    try {
        InputBox check(spec.input_lower, spec.input_upper);
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("invalid property box: ") + e.what(), 0);
    }
    return spec;
}

PropertySpec load_property(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open property file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_property(buffer.str());
}

double minimal_epsilon(std::span<const ConcreteInterval> output_bounds)
{
    double worst = 0.0;
    for (const auto& b : output_bounds) {
        worst = std::max({worst, std::fabs(b.lo), std::fabs(b.hi)});
    }
    return std::nextafter(worst, std::numeric_limits<double>::infinity());
}

std::string render_report(const Report& report)
{
    json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["command"] = report.command;
    doc["mode"] = to_string(report.mode);
    doc["status"] = report.status ? json(to_string(*report.status)) : json(nullptr);
    doc["epsilon"] = report.epsilon ? json(*report.epsilon) : json(nullptr);
    doc["minimal_epsilon"] = report.minimal_epsilon ? json(*report.minimal_epsilon) : json(nullptr);

    json outputs = json::array();
    for (std::size_t j = 0; j < report.output_bounds.size(); ++j) {
        json entry = {{"index", j},
                      {"lower", report.output_bounds[j].lo},
                      {"upper", report.output_bounds[j].hi}};
        if (j < report.symbolic_bounds.size()) {
            entry["lower_equation"] = expr_json(report.symbolic_bounds[j].lb);
            entry["upper_equation"] = expr_json(report.symbolic_bounds[j].ub);
        }
        outputs.push_back(std::move(entry));
    }
    doc["outputs"] = std::move(outputs);

    doc["timing"] = {{"wall_seconds", report.wall_seconds}, {"threads", report.threads}};
    doc["search"] = {{"subregions", report.subregions},
                     {"leaves", report.leaves},
                     {"max_depth_reached", report.max_depth_reached},
                     {"timed_out", report.timed_out}};
    doc["symvars"] = report.symvars;

    json upper = json::object();
    json lower = json::object();
    for (std::size_t r = 0; r < kRuleCount; ++r) {
        const char* name = to_string(static_cast<DeltaRule>(r));
        upper[name] = report.cases.upper[r];
        lower[name] = report.cases.lower[r];
    }
    doc["case_histogram"] = {{"upper", std::move(upper)}, {"lower", std::move(lower)}};
    return doc.dump(2);
}

} // namespace dv
