#pragma once

// CSV ingestion/serialization, prior JSON documents, content hashing and
// number formatting. Tables print with 6 significant digits; JSON carries
// shortest-round-trip reals so reloading is exact.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rankval/errors.hpp"
#include "rankval/model.hpp"

namespace rankval {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting and hashing

inline std::string format_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_table(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Dataset CSV

// Canonical serialization; also the byte stream behind the data hash.
inline std::string write_dataset_csv(const Dataset& ds) {
    std::ostringstream out;
    switch (ds.kind) {
        case PayloadKind::Normal:
            out << "id,x,sigma2\n";
            for (const auto& u : ds.units) {
                const auto& o = u.normal();
                out << u.id << ',' << format_shortest(o.x) << ',' << format_shortest(o.sigma2)
                    << '\n';
            }
            break;
        case PayloadKind::Binomial:
            out << "id,y,n\n";
            for (const auto& u : ds.units) {
                const auto& o = u.binomial();
                out << u.id << ',' << o.y << ',' << o.n << '\n';
            }
            break;
        case PayloadKind::Draws:
            out << "id,draws...\n";
            for (const auto& u : ds.units) {
                out << u.id;
                for (double d : u.draws().draws) out << ',' << format_shortest(d);
                out << '\n';
            }
            break;
    }
    return out.str();
}

inline std::string dataset_hash(const Dataset& ds) {
    return hex64(fnv1a64(write_dataset_csv(ds)));
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    out.push_back(cell);
    return out;
}

inline double parse_real(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("ParseError", context + ": bad real value '" + s + "'");
    return v;
}

inline long parse_int(const std::string& s, const std::string& context) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("ParseError", context + ": bad integer value '" + s + "'");
    return v;
}

}  // namespace detail

// Reads a unit CSV. The header row decides the payload kind:
//   id,x,sigma2   -> normal
//   id,y,n        -> binomial
//   anything else starting with id -> draws (id then draw columns)
// Lines starting with '#' are ignored.
inline Dataset read_dataset_csv(std::istream& in, const ValidateOptions& opt = {}) {
    std::string line;
    std::string header;
    std::vector<UnitRecord> units;
    bool have_header = false;
    PayloadKind kind = PayloadKind::Draws;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split_csv_line(line);
        if (!have_header) {
            if (cells.empty() || cells[0] != "id")
                throw DataError("ParseError", "header row must start with 'id'");
            if (cells.size() == 3 && cells[1] == "x" && cells[2] == "sigma2")
                kind = PayloadKind::Normal;
            else if (cells.size() == 3 && cells[1] == "y" && cells[2] == "n")
                kind = PayloadKind::Binomial;
            else
                kind = PayloadKind::Draws;
            have_header = true;
            continue;
        }
        if (cells.size() < 2) continue;  // blank-ish row
        const std::string ctx = "line " + std::to_string(lineno);
        UnitRecord u;
        u.id = cells[0];
        switch (kind) {
            case PayloadKind::Normal: {
                if (cells.size() != 3) throw DataError("ParseError", ctx + ": expected id,x,sigma2");
                u.payload = NormalObs{detail::parse_real(cells[1], ctx),
                                      detail::parse_real(cells[2], ctx)};
                break;
            }
            case PayloadKind::Binomial: {
                if (cells.size() != 3) throw DataError("ParseError", ctx + ": expected id,y,n");
                u.payload = BinomialObs{detail::parse_int(cells[1], ctx),
                                        detail::parse_int(cells[2], ctx)};
                break;
            }
            case PayloadKind::Draws: {
                PosteriorDraws d;
                d.draws.reserve(cells.size() - 1);
                for (std::size_t i = 1; i < cells.size(); ++i)
                    d.draws.push_back(detail::parse_real(cells[i], ctx));
                u.payload = std::move(d);
                break;
            }
        }
        units.push_back(std::move(u));
    }
    if (!have_header) throw DataError("EmptyDataset", "no header row found");
    return validate_dataset(std::move(units), opt);
}

inline Dataset read_dataset_csv_file(const std::string& path, const ValidateOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("FileNotFound", "cannot open '" + path + "'");
    return read_dataset_csv(in, opt);
}

// ---------------------------------------------------------------------------
// Prior JSON

inline json variance_law_to_json(const VarianceLaw& law) {
    json j;
    if (const auto* g = std::get_if<GammaVar>(&law)) {
        j["family"] = "gamma";
        j["parameters"] = {{"shape", g->shape}, {"rate", g->rate}};
    } else if (const auto* ig = std::get_if<InvGammaVar>(&law)) {
        j["family"] = "inv_gamma";
        j["parameters"] = {{"shape", ig->shape}, {"scale", ig->scale}};
    } else if (const auto* pm = std::get_if<PointMassVar>(&law)) {
        j["family"] = "point_mass";
        j["parameters"] = {{"sigma2", pm->sigma2}};
    } else {
        j["family"] = "empirical";
        j["draws"] = std::get<EmpiricalVar>(law).draws;
    }
    return j;
}

inline VarianceLaw variance_law_from_json(const json& j) {
    const std::string family = j.at("family");
    if (family == "gamma")
        return GammaVar{j.at("parameters").at("shape"), j.at("parameters").at("rate")};
    if (family == "inv_gamma")
        return InvGammaVar{j.at("parameters").at("shape"), j.at("parameters").at("scale")};
    if (family == "point_mass") return PointMassVar{j.at("parameters").at("sigma2")};
    if (family == "empirical")
        return EmpiricalVar{j.at("draws").get<std::vector<double>>()};
    throw DataError("ParseError", "unknown variance-law family '" + family + "'");
}

inline json prior_to_json(const PriorSpec& prior, std::size_t unit_count,
                          const std::string& data_hash) {
    json j;
    if (const auto* np = std::get_if<NormalPrior>(&prior.theta_law)) {
        j["family"] = "normal";
        j["parameters"] = {{"mu", np->mu}, {"tau2", np->tau2}};
    } else if (const auto* bp = std::get_if<BetaPrior>(&prior.theta_law)) {
        j["family"] = "beta";
        j["parameters"] = {{"a", bp->a}, {"b", bp->b}};
    } else {
        j["family"] = "empirical";
        j["draws"] = std::get<EmpiricalPrior>(prior.theta_law).sorted_draws;
    }
    j["log_likelihood"] = prior.diag.log_likelihood;
    j["converged"] = prior.diag.converged;
    j["boundary"] = prior.diag.boundary;
    if (!prior.diag.param_se.empty()) j["param_se"] = prior.diag.param_se;
    if (!prior.diag.notes.empty()) j["notes"] = prior.diag.notes;
    j["fingerprint"] = {{"units", unit_count}, {"data_hash", data_hash}};
    if (prior.variance_law) j["variance_law"] = variance_law_to_json(*prior.variance_law);
    return j;
}

inline PriorSpec prior_from_json(const json& j) {
    PriorSpec p;
    const std::string family = j.at("family");
    if (family == "normal") {
        p.theta_law = NormalPrior{j.at("parameters").at("mu"), j.at("parameters").at("tau2")};
    } else if (family == "beta") {
        p.theta_law = BetaPrior{j.at("parameters").at("a"), j.at("parameters").at("b")};
    } else if (family == "empirical") {
        EmpiricalPrior ep{j.at("draws").get<std::vector<double>>()};
        std::sort(ep.sorted_draws.begin(), ep.sorted_draws.end());
        p.theta_law = std::move(ep);
    } else {
        throw DataError("ParseError", "unknown prior family '" + family + "'");
    }
    if (j.contains("log_likelihood")) p.diag.log_likelihood = j["log_likelihood"];
    if (j.contains("converged")) p.diag.converged = j["converged"];
    if (j.contains("boundary")) p.diag.boundary = j["boundary"];
    if (j.contains("variance_law")) p.variance_law = variance_law_from_json(j["variance_law"]);
    return p;
}

inline PriorSpec read_prior_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("FileNotFound", "cannot open '" + path + "'");
    json j;
    in >> j;
    return prior_from_json(j);
}

}  // namespace rankval
