#include "wavemap/archive.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wavemap::archive {

using nlohmann::ordered_json;
namespace sg = wavemap::seg;
namespace mt = wavemap::match;

namespace {

const char* kind_name(sg::SegmentKind k) {
    switch (k) {
        case sg::SegmentKind::interior: return "interior";
        case sg::SegmentKind::subcone: return "subcone";
        case sg::SegmentKind::supercone: return "supercone";
        case sg::SegmentKind::farfield: return "farfield";
        case sg::SegmentKind::extension: return "extension";
    }
    return "?";
}

sg::SegmentKind kind_from(const std::string& s) {
    if (s == "interior") return sg::SegmentKind::interior;
    if (s == "subcone") return sg::SegmentKind::subcone;
    if (s == "supercone") return sg::SegmentKind::supercone;
    if (s == "farfield") return sg::SegmentKind::farfield;
    if (s == "extension") return sg::SegmentKind::extension;
    throw std::invalid_argument("archive: unknown segment kind '" + s + "'");
}

ordered_json segment_to_json(const sg::SegmentSolution& s) {
    ordered_json j;
    j["kind"] = kind_name(s.kind);
    j["region"] = s.region == basis::Region::interior ? "interior" : "exterior";
    j["interval"] = {s.a_lo, s.a_hi};
    j["nodes"] = s.nodes;
    j["Q"] = s.q;
    j["Qprime"] = s.qp;
    if (!s.corr.empty()) {
        j["correction"] = s.corr;
        j["correction_prime"] = s.corrp;
    }
    j["convergence"] = {{"iterations", s.convergence.iterations},
                        {"final_update_supnorm", s.convergence.final_update_supnorm},
                        {"contraction_ratio", s.convergence.contraction_ratio},
                        {"tail_bound", s.convergence.tail_bound},
                        {"interp_error_bound", s.convergence.interp_error_bound}};
    return j;
}

sg::SegmentSolution segment_from_json(const ordered_json& j, const sg::ShootingParams& params) {
    sg::SegmentSolution s;
    s.kind = kind_from(j.at("kind").get<std::string>());
    s.region = j.at("region").get<std::string>() == "interior" ? basis::Region::interior
                                                               : basis::Region::exterior;
    s.a_lo = j.at("interval")[0].get<double>();
    s.a_hi = j.at("interval")[1].get<double>();
    s.nodes = j.at("nodes").get<std::vector<double>>();
    s.q = j.at("Q").get<std::vector<double>>();
    s.qp = j.at("Qprime").get<std::vector<double>>();
    if (j.contains("correction")) {
        s.corr = j.at("correction").get<std::vector<double>>();
        s.corrp = j.at("correction_prime").get<std::vector<double>>();
        if (s.corr.size() != s.nodes.size() || s.corrp.size() != s.nodes.size())
            throw std::invalid_argument("archive: inconsistent correction arrays");
    }
    const auto& c = j.at("convergence");
    s.convergence.iterations = c.at("iterations").get<int>();
    s.convergence.final_update_supnorm = c.at("final_update_supnorm").get<double>();
    s.convergence.contraction_ratio = c.at("contraction_ratio").get<double>();
    s.convergence.tail_bound = c.at("tail_bound").get<double>();
    s.convergence.interp_error_bound = c.at("interp_error_bound").get<double>();
    s.params = params;
    if (s.nodes.size() != s.q.size() || s.nodes.size() != s.qp.size() || s.nodes.size() < 2)
        throw std::invalid_argument("archive: inconsistent segment arrays");
    return s;
}

}  // namespace

std::string to_json(const mt::GlobalProfile& p) {
    ordered_json j;
    j["schema"] = kSchemaVersion;
    j["tool"] = kToolVersion;
    const auto& q = p.params;
    j["params"] = {{"d0", q.d0},   {"d1", q.d1},   {"d2", q.d2},   {"d3", q.d3},
                   {"d1t", q.d1t}, {"d2t", q.d2t}, {"d3t", q.d3t}, {"q1", q.q1},
                   {"q2", q.q2},   {"mode", q.mode == sg::ProfileMode::small ? "small" : "large"}};
    j["cone_trace"] = {{"left", p.cone_left},
                       {"right", p.cone_right},
                       {"continuity_residual", p.continuity_residual}};
    j["cone_expansion"] = {{"C1", p.cone_expansion.C1},
                           {"C2", p.cone_expansion.C2},
                           {"C3", p.cone_expansion.C3},
                           {"Q4_envelope", p.cone_expansion.Q4_envelope}};
    j["farfield"] = {{"limit", p.farfield.limit},
                     {"coeff", p.farfield.coeff},
                     {"remainder_envelope", p.farfield.remainder_envelope}};
    j["matching"] = {{"interior_residual", p.interior_match.final_residual},
                     {"interior_jacobian_det", p.interior_match.jacobian_det},
                     {"interior_jacobian_cond", p.interior_match.jacobian_cond},
                     {"exterior_residual", p.exterior_match.final_residual},
                     {"exterior_jacobian_det", p.exterior_match.jacobian_det},
                     {"exterior_jacobian_cond", p.exterior_match.jacobian_cond}};
    j["segments"] = ordered_json::array({segment_to_json(p.interior), segment_to_json(p.subcone),
                                         segment_to_json(p.supercone), segment_to_json(p.outer)});
    return j.dump(1);
}

mt::GlobalProfile from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("archive: malformed JSON: ") + e.what());
    }
    if (!j.contains("schema") || j["schema"].get<int>() != kSchemaVersion)
        throw std::invalid_argument("archive: missing or unsupported schema version");
    mt::GlobalProfile p;
    const auto& q = j.at("params");
    p.params.d0 = q.at("d0").get<double>();
    p.params.d1 = q.at("d1").get<double>();
    p.params.d2 = q.at("d2").get<double>();
    p.params.d3 = q.at("d3").get<double>();
    p.params.d1t = q.at("d1t").get<double>();
    p.params.d2t = q.at("d2t").get<double>();
    p.params.d3t = q.at("d3t").get<double>();
    p.params.q1 = q.at("q1").get<double>();
    p.params.q2 = q.at("q2").get<double>();
    p.params.mode = q.at("mode").get<std::string>() == "large" ? sg::ProfileMode::large
                                                               : sg::ProfileMode::small;
    p.cone_left = j.at("cone_trace").at("left").get<double>();
    p.cone_right = j.at("cone_trace").at("right").get<double>();
    p.continuity_residual = j.at("cone_trace").at("continuity_residual").get<double>();
    p.cone_expansion.C1 = j.at("cone_expansion").at("C1").get<double>();
    p.cone_expansion.C2 = j.at("cone_expansion").at("C2").get<double>();
    p.cone_expansion.C3 = j.at("cone_expansion").at("C3").get<double>();
    p.cone_expansion.Q4_envelope = j.at("cone_expansion").at("Q4_envelope").get<double>();
    p.farfield.limit = j.at("farfield").at("limit").get<double>();
    p.farfield.coeff = j.at("farfield").at("coeff").get<double>();
    p.farfield.remainder_envelope = j.at("farfield").at("remainder_envelope").get<double>();
    p.interior_match.final_residual = j.at("matching").at("interior_residual").get<double>();
    p.interior_match.jacobian_det = j.at("matching").at("interior_jacobian_det").get<double>();
    p.interior_match.jacobian_cond = j.at("matching").at("interior_jacobian_cond").get<double>();
    p.exterior_match.final_residual = j.at("matching").at("exterior_residual").get<double>();
    p.exterior_match.jacobian_det = j.at("matching").at("exterior_jacobian_det").get<double>();
    p.exterior_match.jacobian_cond = j.at("matching").at("exterior_jacobian_cond").get<double>();
    const auto& segs = j.at("segments");
    if (!segs.is_array() || segs.size() != 4)
        throw std::invalid_argument("archive: expected 4 segments");
    p.interior = segment_from_json(segs[0], p.params);
    p.subcone = segment_from_json(segs[1], p.params);
    p.supercone = segment_from_json(segs[2], p.params);
    p.outer = segment_from_json(segs[3], p.params);
    return p;
}

void write_file_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
        f << text;
        if (!f) throw std::runtime_error("write failed on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename to " + path + " failed");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace wavemap::archive
