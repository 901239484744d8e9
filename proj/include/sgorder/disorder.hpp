#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgorder/lattice.hpp"
#include "sgorder/rng.hpp"

namespace sgorder {

enum class DistKind { constant, pm_j, gaussian, uniform };

inline std::string to_string(DistKind k) {
    switch (k) {
        case DistKind::constant: return "constant";
        case DistKind::pm_j: return "pm_j";
        case DistKind::gaussian: return "gaussian";
        case DistKind::uniform: return "uniform";
    }
    return "?";
}

inline DistKind dist_kind_from_string(const std::string& s) {
    if (s == "constant") return DistKind::constant;
    if (s == "pm_j") return DistKind::pm_j;
    if (s == "gaussian") return DistKind::gaussian;
    if (s == "uniform") return DistKind::uniform;
    throw std::invalid_argument("unknown distribution kind '" + s + "'");
}

/// Law of a coupling or field. Parameter meaning by kind:
///   constant(c):        p0 = c
///   pm_j(p, J):         +J with probability p, -J otherwise
///   gaussian(mean, sd): p0 = mean, p1 = sd
///   uniform(a, b):      on [a, b)
struct Distribution {
    DistKind kind = DistKind::constant;
    double p0 = 0.0;
    double p1 = 0.0;

    static Distribution constant(double c) { return checked({DistKind::constant, c, 0.0}); }
    static Distribution pm_j(double p, double magnitude = 1.0) { return checked({DistKind::pm_j, p, magnitude}); }
    static Distribution gaussian(double mean, double sd) { return checked({DistKind::gaussian, mean, sd}); }
    static Distribution uniform(double a, double b) { return checked({DistKind::uniform, a, b}); }

    void validate() const {
        if (!std::isfinite(p0) || !std::isfinite(p1)) throw std::invalid_argument("distribution parameters must be finite");
        switch (kind) {
            case DistKind::constant: break;
            case DistKind::pm_j:
                if (p0 < 0.0 || p0 > 1.0) throw std::invalid_argument("pm_j probability must lie in [0,1]");
                break;
            case DistKind::gaussian:
                if (p1 < 0.0) throw std::invalid_argument("gaussian sd must be >= 0");
                break;
            case DistKind::uniform:
                if (p1 < p0) throw std::invalid_argument("uniform requires a <= b");
                break;
        }
    }

    bool is_degenerate() const noexcept {
        return kind == DistKind::constant || (kind == DistKind::gaussian && p1 == 0.0) ||
               (kind == DistKind::uniform && p0 == p1) || (kind == DistKind::pm_j && (p0 == 0.0 || p0 == 1.0));
    }

    /// Value of a degenerate law; throws otherwise.
    double degenerate_value() const {
        if (!is_degenerate()) throw std::logic_error("distribution is random");
        if (kind == DistKind::pm_j) return p0 == 1.0 ? p1 : -p1;
        return p0;
    }

    double sample(CounterRng& rng) const {
        switch (kind) {
            case DistKind::constant: return p0;
            case DistKind::pm_j: return rng.bernoulli(p0) ? p1 : -p1;
            case DistKind::gaussian: return rng.normal(p0, p1);
            case DistKind::uniform: return rng.uniform(p0, p1);
        }
        return 0.0;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"kind", to_string(kind)}};
        switch (kind) {
            case DistKind::constant: j["value"] = p0; break;
            case DistKind::pm_j: j["p"] = p0; j["magnitude"] = p1; break;
            case DistKind::gaussian: j["mean"] = p0; j["sd"] = p1; break;
            case DistKind::uniform: j["a"] = p0; j["b"] = p1; break;
        }
        return j;
    }

    static Distribution from_json(const nlohmann::json& j) {
        const auto kind = dist_kind_from_string(j.at("kind").get<std::string>());
        switch (kind) {
            case DistKind::constant: return constant(j.at("value").get<double>());
            case DistKind::pm_j: return pm_j(j.at("p").get<double>(), j.value("magnitude", 1.0));
            case DistKind::gaussian: return gaussian(j.at("mean").get<double>(), j.at("sd").get<double>());
            case DistKind::uniform: return uniform(j.at("a").get<double>(), j.at("b").get<double>());
        }
        throw std::invalid_argument("bad distribution");
    }

    friend bool operator==(const Distribution&, const Distribution&) = default;

private:
    static Distribution checked(Distribution d) {
        d.validate();
        return d;
    }
};

/// One quenched draw of the couplings and fields on a lattice.
/// J_bonds follows Lattice::bonds(), J_boundary follows Lattice::boundary_bonds(),
/// h follows site order.
struct DisorderRealization {
    int dim = 0;
    int side = 0;
    std::vector<double> J_bonds;
    std::vector<double> J_boundary;
    std::vector<double> h;
    Distribution j_dist;
    Distribution h_dist;
    std::uint64_t seed = 0;

    static constexpr int kSchemaVersion = 1;

    void check_matches(const Lattice& lat) const {
        if (dim != lat.dim() || side != lat.side() || J_bonds.size() != lat.bonds().size() ||
            J_boundary.size() != lat.boundary_bonds().size() || h.size() != lat.num_sites())
            throw ShapeError("disorder realization does not match the lattice");
    }

    void validate() const {
        auto finite = [](std::span<const double> v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        if (!finite(J_bonds) || !finite(J_boundary) || !finite(h)) throw std::invalid_argument("non-finite disorder value");
    }

    nlohmann::json to_json() const {
        return {{"version", kSchemaVersion},
                {"d", dim},
                {"L", side},
                {"dist_meta", {{"J", j_dist.to_json()}, {"h", h_dist.to_json()}}},
                {"seed", seed},
                {"J_bonds", J_bonds},
                {"J_boundary", J_boundary},
                {"h", h}};
    }

    static DisorderRealization from_json(const nlohmann::json& j) {
        if (j.at("version").get<int>() != kSchemaVersion) throw std::invalid_argument("unsupported disorder schema version");
        DisorderRealization r;
        r.dim = j.at("d").get<int>();
        r.side = j.at("L").get<int>();
        r.j_dist = Distribution::from_json(j.at("dist_meta").at("J"));
        r.h_dist = Distribution::from_json(j.at("dist_meta").at("h"));
        r.seed = j.at("seed").get<std::uint64_t>();
        r.J_bonds = j.at("J_bonds").get<std::vector<double>>();
        r.J_boundary = j.at("J_boundary").get<std::vector<double>>();
        r.h = j.at("h").get<std::vector<double>>();
        r.check_matches(Lattice(r.dim, r.side));
        r.validate();
        return r;
    }

    friend bool operator==(const DisorderRealization&, const DisorderRealization&) = default;
};

/// Draws J (stream 0: bulk bonds then boundary bonds) and h (stream 1) i.i.d.
inline DisorderRealization sample_disorder(const Lattice& lat, const Distribution& j_dist, const Distribution& h_dist,
                                           std::uint64_t seed) {
    j_dist.validate();
    h_dist.validate();
    DisorderRealization r;
    r.dim = lat.dim();
    r.side = lat.side();
    r.j_dist = j_dist;
    r.h_dist = h_dist;
    r.seed = seed;
    CounterRng jrng(seed, 0);
    CounterRng hrng(seed, 1);
    r.J_bonds.resize(lat.bonds().size());
    for (auto& v : r.J_bonds) v = j_dist.sample(jrng);
    r.J_boundary.resize(lat.boundary_bonds().size());
    for (auto& v : r.J_boundary) v = j_dist.sample(jrng);
    r.h.resize(lat.num_sites());
    for (auto& v : r.h) v = h_dist.sample(hrng);
    return r;
}

/// Non-random couplings J and uniform field h.
inline DisorderRealization uniform_disorder(const Lattice& lat, double J, double h) {
    return sample_disorder(lat, Distribution::constant(J), Distribution::constant(h), 0);
}

/// Boundary spins b_u in [-1, 1], indexed by boundary site.
struct BoundaryConfig {
    std::vector<double> b;

    static BoundaryConfig open(const Lattice& lat) { return {std::vector<double>(lat.num_boundary_sites(), 0.0)}; }
    static BoundaryConfig plus(const Lattice& lat) { return {std::vector<double>(lat.num_boundary_sites(), 1.0)}; }
    static BoundaryConfig filled(const Lattice& lat, double v) {
        BoundaryConfig c{std::vector<double>(lat.num_boundary_sites(), v)};
        c.validate();
        return c;
    }

    void validate() const {
        for (double v : b)
            if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("boundary values must lie in [-1,1]");
    }

    void check_matches(const Lattice& lat) const {
        if (b.size() != lat.num_boundary_sites()) throw ShapeError("boundary configuration does not match the lattice");
    }

    bool is_open() const noexcept {
        for (double v : b)
            if (v != 0.0) return false;
        return true;
    }

    friend bool operator==(const BoundaryConfig&, const BoundaryConfig&) = default;
};

}  // namespace sgorder
