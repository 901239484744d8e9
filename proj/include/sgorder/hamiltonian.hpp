#pragma once

#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

#include "sgorder/disorder.hpp"
#include "sgorder/lattice.hpp"
#include "sgorder/spin_config.hpp"

namespace sgorder {

/// Coupling strengths between replicas: lambda couples 1-2, lambda_prime couples 1-3.
struct ReplicaCoupling {
    double lambda = 0.0;
    double lambda_prime = 0.0;
};

namespace detail {
inline void check_shapes(const Lattice& lat, const SpinConfig& c, const DisorderRealization& dis,
                         const BoundaryConfig& bnd) {
    if (c.size() != lat.num_sites()) throw ShapeError("configuration does not match the lattice");
    dis.check_matches(lat);
    bnd.check_matches(lat);
}
}  // namespace detail

/// H(σ) = -Σ_bonds J σσ - Σ_boundary J σ b - Σ_sites h σ.
inline double energy1(const Lattice& lat, const SpinConfig& c, const DisorderRealization& dis,
                      const BoundaryConfig& bnd) {
    detail::check_shapes(lat, c, dis, bnd);
    double e = 0.0;
    const auto bonds = lat.bonds();
    for (std::size_t i = 0; i < bonds.size(); ++i) e -= dis.J_bonds[i] * c.spin(bonds[i].a) * c.spin(bonds[i].b);
    const auto bbonds = lat.boundary_bonds();
    for (std::size_t i = 0; i < bbonds.size(); ++i)
        e -= dis.J_boundary[i] * c.spin(bbonds[i].site) * bnd.b[bbonds[i].boundary_site];
    for (std::size_t x = 0; x < lat.num_sites(); ++x) e -= dis.h[x] * c.spin(x);
    return e;
}

inline double energy2(const Lattice& lat, const SpinConfig& c1, const SpinConfig& c2, const ReplicaCoupling& k,
                      const DisorderRealization& dis, const BoundaryConfig& bnd) {
    return energy1(lat, c1, dis, bnd) + energy1(lat, c2, dis, bnd) - k.lambda * static_cast<double>(spin_dot(c1, c2));
}

/// Replicas 2 and 3 couple only through replica 1.
inline double energy3(const Lattice& lat, const SpinConfig& c1, const SpinConfig& c2, const SpinConfig& c3,
                      const ReplicaCoupling& k, const DisorderRealization& dis, const BoundaryConfig& bnd) {
    // Terms of replicas 2 and 3 are paired so the 2<->3 transposition rounds identically.
    return energy1(lat, c1, dis, bnd) + (energy1(lat, c2, dis, bnd) + energy1(lat, c3, dis, bnd)) -
           (k.lambda * static_cast<double>(spin_dot(c1, c2)) + k.lambda_prime * static_cast<double>(spin_dot(c1, c3)));
}

/// Local gauge ε_x ∈ {±1}: σ' = εσ, J'_xy = ε_x ε_y J_xy, h' = εh. Boundary
/// sites carry ε = +1, so boundary bonds pick up ε_x only and b is unchanged.
inline std::tuple<DisorderRealization, BoundaryConfig, SpinConfig> gauge_transform(const Lattice& lat,
                                                                                   const DisorderRealization& dis,
                                                                                   const BoundaryConfig& bnd,
                                                                                   const SpinConfig& c,
                                                                                   std::span<const int> epsilon) {
    detail::check_shapes(lat, c, dis, bnd);
    if (epsilon.size() != lat.num_sites()) throw ShapeError("gauge field does not match the lattice");
    for (int e : epsilon)
        if (e != 1 && e != -1) throw ShapeError("gauge values must be +1 or -1");
    DisorderRealization d2 = dis;
    SpinConfig c2 = c;
    const auto bonds = lat.bonds();
    for (std::size_t i = 0; i < bonds.size(); ++i) d2.J_bonds[i] *= epsilon[bonds[i].a] * epsilon[bonds[i].b];
    const auto bbonds = lat.boundary_bonds();
    for (std::size_t i = 0; i < bbonds.size(); ++i) d2.J_boundary[i] *= epsilon[bbonds[i].site];
    for (std::size_t x = 0; x < lat.num_sites(); ++x) {
        d2.h[x] *= epsilon[x];
        if (epsilon[x] < 0) c2.flip(x);
    }
    return {std::move(d2), bnd, std::move(c2)};
}

/// The Hamiltonian flattened for hot loops: interior couplings in CSR form and
/// an effective field h_x + Σ_u J_xu b_u that absorbs the boundary.
struct LocalCouplings {
    std::size_t num_sites = 0;
    std::vector<std::size_t> start;  // CSR offsets into nbr/coupling
    std::vector<std::size_t> nbr;
    std::vector<double> coupling;
    std::vector<double> field;
    std::vector<double> boundary_field;  // Σ_u J_xu b_u alone (for boundary sweeps)

    /// Σ_{y~x} J_xy σ_y + field_x for spins given as a bit mask (N <= 64).
    double local_field_mask(std::size_t x, std::uint64_t mask) const noexcept {
        double f = field[x];
        for (std::size_t k = start[x]; k < start[x + 1]; ++k)
            f += coupling[k] * (((mask >> nbr[k]) & 1u) ? 1.0 : -1.0);
        return f;
    }

    /// Σ_{y~x} J_xy σ_y without the field.
    double bond_field_mask(std::size_t x, std::uint64_t mask) const noexcept {
        double f = 0.0;
        for (std::size_t k = start[x]; k < start[x + 1]; ++k)
            f += coupling[k] * (((mask >> nbr[k]) & 1u) ? 1.0 : -1.0);
        return f;
    }

    bool has_field() const noexcept {
        for (double f : field)
            if (f != 0.0) return true;
        return false;
    }

    double energy_mask(std::uint64_t mask) const noexcept {
        double e = 0.0;
        for (std::size_t x = 0; x < num_sites; ++x) {
            const double s = ((mask >> x) & 1u) ? 1.0 : -1.0;
            double bond_part = 0.0;
            for (std::size_t k = start[x]; k < start[x + 1]; ++k)
                if (nbr[k] > x) bond_part += coupling[k] * (((mask >> nbr[k]) & 1u) ? 1.0 : -1.0);
            e -= s * (bond_part + field[x]);
        }
        return e;
    }
};

inline LocalCouplings compile_couplings(const Lattice& lat, const DisorderRealization& dis, const BoundaryConfig& bnd) {
    dis.check_matches(lat);
    bnd.check_matches(lat);
    LocalCouplings lc;
    const std::size_t n = lat.num_sites();
    lc.num_sites = n;
    lc.start.assign(n + 1, 0);
    lc.field.assign(n, 0.0);
    lc.boundary_field.assign(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        lc.start[x + 1] = lc.start[x] + lat.neighbors(x).size();
        for (const auto& nb : lat.neighbors(x)) {
            lc.nbr.push_back(nb.site);
            lc.coupling.push_back(dis.J_bonds[nb.bond]);
        }
        double bf = 0.0;
        for (const auto& bb : lat.boundary_bonds_of(x)) bf += dis.J_boundary[bb.boundary_site] * bnd.b[bb.boundary_site];
        lc.boundary_field[x] = bf;
        lc.field[x] = dis.h[x] + bf;
    }
    return lc;
}

}  // namespace sgorder
