#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgorder {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Nearest-neighbour pair {a, b} inside the box, a < b.
struct Bond {
    std::size_t a;
    std::size_t b;
};

/// Oriented pair (interior site, boundary site) at distance 1.
/// `axis`/`sign` locate the boundary site: it is `site ± e_axis`.
struct BoundaryBond {
    std::size_t site;
    std::size_t boundary_site;
    int axis;
    int sign;
};

/// Hypercubic box {0..L-1}^d with the bonds and boundary of the EA model.
///
/// Site indexing is row-major: coordinates (x_0, ..., x_{d-1}) map to
/// sum_k x_k * L^(d-1-k), so the last coordinate varies fastest. Bonds are
/// listed site by site in index order, axis 0 first, each bond stored at its
/// lower endpoint. Boundary bonds are listed the same way with the `-` side
/// of an axis before the `+` side; every boundary site touches exactly one
/// interior site, so boundary site ids follow the boundary-bond order.
class Lattice {
public:
    static constexpr int kMaxDim = 3;

    Lattice(int dim, int side) : dim_(dim), side_(side) {
        if (dim < 1 || dim > kMaxDim) throw ShapeError("lattice dimension must be 1, 2 or 3, got " + std::to_string(dim));
        if (side < 2) throw ShapeError("lattice side must be >= 2, got " + std::to_string(side));
        std::size_t n = 1;
        for (int k = 0; k < dim; ++k) {
            n *= static_cast<std::size_t>(side);
            if (n > (std::size_t{1} << 24)) throw ShapeError("lattice too large");
        }
        num_sites_ = n;
        strides_.assign(static_cast<std::size_t>(dim), 1);
        for (int k = dim - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * static_cast<std::size_t>(side);

        adjacency_start_.assign(num_sites_ + 1, 0);
        std::vector<std::vector<std::size_t>> incident(num_sites_);
        std::vector<int> x(static_cast<std::size_t>(dim));
        for (std::size_t s = 0; s < num_sites_; ++s) {
            coords_into(s, x);
            for (int k = 0; k < dim; ++k) {
                if (x[k] + 1 < side) {
                    incident[s].push_back(bonds_.size());
                    incident[s + strides_[k]].push_back(bonds_.size());
                    bonds_.push_back({s, s + strides_[k]});
                }
            }
        }
        for (std::size_t s = 0; s < num_sites_; ++s) {
            coords_into(s, x);
            for (int k = 0; k < dim; ++k) {
                if (x[k] == 0) boundary_bonds_.push_back({s, boundary_bonds_.size(), k, -1});
                if (x[k] == side - 1) boundary_bonds_.push_back({s, boundary_bonds_.size(), k, +1});
            }
        }
        boundary_start_.assign(num_sites_ + 1, 0);
        for (const auto& bb : boundary_bonds_) ++boundary_start_[bb.site + 1];
        for (std::size_t s = 0; s < num_sites_; ++s) boundary_start_[s + 1] += boundary_start_[s];

        for (std::size_t s = 0; s < num_sites_; ++s) adjacency_start_[s + 1] = adjacency_start_[s] + incident[s].size();
        adjacency_.reserve(adjacency_start_.back());
        for (std::size_t s = 0; s < num_sites_; ++s)
            for (std::size_t bi : incident[s]) adjacency_.push_back({bonds_[bi].a == s ? bonds_[bi].b : bonds_[bi].a, bi});
    }

    struct Neighbor {
        std::size_t site;
        std::size_t bond;
    };

    int dim() const noexcept { return dim_; }
    int side() const noexcept { return side_; }
    std::size_t num_sites() const noexcept { return num_sites_; }
    std::size_t num_boundary_sites() const noexcept { return boundary_bonds_.size(); }
    std::span<const Bond> bonds() const noexcept { return bonds_; }
    std::span<const BoundaryBond> boundary_bonds() const noexcept { return boundary_bonds_; }
    std::size_t stride(int axis) const { return strides_.at(static_cast<std::size_t>(axis)); }

    std::span<const Neighbor> neighbors(std::size_t site) const {
        return {adjacency_.data() + adjacency_start_[site], adjacency_start_[site + 1] - adjacency_start_[site]};
    }

    /// Boundary bonds incident to `site` (ids into boundary_bonds()).
    std::span<const BoundaryBond> boundary_bonds_of(std::size_t site) const {
        return {boundary_bonds_.data() + boundary_start_[site], boundary_start_[site + 1] - boundary_start_[site]};
    }

    std::vector<int> coords(std::size_t site) const {
        std::vector<int> x(static_cast<std::size_t>(dim_));
        coords_into(site, x);
        return x;
    }

    std::size_t index(std::span<const int> x) const {
        if (x.size() != static_cast<std::size_t>(dim_)) throw ShapeError("coordinate rank mismatch");
        std::size_t s = 0;
        for (int k = 0; k < dim_; ++k) {
            if (x[k] < 0 || x[k] >= side_) throw ShapeError("coordinate out of range");
            s += static_cast<std::size_t>(x[k]) * strides_[k];
        }
        return s;
    }

    /// Index into bonds() of the bond joining two neighbouring sites.
    std::size_t bond_between(std::size_t a, std::size_t b) const {
        for (const auto& nb : neighbors(a))
            if (nb.site == b) return nb.bond;
        throw ShapeError("sites are not nearest neighbours");
    }

    bool same_shape(const Lattice& other) const noexcept { return dim_ == other.dim_ && side_ == other.side_; }

private:
    void coords_into(std::size_t site, std::vector<int>& x) const {
        for (int k = dim_ - 1; k >= 0; --k) {
            x[k] = static_cast<int>(site % static_cast<std::size_t>(side_));
            site /= static_cast<std::size_t>(side_);
        }
    }

    int dim_;
    int side_;
    std::size_t num_sites_ = 0;
    std::vector<std::size_t> strides_;
    std::vector<Bond> bonds_;
    std::vector<BoundaryBond> boundary_bonds_;
    std::vector<std::size_t> boundary_start_;
    std::vector<Neighbor> adjacency_;
    std::vector<std::size_t> adjacency_start_;
};

inline Lattice build_lattice(int dim, int side) { return Lattice(dim, side); }

}  // namespace sgorder
