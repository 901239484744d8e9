#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sgorder/exact.hpp"

namespace sgorder {

/// Widest layer handled by the transfer matrix (2^width states per layer).
inline constexpr std::size_t kMaxTransferWidth = 16;

/// Exact single-replica Gibbs averages for d <= 2 by transfer matrices along
/// the first axis. A layer is the set of sites sharing the first coordinate;
/// its state is a bit mask over the remaining coordinate. Forward and backward
/// vectors are renormalised per layer, so any β is safe.
class TransferChain {
public:
    TransferChain(double beta, const Lattice& lat, const DisorderRealization& dis, const BoundaryConfig& bnd)
        : beta_(beta), num_sites_(lat.num_sites()) {
        require_positive_beta(beta);
        if (lat.dim() > 2) throw ShapeError("transfer matrices support d <= 2 only");
        layers_ = static_cast<std::size_t>(lat.side());
        width_ = lat.dim() == 1 ? 1 : static_cast<std::size_t>(lat.side());
        if (width_ > kMaxTransferWidth)
            throw CapError("transfer layer width " + std::to_string(width_) + " exceeds the cap of " +
                           std::to_string(kMaxTransferWidth));
        states_ = std::size_t{1} << width_;
        const auto lc = compile_couplings(lat, dis, bnd);

        intra_.assign(layers_ * width_, 0.0);
        inter_.assign(layers_ * width_, 0.0);
        const auto bonds = lat.bonds();
        const std::size_t layer_stride = lat.stride(0);
        for (std::size_t i = 0; i < bonds.size(); ++i) {
            const std::size_t a = std::min(bonds[i].a, bonds[i].b);
            const std::size_t b = std::max(bonds[i].a, bonds[i].b);
            const std::size_t t = a / layer_stride;
            const std::size_t j = a % layer_stride;
            if (lat.dim() == 1 || b - a == layer_stride)
                inter_[t * width_ + j] = dis.J_bonds[i];
            else
                intra_[t * width_ + j] = dis.J_bonds[i];
        }

        solve(lc.field);
    }

    /// Re-solves the chain for new effective site fields (h plus boundary
    /// contributions), keeping the couplings.
    void solve(std::span<const double> field) {
        if (field.size() != num_sites_) throw ShapeError("field does not match the lattice");
        log_z_ = 0.0;
        const double beta = beta_;
        // Boltzmann factors of each layer's internal energy, shifted to max 1.
        layer_weight_.assign(layers_ * states_, 0.0);
        std::vector<double> e(states_);
        for (std::size_t t = 0; t < layers_; ++t) {
            double emin = INFINITY;
            for (std::size_t s = 0; s < states_; ++s) {
                double v = 0.0;
                for (std::size_t j = 0; j < width_; ++j) {
                    const double sj = spin(s, j);
                    v -= field[t * width_ + j] * sj;
                    if (j + 1 < width_) v -= intra_[t * width_ + j] * sj * spin(s, j + 1);
                }
                e[s] = v;
                emin = std::min(emin, v);
            }
            for (std::size_t s = 0; s < states_; ++s) layer_weight_[t * states_ + s] = std::exp(-beta * (e[s] - emin));
            log_z_ += -beta * emin;
        }

        // Forward pass.
        forward_.assign(layers_ * states_, 0.0);
        norm_.assign(layers_, 0.0);
        std::vector<double> v(states_);
        for (std::size_t t = 0; t < layers_; ++t) {
            if (t == 0) {
                for (std::size_t s = 0; s < states_; ++s) v[s] = layer_weight_[s];
            } else {
                for (std::size_t s = 0; s < states_; ++s) v[s] = forward_[(t - 1) * states_ + s];
                log_z_ += apply_kernel(t - 1, v);
                for (std::size_t s = 0; s < states_; ++s) v[s] *= layer_weight_[t * states_ + s];
            }
            double sum = 0.0;
            for (double x : v) sum += x;
            norm_[t] = sum;
            log_z_ += std::log(sum);
            for (std::size_t s = 0; s < states_; ++s) forward_[t * states_ + s] = v[s] / sum;
        }

        // Backward pass (only ratios are used, so its scale is dropped).
        backward_.assign(layers_ * states_, 0.0);
        for (std::size_t s = 0; s < states_; ++s) backward_[(layers_ - 1) * states_ + s] = 1.0;
        for (std::size_t t = layers_ - 1; t-- > 0;) {
            for (std::size_t s = 0; s < states_; ++s)
                v[s] = backward_[(t + 1) * states_ + s] * layer_weight_[(t + 1) * states_ + s];
            apply_kernel(t, v);
            double sum = 0.0;
            for (double x : v) sum += x;
            for (std::size_t s = 0; s < states_; ++s) backward_[t * states_ + s] = v[s] / sum;
        }
    }

    double log_z() const noexcept { return log_z_; }

    /// ⟨σ_x⟩ for all sites.
    std::vector<double> magnetization() const {
        std::vector<double> m(num_sites_, 0.0);
        for (std::size_t t = 0; t < layers_; ++t) {
            double z = 0.0;
            for (std::size_t s = 0; s < states_; ++s) {
                const double p = forward_[t * states_ + s] * backward_[t * states_ + s];
                z += p;
                for (std::size_t j = 0; j < width_; ++j) m[t * width_ + j] += p * spin(s, j);
            }
            for (std::size_t j = 0; j < width_; ++j) m[t * width_ + j] /= z;
        }
        return m;
    }

    /// log Z, ⟨σ_x⟩ and, optionally, the full matrix ⟨σ_x σ_y⟩.
    Correlations correlations(bool with_pairs = true) const {
        Correlations c;
        const std::size_t n = num_sites_;
        c.num_sites = n;
        c.log_z = log_z_;
        c.magnetization = magnetization();
        if (!with_pairs) return c;
        c.correlation.assign(n * n, 0.0);
        std::vector<double> layer_z(layers_, 0.0);
        for (std::size_t t = 0; t < layers_; ++t)
            for (std::size_t s = 0; s < states_; ++s) layer_z[t] += forward_[t * states_ + s] * backward_[t * states_ + s];

        std::vector<double> v(states_);
        for (std::size_t t = 0; t < layers_; ++t) {
            for (std::size_t j = 0; j < width_; ++j) {
                const std::size_t x = t * width_ + j;
                for (std::size_t s = 0; s < states_; ++s) v[s] = forward_[t * states_ + s] * spin(s, j);
                for (std::size_t u = t; u < layers_; ++u) {
                    if (u > t) {
                        apply_kernel(u - 1, v);
                        for (std::size_t s = 0; s < states_; ++s) v[s] *= layer_weight_[u * states_ + s] / norm_[u];
                    }
                    for (std::size_t k = 0; k < width_; ++k) {
                        const std::size_t y = u * width_ + k;
                        if (y < x) continue;
                        double acc = 0.0;
                        for (std::size_t s = 0; s < states_; ++s) acc += v[s] * backward_[u * states_ + s] * spin(s, k);
                        const double val = y == x ? 1.0 : acc / layer_z[u];
                        c.correlation[x * n + y] = val;
                        c.correlation[y * n + x] = val;
                    }
                }
            }
        }
        return c;
    }

private:
    static double spin(std::size_t s, std::size_t j) noexcept { return ((s >> j) & 1u) ? 1.0 : -1.0; }

    /// v <- T_t v where T_t(s, s') = Π_j exp(β K_j σ_j σ'_j) couples layers t
    /// and t+1. Each column is a 2x2 butterfly; the factor exp(β|K_j|) is
    /// factored out and its log returned.
    double apply_kernel(std::size_t t, std::vector<double>& v) const {
        double log_shift = 0.0;
        for (std::size_t j = 0; j < width_; ++j) {
            const double k = inter_[t * width_ + j];
            const double small = std::exp(-2.0 * beta_ * std::abs(k));
            log_shift += beta_ * std::abs(k);
            const std::size_t bit = std::size_t{1} << j;
            for (std::size_t s = 0; s < states_; ++s) {
                if (s & bit) continue;
                const double lo = v[s];
                const double hi = v[s | bit];
                if (k >= 0.0) {
                    v[s] = lo + small * hi;
                    v[s | bit] = hi + small * lo;
                } else {
                    v[s] = small * lo + hi;
                    v[s | bit] = small * hi + lo;
                }
            }
        }
        return log_shift;
    }

    double beta_;
    std::size_t num_sites_;
    std::size_t layers_ = 0;
    std::size_t width_ = 0;
    std::size_t states_ = 0;
    std::vector<double> intra_;
    std::vector<double> inter_;
    std::vector<double> layer_weight_;
    std::vector<double> forward_;
    std::vector<double> backward_;
    std::vector<double> norm_;
    double log_z_ = 0.0;
};

/// Exact correlations by the cheapest available method: enumeration for
/// small systems, transfer matrices for d <= 2 otherwise.
inline Correlations exact_correlations(double beta, const Lattice& lat, const DisorderRealization& dis,
                                       const BoundaryConfig& bnd, bool with_pairs = true) {
    if (lat.dim() <= 2 && (lat.num_sites() > 12 || !with_pairs))
        return TransferChain(beta, lat, dis, bnd).correlations(with_pairs);
    return enumerate_correlations(beta, compile_couplings(lat, dis, bnd));
}

}  // namespace sgorder
