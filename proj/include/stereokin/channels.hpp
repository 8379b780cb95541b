#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace stereokin {

/// A pair of colliding molecules: internal-state flag plus the two lattice
/// vibrational level indices.
struct PairConfiguration {
    bool same_internal_state = true;
    int v1 = 0;
    int v2 = 0;

    void validate() const {
        if (v1 < 0 || v2 < 0)
            throw std::invalid_argument("PairConfiguration: lattice levels must be >= 0");
    }
};

/// (eta, L, gamma, M) labels of one quantized collision channel.
/// eta: exchange symmetry of the internal-state part, gamma: of the axial
/// motional part; L is the 3D angular momentum label, M its axial projection.
struct ChannelQuantumNumbers {
    int eta = 1;    // +1 or -1
    int L = 0;      // >= 0
    int gamma = 1;  // +1 or -1
    int M = 0;

    friend bool operator==(const ChannelQuantumNumbers&, const ChannelQuantumNumbers&) = default;
};

enum class Channel : int {
    isotropic = 1,     // barrierless, distinguishable internal states
    head_to_tail = 2,  // attractive dipolar, interlevel
    side_by_side = 3,  // repulsive dipolar, intralevel
};

/// Short-range (3D) antisymmetry rule: eta * (-1)^L = -1.
inline bool valid_short_range(int eta, int L) {
    return eta * (L % 2 == 0 ? 1 : -1) == -1;
}

/// Long-range (quasi-2D) antisymmetry rule: eta * gamma * (-1)^M = -1.
inline bool valid_long_range(int eta, int gamma, int M) {
    return eta * gamma * (std::abs(M) % 2 == 0 ? 1 : -1) == -1;
}

inline bool valid_channel(const ChannelQuantumNumbers& c) {
    return valid_short_range(c.eta, c.L) && valid_long_range(c.eta, c.gamma, c.M);
}

/// Canonical quantum numbers of the three lowest adiabatic channels.
inline ChannelQuantumNumbers canonical_quantum_numbers(Channel ch, int m_sign = +1) {
    switch (ch) {
        case Channel::isotropic:    return {-1, 0, +1, 0};
        case Channel::head_to_tail: return {+1, 1, -1, 0};
        case Channel::side_by_side: return {+1, 1, +1, m_sign >= 0 ? +1 : -1};
    }
    throw std::invalid_argument("canonical_quantum_numbers: bad channel");
}

namespace detail {
// Barrier ordering at equal (L, |M|): the gamma = -1 branch lies below
// gamma = +1 (attractive vs repulsive dipolar).
inline bool channel_order_less(const ChannelQuantumNumbers& a, const ChannelQuantumNumbers& b) {
    if (a.L != b.L) return a.L < b.L;
    if (std::abs(a.M) != std::abs(b.M)) return std::abs(a.M) < std::abs(b.M);
    if (a.gamma != b.gamma) return a.gamma < b.gamma;
    if (a.M != b.M) return a.M < b.M;
    return a.eta < b.eta;
}
}  // namespace detail

/// All channels with L <= L_max, |M| <= M_max allowed by both exchange rules
/// and by the pair configuration (same internal state forces eta = +1, equal
/// lattice levels force gamma = +1). Sorted by increasing (L, |M|).
inline std::vector<ChannelQuantumNumbers> enumerate_channels(const PairConfiguration& pair,
                                                             int L_max, int M_max) {
    pair.validate();
    if (L_max < 0 || M_max < 0)
        throw std::invalid_argument("enumerate_channels: L_max and M_max must be >= 0");

    const std::array<int, 2> signs = {+1, -1};
    std::vector<ChannelQuantumNumbers> out;
    for (int L = 0; L <= L_max; ++L) {
        for (int M = -M_max; M <= M_max; ++M) {
            for (int eta : signs) {
                if (pair.same_internal_state && eta != +1) continue;
                for (int gamma : signs) {
                    if (pair.v1 == pair.v2 && gamma != +1) continue;
                    ChannelQuantumNumbers c{eta, L, gamma, M};
                    if (valid_channel(c)) out.push_back(c);
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), detail::channel_order_less);
    return out;
}

/// Lowest-barrier channel for a pair: distinguishable internal states open
/// the barrierless isotropic channel (picking eta = -1, which admits L = 0);
/// identical molecules fall back to head-to-tail (different levels) or
/// side-by-side (same level).
inline Channel classify_lowest_channel(const PairConfiguration& pair) {
    pair.validate();
    if (!pair.same_internal_state) return Channel::isotropic;
    return pair.v1 == pair.v2 ? Channel::side_by_side : Channel::head_to_tail;
}

}  // namespace stereokin
