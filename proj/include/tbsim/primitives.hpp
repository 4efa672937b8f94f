#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "tbsim/errors.hpp"
#include "tbsim/state.hpp"

namespace tbsim {

enum class PolSelector : std::uint8_t { H, V, Both };

// Per-bin phase shifts e^{i phi_b} applied by one modulator pass.
struct PhasePattern {
    std::vector<double> phases;  // length = n_bins
    PolSelector selector = PolSelector::Both;
};

// Time-gated polarization rotation: on each gated bin,
//   (H, V) <- (cos(a) H + sin(a) V, -sin(a) H + cos(a) V).
struct PolRotate {
    double angle = 0.0;
    std::vector<std::uint32_t> bins;  // gated bins, sorted
};

// Polarization-selective delay by k bins. Frame time rides the H rail, so
// delaying V moves V amplitudes to later bins while delaying H leaves H bin
// labels fixed and moves V amplitudes to earlier bins (the rails only ever
// shift relative to each other).
struct Delay {
    std::uint32_t k = 0;
    Pol delayed = Pol::V;
};

// Per-bin amplitude transmission factors in [0, 1] (both rails).
struct Attenuate {
    std::vector<double> factors;  // length = n_bins
};

// One hardware instruction together with its insertion loss.
struct Primitive {
    std::variant<PhasePattern, PolRotate, Delay, Attenuate> op;
    double loss_db = 0.0;
    int gate_index = -1;  // source gate in the compiled circuit, -1 if hand-built
};

// Insertion losses per instruction kind, in dB.
struct LossTable {
    double phase_db = 2.0;
    double pol_rotate_db = 3.5;
    double delay_db = 0.0;
    double attenuate_db = 0.0;

    double of(const Primitive& p) const {
        if (std::holds_alternative<PhasePattern>(p.op)) return phase_db;
        if (std::holds_alternative<PolRotate>(p.op)) return pol_rotate_db;
        if (std::holds_alternative<Delay>(p.op)) return delay_db;
        return attenuate_db;
    }
    static LossTable lossless() { return LossTable{0.0, 0.0, 0.0, 0.0}; }
};

// 2x2 mixing between bins b and b+delay_k for every b in gate_bins:
//   d_b'        =  sqrt(1-C) d_b + sqrt(C) d_{b+k}
//   d_{b+k}'    = -sqrt(C) d_b    + sqrt(1-C) d_{b+k}
struct CouplerSpec {
    std::uint32_t delay_k = 1;
    double coupling = 0.0;                // C in [0, 1]
    std::vector<std::uint32_t> gate_bins;  // early member b of each pair
};

namespace detail {

// Rotation coefficients with quarter-turn snapping so that full switches are
// exact permutations instead of carrying ~1e-16 trig residue.
struct CosSin {
    double c, s;
};

inline CosSin rotation_coeffs(double angle) {
    double c = std::cos(angle);
    double s = std::sin(angle);
    if (std::abs(c) < 1e-12) {
        c = 0.0;
        s = s < 0.0 ? -1.0 : 1.0;
    }
    if (std::abs(s) < 1e-12) {
        s = 0.0;
        c = c < 0.0 ? -1.0 : 1.0;
    }
    return {c, s};
}

inline void rotate_bins(TimeBinState& s, CosSin cs, const std::vector<std::uint32_t>& bins) {
    for (std::uint32_t b : bins) {
        if (b >= s.n_bins())
            throw std::invalid_argument("apply_pol_rotate: gated bin " + std::to_string(b) +
                                        " outside frame");
        const cxd h = s.amp(b, Pol::H);
        const cxd v = s.amp(b, Pol::V);
        s.amp(b, Pol::H) = cs.c * h + cs.s * v;
        s.amp(b, Pol::V) = -cs.s * h + cs.c * v;
    }
}

inline bool is_zero(const cxd& a) { return a.real() == 0.0 && a.imag() == 0.0; }

}  // namespace detail

inline TimeBinState apply_phase(const TimeBinState& state, const std::vector<double>& phases,
                                PolSelector sel = PolSelector::Both) {
    if (phases.size() != state.n_bins())
        throw std::invalid_argument("apply_phase: pattern length " +
                                    std::to_string(phases.size()) + " != frame length " +
                                    std::to_string(state.n_bins()));
    TimeBinState out = state;
    for (std::uint32_t b = 0; b < out.n_bins(); ++b) {
        if (phases[b] == 0.0) continue;
        const cxd f = std::polar(1.0, phases[b]);
        if (sel != PolSelector::V) out.amp(b, Pol::H) *= f;
        if (sel != PolSelector::H) out.amp(b, Pol::V) *= f;
    }
    return out;
}

inline TimeBinState apply_pol_rotate(const TimeBinState& state, double angle,
                                     const std::vector<std::uint32_t>& gate_bins) {
    TimeBinState out = state;
    detail::rotate_bins(out, detail::rotation_coeffs(angle), gate_bins);
    return out;
}

// Shift the V rail by k bins: forward when V is the delayed polarization,
// backward when H is (bin labels follow the H rail). Throws frame_overflow
// if a nonzero amplitude would leave the frame.
inline TimeBinState apply_delay(const TimeBinState& state, std::uint32_t k, Pol delayed) {
    const std::uint32_t B = state.n_bins();
    if (k >= B && k != 0)
        throw frame_overflow_error("apply_delay: delay of " + std::to_string(k) +
                                   " bins does not fit a " + std::to_string(B) + "-bin frame");
    TimeBinState out = state;
    if (k == 0) return out;
    if (delayed == Pol::V) {
        for (std::uint32_t b = B - k; b < B; ++b)
            if (!detail::is_zero(state.amp(b, Pol::V)))
                throw frame_overflow_error("apply_delay: V amplitude at bin " +
                                           std::to_string(b) + " would leave the frame");
        for (std::uint32_t b = B; b-- > k;) out.amp(b, Pol::V) = state.amp(b - k, Pol::V);
        for (std::uint32_t b = 0; b < k; ++b) out.amp(b, Pol::V) = 0.0;
    } else {
        for (std::uint32_t b = 0; b < k; ++b)
            if (!detail::is_zero(state.amp(b, Pol::V)))
                throw frame_overflow_error("apply_delay: V amplitude at bin " +
                                           std::to_string(b) + " would leave the frame");
        for (std::uint32_t b = 0; b + k < B; ++b) out.amp(b, Pol::V) = state.amp(b + k, Pol::V);
        for (std::uint32_t b = B - k; b < B; ++b) out.amp(b, Pol::V) = 0.0;
    }
    return out;
}

inline TimeBinState apply_attenuate(const TimeBinState& state, const std::vector<double>& factors) {
    if (factors.size() != state.n_bins())
        throw std::invalid_argument("apply_attenuate: factor list length != frame length");
    for (double f : factors)
        if (!(f >= 0.0 && f <= 1.0))
            throw std::invalid_argument("apply_attenuate: factors must lie in [0, 1]");
    TimeBinState out = state;
    for (std::uint32_t b = 0; b < out.n_bins(); ++b) {
        out.amp(b, Pol::H) *= factors[b];
        out.amp(b, Pol::V) *= factors[b];
    }
    return out;
}

inline double loss_amplitude_factor(double loss_db) { return std::pow(10.0, -loss_db / 20.0); }
inline double loss_transmission(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

inline TimeBinState apply_loss(const TimeBinState& state, double loss_db,
                               const std::vector<std::uint32_t>& bins) {
    if (loss_db < 0.0) throw std::invalid_argument("apply_loss: loss_db must be >= 0");
    const double f = loss_amplitude_factor(loss_db);
    TimeBinState out = state;
    for (std::uint32_t b : bins) {
        out.amp(b, Pol::H) *= f;
        out.amp(b, Pol::V) *= f;
    }
    return out;
}

// Uniform insertion loss over the whole frame.
inline TimeBinState apply_loss(const TimeBinState& state, double loss_db) {
    if (loss_db < 0.0) throw std::invalid_argument("apply_loss: loss_db must be >= 0");
    const double f = loss_amplitude_factor(loss_db);
    TimeBinState out = state;
    if (loss_db == 0.0) return out;
    for (std::uint32_t b = 0; b < out.n_bins(); ++b) {
        out.amp(b, Pol::H) *= f;
        out.amp(b, Pol::V) *= f;
    }
    return out;
}

// Instruction loss models a device transit: the whole frame passes through
// the component, so the attenuation is uniform across bins.
inline TimeBinState apply_primitive(const TimeBinState& state, const Primitive& p,
                                    bool loss_on = false) {
    TimeBinState out = std::visit(
        [&](const auto& op) -> TimeBinState {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, PhasePattern>)
                return apply_phase(state, op.phases, op.selector);
            else if constexpr (std::is_same_v<T, PolRotate>)
                return apply_pol_rotate(state, op.angle, op.bins);
            else if constexpr (std::is_same_v<T, Delay>)
                return apply_delay(state, op.k, op.delayed);
            else
                return apply_attenuate(state, op.factors);
        },
        p.op);
    if (loss_on && p.loss_db > 0.0) out = apply_loss(out, p.loss_db);
    return out;
}

// The coupler unrolled into loop instructions. The opening switch parks the
// early member on the V rail, the V delay brings it alongside its partner,
// the partial rotation mixes the pair, and the closing delay + switch return
// the remaining V component to the H rail of the early bin. Net effect is
// exactly the 2x2 mixing matrix of CouplerSpec on every gated pair.
inline std::vector<Primitive> coupler_primitives(const CouplerSpec& spec, std::uint32_t n_bins,
                                                 const LossTable& losses = LossTable::lossless()) {
    if (!(spec.coupling >= 0.0 && spec.coupling <= 1.0))
        throw std::invalid_argument("coupler: coupling strength must lie in [0, 1]");
    if (spec.delay_k == 0) throw std::invalid_argument("coupler: delay_k must be >= 1");
    std::vector<std::uint32_t> late;
    late.reserve(spec.gate_bins.size());
    for (std::uint32_t b : spec.gate_bins) {
        if (b >= n_bins || b + spec.delay_k >= n_bins)
            throw frame_overflow_error("coupler: pair (" + std::to_string(b) + ", " +
                                       std::to_string(b + spec.delay_k) +
                                       ") does not fit a " + std::to_string(n_bins) +
                                       "-bin frame");
        late.push_back(b + spec.delay_k);
    }
    constexpr double half_pi = std::numbers::pi / 2.0;
    const double mix = std::asin(std::sqrt(spec.coupling));  // C = sin^2(mix)
    std::vector<Primitive> out;
    out.push_back({PolRotate{half_pi, spec.gate_bins}, losses.pol_rotate_db, -1});
    out.push_back({Delay{spec.delay_k, Pol::V}, losses.delay_db, -1});
    out.push_back({PolRotate{mix, late}, losses.pol_rotate_db, -1});
    out.push_back({Delay{spec.delay_k, Pol::H}, losses.delay_db, -1});
    out.push_back({PolRotate{-half_pi, spec.gate_bins}, losses.pol_rotate_db, -1});
    return out;
}

// Lossless composite application. Requires the V rail to be empty on the
// gated pairs (single-rail input convention).
inline TimeBinState apply_coupler(const TimeBinState& state, const CouplerSpec& spec) {
    for (std::uint32_t b : spec.gate_bins) {
        if (b >= state.n_bins() || b + spec.delay_k >= state.n_bins())
            throw frame_overflow_error("apply_coupler: gated pair outside frame");
        if (std::abs(state.amp(b, Pol::V)) > 1e-9 ||
            std::abs(state.amp(b + spec.delay_k, Pol::V)) > 1e-9)
            throw std::invalid_argument("apply_coupler: V rail not empty on gated pair");
    }
    TimeBinState out = state;
    for (const Primitive& p : coupler_primitives(spec, state.n_bins()))
        out = apply_primitive(out, p, false);
    return out;
}

}  // namespace tbsim
