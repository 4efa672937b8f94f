#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "tbsim/primitives.hpp"
#include "tbsim/state.hpp"

using namespace tbsim;

namespace {

constexpr double pi = std::numbers::pi;

TimeBinState random_state(std::mt19937_64& rng, std::uint32_t n_bins, bool v_rail = true) {
    std::normal_distribution<double> gauss;
    TimeBinState s(n_bins);
    double norm = 0.0;
    for (std::uint32_t b = 0; b < n_bins; ++b) {
        s.amp(b, Pol::H) = cxd(gauss(rng), gauss(rng));
        if (v_rail) s.amp(b, Pol::V) = cxd(gauss(rng), gauss(rng));
        norm += std::norm(s.amp(b, Pol::H)) + std::norm(s.amp(b, Pol::V));
    }
    const double scale = 1.0 / std::sqrt(norm);
    for (std::uint32_t b = 0; b < n_bins; ++b) {
        s.amp(b, Pol::H) *= scale;
        s.amp(b, Pol::V) *= scale;
    }
    return s;
}

double max_amp_diff(const TimeBinState& a, const TimeBinState& b) {
    double worst = 0.0;
    for (std::uint32_t i = 0; i < a.n_bins(); ++i)
        for (Pol p : {Pol::H, Pol::V})
            worst = std::max(worst, std::abs(a.amp(i, p) - b.amp(i, p)));
    return worst;
}

}  // namespace

TEST_CASE("phase patterns rotate amplitudes in place") {
    const TimeBinState u = uniform_state(4, Pol::H);
    CHECK(max_amp_diff(apply_phase(u, {0, 0, 0, 0}), u) == 0.0);

    const TimeBinState b1 = basis_state(QubitLayout::numbered(1), "1");
    const TimeBinState flipped = apply_phase(b1, {0.0, pi});
    CHECK(std::abs(flipped.amp(1, Pol::H) - cxd(-1.0)) < 1e-15);

    CHECK_THROWS_AS(apply_phase(u, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("phase pattern acts as the diagonal it claims to be") {
    // controlled-R1-style diagonal on 4 bins, checked against direct
    // elementwise multiplication
    const std::vector<double> pattern{0.0, pi / 2.0, pi, 1.5 * pi};
    std::mt19937_64 rng(7);
    const TimeBinState s = random_state(rng, 4);
    const TimeBinState out = apply_phase(s, pattern);
    for (std::uint32_t b = 0; b < 4; ++b)
        for (Pol p : {Pol::H, Pol::V})
            CHECK(std::abs(out.amp(b, p) - s.amp(b, p) * std::polar(1.0, pattern[b])) < 1e-12);
}

TEST_CASE("polarization rotation on gated bins") {
    std::mt19937_64 rng(3);
    const TimeBinState s = random_state(rng, 4);
    CHECK(max_amp_diff(apply_pol_rotate(s, 0.0, {0, 1, 2, 3}), s) == 0.0);

    TimeBinState h(2);
    h.amp(0, Pol::H) = 1.0;
    const TimeBinState quarter = apply_pol_rotate(h, pi / 2.0, {0});
    CHECK(std::abs(quarter.amp(0, Pol::H)) < 1e-15);
    CHECK(std::abs(quarter.amp(0, Pol::V) - cxd(-1.0)) < 1e-15);

    const TimeBinState eighth = apply_pol_rotate(h, pi / 4.0, {0});
    CHECK(std::abs(eighth.amp(0, Pol::H) - cxd(std::sqrt(0.5))) < 1e-15);
    CHECK(std::abs(eighth.amp(0, Pol::V) - cxd(-std::sqrt(0.5))) < 1e-15);

    CHECK_THROWS_AS(apply_pol_rotate(h, 0.3, {5}), std::invalid_argument);
}

TEST_CASE("delays move the V rail relative to the frame") {
    TimeBinState s(4);
    s.amp(0, Pol::H) = std::sqrt(0.5);
    s.amp(2, Pol::V) = std::sqrt(0.5);

    CHECK(max_amp_diff(apply_delay(s, 0, Pol::V), s) == 0.0);

    const TimeBinState fwd = apply_delay(s, 1, Pol::V);
    CHECK(std::abs(fwd.amp(3, Pol::V) - cxd(std::sqrt(0.5))) == 0.0);
    CHECK(fwd.amp(2, Pol::V) == cxd(0.0));
    CHECK(fwd.amp(0, Pol::H) == s.amp(0, Pol::H));  // H rail carries the frame

    // delaying H is a V-rail advance in frame coordinates
    const TimeBinState back = apply_delay(s, 1, Pol::H);
    CHECK(std::abs(back.amp(1, Pol::V) - cxd(std::sqrt(0.5))) == 0.0);
    CHECK(max_amp_diff(apply_delay(fwd, 1, Pol::H), s) == 0.0);  // round trip

    TimeBinState edge(32);
    edge.amp(31, Pol::V) = 1.0;
    CHECK_THROWS_AS(apply_delay(edge, 1, Pol::V), frame_overflow_error);
    TimeBinState front(32);
    front.amp(0, Pol::V) = 1.0;
    CHECK_THROWS_AS(apply_delay(front, 1, Pol::H), frame_overflow_error);
}

TEST_CASE("coupler endpoints match the mixing matrix") {
    TimeBinState s(2);
    s.amp(0, Pol::H) = 1.0;

    const TimeBinState id = apply_coupler(s, CouplerSpec{1, 0.0, {0}});
    CHECK(max_amp_diff(id, s) < 1e-15);

    const TimeBinState swap = apply_coupler(s, CouplerSpec{1, 1.0, {0}});
    CHECK(std::abs(swap.amp(0, Pol::H)) == 0.0);
    CHECK(std::abs(swap.amp(1, Pol::H) - cxd(-1.0)) < 1e-15);

    const TimeBinState half = apply_coupler(s, CouplerSpec{1, 0.5, {0}});
    CHECK(std::abs(half.amp(0, Pol::H) - cxd(std::sqrt(0.5))) < 1e-15);
    CHECK(std::abs(half.amp(1, Pol::H) - cxd(-std::sqrt(0.5))) < 1e-15);

    CHECK_THROWS_AS(apply_coupler(s, CouplerSpec{1, 1.5, {0}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_coupler(s, CouplerSpec{2, 0.5, {0}}), frame_overflow_error);
    TimeBinState dirty(2);
    dirty.amp(0, Pol::V) = 1.0;
    CHECK_THROWS_AS(apply_coupler(dirty, CouplerSpec{1, 0.5, {0}}), std::invalid_argument);
}

TEST_CASE("composite equals the dense 2x2 for a grid of couplings") {
    std::mt19937_64 rng(11);
    for (int ci = 0; ci <= 10; ++ci) {
        const double C = 0.1 * ci;
        for (int it = 0; it < 100; ++it) {
            TimeBinState s = random_state(rng, 2, false);
            const TimeBinState out = apply_coupler(s, CouplerSpec{1, C, {0}});
            const cxd d0 = s.amp(0, Pol::H), d1 = s.amp(1, Pol::H);
            const cxd e0 = std::sqrt(1.0 - C) * d0 + std::sqrt(C) * d1;
            const cxd e1 = -std::sqrt(C) * d0 + std::sqrt(1.0 - C) * d1;
            CHECK(std::abs(out.amp(0, Pol::H) - e0) < 1e-12);
            CHECK(std::abs(out.amp(1, Pol::H) - e1) < 1e-12);
            CHECK(std::abs(out.amp(0, Pol::V)) < 1e-12);
            CHECK(std::abs(out.amp(1, Pol::V)) < 1e-12);
        }
    }
}

TEST_CASE("coupler followed by its transpose restores the state") {
    std::mt19937_64 rng(13);
    const std::vector<double> z_pattern{0.0, pi, 0.0, pi};
    for (int it = 0; it < 200; ++it) {
        const double C = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        TimeBinState s = random_state(rng, 4, false);
        const CouplerSpec spec{1, C, {0, 2}};
        TimeBinState t = apply_coupler(s, spec);
        // transpose = Z . coupler . Z with Z a pi pattern on the late bins
        t = apply_phase(t, z_pattern);
        t = apply_coupler(t, spec);
        t = apply_phase(t, z_pattern);
        CHECK(std::abs(overlap(s, t)) >= 1.0 - 1e-12);
    }
}

TEST_CASE("lossless primitives preserve the norm") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int it = 0; it < 1000; ++it) {
        const std::uint32_t B = 8;
        TimeBinState s = random_state(rng, B);  // normalized
        switch (it % 3) {
            case 0: {
                std::vector<double> phases(B);
                for (double& p : phases) p = (uni(rng) - 0.5) * 4.0 * pi;
                const PolSelector sel =
                    std::array{PolSelector::H, PolSelector::V, PolSelector::Both}[(it / 3) % 3];
                s = apply_phase(s, phases, sel);
                break;
            }
            case 1: {
                std::vector<std::uint32_t> bins;
                for (std::uint32_t b = 0; b < B; ++b)
                    if (rng() & 1u) bins.push_back(b);
                s = apply_pol_rotate(s, (uni(rng) - 0.5) * 4.0 * pi, bins);
                break;
            }
            default: {
                TimeBinState h(B);  // H-rail only so the composite precondition holds
                for (std::uint32_t b = 0; b < B; ++b) h.amp(b, Pol::H) = s.amp(b, Pol::H);
                const double norm = std::sqrt(h.squared_norm());
                for (std::uint32_t b = 0; b < B; ++b) h.amp(b, Pol::H) /= norm;
                s = apply_coupler(h, CouplerSpec{2, uni(rng), {0, 1, 4, 5}});
                break;
            }
        }
        CHECK(s.squared_norm() == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("delay and phase patterns commute up to the shifted pattern") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-pi, pi);
    for (int it = 0; it < 100; ++it) {
        const std::uint32_t B = 8, k = 2;
        TimeBinState s(B);
        std::normal_distribution<double> gauss;
        for (std::uint32_t b = 0; b < B - k; ++b) s.amp(b, Pol::V) = cxd(gauss(rng), gauss(rng));
        std::vector<double> pattern(B, 0.0), shifted(B, 0.0);
        for (std::uint32_t b = 0; b < B; ++b) pattern[b] = uni(rng);
        for (std::uint32_t b = 0; b + k < B; ++b) shifted[b + k] = pattern[b];
        const TimeBinState lhs = apply_delay(apply_phase(s, pattern, PolSelector::V), k, Pol::V);
        const TimeBinState rhs = apply_phase(apply_delay(s, k, Pol::V), shifted, PolSelector::V);
        CHECK(max_amp_diff(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("attenuation and loss scale amplitudes") {
    const TimeBinState u = uniform_state(4, Pol::H);
    CHECK(max_amp_diff(apply_loss(u, 0.0), u) == 0.0);
    CHECK(apply_loss(u, 2.0).squared_norm() ==
          Catch::Approx(std::pow(10.0, -0.2)).margin(1e-12));
    CHECK(apply_loss(u, 3.5).squared_norm() == Catch::Approx(0.44668).margin(1e-4));
    CHECK_THROWS_AS(apply_loss(u, -1.0), std::invalid_argument);

    const TimeBinState gated = apply_loss(u, 3.0, {0, 1});
    CHECK(std::abs(gated.amp(2, Pol::H) - u.amp(2, Pol::H)) == 0.0);
    CHECK(std::abs(gated.amp(0, Pol::H)) < std::abs(u.amp(0, Pol::H)));

    CHECK_THROWS_AS(apply_attenuate(u, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(apply_attenuate(u, {0.5, 0.5, 0.5, 1.5}), std::invalid_argument);
    const TimeBinState att = apply_attenuate(u, {1.0, 0.0, 1.0, 0.0});
    CHECK(att.squared_norm() == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("no primitive increases the squared norm") {
    std::mt19937_64 rng(29);
    for (int it = 0; it < 200; ++it) {
        TimeBinState s = random_state(rng, 8);
        const double before = s.squared_norm();
        std::vector<double> factors(8);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (double& f : factors) f = uni(rng);
        const TimeBinState att = apply_attenuate(s, factors);
        const TimeBinState lossy = apply_loss(att, uni(rng) * 5.0);
        CHECK(lossy.squared_norm() <= before + 1e-12);
    }
}
