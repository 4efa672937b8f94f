#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tbsim/shor.hpp"

using namespace tbsim;

namespace {

// 1/sqrt(8) on the eight bins occupied after register initialization.
TimeBinState reference_post_init() {
    TimeBinState s(32);
    for (std::uint32_t b = 16; b <= 23; ++b) s.amp(b, Pol::H) = 1.0 / std::sqrt(8.0);
    return s;
}

// 1/sqrt(8) on the eight bins occupied after the CNOT fan.
TimeBinState reference_post_modexp() {
    TimeBinState s(32);
    for (std::uint32_t b : {1u, 5u, 11u, 15u, 16u, 20u, 26u, 30u})
        s.amp(b, Pol::H) = 1.0 / std::sqrt(8.0);
    return s;
}

TimeBinState run_gates(const ShorConfig& cfg, const std::vector<Gate>& gates,
                       const LossTable& losses = LossTable::lossless(), bool loss_on = false) {
    Circuit c;
    c.n_qubits = cfg.n_qubits();
    c.layout = shor_layout(cfg);
    c.gates = gates;
    TimeBinState in(32);
    in.amp(0, Pol::H) = 1.0;
    return run_schedule(compile(c, Frame{32, kDefaultBinWidthNs}, losses), in, loss_on);
}

}  // namespace

TEST_CASE("mod_exp square-and-multiply") {
    CHECK(mod_exp(2, 0, 15) == 1);
    CHECK(mod_exp(2, 5, 15) == 2);
    CHECK(mod_exp(2, 4, 15) == 1);
    CHECK_THROWS_AS(mod_exp(2, 3, 1), std::invalid_argument);
}

TEST_CASE("mod_exp agrees with naive repeated multiplication") {
    for (std::uint64_t N = 2; N <= 64; ++N)
        for (std::uint64_t a = 0; a < N; ++a) {
            std::uint64_t naive = 1 % N;
            for (std::uint64_t x = 0; x <= 64; ++x) {
                CHECK(mod_exp(a, x, N) == naive);
                naive = (naive * a) % N;
            }
        }
}

TEST_CASE("wiring derivation for the built-in template") {
    const Wiring w = derive_wiring(ShorConfig::compiled_15_2());
    CHECK(w.init_bits == 0b10);
    REQUIRE(w.cnots.size() == 2);
    CHECK(w.cnots[0] == std::pair<int, int>{0, 1});  // x0 -> f1
    CHECK(w.cnots[1] == std::pair<int, int>{1, 0});  // x1 -> f0
    CHECK(init_window_bins(ShorConfig::compiled_15_2()) ==
          std::vector<std::uint32_t>{16, 17, 18, 19, 20, 21, 22, 23});
}

TEST_CASE("unsupported instances are rejected with a reason") {
    ShorConfig other = ShorConfig::compiled_15_2();
    other.a = 7;  // residues 7 and 13 have no label in the a = 2 table
    CHECK_THROWS_AS(derive_wiring(other), unsupported_instance_error);

    ShorConfig non_affine;
    non_affine.N = 15;
    non_affine.a = 2;
    non_affine.n_fun = 3;
    non_affine.encoding = {{1, 0b000}, {2, 0b001}, {4, 0b010}, {8, 0b111}};
    CHECK_THROWS_AS(derive_wiring(non_affine), unsupported_instance_error);

    ShorConfig clash;
    clash.N = 15;
    clash.a = 2;
    clash.encoding = {{1, 0b00}, {2, 0b00}, {4, 0b01}, {8, 0b10}};
    CHECK_THROWS_AS(derive_wiring(clash), unsupported_instance_error);
}

TEST_CASE("a rebased instance works through a user-supplied encoding") {
    ShorConfig seven;
    seven.N = 15;
    seven.a = 7;  // residues 1, 7, 4, 13
    seven.encoding = {{1, 0b10}, {7, 0b00}, {4, 0b11}, {13, 0b01}};
    const Wiring w = derive_wiring(seven);
    CHECK(w.init_bits == 0b10);
    CHECK(w.cnots.size() == 2);

    TimeBinState in(32);
    in.amp(0, Pol::H) = 1.0;
    const Circuit full = build_circuit(seven, true);
    const TimeBinState out =
        run_schedule(compile(full, Frame{32, kDefaultBinWidthNs}, LossTable::lossless()), in,
                     false);
    const auto marg = argument_marginal(out, 3, 2, true);
    for (std::size_t y = 0; y < 8; ++y)
        CHECK(marg[y] == Catch::Approx(y % 2 == 0 ? 0.25 : 0.0).margin(1e-9));
}

TEST_CASE("stage states match the fixed references") {
    const ShorConfig cfg = ShorConfig::compiled_15_2();
    const ShorStages st = build_stages(cfg);

    const TimeBinState after_init = run_gates(cfg, st.init);
    CHECK(std::abs(overlap(reference_post_init(), after_init)) >= 1.0 - 1e-9);

    std::vector<Gate> through_modexp = st.init;
    through_modexp.insert(through_modexp.end(), st.modexp.begin(), st.modexp.end());
    const TimeBinState after_modexp = run_gates(cfg, through_modexp);
    CHECK(std::abs(overlap(reference_post_modexp(), after_modexp)) >= 1.0 - 1e-9);

    // only the two CNOTs separate the stages
    CHECK(st.modexp.size() == 2);
    for (const Gate& g : st.modexp) CHECK(g.kind == Gate::Kind::CNOT);
}

TEST_CASE("the compiled schedule carries exactly two control-gated full couplers") {
    const ShorConfig cfg = ShorConfig::compiled_15_2();
    const Circuit c = build_circuit(cfg, false);
    const Schedule sched = compile(c, Frame{32, kDefaultBinWidthNs});
    CHECK(validate(sched).ok());

    // couplers are the only source of delays (two per coupler); a coupler is
    // control-gated when its opening switch drives a quarter of the frame
    std::size_t delays = 0, control_gated_full = 0;
    for (std::size_t i = 0; i < sched.instructions.size(); ++i) {
        if (!std::holds_alternative<Delay>(sched.instructions[i].op)) continue;
        ++delays;
        if (std::get<Delay>(sched.instructions[i].op).delayed != Pol::V) continue;
        const auto& opening = std::get<PolRotate>(sched.instructions[i - 1].op);
        const auto& mixing = std::get<PolRotate>(sched.instructions[i + 1].op);
        const auto mix = detail::rotation_coeffs(mixing.angle);
        if (mix.c == 0.0 && opening.bins.size() == sched.frame.n_bins / 4)
            ++control_gated_full;
    }
    CHECK(delays % 2 == 0);
    CHECK(control_gated_full == 2);
}

TEST_CASE("argument marginals") {
    const TimeBinState post = reference_post_modexp();
    const auto no_qft = argument_marginal(post, 3, 2);
    for (double m : no_qft) CHECK(m == Catch::Approx(1.0 / 8.0).margin(1e-12));

    const auto analytic = analytic_qft_marginal(post, 3, 2);
    for (std::size_t y = 0; y < 8; ++y)
        CHECK(analytic[y] == Catch::Approx(y % 2 == 0 ? 0.25 : 0.0).margin(1e-12));

    TimeBinState basis(32);
    basis.amp(13, Pol::H) = 1.0;  // x = 5, f = 1
    const auto delta = argument_marginal(basis, 3, 2);
    for (std::size_t y = 0; y < 8; ++y) CHECK(delta[y] == (y == 5 ? 1.0 : 0.0));

    CHECK_THROWS_AS(argument_marginal(TimeBinState(16), 3, 2), std::invalid_argument);
}

TEST_CASE("compiled and classical transforms agree end to end") {
    const ShorConfig cfg = ShorConfig::compiled_15_2();
    ShorOptions opt;
    opt.qft = QftMode::Compiled;
    const ShorReport compiled = run_shor(cfg, opt);
    opt.qft = QftMode::Classical;
    const ShorReport classical = run_shor(cfg, opt);
    for (std::size_t y = 0; y < 8; ++y) {
        CHECK(compiled.marginal[y] ==
              Catch::Approx(y % 2 == 0 ? 0.25 : 0.0).margin(1e-9));
        CHECK(compiled.marginal[y] == Catch::Approx(classical.marginal[y]).margin(1e-9));
    }
}

TEST_CASE("order extraction from single samples") {
    const OrderResult two = extract_order({2}, 3, 2, 15);
    REQUIRE(two.order.has_value());
    CHECK(*two.order == 4);
    REQUIRE(two.factors.has_value());
    CHECK(two.factors->first == 3);
    CHECK(two.factors->second == 5);

    const OrderResult six = extract_order({6}, 3, 2, 15);
    CHECK(six.order == 4);

    const OrderResult zero = extract_order({0}, 3, 2, 15);
    CHECK_FALSE(zero.order.has_value());
    CHECK(zero.per_sample[0].note.find("inherent") != std::string::npos);

    const OrderResult four = extract_order({4}, 3, 2, 15);
    CHECK_FALSE(four.order.has_value());
    CHECK_FALSE(four.failure.empty());

    CHECK_THROWS_AS(extract_order({9}, 3, 2, 15), std::invalid_argument);
}

TEST_CASE("factor recovery from the order") {
    const FactorResult f = factors_from_order(2, 4, 15);
    REQUIRE(f.factors.has_value());
    CHECK(f.factors->first == 3);
    CHECK(f.factors->second == 5);

    const FactorResult g = factors_from_order(4, 2, 15);
    REQUIRE(g.factors.has_value());
    CHECK(g.factors->first == 3);
    CHECK(g.factors->second == 5);

    CHECK_THROWS_AS(factors_from_order(4, 3, 15), std::invalid_argument);
    CHECK_FALSE(factors_from_order(14, 2, 15).factors.has_value());  // 14 = -1 mod 15
}

TEST_CASE("convergent denominators") {
    CHECK(convergent_denominators(2, 8, 15) == std::vector<std::uint64_t>{1, 4});
    CHECK(convergent_denominators(6, 8, 15) == std::vector<std::uint64_t>{1, 1, 4});
    CHECK(convergent_denominators(0, 8, 15) == std::vector<std::uint64_t>{1});
}

TEST_CASE("sampling the ideal marginal succeeds half the time") {
    // ideal peaks: y in {0, 2, 4, 6} equally; {2, 6} give the order, {0, 4}
    // fail, so per-sample success is 1/2
    RandomStream rng(202);
    std::uint64_t success = 0;
    const std::uint64_t trials = 10000;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const std::uint64_t y = 2 * static_cast<std::uint64_t>(rng.uniform() * 4.0);
        const OrderResult r = extract_order({y}, 3, 2, 15);
        success += r.order.has_value() && r.factors.has_value();
    }
    const double rate = static_cast<double>(success) / trials;
    CHECK(rate == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("survival equals the analytic transmission product") {
    const ShorConfig cfg = ShorConfig::compiled_15_2();
    const Circuit full = build_circuit(cfg, true);
    const Schedule sched = compile(full, Frame{32, kDefaultBinWidthNs}, LossTable{});
    TimeBinState in(32);
    in.amp(0, Pol::H) = 1.0;
    const TimeBinState out = run_schedule(sched, in, true);
    const double expect = loss_transmission(sched.total_loss_db());
    CHECK(out.squared_norm() == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("wavepacket mode keeps the even peaks dominant") {
    const ShorConfig cfg = ShorConfig::compiled_15_2();
    ShorOptions opt;
    opt.qft = QftMode::Compiled;
    opt.amplitudes = AmplitudeMode::Wavepacket;
    const ShorReport rep = run_shor(cfg, opt);
    double odd = 0.0;
    for (std::size_t y = 1; y < 8; y += 2) odd += rep.marginal_normalized[y];
    CHECK(odd < 0.05);

    // classical transform sees the same distribution when lossless
    ShorOptions cl = opt;
    cl.qft = QftMode::Classical;
    const ShorReport rep_cl = run_shor(cfg, cl);
    for (std::size_t y = 0; y < 8; ++y)
        CHECK(rep.marginal_normalized[y] ==
              Catch::Approx(rep_cl.marginal_normalized[y]).margin(1e-9));
}

TEST_CASE("detected sampling reproduces the peaks and the order") {
    const ShorConfig cfg = ShorConfig::compiled_15_2();
    ShorOptions opt;
    opt.qft = QftMode::Compiled;
    opt.shots = 20000;
    opt.seed = 99;
    opt.detector.efficiency = 1.0;
    const ShorReport rep = run_shor(cfg, opt);
    CHECK(rep.detected == opt.shots);  // lossless, unit efficiency
    for (std::size_t y = 1; y < 8; y += 2) CHECK(rep.counts[y] == 0);
    for (std::size_t y = 0; y < 8; y += 2)
        CHECK(static_cast<double>(rep.counts[y]) ==
              Catch::Approx(0.25 * static_cast<double>(opt.shots)).epsilon(0.05));
    REQUIRE(rep.order.order.has_value());
    CHECK(*rep.order.order == 4);
    REQUIRE(rep.order.factors.has_value());
    CHECK(rep.order.factors->first == 3);
    CHECK(rep.order.factors->second == 5);
}
