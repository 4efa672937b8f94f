#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "tbsim/circuit_text.hpp"
#include "tbsim/config.hpp"

using namespace tbsim;

namespace {

Circuit parse(const std::string& text) {
    std::istringstream is(text);
    return parse_circuit(is);
}

}  // namespace

TEST_CASE("circuit files parse into gates in declaration bit order") {
    const Circuit c = parse(
        "# three argument and two function qubits\n"
        "qubits x0 x1 x2 f0 f1\n"
        "H x0\n"
        "X f1   # prepare the function register\n"
        "CNOT x1 f0\n"
        "RZ x2 1.5707963267948966\n"
        "CPHASE x1 x0 0.7853981633974483\n"
        "RY x0 -0.5\n");
    REQUIRE(c.n_qubits == 5);
    REQUIRE(c.gates.size() == 6);
    CHECK(c.layout.bit_of("x0") == 0);
    CHECK(c.layout.bit_of("f1") == 4);
    CHECK(c.gates[0].kind == Gate::Kind::H);
    CHECK(c.gates[0].target == 0);
    CHECK(c.gates[1].target == 4);
    CHECK(c.gates[2].kind == Gate::Kind::CNOT);
    CHECK(c.gates[2].control == 1);
    CHECK(c.gates[2].target == 3);
    CHECK(c.gates[3].angle == Catch::Approx(1.5707963267948966));
    CHECK(c.gates[4].kind == Gate::Kind::CPhase);
}

TEST_CASE("parse errors carry the line number") {
    try {
        parse("qubits a b\nCNOTT a b\n");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("CNOTT") != std::string::npos);
    }

    CHECK_THROWS_AS(parse("H q0\n"), parse_error);                  // missing header
    CHECK_THROWS_AS(parse("qubits a a\n"), parse_error);            // duplicate name
    CHECK_THROWS_AS(parse("qubits a b\nH c\n"), parse_error);       // unknown qubit
    CHECK_THROWS_AS(parse("qubits a\nRZ a xyz\n"), parse_error);    // bad number
    CHECK_THROWS_AS(parse("qubits a b\nCNOT a a\n"), parse_error);  // control == target
    CHECK_THROWS_AS(parse("qubits a\nH a extra\n"), parse_error);   // operand count
    CHECK_THROWS_AS(parse(""), parse_error);                        // empty file
}

TEST_CASE("CU and DIAG parse and validate") {
    const Circuit cu = parse("qubits a b\nCU a b 0 0 1 0 1 0 0 0\n");  // X block
    REQUIRE(cu.gates.size() == 1);
    CHECK(cu.gates[0].kind == Gate::Kind::CU);

    // non-unitary block rejected with the line number
    CHECK_THROWS_AS(parse("qubits a b\nCU a b 1 0 1 0 1 0 1 0\n"), parse_error);

    const Circuit diag = parse("qubits a b\nDIAG 0 0.5 1 1.5\n");
    CHECK(diag.gates[0].diag_phases == std::vector<double>{0.0, 0.5, 1.0, 1.5});
    CHECK_THROWS_AS(parse("qubits a b\nDIAG 0 0.5\n"), parse_error);
}

TEST_CASE("config round trip is byte identical") {
    const RunConfig defaults;
    const std::string text = serialize_config(defaults);
    CHECK(serialize_config(parse_config(text)) == text);

    RunConfig custom;
    custom.n_bins = 64;
    custom.bin_width_ns = 6.25;
    custom.loss_enabled = true;
    custom.amplitudes = "wavepacket";
    custom.wavepacket_center_ns = 123.456789012345;
    custom.shots = 1000000;
    custom.seed = 987654321;
    custom.out_json = "report.json";
    const std::string ctext = serialize_config(custom);
    const RunConfig parsed = parse_config(ctext);
    CHECK(serialize_config(parsed) == ctext);
    CHECK(parsed.wavepacket_center_ns == custom.wavepacket_center_ns);
    CHECK(parsed.n_bins == 64);
    CHECK(parsed.loss_enabled);
}

TEST_CASE("config parser accepts comments and rejects junk") {
    const RunConfig c = parse_config(std::string("# comment\nn_bins = 16\nshots = 5 # tail\n"));
    CHECK(c.n_bins == 16);
    CHECK(c.shots == 5);

    CHECK_THROWS_AS(parse_config(std::string("nonsense = 1\n")), parse_error);
    CHECK_THROWS_AS(parse_config(std::string("n_bins 16\n")), parse_error);
    CHECK_THROWS_AS(parse_config(std::string("n_bins = abc\n")), parse_error);
    CHECK_THROWS_AS(parse_config(std::string("loss_enabled = maybe\n")), parse_error);
    CHECK_THROWS_AS(parse_config(std::string("amplitudes = fancy\n")), std::invalid_argument);
}

TEST_CASE("shortest round-trip number formatting") {
    CHECK(format_double(12.5) == "12.5");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(148.0) == "148");
    const double tricky = 0.1 + 0.2;
    CHECK(std::stod(format_double(tricky)) == tricky);
}
