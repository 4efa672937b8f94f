#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "tbsim/compiler.hpp"
#include "tbsim/errors.hpp"

namespace tbsim {

// Circuit file format: a `qubits` header naming the qubits in bit order,
// then one gate per line; `#` starts a comment.
//
//   qubits x0 x1 x2 f0 f1
//   H x0
//   RZ x2 1.5707963267948966
//   CPHASE x1 x0 0.7853981633974483
//   CNOT x1 f0
//   RY x0 0.25
//   X f1
//   CU x0 f0 u00re u00im u01re u01im u10re u10im u11re u11im
//   DIAG p0 p1 ... p_{2^n-1}
inline Circuit parse_circuit(std::istream& in) {
    Circuit circuit;
    bool have_header = false;
    std::string raw;
    std::size_t line_no = 0;

    auto parse_double = [](const std::string& tok, std::size_t line,
                           const std::string& what) -> double {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw parse_error("expected a number for " + what + ", got '" + tok + "'", line);
        }
    };

    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        std::string op = tok[0];
        std::transform(op.begin(), op.end(), op.begin(),
                       [](unsigned char c) { return std::toupper(c); });

        if (op == "QUBITS") {
            if (have_header) throw parse_error("duplicate qubits header", line_no);
            if (tok.size() < 2) throw parse_error("qubits header names no qubits", line_no);
            for (std::size_t i = 1; i < tok.size(); ++i) {
                if (std::find(circuit.layout.names.begin(), circuit.layout.names.end(), tok[i]) !=
                    circuit.layout.names.end())
                    throw parse_error("qubit '" + tok[i] + "' declared twice", line_no);
                circuit.layout.names.push_back(tok[i]);
            }
            circuit.n_qubits = circuit.layout.n_qubits();
            have_header = true;
            continue;
        }
        if (!have_header) throw parse_error("first statement must be a qubits header", line_no);

        auto qubit = [&](std::size_t i) -> int {
            if (i >= tok.size()) throw parse_error("missing qubit operand for " + op, line_no);
            try {
                return circuit.layout.bit_of(tok[i]);
            } catch (const std::invalid_argument&) {
                throw parse_error("unknown qubit '" + tok[i] + "'", line_no);
            }
        };
        auto expect_args = [&](std::size_t n) {
            if (tok.size() != n + 1)
                throw parse_error(op + " takes " + std::to_string(n) + " operands, got " +
                                      std::to_string(tok.size() - 1),
                                  line_no);
        };

        if (op == "H") {
            expect_args(1);
            circuit.gates.push_back(Gate::h(qubit(1)));
        } else if (op == "X") {
            expect_args(1);
            circuit.gates.push_back(Gate::x(qubit(1)));
        } else if (op == "RY") {
            expect_args(2);
            circuit.gates.push_back(Gate::ry(qubit(1), parse_double(tok[2], line_no, "angle")));
        } else if (op == "RZ") {
            expect_args(2);
            circuit.gates.push_back(Gate::rz(qubit(1), parse_double(tok[2], line_no, "angle")));
        } else if (op == "CNOT") {
            expect_args(2);
            const int c = qubit(1), t = qubit(2);
            if (c == t) throw parse_error("CNOT control equals target", line_no);
            circuit.gates.push_back(Gate::cnot(c, t));
        } else if (op == "CPHASE") {
            expect_args(3);
            const int c = qubit(1), t = qubit(2);
            if (c == t) throw parse_error("CPHASE control equals target", line_no);
            circuit.gates.push_back(
                Gate::cphase(c, t, parse_double(tok[3], line_no, "angle")));
        } else if (op == "CU") {
            expect_args(10);
            const int c = qubit(1), t = qubit(2);
            if (c == t) throw parse_error("CU control equals target", line_no);
            std::array<cxd, 4> u;
            for (int k = 0; k < 4; ++k)
                u[k] = cxd(parse_double(tok[3 + 2 * k], line_no, "matrix entry"),
                           parse_double(tok[4 + 2 * k], line_no, "matrix entry"));
            try {
                circuit.gates.push_back(Gate::cu(c, u, t));
            } catch (const std::invalid_argument& e) {
                throw parse_error(e.what(), line_no);
            }
        } else if (op == "DIAG") {
            const std::size_t dim = std::size_t{1} << circuit.n_qubits;
            expect_args(dim);
            std::vector<double> phases(dim);
            for (std::size_t k = 0; k < dim; ++k)
                phases[k] = parse_double(tok[1 + k], line_no, "phase");
            circuit.gates.push_back(Gate::diag(std::move(phases)));
        } else {
            throw parse_error("unknown gate '" + tok[0] + "'", line_no);
        }
    }
    if (!have_header) throw parse_error("empty circuit file (no qubits header)", line_no + 1);
    circuit.check();
    return circuit;
}

}  // namespace tbsim
