#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbsim {

// A delayed amplitude would leave the frame. This signals a scheduling bug,
// not a physics event: validated schedules never raise it.
struct frame_overflow_error : std::runtime_error {
    explicit frame_overflow_error(const std::string& what) : std::runtime_error(what) {}
};

// A gate cannot be laid out inside the frame (delay hop does not fit).
struct schedule_infeasible_error : std::runtime_error {
    schedule_infeasible_error(const std::string& what, int gate)
        : std::runtime_error(what + " (gate index " + std::to_string(gate) + ")"),
          gate_index(gate) {}
    int gate_index;
};

struct resource_limit_error : std::runtime_error {
    explicit resource_limit_error(const std::string& what) : std::runtime_error(what) {}
};

// Requested (N, a) has no built-in compiled template and no usable encoding.
struct unsupported_instance_error : std::runtime_error {
    explicit unsupported_instance_error(const std::string& what) : std::runtime_error(what) {}
};

struct parse_error : std::runtime_error {
    parse_error(const std::string& what, std::size_t line_no)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
    std::size_t line;
};

}  // namespace tbsim
