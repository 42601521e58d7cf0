#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace sava {

using Time = std::int64_t;

inline constexpr double kInfiniteTolerance = std::numeric_limits<double>::infinity();

enum class Arm { A, B };

// A and B select an arm; C continues sampling; D drops the task.
// A, B and D are absorbing.
enum class Decision { A, B, C, D };

enum class Region { D1A, D1B, D2A, D2B, D3 };

constexpr bool is_selection(Decision d) { return d == Decision::A || d == Decision::B; }
constexpr bool is_final(Decision d) { return d != Decision::C; }

char to_char(Decision d);
Decision decision_from_char(char c);
std::string_view to_string(Region r);

Region classify_region(double p_a, double p_b, double level_a, double level_b);

Decision decide(double p_a, double p_b, double level_a, double level_b, double elapsed,
                double tolerance);

// One-directional rule for the classical setup; never returns B.
Decision decide_classical(double p_a, double level_a, double elapsed, double tolerance);

}  // namespace sava
