#include "policy.hpp"

#include "error.hpp"

namespace sava {

char to_char(Decision d) {
  switch (d) {
    case Decision::A: return 'A';
    case Decision::B: return 'B';
    case Decision::C: return 'C';
    case Decision::D: return 'D';
  }
  return '?';
}

Decision decision_from_char(char c) {
  switch (c) {
    case 'A': return Decision::A;
    case 'B': return Decision::B;
    case 'C': return Decision::C;
    case 'D': return Decision::D;
    default: fail(ErrorCode::Parse, std::string("unknown decision '") + c + "'");
  }
}

std::string_view to_string(Region r) {
  switch (r) {
    case Region::D1A: return "D1A";
    case Region::D1B: return "D1B";
    case Region::D2A: return "D2A";
    case Region::D2B: return "D2B";
    case Region::D3: return "D3";
  }
  return "?";
}

Region classify_region(double p_a, double p_b, double level_a, double level_b) {
  const bool sig_a = p_a <= level_a;
  const bool sig_b = p_b <= level_b;
  if (sig_a && sig_b) return p_b >= p_a ? Region::D1A : Region::D1B;
  if (sig_a) return Region::D2A;
  if (sig_b) return Region::D2B;
  return Region::D3;
}

Decision decide(double p_a, double p_b, double level_a, double level_b, double elapsed,
                double tolerance) {
  switch (classify_region(p_a, p_b, level_a, level_b)) {
    case Region::D1A:
    case Region::D2A: return Decision::A;
    case Region::D1B:
    case Region::D2B: return Decision::B;
    case Region::D3: break;
  }
  return elapsed < tolerance ? Decision::C : Decision::D;
}

Decision decide_classical(double p_a, double level_a, double elapsed, double tolerance) {
  if (p_a <= level_a) return Decision::A;
  return elapsed < tolerance ? Decision::C : Decision::D;
}

}  // namespace sava
