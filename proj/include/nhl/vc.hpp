#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nhl/term.hpp"

namespace nhl {

struct Provenance {
  enum class Kind { Main, LoopPreservation, LoopExit } kind = Kind::Main;
  int loop_id = 0;

  static Provenance main() { return {}; }
  static Provenance preservation(int id) { return {Kind::LoopPreservation, id}; }
  static Provenance exit(int id) { return {Kind::LoopExit, id}; }

  std::string str() const {
    switch (kind) {
      case Kind::Main: return "main";
      case Kind::LoopPreservation: return "loop-preservation(" + std::to_string(loop_id) + ")";
      case Kind::LoopExit: return "loop-exit(" + std::to_string(loop_id) + ")";
    }
    return "?";
  }

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Outcome of discharging a verification condition. An Invalid verdict
/// carries the falsifying assignment as (name, value) pairs: program
/// variables first, then abstracted terms.
struct Verdict {
  enum class Kind { Unset, Valid, Invalid, Unknown } kind = Kind::Unset;
  std::vector<std::pair<std::string, std::string>> model;
  std::string reason;

  static Verdict valid() { return {Kind::Valid, {}, {}}; }
  static Verdict invalid(std::vector<std::pair<std::string, std::string>> m) {
    return {Kind::Invalid, std::move(m), {}};
  }
  static Verdict unknown(std::string why) { return {Kind::Unknown, {}, std::move(why)}; }

  bool is_valid() const { return kind == Kind::Valid; }
  bool is_invalid() const { return kind == Kind::Invalid; }
  bool is_unknown() const { return kind == Kind::Unknown; }

  std::string name() const {
    switch (kind) {
      case Kind::Unset: return "Unset";
      case Kind::Valid: return "Valid";
      case Kind::Invalid: return "Invalid";
      case Kind::Unknown: return "Unknown";
    }
    return "?";
  }

  /// `_balance=1,balance(@c1)=0`
  std::string model_str() const {
    std::string out;
    for (const auto& [k, v] : model) {
      if (!out.empty()) out += ",";
      out += k + "=" + v;
    }
    return out;
  }

  std::string value_of(const std::string& name) const {
    for (const auto& [k, v] : model) {
      if (k == name) return v;
    }
    return {};
  }
};

struct Vc {
  Term formula;
  Provenance provenance;
  Verdict verdict;
};

}  // namespace nhl
