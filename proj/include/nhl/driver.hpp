#pragma once

// The verifier's commands as functions over streams, shared by the `nhl`
// executable and the tests.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhl/discharge.hpp"
#include "nhl/hoare.hpp"
#include "nhl/imp.hpp"
#include "nhl/kb.hpp"
#include "nhl/paraphrase.hpp"
#include "nhl/semparse.hpp"

#ifndef NHL_DATA_DIR
#define NHL_DATA_DIR "data"
#endif

namespace nhl {

namespace exit_code {
inline constexpr int kValid = 0;
inline constexpr int kInvalid = 1;
inline constexpr int kUnknown = 2;
inline constexpr int kInputError = 3;
}  // namespace exit_code

struct RunConfig {
  std::string rules = std::string(NHL_DATA_DIR) + "/grammar/rules.txt";
  std::string lexicon = std::string(NHL_DATA_DIR) + "/grammar/lexicon.txt";
  std::string spec, program, relation, kb;
  std::string smt_dir;
  std::string record_out, record_in;
  int k = kDefaultK;
  int bound = 64;
  bool interactive = false;
};

/// Input problems that end a run with exit status 3.
class InputError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(std::string("cannot read ") + what + " file '" + path + "'");
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Grammar load_grammar_files(const RunConfig& cfg) {
  return load_grammar(read_file(cfg.lexicon, "lexicon"), read_file(cfg.rules, "grammar"));
}

inline void check_config(const RunConfig& cfg) {
  if (cfg.k < 1) throw InputError("--k must be at least 1");
  if (cfg.bound < 1) throw InputError("--bound must be at least 1");
}

/// Specification lines of a spec file, without blanks and `#` comments.
struct SpecLine {
  std::string name;
  std::string text;
};

inline std::vector<SpecLine> read_spec_lines(const std::string& text) {
  std::vector<SpecLine> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto [label, body] = split_label(t);
    out.push_back({label.empty() ? "line" + std::to_string(no) : label, t});
  }
  return out;
}

namespace detail {

inline std::string score_str(double s) {
  std::ostringstream o;
  o << std::setprecision(6) << (std::abs(s) < kScoreEpsilon ? 0.0 : s);
  return o.str();
}

inline std::string safe_file_name(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

/// Chooses the reading of one specification line. Returns nullopt when the
/// user rejected every candidate.
inline std::optional<ScoredSpec> choose(const Grammar& g, const SpecLine& line, const RunConfig& cfg,
                                        std::istream& in, std::ostream& err) {
  std::vector<ScoredSpec> cands = parse_spec(g, line.text, cfg.k);
  if (!cfg.interactive) {
    if (cands.size() > 1 && std::abs(cands[0].score - cands[1].score) <= kScoreEpsilon) {
      throw InputError(line.name + ": ambiguous; rerun interactive");
    }
    return cands[0];
  }
  DisambiguationSession session(candidate_renderings(cands, g));
  while (!session.finished()) {
    err << session.prompt() << "\n";
    std::string answer;
    if (!std::getline(in, answer)) answer.clear();
    answer = lower(trim(answer));
    session.answer(answer == "y" || answer == "yes");
  }
  if (auto i = session.selected()) return cands[*i];
  err << "warning: " << line.name << ": " << session.rephrase()->message << "\n";
  return std::nullopt;
}

}  // namespace detail

/// One report line: spec name, provenance, verdict, and model or reason.
inline std::string report_line(const std::string& spec_name, const Vc& vc) {
  std::string detail = vc.verdict.is_invalid() ? vc.verdict.model_str() : vc.verdict.reason;
  return spec_name + "\t" + vc.provenance.str() + "\t" + vc.verdict.name() + "\t" + detail;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err, std::istream& in) {
  try {
    check_config(cfg);
    if (cfg.spec.empty() || cfg.program.empty() || cfg.relation.empty()) {
      throw InputError("verify needs --spec, --program and --relation");
    }
    Grammar g = load_grammar_files(cfg);
    Signature sig = g.signature();
    imp::Stmt program = imp::parse_program(read_file(cfg.program, "program"));
    KnowledgeBase kb;
    if (!cfg.kb.empty()) kb = load_kb(read_file(cfg.kb, "knowledge base"), sig);
    LfplRelation relation = load_relation(read_file(cfg.relation, "relation"), sig);
    std::vector<SpecLine> lines = read_spec_lines(read_file(cfg.spec, "spec"));
    if (lines.empty()) throw InputError("spec file has no specifications");
    std::optional<ProofRecord> stored;
    if (!cfg.record_in.empty()) stored = load_record(read_file(cfg.record_in, "proof record"), sig);
    std::string digest = program_digest(program);

    bool any_invalid = false, any_unknown = false;
    ProverOptions opts;
    opts.bound = cfg.bound;
    for (const SpecLine& line : lines) {
      std::optional<ScoredSpec> chosen = detail::choose(g, line, cfg, in, err);
      if (!chosen) {
        any_unknown = true;
        continue;
      }
      SpecForm spec = apply_kb(chosen->form, kb);
      LfplRelation rel = apply_kb(relation, kb);

      if (stored && transfer(*stored, kb, spec, rel, digest)) {
        for (const auto& [prov, kind] : stored->verdicts) {
          out << line.name << "\t" << prov.str() << "\t" << Verdict{kind, {}, {}}.name() << "\t"
              << "transferred from: " << stored->spec_line << "\n";
        }
        continue;
      }

      std::vector<Vc> vcs = generate_vcs(build_triple(spec, rel, program));
      for (size_t i = 0; i < vcs.size(); ++i) {
        Vc& vc = vcs[i];
        vc.verdict = decide(vc, kb, opts);
        any_invalid |= vc.verdict.is_invalid();
        any_unknown |= vc.verdict.is_unknown();
        out << report_line(line.name, vc) << "\n";
        if (!cfg.smt_dir.empty()) {
          std::filesystem::create_directories(cfg.smt_dir);
          std::string file = cfg.smt_dir + "/" + detail::safe_file_name(line.name) + "-" +
                             std::to_string(i + 1) + ".smt2";
          std::ofstream f(file);
          if (!f) throw InputError("cannot write '" + file + "'");
          f << export_smtlib(vc);
        }
      }
      if (!cfg.record_out.empty()) {
        std::string file = cfg.record_out;
        if (lines.size() > 1) file += "." + detail::safe_file_name(line.name);
        std::ofstream f(file);
        if (!f) throw InputError("cannot write '" + file + "'");
        f << save_record(make_record(line.text, spec, rel, program, vcs));
      }
    }
    if (any_invalid) return exit_code::kInvalid;
    if (any_unknown) return exit_code::kUnknown;
    return exit_code::kValid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kInputError;
  }
}

/// Prints the ranked readings of a sentence or marked specification.
inline int cmd_parse(const RunConfig& cfg, const std::string& sentence, std::ostream& out, std::ostream& err) {
  try {
    check_config(cfg);
    Grammar g = load_grammar_files(cfg);
    for (const auto& c : parse_spec(g, sentence, cfg.k)) {
      out << detail::score_str(c.score) << "\t" << kind_name(c.form.kind());
      for (const auto& p : c.form.parts()) out << "\t" << print_term(p);
      out << "\n";
    }
    return exit_code::kValid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kInputError;
  }
}

inline int cmd_paraphrase(const RunConfig& cfg, const std::string& term_text, std::ostream& out,
                          std::ostream& err) {
  try {
    Grammar g = load_grammar_files(cfg);
    Term t = normalize(parse_term(term_text, g.signature()));
    out << render(t, g) << "\n";
    return exit_code::kValid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kInputError;
  }
}

namespace detail {

inline void print_invariants(const imp::Stmt& s, std::ostream& out) {
  using K = imp::Stmt::Kind;
  switch (s.kind) {
    case K::While:
      out << "invariant\t" << s.loop_id << "\t" << imp::print_expr(s.invariant) << "\n";
      for (const auto& b : s.body) print_invariants(b, out);
      break;
    default:
      for (const auto& b : s.body) print_invariants(b, out);
  }
}

}  // namespace detail

/// Prints wp(program, post) followed by the loop invariants and side VCs.
inline int cmd_wp(const RunConfig& cfg, const std::string& post_text, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.program.empty() || post_text.empty()) throw InputError("wp needs --program and --post");
    Signature sig = Signature::builtin();
    imp::Stmt program = imp::parse_program(read_file(cfg.program, "program"));
    imp::assign_loop_ids(program);
    Term post = parse_term(post_text, sig);
    WpResult w = wp(program, post);
    out << "wp\t" << print_term(w.pre) << "\n";
    detail::print_invariants(program, out);
    for (const auto& vc : w.side) out << "vc\t" << vc.provenance.str() << "\t" << print_term(vc.formula) << "\n";
    return exit_code::kValid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kInputError;
  }
}

}  // namespace nhl
