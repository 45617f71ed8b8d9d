#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nhl/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Natural-language specification verifier"};
  app.require_subcommand(1);
  nhl::RunConfig cfg;
  std::string text, post;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--grammar", cfg.rules, "grammar rules file");
    sub->add_option("--lexicon", cfg.lexicon, "lexicon file");
    sub->add_option("--spec", cfg.spec, "specification file");
    sub->add_option("--program", cfg.program, "program file");
    sub->add_option("--relation", cfg.relation, "relation file");
    sub->add_option("--kb", cfg.kb, "knowledge-base file");
    sub->add_option("--k", cfg.k, "number of candidate parses");
    sub->add_option("--bound", cfg.bound, "refutation search bound");
    sub->add_flag("--interactive", cfg.interactive, "confirm each parse on the terminal");
    sub->add_option("--emit-smt", cfg.smt_dir, "write one SMT-LIB file per VC into this directory");
  };
  CLI::App* verify = app.add_subcommand("verify", "verify specifications against a program");
  common(verify);
  verify->add_option("--record-out", cfg.record_out, "write a proof record");
  verify->add_option("--record-in", cfg.record_in, "reuse a proof record through the knowledge base");
  CLI::App* parse = app.add_subcommand("parse", "print ranked logical forms of a sentence");
  common(parse);
  parse->add_option("sentence", text, "sentence or marked specification")->required();
  CLI::App* para = app.add_subcommand("paraphrase", "render a logical form as English");
  common(para);
  para->add_option("term", text, "logical form in term syntax")->required();
  CLI::App* wp = app.add_subcommand("wp", "print the weakest precondition of a program");
  common(wp);
  wp->add_option("--post", post, "postcondition")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : nhl::exit_code::kInputError;
  }
  if (*verify) return nhl::cmd_verify(cfg, std::cout, std::cerr, std::cin);
  if (*parse) return nhl::cmd_parse(cfg, text, std::cout, std::cerr);
  if (*para) return nhl::cmd_paraphrase(cfg, text, std::cout, std::cerr);
  return nhl::cmd_wp(cfg, post, std::cout, std::cerr);
}
