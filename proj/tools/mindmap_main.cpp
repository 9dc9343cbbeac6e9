#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mindmap/error.hpp"
#include "mindmap/pipeline.hpp"
#include "mindmap/server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Build and serve a topical mind map over a transcribed talk corpus"};
  app.require_subcommand(1);

  std::string config_path = "mindmap.conf";
  app.add_option("-c,--config", config_path, "key = value settings file")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "parse transcripts and write cleaned tokens");
  auto* vectorize = app.add_subcommand("vectorize", "build the vocabulary and TF-IDF vectors");
  auto* curate = app.add_subcommand("curate", "interactive clustering rounds on stdin");
  auto* enrich = app.add_subcommand("enrich", "assign topics, render illustrations, index for search");
  auto* serve = app.add_subcommand("serve", "run the HTTP API");

  CLI11_PARSE(app, argc, argv);

  mindmap::PipelineConfig config;
  try {
    config = mindmap::PipelineConfig::load(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (*ingest) return mindmap::cmd_ingest(config, std::cout, std::cerr);
  if (*vectorize) return mindmap::cmd_vectorize(config, std::cout, std::cerr);
  if (*curate) return mindmap::cmd_curate(config, std::cin, std::cout, std::cerr);
  if (*enrich) return mindmap::cmd_enrich(config, std::cout, std::cerr);
  if (*serve) return mindmap::cmd_serve(config, std::cout, std::cerr);
  return 2;
}
