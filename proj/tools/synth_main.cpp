// Writes the planted fixture project: a canonical commit log, an issue
// archive, labels, and the expected candidates.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "changescout/synth.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the planted fixture project"};
  std::string out_dir;
  std::uint64_t seed = 7;
  std::string key = "PROJ";
  app.add_option("-o,--output-dir", out_dir, "Destination directory")->required();
  app.add_option("--seed", seed, "Generator seed")->capture_default_str();
  app.add_option("--project-key", key, "Issue key prefix")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    cs::FixtureOptions opts;
    opts.seed = seed;
    opts.project_key = key;
    const auto fx = cs::make_planted_fixture(opts);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    cs::write_file_atomic(dir / "git.log", cs::serialize_git_log(fx.commits));
    cs::write_file_atomic(dir / "issues.jsonl", cs::issues_jsonl(fx.issues));
    cs::write_file_atomic(dir / "labels.csv", cs::labels_csv(fx.labels));
    nlohmann::json planted = nlohmann::json::object();
    for (const auto& [hash, reasons] : fx.planted) {
      for (auto r : reasons) planted[hash].push_back(std::string(cs::to_string(r)));
    }
    nlohmann::json doc = {{"project_key", fx.project_key},
                          {"comment_percentile", fx.comment_percentile},
                          {"planted", planted}};
    cs::write_file_atomic(dir / "planted.json", doc.dump(2) + "\n");
    std::cout << fx.commits.size() << " commits, " << fx.issues.size() << " issues, " << fx.planted.size()
              << " planted candidates -> " << dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
