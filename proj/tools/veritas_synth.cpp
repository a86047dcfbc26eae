// Writes a seeded synthetic dataset plus a ready-to-run pipeline config.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "veritas/error.hpp"
#include "veritas/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"veritas-synth: synthetic multimodal dataset generator"};
  veritas::SyntheticConfig c;
  std::string out_dir;
  std::size_t components = 4;
  app.add_option("output", out_dir, "directory to create")->required();
  app.add_option("--identities", c.identities)->capture_default_str();
  app.add_option("--min-videos", c.min_videos_per_identity, "videos per identity, lower bound")->capture_default_str();
  app.add_option("--max-videos", c.max_videos_per_identity, "videos per identity, upper bound")->capture_default_str();
  app.add_option("--seed", c.seed)->capture_default_str();
  app.add_option("--motion-dim", c.motion_dim)->capture_default_str();
  app.add_option("--components", components, "GMM size written into the config")->capture_default_str();
  app.add_option("--motion-reliability", c.motion_reliability)->capture_default_str();
  app.add_option("--audio-reliability", c.audio_reliability)->capture_default_str();
  app.add_option("--transcript-reliability", c.transcript_reliability)->capture_default_str();
  app.add_option("--expression-reliability", c.expression_reliability)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto ds = veritas::write_synthetic_dataset(c, out_dir);
    const auto cfg = std::filesystem::path(out_dir) / "veritas.toml";
    std::ofstream out(cfg);
    out << "manifest = \"manifest.jsonl\"\n"
        << "output_dir = \"out\"\n\n"
        << "[motion]\ncolumns = [" << ds.extraction.motion_columns.first << ", " << ds.extraction.motion_columns.last
        << "]\nframe_column = 0\ncomponents = " << components << "\n\n"
        << "[audio]\ncomponents = " << components << "\n\n"
        << "[transcript]\nembeddings = \"embeddings.txt\"\ncomponents = " << components << "\n\n"
        << "[expressions]\nfps = " << c.fps << "\nclip_seconds = " << c.clip_seconds << "\n\n"
        << "[evaluation]\nfolds = 10\nseed = " << c.seed << "\n";
    if (!out) throw veritas::DataError("cannot write " + cfg.string());
    std::cout << ds.manifest.size() << " videos, " << ds.manifest.identities().size() << " identities -> " << cfg.string()
              << '\n';
  } catch (const veritas::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
