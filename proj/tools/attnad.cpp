// attnad command-line interface.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 data error, 4 training divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "attnad/common/errors.hpp"
#include "attnad/data/image_io.hpp"
#include "attnad/data/manifest.hpp"
#include "attnad/data/shapes.hpp"
#include "attnad/pipeline/matrix.hpp"
#include "attnad/pipeline/preview.hpp"
#include "attnad/pipeline/run.hpp"
#include "attnad/pipeline/run_config.hpp"

namespace {

namespace fs = std::filesystem;
using namespace attnad;

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kDivergence = 4 };

void print_summary(const nlohmann::json& metrics) {
  std::printf("auroc %.4f", metrics.value("auroc", 0.0));
  if (metrics.contains("pixel_auroc")) std::printf("  pixel_auroc %.4f", metrics.at("pixel_auroc").get<double>());
  std::printf("  accuracy %.4f\n", metrics.at("accuracy").value("value", 0.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-guided anomaly detection and segmentation"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train both stages, evaluate and write a run directory");
  std::string train_config;
  bool resume = false, quiet = false;
  std::int64_t stop_after = -1;
  std::string output_override;
  train->add_option("--config", train_config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--output", output_override, "Override output_dir");
  train->add_flag("--resume", resume, "Continue from the newest checkpoint");
  train->add_option("--stop-after", stop_after, "Stop after N training steps (for resume testing)");
  train->add_flag("--quiet", quiet, "No progress output");

  auto* eval = app.add_subcommand("eval", "Re-evaluate a finished run");
  std::string run_manifest, eval_out;
  eval->add_option("--run", run_manifest, "run_manifest.json of a finished run")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Output directory (default: the run directory)");

  auto* matrix = app.add_subcommand("matrix", "Run the augmentation comparison matrix");
  std::string matrix_config;
  matrix->add_option("--config", matrix_config, "Matrix config (JSON)")->required()->check(CLI::ExistingFile);

  auto* synth_cmd = app.add_subcommand("synth", "Anomaly synthesis utilities");
  synth_cmd->require_subcommand(1);
  auto* preview = synth_cmd->add_subcommand("preview", "Write synthesized anomaly triplets");
  std::string preview_out = "synth_preview", preview_images;
  std::uint64_t preview_seed = 0;
  int preview_count = 16, preview_size = 64;
  preview->add_option("--out", preview_out, "Output directory");
  preview->add_option("--images", preview_images, "Directory of input images (default: built-in shapes)");
  preview->add_option("--count", preview_count, "Number of samples")->check(CLI::PositiveNumber);
  preview->add_option("--size", preview_size, "Image size");
  preview->add_option("--seed", preview_seed, "Augmentation seed");

  auto* data_cmd = app.add_subcommand("data", "Dataset utilities");
  data_cmd->require_subcommand(1);
  auto* make_shapes = data_cmd->add_subcommand("make-shapes", "Write the synthetic shapes dataset as a defect tree");
  std::string shapes_out;
  data::SyntheticShapesConfig shapes_cfg;
  make_shapes->add_option("--out", shapes_out, "Output root")->required();
  make_shapes->add_option("--seed", shapes_cfg.seed, "Generator seed");
  make_shapes->add_option("--size", shapes_cfg.canvas_size, "Canvas size");
  make_shapes->add_option("--train", shapes_cfg.n_train, "Training images");
  make_shapes->add_option("--test-normal", shapes_cfg.n_test_normal, "Normal test images");
  make_shapes->add_option("--test-anomaly", shapes_cfg.n_test_anomaly, "Anomalous test images");

  auto* build_manifest = data_cmd->add_subcommand("build-manifest", "Hash a dataset tree into a manifest");
  std::string bm_root, bm_out, bm_layout = "folder";
  int bm_size = 64, bm_channels = 3;
  build_manifest->add_option("--root", bm_root, "Dataset root")->required()->check(CLI::ExistingDirectory);
  build_manifest->add_option("--out", bm_out, "Manifest path (default: <root>/manifest.jsonl)");
  build_manifest->add_option("--layout", bm_layout, "folder | defect_tree")
      ->check(CLI::IsMember({"folder", "defect_tree"}));
  build_manifest->add_option("--size", bm_size, "Resize target");
  build_manifest->add_option("--channels", bm_channels, "1 or 3");

  auto* cifar = data_cmd->add_subcommand("import-cifar10", "Convert CIFAR-10 binary batches to a PNG folder tree");
  std::string cifar_src, cifar_out;
  cifar->add_option("--src", cifar_src, "Directory with data_batch_*.bin")->required()->check(CLI::ExistingDirectory);
  cifar->add_option("--out", cifar_out, "Output root")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = pipeline::load_run_config(train_config);
      if (!output_override.empty()) cfg.output_dir = output_override;
      pipeline::RunOptions opts;
      opts.resume = resume;
      opts.stop_after_steps = stop_after;
      opts.verbose = !quiet;
      const auto m = pipeline::run_two_stage(cfg, opts);
      std::printf("run %s: %s\n", m.status.c_str(), cfg.output_dir.c_str());
      if (m.status == "ok") print_summary(m.metrics);
    } else if (*eval) {
      const auto report = pipeline::evaluate_run(run_manifest, eval_out);
      print_summary(report.to_json());
    } else if (*matrix) {
      const auto cfg = pipeline::load_matrix_config(matrix_config);
      pipeline::RunOptions opts;
      opts.verbose = true;
      const auto report = pipeline::run_augmentation_matrix(cfg, opts);
      std::cout << report.to_markdown();
    } else if (*preview) {
      synth::AugmentationConfig aug;
      aug.seed = preview_seed;
      torch::Tensor images;
      if (preview_images.empty()) {
        data::SyntheticShapesConfig sc;
        sc.canvas_size = preview_size;
        sc.n_train = preview_count;
        images = data::generate_shapes_dataset(sc).train.images;
      } else {
        std::vector<torch::Tensor> list;
        for (const auto& p : data::list_images(preview_images)) {
          if (static_cast<int>(list.size()) == preview_count) break;
          list.push_back(data::load_image(p, 3, preview_size));
        }
        if (list.empty()) throw DataError("no images in '" + preview_images + "'");
        images = torch::stack(list);
      }
      const auto n = pipeline::write_synth_preview(images, aug, preview_out);
      std::printf("wrote %zu previews to %s\n", n, preview_out.c_str());
    } else if (*make_shapes) {
      const auto split = data::generate_shapes_dataset(shapes_cfg);
      const auto n = data::write_defect_tree(split, shapes_out);
      std::printf("wrote %zu files to %s\n", n, shapes_out.c_str());
    } else if (*build_manifest) {
      const auto m = data::build_manifest(bm_root, data::layout_from_string(bm_layout), bm_size, bm_channels);
      const fs::path out = bm_out.empty() ? fs::path(bm_root) / "manifest.jsonl" : fs::path(bm_out);
      data::write_manifest(out, m);
      std::printf("%zu entries, %zu classes -> %s\n", m.entries.size(), m.classes.size(), out.c_str());
    } else if (*cifar) {
      const auto n = data::convert_cifar10_binary(cifar_src, cifar_out);
      std::printf("wrote %zu images to %s\n", n, cifar_out.c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const TrainingDivergence& e) {
    std::fprintf(stderr, "training diverged: %s (diagnostic checkpoint: %s)\n", e.what(), e.checkpoint().c_str());
    return kDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOk;
}
