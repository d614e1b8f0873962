// Command line front end for the auto labeling pipeline: synthetic dataset
// generation, scene flow, auto labeling, open-vocabulary queries, and metric
// evaluation over the on-disk sequence format.

#include "al3d/pipeline.hpp"
#include "al3d/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

al3d::PipelineConfig load_config(const std::string& path) {
  return path.empty() ? al3d::PipelineConfig::defaults() : al3d::PipelineConfig::load(path);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write: " + file.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised multi-modal auto labeling for point cloud sequences"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Pipeline config file (defaults when omitted)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a preset");
  std::string preset = "urban-mini";
  std::uint64_t seed = 7;
  std::string synth_out;
  synth->add_option("--preset", preset, "One of: urban-mini, drive-by, follow, crowd, dropout");
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  // flow
  auto* flow = app.add_subcommand("flow", "Estimate per-frame scene flow and store it");
  std::string flow_dataset;
  int flow_workers = 1;
  flow->add_option("--dataset", flow_dataset, "Dataset directory")->required();
  flow->add_option("--workers", flow_workers, "Worker threads");

  // autolabel
  auto* autolabel = app.add_subcommand("autolabel", "Run the full auto labeling pass");
  std::string al_dataset, al_out;
  int al_workers = 1;
  bool no_bg_filter = false;
  double eps_sf_override = -1.0;
  autolabel->add_option("--dataset", al_dataset, "Dataset directory")->required();
  autolabel->add_option("--out", al_out, "Output labels file")->required();
  autolabel->add_option("--workers", al_workers, "Worker threads");
  autolabel->add_option("--eps-sf", eps_sf_override,
                        "Override the flow magnitude threshold (m/s)");
  autolabel->add_flag("--no-bg-filter", no_bg_filter,
                      "Skip embedding-based background filtering");

  // query
  auto* query = app.add_subcommand("query", "Assign open-vocabulary categories to labels");
  std::string q_dataset, q_labels, q_queries, q_out;
  query->add_option("--dataset", q_dataset, "Dataset directory")->required();
  query->add_option("--labels", q_labels, "Labels file to categorize")->required();
  query->add_option("--queries", q_queries, "Query manifest")->required();
  query->add_option("--out", q_out, "Output labels file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score labels against ground truth");
  std::string e_dataset, e_labels, e_gt, e_out;
  eval->add_option("--dataset", e_dataset, "Dataset directory")->required();
  eval->add_option("--labels", e_labels, "Predicted labels file")->required();
  eval->add_option("--gt", e_gt, "Ground-truth labels file")->required();
  eval->add_option("--out", e_out, "Report stem; writes <out>.txt and <out>.kv")->required();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Print manifest and per-frame statistics");
  std::string i_dataset;
  inspect->add_option("--dataset", i_dataset, "Dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const al3d::SceneSpec spec = al3d::scene_preset(preset);
      const al3d::SynthDataset dataset = al3d::generate(spec, seed);
      al3d::save_dataset(dataset, synth_out);
      std::cout << "wrote " << dataset.frames.size() << " frames to " << synth_out << "\n";
    } else if (flow->parsed()) {
      const al3d::PipelineConfig config = load_config(config_path);
      al3d::DatasetManifest manifest = al3d::DatasetManifest::load(flow_dataset);
      al3d::run_flow(manifest, flow_dataset, config, flow_workers);
      std::cout << "flow written for " << manifest.frame_count << " frames\n";
    } else if (autolabel->parsed()) {
      al3d::PipelineConfig config = load_config(config_path);
      if (eps_sf_override >= 0) config.eps_sf = eps_sf_override;
      const al3d::DatasetManifest manifest = al3d::DatasetManifest::load(al_dataset);
      al3d::AutolabelOptions options;
      options.workers = al_workers;
      options.bg_filter = !no_bg_filter;
      const al3d::AutolabelResult result =
          al3d::run_autolabel(manifest, al_dataset, config, options);
      al3d::save_labels(al_out, al3d::labels_to_records(result.labels, {}));
      std::cout << "wrote " << result.labels.size() << " labels (" << result.tracks.size()
                << " tracks) to " << al_out << "\n";
    } else if (query->parsed()) {
      const al3d::PipelineConfig config = load_config(config_path);
      const al3d::DatasetManifest manifest = al3d::DatasetManifest::load(q_dataset);
      const auto labels = al3d::load_labels(q_labels);
      const auto queries = al3d::load_queries(q_queries);
      const auto categorized = al3d::run_query(labels, manifest, q_dataset, queries, config);
      al3d::save_labels(q_out, categorized);
      std::cout << "categorized " << categorized.size() << " labels into " << q_out << "\n";
    } else if (eval->parsed()) {
      const al3d::PipelineConfig config = load_config(config_path);
      const al3d::DatasetManifest manifest = al3d::DatasetManifest::load(e_dataset);
      const auto labels = al3d::load_labels(e_labels);
      const auto gt = al3d::load_labels(e_gt);
      const al3d::EvalReport report = al3d::run_eval(labels, gt, manifest, config);
      write_text(e_out + ".txt", report.table);
      write_text(e_out + ".kv", report.to_kv());
      std::cout << report.table;
    } else if (inspect->parsed()) {
      const al3d::DatasetManifest manifest = al3d::DatasetManifest::load(i_dataset);
      std::cout << "version " << manifest.version << ", frames " << manifest.frame_count
                << ", dt " << al3d::format_double(manifest.dt) << ", embedding_dim "
                << manifest.embedding_dim << ", coords " << manifest.frame_coords << "\n";
      for (const al3d::FrameRecord& record : manifest.frames) {
        std::cout << "frame " << record.index << ": " << record.num_points << " points"
                  << (record.embeddings_file.empty() ? "" : ", embeddings")
                  << (record.flow_file.empty() ? "" : ", flow") << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
