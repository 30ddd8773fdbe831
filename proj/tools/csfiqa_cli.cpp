#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "csfiqa/gradcheck_suite.hpp"
#include "csfiqa/train.hpp"

namespace fs = std::filesystem;
using namespace csfiqa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

Model model_from_checkpoint(const std::string& path, RunConfig& cfg_out) {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>> arrays;
  const std::string cfg_text = load_checkpoint(path, arrays);
  cfg_out = parse_config(cfg_text);
  Model model = Model::create(cfg_out, cfg_out.train.seed);
  restore_params(model.store, path);
  return model;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out) {
  DatasetManifest m = synth_generate(n, seed, out);
  std::cout << "wrote " << m.rows.size() << " images under " << out << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& ckpt_path, const std::string& report_path,
              double lambda, double tau, double beta_pair, double alpha_k,
              double beta_k) {
  RunConfig cfg = config_or_default(config_path);
  if (lambda >= 0.0) cfg.train.lambda = lambda;
  if (tau > 0.0) cfg.scl.tau = tau;
  if (beta_pair >= 0.0) cfg.scl.beta_pair = beta_pair;
  if (alpha_k > 0.0) cfg.sfa.alpha_k = alpha_k;
  if (beta_k > 0.0) cfg.sfa.beta_k = beta_k;
  cfg.validate();

  std::vector<LoadedSample> data = load_dataset(data_path, cfg.model);
  Model model = Model::create(cfg, cfg.train.seed);
  MetricsReport report = run_protocol(data, cfg, &model);
  const std::string csv = report_csv(report);
  if (report_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(report_path);
    if (!out) throw DataError("cannot write report " + report_path);
    out << csv;
  }
  std::cout << "median srcc " << report.median_srcc << " plcc " << report.median_plcc
            << "\n";
  if (!ckpt_path.empty())
    save_checkpoint(ckpt_path, serialize_config(cfg), model.store);
  return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path) {
  RunConfig cfg;
  Model model = model_from_checkpoint(ckpt_path, cfg);
  std::vector<LoadedSample> data = load_dataset(data_path, cfg.model);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto [s, p] = evaluate(model, data, idx);
  std::cout << "srcc " << s << "\nplcc " << p << "\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& config_path) {
  RunConfig cfg = config_or_default(config_path);
  return run_gradcheck_suite(cfg, std::cout) ? kExitOk : kExitNumeric;
}

int cmd_dump_attn(const std::string& ckpt_path, const std::string& image_path,
                  const std::string& out_path) {
  RunConfig cfg;
  Model model = model_from_checkpoint(ckpt_path, cfg);
  ImageSample img = read_pnm(image_path);
  img.id = image_path;
  LoadedSample s = prepare_sample(img, cfg.model);
  ForwardOut out = model.forward(s.small, s.large, /*want_attn=*/true);

  std::ofstream os(out_path);
  if (!os) throw DataError("cannot write " + out_path);
  os.precision(12);
  os << "y_hat " << out.y_hat.item() << "\n";
  auto dump_branch = [&](const char* name, const AttnDump& d) {
    os << "branch " << name << " heads " << d.heads << " keys " << d.n_keys << "\n";
    for (std::size_t m = 0; m < d.masks.size(); ++m) {
      const MaskDump& md = d.masks[m];
      os << "mask " << m << " fraction " << md.fraction << " k " << md.k_int
         << " mix " << d.mix[m] << "\n";
      for (std::size_t r = 0; r < md.survivors.size(); ++r) {
        os << "survivors";
        for (std::size_t j : md.survivors[r]) os << " " << j;
        os << "\nweights";
        for (double wv : md.weights[r]) os << " " << wv;
        os << "\n";
      }
    }
  };
  if (cfg.sfa.mode == SfaMode::kSelectAtt) {
    dump_branch("small", out.attn_small);
    dump_branch("large", out.attn_large);
  } else {
    os << "dense cross-attention mode: no mask dump\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSFIQA: contrast-constrained scale-focused blind image quality assessment"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth-data", "generate a synthetic distortion dataset");
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string out_dir;
  synth->add_option("--n", n, "number of images");
  synth->add_option("--seed", seed, "generation seed");
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "run the split/train/eval protocol");
  std::string config_path, data_path, ckpt_path, report_path;
  double lambda = -1.0, tau = -1.0, beta_pair = -1.0, alpha_k = -1.0, beta_k = -1.0;
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--data", data_path, "dataset manifest.csv")->required();
  train->add_option("--out-checkpoint", ckpt_path, "checkpoint output path");
  train->add_option("--out-report", report_path, "metrics CSV output path");
  train->add_option("--lambda", lambda, "contrastive loss weight");
  train->add_option("--tau", tau, "InfoNCE temperature");
  train->add_option("--beta-pair", beta_pair, "label-distance pair threshold");
  train->add_option("--alpha-k", alpha_k, "AFS fraction lower bound");
  train->add_option("--beta-k", beta_k, "AFS fraction upper bound");

  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string eval_ckpt, eval_data;
  evalc->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  evalc->add_option("--data", eval_data, "dataset manifest.csv")->required();

  auto* gradc = app.add_subcommand("gradcheck", "run the finite-difference suite");
  std::string gc_config;
  gradc->add_option("--config", gc_config, "key=value config file");

  auto* dump = app.add_subcommand("dump-attn", "export per-mask attention maps");
  std::string dump_ckpt, dump_image, dump_out;
  dump->add_option("--checkpoint", dump_ckpt, "checkpoint path")->required();
  dump->add_option("--image", dump_image, "PGM/PPM image path")->required();
  dump->add_option("--out", dump_out, "output text file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(n, seed, out_dir);
    if (train->parsed())
      return cmd_train(config_path, data_path, ckpt_path, report_path, lambda, tau,
                       beta_pair, alpha_k, beta_k);
    if (evalc->parsed()) return cmd_eval(eval_ckpt, eval_data);
    if (gradc->parsed()) return cmd_gradcheck(gc_config);
    if (dump->parsed()) return cmd_dump_attn(dump_ckpt, dump_image, dump_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
