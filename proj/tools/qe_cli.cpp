// Command-line front end: dataset generation, reference proposal, training,
// inference, evaluation and plotting.
#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "qe/metrics.hpp"
#include "qe/pipeline/config.hpp"
#include "qe/pipeline/enhance.hpp"
#include "qe/pipeline/evaluate.hpp"
#include "qe/pipeline/synth.hpp"
#include "qe/pipeline/train.hpp"
#include "qe/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int run_degrade(const fs::path& in, const fs::path& out, const fs::path& config) {
  const qe::DegradeConfig cfg = qe::parse_degrade_config(qe::read_text_file(config));
  const auto dirs = qe::list_sequences(in);
  const bool single = dirs.size() == 1 && dirs[0] == in;
  for (const fs::path& dir : dirs) {
    const qe::FrameSequence clean = qe::load_sequence(dir);
    qe::FrameSequence degraded = qe::synth_degrade(clean, cfg);
    degraded.provenance["degrade_config_hash"] = qe::content_hash(qe::read_text_file(config));
    qe::write_sequence(degraded, single ? out : out / dir.filename());
    std::cerr << "degraded " << dir.string() << " (" << clean.size() << " frames)\n";
  }
  return kOk;
}

int run_make_synthetic(const fs::path& out, const std::string& synth_config, const std::string& degrade_config) {
  const qe::SyntheticConfig scfg =
      synth_config.empty() ? qe::SyntheticConfig{} : qe::parse_synthetic_config(qe::read_text_file(synth_config));
  const qe::DegradeConfig dcfg =
      degrade_config.empty() ? qe::DegradeConfig{} : qe::parse_degrade_config(qe::read_text_file(degrade_config));
  for (std::size_t i = 0; i < scfg.sequences; ++i) {
    const qe::FrameSequence clean = qe::synth_clean(scfg, i);
    qe::DegradeConfig per_seq = dcfg;
    per_seq.seed = dcfg.seed + i;
    qe::write_sequence(clean, out / "truth" / clean.name);
    qe::write_sequence(qe::synth_degrade(clean, per_seq), out / "compressed" / clean.name);
  }
  std::cerr << "wrote " << scfg.sequences << " sequences to " << out.string() << "\n";
  return kOk;
}

int run_propose(const fs::path& manifest, std::size_t target, int radius, const std::string& track, bool naive) {
  const qe::FrameSequence seq = qe::load_sequence(manifest);
  const qe::TrackMode mode = qe::parse_track_mode(track);
  if (radius <= 0) throw qe::UsageError("radius must be positive");
  if (target >= seq.size()) {
    throw qe::UsageError("target " + std::to_string(target) + " outside sequence of " + std::to_string(seq.size()) +
                         " frames");
  }
  const qe::ReferenceSet refs = qe::select_references(seq, target, static_cast<std::size_t>(radius), !naive, mode);
  ordered_json j;
  j["target"] = refs.target;
  j["radius"] = radius;
  j["track"] = qe::track_mode_name(mode);
  j["strategy"] = naive ? "adjacent" : "rfp";
  j["candidates"] = qe::detect_candidates(seq.metadata, mode);
  j["preceding"] = refs.preceding;
  j["following"] = refs.following;
  j["ordered"] = refs.ordered();
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int run_train(const fs::path& config, const fs::path& out, const std::string& log_path, std::int64_t every) {
  const qe::TrainConfig cfg = qe::load_train_config(config);
  qe::TrainHooks hooks;
  hooks.on_loss = [&](std::int64_t it, double loss, double lr) {
    if (every > 0 && (it % every == 0 || it + 1 == cfg.iterations)) {
      std::cerr << "iter " << it << " loss " << loss << " lr " << lr << "\n";
    }
  };
  const qe::TrainResult result = qe::train(cfg, hooks);
  qe::save_weights(result.weights, out);
  if (!log_path.empty()) {
    std::ostringstream os;
    os << "iteration,loss\n";
    os.precision(10);
    for (std::size_t i = 0; i < result.losses.size(); ++i) os << i << ',' << result.losses[i] << "\n";
    qe::write_text_atomic(log_path, os.str());
  }
  std::cerr << "saved " << out.string() << " (" << qe::content_hash(qe::read_file_bytes(out)) << ")\n";
  return kOk;
}

int run_train_mask(const fs::path& config, const fs::path& first, const fs::path& second, const fs::path& out) {
  const qe::TrainConfig cfg = qe::load_train_config(config);
  const auto data = qe::load_dataset(cfg.dataset);
  const qe::TrainResult result =
      qe::train_mask(cfg, data, qe::load_weights(first), qe::load_weights(second));
  qe::save_weights(result.weights, out);
  std::cerr << "mask loss " << qe::head_mean(result.losses, 20) << " -> " << qe::tail_mean(result.losses, 20) << "\n";
  return kOk;
}

int run_enhance(const fs::path& weights, const fs::path& manifest, const fs::path& out, qe::EnhanceOptions options,
                const std::string& fuse_with, const std::string& mask) {
  if (fuse_with.empty() != mask.empty()) throw qe::UsageError("--fuse-with and --mask must be given together");
  if (!fuse_with.empty()) {
    options.fuse_with = qe::load_weights(fuse_with);
    options.mask = qe::load_weights(mask);
  }
  const qe::FrameSequence seq = qe::load_sequence(manifest);
  qe::FrameSequence enhanced = qe::enhance_sequence(qe::load_weights(weights), seq, options);
  std::ostringstream opts;
  opts << "self_ensemble=" << options.self_ensemble << ";rfp=" << options.rfp
       << ";track=" << qe::track_mode_name(options.track) << ";fuse_with=" << fuse_with << ";mask=" << mask;
  enhanced.provenance["weights_hash"] = qe::content_hash(qe::read_file_bytes(weights));
  enhanced.provenance["config_hash"] = qe::content_hash(opts.str());
  qe::write_sequence(enhanced, out);
  std::cerr << "enhanced " << enhanced.size() << " frames into " << out.string() << "\n";
  return kOk;
}

int run_evaluate(const fs::path& compressed, const fs::path& enhanced, const fs::path& truth, const fs::path& report) {
  const qe::EvalReport r = qe::evaluate_dirs(compressed, enhanced, truth);
  qe::write_text_atomic(report, qe::report_to_text(r));
  std::cout << "delta_psnr " << r.delta_psnr << " dB, delta_ssim " << r.delta_ssim << " over " << r.sequences.size()
            << " sequences\n";
  return kOk;
}

int run_bdbr(const fs::path& anchor, const fs::path& test) {
  const auto a = qe::parse_rd_csv(qe::read_text_file(anchor));
  const auto t = qe::parse_rd_csv(qe::read_text_file(test));
  const qe::BdRate r = qe::bd_br(a, t);
  ordered_json j;
  j["bd_rate_percent"] = r.bd_rate;
  j["reduction_percent"] = r.reduction();
  j["log10_rate_delta"] = r.log_rate_delta;
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int run_plot(const fs::path& report, const fs::path& out) {
  const qe::EvalReport r = qe::report_from_text(qe::read_text_file(report));
  for (const fs::path& p : qe::plot_curves(r, out)) std::cout << p.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed video quality enhancement toolkit"};
  app.require_subcommand(1);
  int code = kOk;
  std::function<int()> action;

  std::string in, out, config, manifest, track = "fixed-qp", weights, fuse_with, mask, log_path;
  std::string compressed, enhanced, truth, report, anchor, test, synth_config, degrade_config, first, second;
  std::size_t target = 0;
  int radius = 2;
  std::int64_t every = 100;
  bool naive = false;
  qe::EnhanceOptions options;

  auto* degrade = app.add_subcommand("degrade", "Apply synthetic compression to clean sequences");
  degrade->add_option("--in", in, "Clean sequence or dataset directory")->required();
  degrade->add_option("--out", out, "Output directory")->required();
  degrade->add_option("--config", config, "Degradation config (JSON)")->required();
  degrade->callback([&] { action = [&] { return run_degrade(in, out, config); }; });

  auto* synth = app.add_subcommand("make-synthetic", "Generate a synthetic dataset with truth/ and compressed/");
  synth->add_option("--out", out, "Dataset root")->required();
  synth->add_option("--config", synth_config, "Synthetic content config (JSON)");
  synth->add_option("--degrade", degrade_config, "Degradation config (JSON)");
  synth->callback([&] { action = [&] { return run_make_synthetic(out, synth_config, degrade_config); }; });

  auto* propose = app.add_subcommand("propose-refs", "Print the reference frames chosen for a target");
  propose->add_option("--manifest", manifest, "Sequence manifest")->required();
  propose->add_option("--target", target, "Target frame index")->required();
  propose->add_option("--radius", radius, "References per side")->required();
  propose->add_option("--track", track, "fixed-qp or fixed-bitrate");
  propose->add_flag("--naive", naive, "Use adjacent frames instead");
  propose->callback([&] { action = [&] { return run_propose(manifest, target, radius, track, naive); }; });

  auto* train = app.add_subcommand("train", "Train an enhancement model");
  train->add_option("--config", config, "Training config (JSON)")->required();
  train->add_option("--out", out, "Output weight file")->required();
  train->add_option("--log", log_path, "Per-iteration loss CSV");
  train->add_option("--print-every", every, "Progress interval (0 disables)");
  train->callback([&] { action = [&] { return run_train(config, out, log_path, every); }; });

  auto* train_mask = app.add_subcommand("train-mask", "Train the fusion mask for two frozen models");
  train_mask->add_option("--config", config, "Training config (JSON)")->required();
  train_mask->add_option("--first", first, "Weights of the first model")->required();
  train_mask->add_option("--second", second, "Weights of the second model")->required();
  train_mask->add_option("--out", out, "Output mask weight file")->required();
  train_mask->callback([&] { action = [&] { return run_train_mask(config, first, second, out); }; });

  auto* enhance = app.add_subcommand("enhance", "Enhance a compressed sequence");
  enhance->add_option("--weights", weights, "Model weights")->required();
  enhance->add_option("--manifest", manifest, "Compressed sequence manifest")->required();
  enhance->add_option("--out", out, "Output sequence directory")->required();
  enhance->add_flag("--self-ensemble", options.self_ensemble, "Average over the eight flips and rotations");
  enhance->add_flag("--parallel", options.parallel, "Run ensemble branches concurrently");
  enhance->add_option("--fuse-with", fuse_with, "Second model for gated fusion");
  enhance->add_option("--mask", mask, "Mask network weights for fusion");
  enhance->add_option("--track", track, "fixed-qp or fixed-bitrate");
  enhance->add_flag("--naive", naive, "Use adjacent frames as references");
  enhance->callback([&] {
    action = [&] {
      options.track = qe::parse_track_mode(track);
      options.rfp = !naive;
      return run_enhance(weights, manifest, out, options, fuse_with, mask);
    };
  });

  auto* evaluate = app.add_subcommand("evaluate", "Compute PSNR/SSIM deltas and fluctuation statistics");
  evaluate->add_option("--compressed", compressed, "Compressed sequence(s)")->required();
  evaluate->add_option("--enhanced", enhanced, "Enhanced sequence(s)")->required();
  evaluate->add_option("--truth", truth, "Ground-truth sequence(s)")->required();
  evaluate->add_option("--report", report, "Output report (JSON)")->required();
  evaluate->callback([&] { action = [&] { return run_evaluate(compressed, enhanced, truth, report); }; });

  auto* bdbr = app.add_subcommand("bdbr", "Bjontegaard delta bitrate between two RD curves");
  bdbr->add_option("--anchor", anchor, "Anchor CSV (bitrate,psnr)")->required();
  bdbr->add_option("--test", test, "Test CSV (bitrate,psnr)")->required();
  bdbr->callback([&] { action = [&] { return run_bdbr(anchor, test); }; });

  auto* plot = app.add_subcommand("plot", "Render per-sequence PSNR curves as SVG");
  plot->add_option("--report", report, "Evaluation report")->required();
  plot->add_option("--out", out, "Output directory")->required();
  plot->callback([&] { action = [&] { return run_plot(report, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    code = action();
  } catch (const qe::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    code = kNumeric;
  } catch (const qe::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    code = kUsage;
  } catch (const qe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    code = kUsage;
  } catch (const qe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "filesystem error: " << e.what() << "\n";
    code = kData;
  }
  return code;
}
