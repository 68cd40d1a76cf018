#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "qe/pipeline/config.hpp"
#include "qe/pipeline/enhance.hpp"
#include "qe/pipeline/evaluate.hpp"
#include "qe/pipeline/synth.hpp"
#include "qe/pipeline/train.hpp"

using namespace qe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qe_pipeline_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, std::size_t n, std::uint8_t seed) {
  std::ofstream out(p, std::ios::binary);
  for (std::size_t i = 0; i < n; ++i) out.put(static_cast<char>((i * 37 + seed) & 0xFF));
}

fs::path hand_sequence(const fs::path& dir, std::size_t frames, std::size_t w, std::size_t h) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["format"] = "gray8";
  j["width"] = w;
  j["height"] = h;
  for (std::size_t i = 0; i < frames; ++i) {
    const std::string name = "f" + std::to_string(i) + ".raw";
    write_bytes(dir / name, w * h, static_cast<std::uint8_t>(i));
    j["frames"].push_back({{"index", i}, {"file", name}, {"qp", 30 + static_cast<int>(i % 3)}, {"frame_type", i ? "P" : "I"}});
  }
  std::ofstream(dir / "manifest.json") << j.dump();
  return dir / "manifest.json";
}

void rewrite_manifest(const fs::path& manifest, const std::function<void(nlohmann::json&)>& edit) {
  nlohmann::json j = nlohmann::json::parse(std::ifstream(manifest));
  edit(j);
  std::ofstream(manifest) << j.dump();
}

std::vector<TrainingPair> synthetic_pairs(std::size_t sequences, std::size_t frames, std::size_t size,
                                          std::uint64_t seed = 3) {
  SyntheticConfig sc;
  sc.sequences = sequences;
  sc.frames = frames;
  sc.width = sc.height = size;
  sc.seed = seed;
  std::vector<TrainingPair> out;
  for (std::size_t i = 0; i < sequences; ++i) {
    FrameSequence clean = synth_clean(sc, i);
    DegradeConfig dc;
    dc.seed = seed + i;
    out.push_back({synth_degrade(clean, dc), clean});
  }
  return out;
}

TrainConfig toy_train_config() {
  TrainConfig cfg;
  cfg.dataset = "unused";
  cfg.radius = 1;
  cfg.iqe.blocks = 2;
  cfg.iqe.width = 8;
  cfg.iterations = 6;
  cfg.batch_size = 2;
  cfg.patch_size = 16;
  cfg.base_lr = 1e-3;
  cfg.seed = 9;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline-cli") {

TEST_CASE("load_sequence reads frames and metadata") {
  const fs::path dir = scratch("load");
  const auto seq = load_sequence(hand_sequence(dir, 5, 16, 16));
  CHECK(seq.size() == 5);
  CHECK(seq.frames[3].shape() == Shape{1, 16, 16});
  CHECK(seq.metadata[2].qp == 32);
  CHECK(seq.metadata[0].frame_type == FrameType::I);
  CHECK(seq.frames[1][2] == static_cast<float>((2 * 37 + 1) & 0xFF) / 255.0f);
  CHECK(load_sequence(dir).size() == 5);
}

TEST_CASE("load_sequence reports malformed inputs as data errors") {
  const fs::path dir = scratch("bad");
  const fs::path m = hand_sequence(dir, 3, 8, 4);
  write_bytes(dir / "f1.raw", 31, 0);
  try {
    load_sequence(m);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("f1.raw") != std::string::npos);
    CHECK(msg.find("expected 32") != std::string::npos);
  }
  write_bytes(dir / "f1.raw", 32, 0);
  CHECK(load_sequence(m).size() == 3);

  fs::remove(dir / "f2.raw");
  CHECK_THROWS_AS(load_sequence(m), DataError);
  write_bytes(dir / "f2.raw", 32, 0);

  rewrite_manifest(m, [](nlohmann::json& j) { j["frames"][2]["index"] = 1; });
  CHECK_THROWS_AS(load_sequence(m), DataError);
  rewrite_manifest(m, [](nlohmann::json& j) { j["frames"][2]["index"] = 5; });
  CHECK_THROWS_AS(load_sequence(m), DataError);
  rewrite_manifest(m, [](nlohmann::json& j) {
    j["frames"][2]["index"] = 2;
    j["format"] = "rgb24";
  });
  CHECK_THROWS_AS(load_sequence(m), DataError);
  std::ofstream(m) << "{ not json";
  CHECK_THROWS_AS(load_sequence(m), DataError);
  CHECK_THROWS_AS(load_sequence(dir / "nope.json"), DataError);
}

TEST_CASE("write_sequence then load_sequence is bitwise identical") {
  const fs::path dir = scratch("roundtrip");
  const FrameSequence a = load_sequence(hand_sequence(dir / "src", 4, 12, 10));
  write_sequence(a, dir / "copy");
  const FrameSequence b = load_sequence(dir / "copy");
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.frames[i] == a.frames[i]);
    CHECK(b.metadata[i].qp == a.metadata[i].qp);
    CHECK(b.metadata[i].frame_type == a.metadata[i].frame_type);
  }
  // Rewriting over an existing directory replaces it and leaves no staging directories behind.
  write_sequence(b, dir / "copy");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) entries += e.path().filename().string().starts_with(".") ? 100 : 1;
  CHECK(entries == 2);
  CHECK(list_sequences(dir).size() == 2);
  CHECK(list_sequences(dir / "copy").size() == 1);
}

TEST_CASE("synthetic degradation: determinism, no-op and quality cycle") {
  SyntheticConfig sc;
  sc.frames = 12;
  sc.width = sc.height = 48;
  const FrameSequence clean = synth_clean(sc, 0);
  CHECK(synth_clean(sc, 0).frames == clean.frames);

  DegradeConfig dc;
  const FrameSequence a = synth_degrade(clean, dc), b = synth_degrade(clean, dc);
  CHECK(a.frames == b.frames);
  dc.seed = 99;
  CHECK(synth_degrade(clean, dc).frames != a.frames);

  DegradeConfig none;
  none.quality_cycle = {0.0};
  none.blur_sigma = 0.0;
  none.noise_sigma = 0.0;
  CHECK(synth_degrade(clean, none).frames == clean.frames);

  // Default cycle {6, 22, 14, 22}: best at phase 0, worst at phases 1 and 3.
  DegradeConfig cyc;
  cyc.noise_sigma = 0.0;
  const FrameSequence d = synth_degrade(clean, cyc);
  std::vector<double> curve;
  for (std::size_t t = 0; t < d.size(); ++t) curve.push_back(psnr(to_plane(d.frames[t]), to_plane(clean.frames[t])));
  for (std::size_t t = 0; t + 4 < curve.size(); t += 4) {
    CHECK(curve[t] > curve[t + 1]);
    CHECK(curve[t] > curve[t + 3]);
    CHECK(curve[t + 2] > curve[t + 1]);
    CHECK(curve[t + 2] > curve[t + 3]);
  }
  CHECK(curve_stats(curve).pvd > 0.0);
  CHECK(d.metadata[0].frame_type == FrameType::I);
  CHECK(d.metadata[1].frame_type == FrameType::B);
  CHECK(d.metadata[2].frame_type == FrameType::P);
  CHECK(d.metadata[1].qp == 33);
  CHECK(d.metadata[4].qp == 9);
  // QP minima at phases 0 and 2 are exactly the fixed-QP candidates.
  CHECK(detect_candidates(d.metadata, TrackMode::FixedQp) == std::vector<std::size_t>{2, 4, 6, 8, 10});

  DegradeConfig bad;
  bad.block = 0;
  CHECK_THROWS_AS(synth_degrade(clean, bad), ConfigError);
}

TEST_CASE("config parsing is strict") {
  const auto cfg = parse_train_config(R"({"dataset": "data", "radius": 1, "preset": "deep", "seed": 4,
                                           "loss": {"spatial": "l2", "fft": false}})",
                                      "/base");
  CHECK(cfg.dataset == fs::path("/base/data"));
  CHECK(cfg.iqe.blocks == 96);
  CHECK(cfg.loss.spatial == SpatialLoss::L2);
  CHECK_FALSE(cfg.loss.fft);
  CHECK(cfg.base_lr == 1e-4);
  CHECK(cfg.iterations == 5000);
  CHECK(cfg.batch_size == 8);
  CHECK(cfg.patch_size == 48);
  CHECK(cfg.loss.w_fft == 1.0);
  CHECK(cfg.loss.lambda == 1.0);

  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "d", "learning_rate": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "d", "loss": {"kind": "l1"}})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "d", "patch_size": 33})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "d", "iterations": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"radius": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("[1]"), ConfigError);
  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "d", "radius": "two"})"), ConfigError);
  CHECK(parse_train_config(train_config_to_text(cfg)).iqe.blocks == 96);
  CHECK(cfg.loss.fft_norm == PenaltyNorm::L1);
  const auto l2 = parse_train_config(R"({"dataset": "d", "loss": {"fft_norm": "l2", "lambda": 0.5}})");
  CHECK(l2.loss.fft_norm == PenaltyNorm::L2);
  CHECK(parse_train_config(train_config_to_text(l2)).loss.fft_norm == PenaltyNorm::L2);
  CHECK_THROWS_AS(parse_train_config(R"({"dataset": "d", "loss": {"fft_norm": "huber"}})"), ConfigError);

  const auto dc = parse_degrade_config(R"({"block": 4, "quality_cycle": [2, 8], "seed": 3})");
  CHECK(dc.block == 4);
  CHECK(dc.quality_cycle.size() == 2);
  CHECK_THROWS_AS(parse_degrade_config(R"({"blocks": 4})"), ConfigError);
  CHECK_THROWS_AS(parse_degrade_config(R"({"quality_cycle": []})"), ConfigError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = synthetic_pairs(2, 6, 24);
  const TrainConfig cfg = toy_train_config();
  const TrainResult a = train(cfg, data), b = train(cfg, data);
  CHECK(a.losses == b.losses);
  CHECK(serialize_weights(a.weights) == serialize_weights(b.weights));
  TrainConfig other = cfg;
  other.seed = 10;
  CHECK(serialize_weights(train(other, data).weights) != serialize_weights(a.weights));
  CHECK(a.losses.size() == 6);
}

TEST_CASE("switching reference proposal changes only the reference indices") {
  const auto data = synthetic_pairs(2, 8, 24);
  TrainConfig cfg = toy_train_config();
  cfg.radius = 2;
  std::vector<std::vector<TrainSample>> with_rfp, naive;
  TrainHooks h1, h2;
  h1.on_batch = [&](std::int64_t, const std::vector<TrainSample>& b) { with_rfp.push_back(b); };
  h2.on_batch = [&](std::int64_t, const std::vector<TrainSample>& b) { naive.push_back(b); };
  train(cfg, data, h1);
  cfg.rfp = false;
  train(cfg, data, h2);
  REQUIRE(with_rfp.size() == naive.size());
  bool any_difference = false;
  for (std::size_t i = 0; i < naive.size(); ++i)
    for (std::size_t k = 0; k < naive[i].size(); ++k) {
      const TrainSample &a = with_rfp[i][k], &b = naive[i][k];
      CHECK(a.sequence == b.sequence);
      CHECK(a.target == b.target);
      CHECK(a.y == b.y);
      CHECK(a.x == b.x);
      const FrameSequence& seq = data[a.sequence].compressed;
      CHECK(a.references == propose_references(seq.metadata, a.target, 2, TrackMode::FixedQp).ordered());
      CHECK(b.references == adjacent_references(seq.size(), b.target, 2).ordered());
      any_difference = any_difference || a.references != b.references;
    }
  CHECK(any_difference);
}

TEST_CASE("a non-finite loss aborts training with a numeric error") {
  auto data = synthetic_pairs(1, 4, 16);
  for (auto& f : data[0].truth.frames) f[5] = std::nanf("");
  CHECK_THROWS_AS(train(toy_train_config(), data), NumericError);
  CHECK_THROWS_AS(train(toy_train_config(), std::vector<TrainingPair>{}), DataError);
}

TEST_CASE("dataset loading pairs compressed and truth by name") {
  const fs::path root = scratch("dataset");
  for (auto& p : synthetic_pairs(2, 3, 16)) {
    write_sequence(p.compressed, root / "compressed" / p.compressed.name);
    write_sequence(p.truth, root / "truth" / p.truth.name);
  }
  const auto data = load_dataset(root);
  CHECK(data.size() == 2);
  CHECK(data[1].truth.name == "seq1");
  fs::remove_all(root / "truth" / "seq1");
  CHECK_THROWS_AS(load_dataset(root), DataError);
}

TEST_CASE("enhancement: zero tail is the identity, fusion boundary and ensembling") {
  const auto data = synthetic_pairs(1, 5, 20);
  const FrameSequence& seq = data[0].compressed;
  ModelConfig mc{1, 1, IqeConfig{2, 8, 4, 2, 4, 0.2}};
  WeightStore w = init_params<float>(model_param_specs(mc), 1);
  WeightStore zero = w;
  zero.at("iqe.tail.weight").fill(0.0f);
  zero.at("iqe.tail.bias").fill(0.0f);

  const FrameSequence same = enhance_sequence(zero, seq);
  CHECK(same.frames == seq.frames);
  CHECK(evaluate({{seq, same, data[0].truth}}).delta_psnr == 0.0);
  EnhanceOptions ens;
  ens.self_ensemble = true;
  CHECK(enhance_sequence(zero, seq, ens).frames == seq.frames);

  WeightStore mask = init_params<float>(mask_param_specs(MaskNetConfig{1, 32}), 2);
  mask.at("mask.conv3.weight").fill(0.0f);
  mask.at("mask.conv3.bias").fill(100.0f);
  EnhanceOptions fuse;
  fuse.fuse_with = zero;
  fuse.mask = mask;
  const FrameSequence plain = enhance_sequence(w, seq);
  CHECK(enhance_sequence(w, seq, fuse).frames == plain.frames);
  mask.at("mask.conv3.bias").fill(-200.0f);
  fuse.mask = mask;
  CHECK(enhance_sequence(w, seq, fuse).frames == seq.frames);

  EnhanceOptions half;
  half.fuse_with = zero;
  CHECK_THROWS_AS(enhance_sequence(w, seq, half), UsageError);
  WeightStore broken = w;
  broken.erase("iqe.up.bias");
  CHECK_THROWS_AS(enhance_sequence(broken, seq), BindingError);

  // Odd frame sizes are padded internally.
  const auto odd = synthetic_pairs(1, 3, 15);
  const FrameSequence out = enhance_sequence(w, odd[0].compressed);
  CHECK(out.frames[0].shape() == Shape{1, 15, 15});
}

TEST_CASE("evaluation over directories, aggregates and plots") {
  const fs::path root = scratch("evaluate");
  const auto data = synthetic_pairs(2, 8, 32);
  for (const auto& p : data) {
    write_sequence(p.compressed, root / "compressed" / p.compressed.name);
    write_sequence(p.compressed, root / "enhanced" / p.compressed.name);
    write_sequence(p.truth, root / "truth" / p.truth.name);
  }
  const EvalReport r = evaluate_dirs(root / "compressed", root / "enhanced", root / "truth");
  REQUIRE(r.sequences.size() == 2);
  CHECK(r.delta_psnr == 0.0);
  CHECK(r.delta_ssim == 0.0);
  CHECK(r.pvd_compressed == doctest::Approx((r.sequences[0].compressed_stats.pvd + r.sequences[1].compressed_stats.pvd) / 2));
  CHECK(r.sequences[0].compressed_stats.pvd > 0.0);

  const auto files = plot_curves(r, root / "plots");
  REQUIRE(files.size() == 2);
  const std::string svg = read_text_file(files[0]);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
  // The plotted points are the report's curve, whose fluctuation is what curve_stats measured.
  CHECK(render_curve_svg(r.sequences[0]) == svg);

  // Only enhanced sequences are scored; each needs its compressed and truth counterparts.
  fs::remove_all(root / "enhanced" / "seq1");
  const EvalReport subset = evaluate_dirs(root / "compressed", root / "enhanced", root / "truth");
  REQUIRE(subset.sequences.size() == 1);
  CHECK(subset.sequences[0].name == r.sequences[0].name);
  fs::remove_all(root / "truth" / "seq0");
  CHECK_THROWS_AS(evaluate_dirs(root / "compressed", root / "enhanced", root / "truth"), DataError);
}

}  // TEST_SUITE
