// mlcf: command-line front end for data generation, training, the codec and
// experiment sweeps.  Exit codes: 0 ok, 2 configuration error, 3 numeric
// failure, 1 anything else (I/O, format).

#include "mlcf/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace mlcf;
namespace fs = std::filesystem;

struct Settings {
  std::string config_file;
  std::vector<std::string> overrides;             // key=value
  std::map<std::string, std::string> flag_values;  // --key value
};

void add_setting_flags(CLI::App* app, Settings& s) {
  app->add_option("-c,--config", s.config_file, "key = value configuration file");
  app->add_option("--set", s.overrides, "override a configuration key (key=value), repeatable");
  for (const auto& key : harness::setting_keys())
    app->add_option_function<std::string>("--" + key, [&s, key](const std::string& v) { s.flag_values[key] = v; },
                                          "configuration key '" + key + "'");
}

harness::ExperimentConfig resolve(const Settings& s) {
  harness::ExperimentConfig c;
  if (!s.config_file.empty()) c = harness::load_config(s.config_file, c);
  for (const auto& kv : s.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    harness::apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : s.flag_values) harness::apply_setting(c, k, v);
  return c;
}

CodecOptions codec_options(const harness::ExperimentConfig& c) { return {c.eval_k, c.eval_lambda}; }

int run(int argc, char** argv) {
  CLI::App app{"Manifold-learning CSI feedback: landmark training, compression and evaluation"};
  app.require_subcommand(1);

  Settings gen_s, train_s, eval_s, sweep_s, codec_s;
  std::string gen_out, gen_test_out;
  auto* gen = app.add_subcommand("gen-data", "write the training set (and optionally the test set) as MLCF matrices");
  add_setting_flags(gen, gen_s);
  gen->add_option("-o,--out", gen_out, "training matrix file (2N_f x N)")->required();
  gen->add_option("--test-out", gen_test_out, "test matrix file (2N_f x test_size*N_t)");

  auto* train = app.add_subcommand("train", "learn bundles for every gamma under output_dir");
  add_setting_flags(train, train_s);

  std::string eval_bundles, eval_csv;
  auto* eval = app.add_subcommand("eval", "evaluate trained bundles on a fresh test set");
  add_setting_flags(eval, eval_s);
  eval->add_option("--bundles", eval_bundles, "directory written by train (default: output_dir)");
  eval->add_option("--csv", eval_csv, "result file (default: <bundles>/eval.csv)");

  auto* sweep = app.add_subcommand("sweep", "train and evaluate every sweep point; resumable");
  add_setting_flags(sweep, sweep_s);

  std::string bundle_dir, input_path, output_path, recon_path;
  int frame_bits = 0;
  auto* comp = app.add_subcommand("compress", "CSI matrix file -> embedding matrix file");
  add_setting_flags(comp, codec_s);
  comp->add_option("-b,--bundle", bundle_dir, "bundle directory")->required();
  comp->add_option("-i,--input", input_path, "real-stacked CSI (2N_f x N_t)")->required();
  comp->add_option("-o,--out", output_path, "embedding file")->required();
  comp->add_option("--frame-bits", frame_bits, "also write a packed feedback frame (<out>.frame) at this bit width");

  auto* rec = app.add_subcommand("reconstruct", "embedding matrix file (or feedback frame) -> CSI matrix file");
  add_setting_flags(rec, codec_s);
  rec->add_option("-b,--bundle", bundle_dir, "bundle directory")->required();
  rec->add_option("-i,--input", input_path, "embedding file (d x N_t) or .frame")->required();
  rec->add_option("-o,--out", output_path, "reconstructed CSI file")->required();

  auto* codec = app.add_subcommand("codec", "compress then reconstruct a CSI file");
  add_setting_flags(codec, codec_s);
  codec->add_option("-b,--bundle", bundle_dir, "bundle directory")->required();
  codec->add_option("-i,--input", input_path, "real-stacked CSI (2N_f x N_t)")->required();
  codec->add_option("-e,--embedding-out", output_path, "embedding file")->required();
  codec->add_option("-r,--reconstruction-out", recon_path, "reconstructed CSI file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    const auto c = resolve(gen_s);
    c.validate();
    io::save(gen_out, harness::training_set(c).columns);
    if (!gen_test_out.empty()) {
      const auto test = harness::test_set(c);
      Matrix all(2 * c.channel.n_freq, static_cast<Index>(test.size()) * c.channel.n_tx);
      for (std::size_t s = 0; s < test.size(); ++s)
        all.middleCols(static_cast<Index>(s) * c.channel.n_tx, c.channel.n_tx) = test[s];
      io::save(gen_test_out, all);
    }
    return 0;
  }
  if (train->parsed()) {
    const auto c = resolve(train_s);
    const fs::path root = harness::resolve_output(c.output_dir);
    const auto summary = harness::run_train(c, root, [](const TraceEntry& e) {
      std::cerr << "iter " << e.iteration << " total " << e.terms.total << "\n";
    });
    for (const auto& [tag, hash] : summary.bundle_hashes) std::cout << (root / tag).string() << " " << hash << "\n";
    return 0;
  }
  if (eval->parsed()) {
    const auto c = resolve(eval_s);
    const fs::path root = eval_bundles.empty() ? harness::resolve_output(c.output_dir) : fs::path(eval_bundles);
    const auto records = harness::run_eval(c, root);
    const fs::path csv = eval_csv.empty() ? root / "eval.csv" : fs::path(eval_csv);
    io::write_text_atomic(csv, harness::records_csv(records));
    std::cout << harness::records_csv(records);
    return 0;
  }
  if (sweep->parsed()) {
    const auto c = resolve(sweep_s);
    const auto s = harness::run_sweep(c, harness::resolve_output(c.output_dir),
                                      [](const std::string& msg) { std::cerr << msg << "\n"; });
    std::cout << s.points_run << " point(s) run, " << s.points_skipped << " already complete; results in "
              << s.results_csv.string() << "\n";
    return 0;
  }

  const auto c = resolve(codec_s);
  const CodecBundle bundle = load_bundle(bundle_dir);
  if (comp->parsed() || codec->parsed()) {
    const Matrix csi = io::load_real(input_path);
    const Matrix y = compress(csi, bundle, codec_options(c)).output;
    io::save(output_path, y);
    if (comp->parsed() && frame_bits > 0) {
      const auto q = harness::quantizer_for(bundle, io::load_real(fs::path(bundle_dir) / "embedding_range.mlcf"),
                                            frame_bits);
      const auto frame = quant::encode_frame(quant::quantize(y, q), frame_bits);
      io::write_bytes_atomic(output_path + ".frame", frame.data(), frame.size());
    }
    if (codec->parsed()) io::save(recon_path, reconstruct(y, bundle, codec_options(c)).output);
    return 0;
  }
  // reconstruct
  Matrix y;
  if (fs::path(input_path).extension() == ".frame") {
    const auto frame = quant::decode_frame(io::read_bytes(input_path));
    const auto q = harness::quantizer_for(bundle, io::load_real(fs::path(bundle_dir) / "embedding_range.mlcf"),
                                          frame.bits);
    y = quant::dequantize(frame.codes, q);
  } else {
    y = io::load_real(input_path);
  }
  io::save(output_path, reconstruct(y, bundle, codec_options(c)).output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mlcf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mlcf::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mlcf::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
