// Command-line front end: dataset generation, training, preprocessing,
// evaluation and parameter accounting.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fw/deltanet.hpp"
#include "fw/error.hpp"
#include "fw/harness.hpp"
#include "fw/parallel.hpp"
#include "fw/preproc.hpp"
#include "fw/weights_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace fw;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kFormat = 4, kInvalid = 5, kInternal = 70 };

struct Common {
  std::uint64_t seed = 0;
  std::string preset = "toy";
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> batch_size;
  std::string optimizer = "adam";
  std::string out;
  std::string data;
  int workers = 1;
};

void add_common(CLI::App* cmd, Common& c, bool training) {
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--preset", c.preset, "toy or paper-scale")->check(CLI::IsMember({"toy", "paper-scale"}));
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  if (training) {
    cmd->add_option("--epochs", c.epochs, "training epochs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr", c.lr, "learning rate")->check(CLI::NonNegativeNumber);
    cmd->add_option("--batch-size", c.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--optimizer", c.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  }
}

TrainOptions training_options(const Common& c, TrainOptions base) {
  if (c.epochs) base.epochs = *c.epochs;
  if (c.batch_size) base.batch_size = *c.batch_size;
  base.optimizer.kind = parse_optimizer_kind(c.optimizer);
  if (c.lr) base.optimizer.lr = *c.lr;
  base.seed = c.seed;
  return base;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void require_dataset(const std::string& data) {
  if (data.empty()) throw InvalidConfig("--data is required");
}

// Brings a mask sample to the U-Net input resolution.
MaskSample fit(const MaskSample& s, int size) {
  return {resize_bilinear(s.image, size), resize_nearest(s.mask, size, size)};
}

void fit_all(DataSplit<MaskSample>& d, int size) {
  for (auto* split : {&d.train, &d.val, &d.test}) {
    for (auto& s : *split) s = fit(s, size);
  }
}

// Classifier inputs: either the U-Net crop pipeline or a plain resize.
std::vector<PairSample> prepare_pairs(const std::vector<PairSample>& raw, int size,
                                      const UNet<float>* unet, std::size_t& skipped) {
  std::vector<PairSample> out;
  out.reserve(raw.size());
  for (const PairSample& p : raw) {
    if (unet) {
      auto pre = preprocess_pair(p.before, p.after, *unet, size);
      if (!pre) {
        ++skipped;
        continue;
      }
      out.push_back({std::move(pre->before), std::move(pre->after), p.label, p.bin_id, p.seq});
    } else {
      out.push_back({resize_bilinear(p.before, size), resize_bilinear(p.after, size), p.label,
                     p.bin_id, p.seq});
    }
  }
  return out;
}

DataSplit<PairSample> prepare_split(const DataSplit<PairSample>& raw, int size,
                                    const UNet<float>* unet, std::size_t& skipped) {
  return {prepare_pairs(raw.train, size, unet, skipped), prepare_pairs(raw.val, size, unet, skipped),
          prepare_pairs(raw.test, size, unet, skipped)};
}

void check_classes(const DatasetManifest& m, const DeltaNetConfig& config) {
  if (m.class_count != config.num_classes) {
    throw InvalidConfig("dataset has " + std::to_string(m.class_count) +
                        " classes but the classifier preset expects " +
                        std::to_string(config.num_classes));
  }
}

MetricsReport classifier_report(const DeltaNetModel<float>& model,
                                const std::vector<PairSample>& samples, const char* split) {
  MetricsReport r;
  r.task = "classification";
  r.evaluated_split = split;
  r.evaluated_samples = samples.size();
  if (samples.empty()) return r;
  const ClassifierEvaluation eval = evaluate_classifier(model, samples);
  std::vector<int> labels;
  for (const auto& s : samples) labels.push_back(s.label);
  r.confusion = confusion_matrix(eval.predictions, labels, model.config.num_classes);
  r.test_accuracy = eval.accuracy;
  r.test_loss = eval.loss;
  return r;
}

MetricsReport unet_report(const UNet<float>& model, const std::vector<MaskSample>& samples,
                          const char* split) {
  MetricsReport r;
  r.task = "segmentation";
  r.evaluated_split = split;
  r.evaluated_samples = samples.size();
  if (samples.empty()) return r;
  const SegEvaluation eval = evaluate_unet(model, samples);
  r.test_accuracy = eval.pixel_accuracy;
  r.test_loss = eval.loss;
  return r;
}

template <typename Sample>
const std::vector<Sample>& pick(const DataSplit<Sample>& d, Split s) {
  return s == Split::Train ? d.train : s == Split::Val ? d.val : d.test;
}

void print_line(const std::string& s) { std::cout << s << "\n"; }

int run_gen_data(const Common& c, std::optional<int> episodes, std::optional<int> deposits,
                 std::optional<int> classes, std::optional<int> image_size,
                 std::optional<double> train_fraction, std::optional<double> val_fraction) {
  if (c.out.empty()) throw InvalidConfig("--out is required");
  DatasetSpec spec = resolve_preset(c.preset).data;
  spec.seed = c.seed;
  if (episodes) spec.num_episodes = *episodes;
  if (deposits) spec.deposits_per_episode = *deposits;
  if (classes) spec.class_count = *classes;
  if (image_size) spec.image_size = *image_size;
  if (train_fraction) spec.train_fraction = *train_fraction;
  if (val_fraction) spec.val_fraction = *val_fraction;
  const DatasetManifest m = gen_dataset(spec, c.out);
  print_line("episodes " + std::to_string(m.episodes.size()) + " pairs " +
             std::to_string(m.pair_count()) + " train " + std::to_string(m.pair_count(Split::Train)) +
             " val " + std::to_string(m.pair_count(Split::Val)) + " test " +
             std::to_string(m.pair_count(Split::Test)));
  return kOk;
}

int run_train_unet(const Common& c) {
  require_dataset(c.data);
  if (c.out.empty()) throw InvalidConfig("--out is required");
  const Preset preset = resolve_preset(c.preset);
  MaskDataset data = load_masks(c.data);
  fit_all(data.masks, preset.unet.input_size);
  const UNetTrainResult result =
      train_unet(data.masks, preset.unet, training_options(c, preset.unet_training));
  ensure_dir(c.out);
  save_checkpoint(fs::path(c.out) / "unet.fwwt", result.model);
  MetricsReport report = unet_report(result.model, data.masks.test, "test");
  report.epochs = result.history;
  write_text_file(fs::path(c.out) / "metrics.json", metrics_to_json(report));
  print_line("test_pixel_accuracy " + std::to_string(result.test_accuracy));
  return kOk;
}

int run_train_classifier(const Common& c, const std::string& unet_path,
                         const std::string& frozen_path) {
  require_dataset(c.data);
  if (c.out.empty()) throw InvalidConfig("--out is required");
  const Preset preset = resolve_preset(c.preset);
  const PairDataset raw = load_pairs(c.data);
  check_classes(raw.manifest, preset.classifier);
  std::optional<UNet<float>> unet;
  if (!unet_path.empty()) unet = load_unet_checkpoint(unet_path, preset.unet);
  std::size_t skipped = 0;
  const DataSplit<PairSample> data =
      prepare_split(raw.pairs, preset.classifier.input_size, unet ? &*unet : nullptr, skipped);

  std::optional<ParamSet<float>> frozen;
  if (!frozen_path.empty()) frozen = load_weights(frozen_path);
  DeltaNetModel<float> model = build_deltanet(preset.classifier, frozen, c.seed);
  const ClassifierTrainResult result =
      train_classifier(data, std::move(model), training_options(c, preset.classifier_training));

  ensure_dir(c.out);
  save_checkpoint(fs::path(c.out) / "classifier.fwwt", result.model);
  const bool has_test = !data.test.empty();
  MetricsReport report =
      classifier_report(result.model, has_test ? data.test : data.val, has_test ? "test" : "val");
  report.epochs = result.history;
  write_text_file(fs::path(c.out) / "metrics.json", metrics_to_json(report));
  std::string line = "val_accuracy " +
                     std::to_string(result.history.empty() ? 0.0 : result.history.back().val_accuracy);
  if (report.test_accuracy) line += " " + report.evaluated_split + "_accuracy " + std::to_string(*report.test_accuracy);
  if (skipped) line += " skipped_pairs " + std::to_string(skipped);
  print_line(line);
  return kOk;
}

int run_preprocess(const Common& c, const std::string& unet_path, const std::string& split_name,
                   int limit) {
  require_dataset(c.data);
  if (c.out.empty()) throw InvalidConfig("--out is required");
  if (unet_path.empty()) throw InvalidConfig("--unet is required");
  const Preset preset = resolve_preset(c.preset);
  const UNet<float> unet = load_unet_checkpoint(unet_path, preset.unet);
  const PairDataset raw = load_pairs(c.data);
  const auto& pairs = pick(raw.pairs, parse_split(split_name));

  ensure_dir(fs::path(c.out) / "pairs");
  nlohmann::json index = nlohmann::json::array();
  int written = 0, skipped = 0;
  for (const PairSample& p : pairs) {
    if (limit >= 0 && written + skipped >= limit) break;
    const auto pre = preprocess_pair(p.before, p.after, unet, preset.classifier.input_size);
    nlohmann::json entry = {{"bin_id", p.bin_id}, {"seq", p.seq}, {"label", p.label}};
    if (!pre) {
      entry["file"] = nullptr;
      ++skipped;
    } else {
      char name[64];
      std::snprintf(name, sizeof(name), "pairs/bin_%06d_seq_%03d.fwds", p.bin_id, p.seq);
      std::ostringstream buf;
      write_sample(buf, pre->before);
      write_sample(buf, pre->after);
      write_text_file(fs::path(c.out) / name, buf.str());
      entry["file"] = name;
      entry["bbox"] = {{"row", pre->bbox.row}, {"col", pre->bbox.col}, {"side", pre->bbox.side}};
      ++written;
    }
    index.push_back(entry);
  }
  write_text_file(fs::path(c.out) / "index.json", index.dump(2) + "\n");
  print_line("written " + std::to_string(written) + " skipped " + std::to_string(skipped));
  return kOk;
}

int run_eval(const Common& c, const std::string& task, const std::string& checkpoint,
             const std::string& unet_path, const std::string& split_name) {
  require_dataset(c.data);
  if (checkpoint.empty()) throw InvalidConfig("--checkpoint is required");
  const Preset preset = resolve_preset(c.preset);
  const Split split = parse_split(split_name);
  MetricsReport report;
  if (task == "unet") {
    const UNet<float> model = load_unet_checkpoint(checkpoint, preset.unet);
    MaskDataset data = load_masks(c.data);
    fit_all(data.masks, preset.unet.input_size);
    report = unet_report(model, pick(data.masks, split), to_string(split));
  } else {
    const DeltaNetModel<float> model = load_classifier_checkpoint(checkpoint, preset.classifier);
    const PairDataset raw = load_pairs(c.data);
    check_classes(raw.manifest, preset.classifier);
    std::optional<UNet<float>> unet;
    if (!unet_path.empty()) unet = load_unet_checkpoint(unet_path, preset.unet);
    std::size_t skipped = 0;
    const auto samples = prepare_pairs(pick(raw.pairs, split), preset.classifier.input_size,
                                       unet ? &*unet : nullptr, skipped);
    report = classifier_report(model, samples, to_string(split));
  }
  const std::string text = metrics_to_json(report);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(c.out, text);
    print_line("accuracy " + std::to_string(report.test_accuracy.value_or(0.0)));
  }
  return kOk;
}

int run_params(const Common& c) {
  const Preset preset = resolve_preset(c.preset);
  const ParamCount d = deltanet_param_count(preset.classifier);
  const ParamCount u = param_count(build_unet(preset.unet, c.seed).params);
  print_line("preset " + preset.name);
  print_line("classifier total " + std::to_string(d.total) + " trainable " +
             std::to_string(d.trainable) + " frozen " + std::to_string(d.frozen));
  print_line("unet total " + std::to_string(u.total) + " trainable " + std::to_string(u.trainable) +
             " frozen " + std::to_string(u.frozen) + " conv_layers " +
             std::to_string(preset.unet.conv_layer_count()));
  return kOk;
}

int fail(int code, const char* kind, const std::string& message) {
  std::string one_line = message;
  for (char& ch : one_line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error: " << kind << ": " << one_line << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Food-waste segmentation and before/after classification toolkit"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen, c, false);
  gen->add_option("--out", c.out, "output directory")->required();
  std::optional<int> episodes, deposits, classes, image_size;
  std::optional<double> train_fraction, val_fraction;
  gen->add_option("--episodes", episodes, "number of bins")->check(CLI::PositiveNumber);
  gen->add_option("--deposits", deposits, "deposits per bin")->check(CLI::PositiveNumber);
  gen->add_option("--classes", classes, "number of food classes")->check(CLI::Range(2, kMaxClasses));
  gen->add_option("--image-size", image_size, "image side in pixels")->check(CLI::PositiveNumber);
  gen->add_option("--train-fraction", train_fraction, "share of bins for training")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--val-fraction", val_fraction, "share of bins for validation")->check(CLI::Range(0.0, 1.0));

  auto* train_unet_cmd = app.add_subcommand("train-unet", "train the segmentation network");
  add_common(train_unet_cmd, c, true);
  train_unet_cmd->add_option("--data", c.data, "dataset directory")->required();
  train_unet_cmd->add_option("--out", c.out, "output directory")->required();

  std::string unet_path, frozen_path;
  auto* train_cls = app.add_subcommand("train-classifier", "train the before/after classifier");
  add_common(train_cls, c, true);
  train_cls->add_option("--data", c.data, "dataset directory")->required();
  train_cls->add_option("--out", c.out, "output directory")->required();
  train_cls->add_option("--unet", unet_path, "U-Net checkpoint; crops pairs around detected food");
  train_cls->add_option("--frozen-weights", frozen_path, "FWWT file with frozen/ feature weights");

  std::string split_name = "test";
  int limit = -1;
  auto* pre = app.add_subcommand("preprocess", "write cropped pairs for inspection");
  add_common(pre, c, false);
  pre->add_option("--data", c.data, "dataset directory")->required();
  pre->add_option("--out", c.out, "output directory")->required();
  pre->add_option("--unet", unet_path, "U-Net checkpoint")->required();
  pre->add_option("--split", split_name, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  pre->add_option("--limit", limit, "maximum number of pairs");

  std::string task = "classifier", checkpoint;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, c, false);
  eval->add_option("--data", c.data, "dataset directory")->required();
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval->add_option("--task", task, "classifier or unet")->check(CLI::IsMember({"classifier", "unet"}));
  eval->add_option("--unet", unet_path, "U-Net checkpoint for classifier crops");
  eval->add_option("--split", split_name, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", c.out, "metrics file (default: stdout)");

  auto* params = app.add_subcommand("params", "print parameter counts for a preset");
  add_common(params, c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    set_num_workers(c.workers);
    if (*gen) return run_gen_data(c, episodes, deposits, classes, image_size, train_fraction, val_fraction);
    if (*train_unet_cmd) return run_train_unet(c);
    if (*train_cls) return run_train_classifier(c, unet_path, frozen_path);
    if (*pre) return run_preprocess(c, unet_path, split_name, limit);
    if (*eval) return run_eval(c, task, checkpoint, unet_path, split_name);
    if (*params) return run_params(c);
  } catch (const IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const FormatError& e) {
    return fail(kFormat, "format", e.what());
  } catch (const InvalidConfig& e) {
    return fail(kInvalid, "config", e.what());
  } catch (const InvalidInput& e) {
    return fail(kInvalid, "input", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
  return fail(kUsage, "usage", "no command given");
}
