// Copyright 2026 The fergrad Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Talks to the library only through fergrad.h.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fergrad.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string arch = "base";
  std::string variant = "plain";
  bool stl = false;
  bool shared = false;
  int classes = 0;  // 0: taken from the dataset
  double lr = 1e-3;
  double bn_momentum = 0.99;
  int64_t batch = 32;
  int64_t epochs = 30;
  uint64_t seed = 0;
  std::string dataset = "ferplus";
  std::string data_dir;
  std::string out;
  std::string model;
  std::string family = "bars";
  int64_t synthetic_size = 400;
  int64_t repeat = 4;
  int seeds = 20;
  double tolerance = 1e-4;
};

// Owning wrappers so early returns do not leak C handles.
struct Str {
  fg_string* p = nullptr;
  ~Str() { fg_string_destroy(p); }
  const char* c_str() const { return fg_string_data(p); }
};
struct Dataset {
  fg_dataset* p = nullptr;
  ~Dataset() { fg_dataset_destroy(p); }
};
struct ModelHandle {
  fg_model* p = nullptr;
  ~ModelHandle() { fg_model_destroy(p); }
};
struct Report {
  fg_report* p = nullptr;
  ~Report() { fg_report_destroy(p); }
};

class Failure {
 public:
  explicit Failure(int code) : code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

CLI::App* g_app = nullptr;

void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n\n" << g_app->help();
  throw Failure(kExitUsage);
}

void ok(fg_status st) {
  if (st == FG_OK) return;
  std::cerr << "error (" << fg_status_name(st) << "): " << fg_last_error() << "\n";
  throw Failure(st == FG_INVALID_ARGUMENT ? kExitUsage : kExitValidation);
}

void add_model_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--arch", o.arch, "Architecture")
      ->check(CLI::IsMember({"base", "vgg13"}))
      ->capture_default_str();
  cmd->add_option("--variant", o.variant, "Input variant")
      ->check(CLI::IsMember({"plain", "laplacian-concat", "sobel-concat", "laplacian-parallel",
                             "sobel-parallel", "triple-stream"}))
      ->capture_default_str();
  cmd->add_flag("--stl", o.stl, "Prepend a spatial transformer to each stream");
}

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.dataset, "Dataset")
      ->check(CLI::IsMember({"ferplus", "kdef", "synthetic"}))
      ->capture_default_str();
  cmd->add_option("--data-dir", o.data_dir,
                  "FERplus: directory with fer2013.csv and fer2013new.csv; KDEF: image root");
  cmd->add_option("--seed", o.seed, "Seed")->capture_default_str();
  cmd->add_option("--synthetic-family", o.family, "Synthetic set family")
      ->check(CLI::IsMember({"bars", "ramps"}))
      ->capture_default_str();
  cmd->add_option("--synthetic-size", o.synthetic_size,
                  "Synthetic training images per class (validation and test get a quarter)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_train_options(CLI::App* cmd, Options& o) {
  add_model_options(cmd, o);
  add_data_options(cmd, o);
  cmd->add_flag("--shared-backbone", o.shared, "Parallel streams share one backbone");
  cmd->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--bn-momentum", o.bn_momentum, "Batch-norm running-statistics decay")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--batch", o.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "Epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
}

void load_dataset(const Options& o, Dataset& ds) {
  if (o.dataset == "synthetic") {
    const int64_t held = o.synthetic_size / 4 > 0 ? o.synthetic_size / 4 : 1;
    ok(fg_dataset_synthetic(o.family.c_str(), o.synthetic_size, held, held, o.seed, &ds.p));
    return;
  }
  if (o.data_dir.empty()) usage_error("--data-dir is required for --dataset " + o.dataset);
  ok(fg_dataset_load(o.dataset.c_str(), o.data_dir.c_str(), o.seed, &ds.p));
}

fg_train_config train_config(const Options& o) {
  fg_train_config cfg;
  fg_train_config_defaults(&cfg);
  cfg.arch = o.arch.c_str();
  cfg.variant = o.variant.c_str();
  cfg.stl = o.stl;
  cfg.shared_backbone = o.shared;
  cfg.lr = o.lr;
  cfg.bn_momentum = o.bn_momentum;
  cfg.batch = o.batch;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.dataset = o.dataset.c_str();
  cfg.data_dir = o.data_dir.empty() ? nullptr : o.data_dir.c_str();
  cfg.checkpoint = o.out.empty() ? nullptr : o.out.c_str();
  return cfg;
}

int cmd_count_params(const Options& o) {
  Str table;
  int64_t total = 0;
  ok(fg_count_params(o.arch.c_str(), o.variant.c_str(), o.stl, o.classes > 0 ? o.classes : 8,
                     &table.p, &total));
  std::fputs(table.c_str(), stdout);
  return kExitOk;
}

int cmd_audit() {
  Str report;
  int mismatches = 0;
  ok(fg_audit_base(&report.p, &mismatches));
  std::fputs(report.c_str(), stdout);
  std::printf("audit %s: %d of 17 values differ\n", mismatches ? "FAILED" : "passed", mismatches);
  return mismatches ? kExitValidation : kExitOk;
}

int cmd_gradcheck(const Options& o) {
  Str report;
  int failures = 0;
  ok(fg_gradcheck(o.seeds, o.tolerance, &report.p, &failures));
  std::fputs(report.c_str(), stdout);
  std::printf("gradcheck %s: %d op(s) failed\n", failures ? "FAILED" : "passed", failures);
  return failures ? kExitValidation : kExitOk;
}

int cmd_preprocess(const Options& o) {
  Dataset ds;
  load_dataset(o, ds);
  Str summary;
  ok(fg_dataset_summary(ds.p, &summary.p));
  std::fputs(summary.c_str(), stdout);
  ok(fg_dataset_preprocess(ds.p, o.variant.c_str(), o.out.c_str()));
  std::printf("wrote %s inputs to %s\n", o.variant.c_str(), o.out.c_str());
  return kExitOk;
}

int cmd_train(const Options& o) {
  Dataset ds;
  load_dataset(o, ds);
  const auto cfg = train_config(o);
  ModelHandle model;
  Str history;
  ok(fg_train(&cfg, ds.p, &model.p, &history.p));
  std::fputs(history.c_str(), stdout);
  double acc = 0;
  Str confusion;
  ok(fg_evaluate(model.p, ds.p, &acc, &confusion.p));
  std::printf("0 final test accuracy %.4f\n", acc);
  if (!o.out.empty()) std::printf("checkpoint %s.bin %s.manifest\n", o.out.c_str(), o.out.c_str());
  return kExitOk;
}

int cmd_eval(const Options& o) {
  ModelHandle model;
  ok(fg_model_load(o.model.c_str(), &model.p));
  Dataset ds;
  load_dataset(o, ds);
  double acc = 0;
  Str confusion;
  ok(fg_evaluate(model.p, ds.p, &acc, &confusion.p));
  std::printf("accuracy %.4f\nconfusion (rows true, columns predicted)\n%s", acc,
              confusion.c_str());
  return kExitOk;
}

int cmd_runs(const Options& o) {
  Dataset ds;
  load_dataset(o, ds);
  auto cfg = train_config(o);
  cfg.checkpoint = nullptr;
  Report rep;
  ok(fg_multi_run(&cfg, ds.p, o.repeat, &rep.p));
  Str table;
  ok(fg_report_table(rep.p, &table.p));
  std::fputs(table.c_str(), stdout);
  if (!o.out.empty()) ok(fg_report_write(rep.p, o.out.c_str()));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fergrad: derivative-image augmented facial expression recognition kit"};
  g_app = &app;
  app.require_subcommand(1);
  Options o;

  auto* count = app.add_subcommand("count-params", "Print the per-layer parameter ledger");
  add_model_options(count, o);
  count->add_option("--classes", o.classes, "Classifier width (default 8)");
  auto* audit = app.add_subcommand("audit", "Check the base ledger against its reference values");
  auto* grad = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  grad->add_option("--seeds", o.seeds, "Seeds per op")->check(CLI::PositiveNumber)->capture_default_str();
  grad->add_option("--tolerance", o.tolerance, "Maximum relative error")->capture_default_str();
  auto* pre = app.add_subcommand("preprocess", "Write variant inputs to disk");
  add_data_options(pre, o);
  pre->add_option("--variant", o.variant, "Input variant")->capture_default_str();
  pre->add_option("--out", o.out, "Output directory")->required();
  auto* trn = app.add_subcommand("train", "Train one model and report test accuracy");
  add_train_options(trn, o);
  trn->add_option("--out", o.out, "Checkpoint stem (writes <stem>.bin and <stem>.manifest)");
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_data_options(ev, o);
  ev->add_option("--model", o.model, "Checkpoint stem")->required();
  auto* runs = app.add_subcommand("runs", "Repeat training and report avg/max/min accuracy");
  add_train_options(runs, o);
  runs->add_option("--repeat", o.repeat, "Number of runs")->check(CLI::PositiveNumber)->capture_default_str();
  runs->add_option("--out", o.out, "Record file (one 'run epoch split metric value' per line)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*count) return cmd_count_params(o);
    if (*audit) return cmd_audit();
    if (*grad) return cmd_gradcheck(o);
    if (*pre) return cmd_preprocess(o);
    if (*trn) return cmd_train(o);
    if (*ev) return cmd_eval(o);
    if (*runs) return cmd_runs(o);
  } catch (const Failure& f) {
    return f.code();
  }
  return kExitUsage;
}
