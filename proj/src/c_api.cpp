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

#include "fergrad.h"

#include <array>
#include <cstdio>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "fergrad/data.hpp"
#include "fergrad/gradcheck_suite.hpp"
#include "fergrad/model.hpp"
#include "fergrad/serialize.hpp"
#include "fergrad/train.hpp"

struct fg_model {
  fergrad::Model<float> model;
};
struct fg_dataset {
  fergrad::DatasetSplit split;
  std::string kind;
};
struct fg_report {
  fergrad::RunReport report;
};
struct fg_string {
  std::string text;
};

namespace {

using namespace fergrad;

thread_local std::string g_last_error;

constexpr std::array<std::int64_t, 16> kReferenceRows = {
    480, 13856, 14016, 12480, 8208, 9360, 14016, 14016,
    20160, 52608, 52608, 52608, 77184, 301824, 0, 2048};
constexpr std::int64_t kReferenceTotal = 645472;

fg_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return FG_INVALID_ARGUMENT;
    case ErrorCode::kShapeMismatch: return FG_SHAPE_MISMATCH;
    case ErrorCode::kIo: return FG_IO;
    case ErrorCode::kFormat: return FG_FORMAT;
    case ErrorCode::kIntegrity: return FG_INTEGRITY;
    case ErrorCode::kNumeric: return FG_NUMERIC;
    case ErrorCode::kState: return FG_STATE;
  }
  return FG_INTERNAL;
}

template <typename F>
fg_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FG_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FG_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

fg_string* make_string(std::string s) { return new fg_string{std::move(s)}; }

TrainConfig convert(const fg_train_config* c) {
  need(c, "config");
  TrainConfig cfg;
  if (c->arch) cfg.arch = c->arch;
  if (c->variant) cfg.variant = parse_variant(c->variant);
  cfg.stl = c->stl != 0;
  cfg.shared_backbone = c->shared_backbone != 0;
  cfg.adam = {c->lr, c->beta1, c->beta2, c->eps};
  cfg.bn_momentum = c->bn_momentum;
  cfg.batch = c->batch;
  cfg.epochs = c->epochs;
  cfg.seed = c->seed;
  if (c->dataset) cfg.dataset = c->dataset;
  if (c->data_dir) cfg.data_dir = c->data_dir;
  if (c->checkpoint) cfg.checkpoint = c->checkpoint;
  cfg.validate();
  return cfg;
}

std::string format_history(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  char line[96];
  for (const auto& e : history) {
    std::snprintf(line, sizeof line, "0 %lld train loss %.6f\n", static_cast<long long>(e.epoch),
                  e.train_loss);
    os << line;
    std::snprintf(line, sizeof line, "0 %lld train accuracy %.4f\n",
                  static_cast<long long>(e.epoch), e.train_accuracy);
    os << line;
    if (e.val_accuracy >= 0) {
      std::snprintf(line, sizeof line, "0 %lld val accuracy %.4f\n",
                    static_cast<long long>(e.epoch), e.val_accuracy);
      os << line;
    }
  }
  return os.str();
}

}  // namespace

extern "C" {

const char* fg_last_error(void) { return g_last_error.c_str(); }

const char* fg_status_name(fg_status status) {
  switch (status) {
    case FG_OK: return "ok";
    case FG_INVALID_ARGUMENT: return "invalid argument";
    case FG_SHAPE_MISMATCH: return "shape mismatch";
    case FG_IO: return "i/o error";
    case FG_FORMAT: return "format error";
    case FG_INTEGRITY: return "integrity error";
    case FG_NUMERIC: return "numeric error";
    case FG_STATE: return "state error";
    case FG_INTERNAL: return "internal error";
  }
  return "unknown";
}

void fg_train_config_defaults(fg_train_config* cfg) {
  if (!cfg) return;
  *cfg = fg_train_config{"base", "plain", 0, 0, 1e-3, 0.9, 0.999, 1e-8, 0.99, 32, 30, 0,
                         "ferplus", nullptr, nullptr};
}

const char* fg_string_data(const fg_string* s) { return s ? s->text.c_str() : ""; }
void fg_string_destroy(fg_string* s) { delete s; }

fg_status fg_count_params(const char* arch, const char* variant, int stl, int classes,
                          fg_string** table, int64_t* total) {
  return guarded([&] {
    need(arch, "arch");
    need(table, "table");
    auto spec = arch_by_name(arch, variant ? parse_variant(variant) : Variant::kPlain, classes);
    spec.stl_enabled = stl != 0;
    const auto ledger = count_params(spec);
    *table = make_string(ledger.format());
    if (total) *total = ledger.total;
  });
}

fg_status fg_audit_base(fg_string** report, int* mismatches) {
  return guarded([&] {
    need(report, "report");
    need(mismatches, "mismatches");
    const auto ledger = count_params(base_spec());
    std::ostringstream os;
    int bad = 0;
    char line[128];
    for (std::size_t i = 0; i < kReferenceRows.size(); ++i) {
      const auto got = i < ledger.rows.size() ? ledger.rows[i].count : -1;
      const bool ok = got == kReferenceRows[i];
      bad += !ok;
      std::snprintf(line, sizeof line, "row %2zu %-12s expected %7lld got %7lld %s\n", i + 1,
                    i < ledger.rows.size() ? ledger.rows[i].kind.c_str() : "-",
                    static_cast<long long>(kReferenceRows[i]), static_cast<long long>(got),
                    ok ? "ok" : "MISMATCH");
      os << line;
    }
    if (ledger.rows.size() != kReferenceRows.size()) {
      ++bad;
      os << "row count " << ledger.rows.size() << " differs from " << kReferenceRows.size() << "\n";
    }
    const bool ok = ledger.total == kReferenceTotal;
    bad += !ok;
    std::snprintf(line, sizeof line, "total  expected %lld got %lld %s\n",
                  static_cast<long long>(kReferenceTotal), static_cast<long long>(ledger.total),
                  ok ? "ok" : "MISMATCH");
    os << line;
    *report = make_string(os.str());
    *mismatches = bad;
  });
}

fg_status fg_gradcheck(int seeds, double tolerance, fg_string** report, int* failures) {
  return guarded([&] {
    need(report, "report");
    need(failures, "failures");
    check(seeds >= 1 && tolerance > 0, ErrorCode::kInvalidArgument,
          "gradcheck: seeds must be >= 1 and tolerance > 0");
    std::ostringstream os;
    int bad = 0;
    char line[128];
    for (const auto& r : run_gradcheck_suite(seeds, tolerance)) {
      bad += !r.pass;
      std::snprintf(line, sizeof line, "%-24s seeds %3d max_rel_error %.3e %s\n", r.op.c_str(),
                    r.seeds, r.max_rel_error, r.pass ? "PASS" : "FAIL");
      os << line;
    }
    *report = make_string(os.str());
    *failures = bad;
  });
}

fg_status fg_dataset_load(const char* kind, const char* data_dir, uint64_t seed, fg_dataset** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    const std::string k = kind;
    auto ds = std::make_unique<fg_dataset>();
    ds->kind = k;
    if (k == "ferplus") {
      need(data_dir, "data_dir");
      const std::filesystem::path dir(data_dir);
      ds->split = load_ferplus(dir / "fer2013.csv", dir / "fer2013new.csv");
    } else if (k == "kdef") {
      need(data_dir, "data_dir");
      KdefOptions opts;
      opts.seed = seed;
      ds->split = load_kdef(data_dir, opts);
    } else if (k == "synthetic") {
      ds->split = synthetic_bars(400, 100, 100, seed);
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown dataset '" + k + "'");
    }
    *out = ds.release();
  });
}

fg_status fg_dataset_synthetic(const char* family, int64_t train_per_class,
                               int64_t val_per_class, int64_t test_per_class, uint64_t seed,
                               fg_dataset** out) {
  return guarded([&] {
    need(family, "family");
    need(out, "out");
    check(train_per_class >= 1 && val_per_class >= 0 && test_per_class >= 0,
          ErrorCode::kInvalidArgument, "synthetic: per-class counts must be non-negative");
    const std::string f = family;
    auto ds = std::make_unique<fg_dataset>();
    ds->kind = "synthetic-" + f;
    if (f == "bars")
      ds->split = synthetic_bars(train_per_class, val_per_class, test_per_class, seed);
    else if (f == "ramps")
      ds->split = synthetic_ramps(train_per_class, val_per_class, test_per_class, seed);
    else
      fail(ErrorCode::kInvalidArgument, "unknown synthetic family '" + f + "'");
    *out = ds.release();
  });
}

fg_status fg_dataset_summary(const fg_dataset* ds, fg_string** summary) {
  return guarded([&] {
    need(ds, "dataset");
    need(summary, "summary");
    const auto& s = ds->split;
    std::ostringstream os;
    os << "dataset " << ds->kind << "\n" << "provenance " << s.provenance << "\n";
    auto part = [&](const char* name, const std::vector<Sample>& v) {
      os << name << ' ' << v.size() << " per-class";
      for (auto c : s.class_counts(v)) os << ' ' << c;
      os << "\n";
    };
    part("train", s.train);
    part("validation", s.validation);
    part("test", s.test);
    os << "rejected " << s.rejected << "\nskipped " << s.skipped << "\nvote_warnings "
       << s.vote_warnings << "\n";
    *summary = make_string(os.str());
  });
}

fg_status fg_dataset_preprocess(const fg_dataset* ds, const char* variant, const char* out_dir) {
  return guarded([&] {
    need(ds, "dataset");
    need(out_dir, "out_dir");
    const auto v = variant ? parse_variant(variant) : Variant::kPlain;
    const auto& s = ds->split;
    write_prepared(prepare(s.train, v, s.num_classes), "train", out_dir);
    write_prepared(prepare(s.validation, v, s.num_classes), "validation", out_dir);
    write_prepared(prepare(s.test, v, s.num_classes), "test", out_dir);
  });
}

void fg_dataset_destroy(fg_dataset* ds) { delete ds; }

fg_status fg_model_build(const char* arch, const char* variant, int stl, int classes,
                         uint64_t seed, fg_model** out) {
  return guarded([&] {
    need(arch, "arch");
    need(out, "out");
    auto spec = arch_by_name(arch, variant ? parse_variant(variant) : Variant::kPlain, classes);
    spec.stl_enabled = stl != 0;
    *out = new fg_model{Model<float>::build(spec, seed)};
  });
}

fg_status fg_model_load(const char* stem, fg_model** out) {
  return guarded([&] {
    need(stem, "stem");
    need(out, "out");
    *out = new fg_model{load_model(stem)};
  });
}

fg_status fg_model_save(fg_model* model, const char* stem) {
  return guarded([&] {
    need(model, "model");
    need(stem, "stem");
    save_model(model->model, stem);
  });
}

fg_status fg_model_param_count(fg_model* model, int64_t* ledgered, int64_t* auxiliary) {
  return guarded([&] {
    need(model, "model");
    if (ledgered) *ledgered = model->model.ledgered_count();
    if (auxiliary) *auxiliary = model->model.auxiliary_count();
  });
}

fg_status fg_model_forward(fg_model* model, const float* input, int64_t n, float* logits,
                           int64_t logits_len) {
  return guarded([&] {
    need(model, "model");
    need(input, "input");
    need(logits, "logits");
    check(n >= 1, ErrorCode::kInvalidArgument, "forward: n must be >= 1");
    const auto& spec = model->model.spec();
    const auto k = spec.num_classes();
    check(logits_len == n * k, ErrorCode::kShapeMismatch,
          "forward: logits buffer holds " + std::to_string(logits_len) + " values, need " +
              std::to_string(n * k));
    const auto per = shape_numel(spec.input);
    std::vector<Tensor<float>> xs;
    for (std::size_t s = 0; s < spec.streams.size(); ++s) {
      Shape shape{n};
      shape.insert(shape.end(), spec.input.begin(), spec.input.end());
      const float* src = input + static_cast<std::int64_t>(s) * n * per;
      xs.emplace_back(shape, std::vector<float>(src, src + n * per));
    }
    auto y = model->model.forward(nullptr, xs, Mode::kEval);
    std::copy(y.data().begin(), y.data().end(), logits);
  });
}

void fg_model_destroy(fg_model* model) { delete model; }

fg_status fg_train(const fg_train_config* cfg, const fg_dataset* ds, fg_model** out,
                   fg_string** history) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    const auto c = convert(cfg);
    auto result = train(c, ds->split);
    if (history) *history = make_string(format_history(result.history));
    *out = new fg_model{std::move(result.model)};
  });
}

fg_status fg_evaluate(fg_model* model, const fg_dataset* ds, double* accuracy,
                      fg_string** confusion) {
  return guarded([&] {
    need(model, "model");
    need(ds, "dataset");
    need(accuracy, "accuracy");
    const auto& s = ds->split;
    const auto& samples = s.test.empty() ? s.validation : s.test;
    const auto set = prepare(samples, model->model.spec().variant, s.num_classes);
    const auto r = evaluate(model->model, set);
    *accuracy = r.accuracy;
    if (confusion) {
      std::ostringstream os;
      for (const auto& row : r.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? " " : "") << row[j];
        os << "\n";
      }
      *confusion = make_string(os.str());
    }
  });
}

fg_status fg_multi_run(const fg_train_config* cfg, const fg_dataset* ds, int64_t runs,
                       fg_report** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    auto c = convert(cfg);
    c.checkpoint.clear();
    *out = new fg_report{multi_run(c, runs, split_trainer(ds->split))};
  });
}

fg_status fg_report_table(const fg_report* rep, fg_string** table) {
  return guarded([&] {
    need(rep, "report");
    need(table, "table");
    *table = make_string(RunReport::table_header() + "\n" + rep->report.table_row() + "\n");
  });
}

fg_status fg_report_write(const fg_report* rep, const char* path) {
  return guarded([&] {
    need(rep, "report");
    need(path, "path");
    rep->report.write_records(path);
  });
}

void fg_report_destroy(fg_report* rep) { delete rep; }

}  // extern "C"
