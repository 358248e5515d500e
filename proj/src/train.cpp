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

#include "fergrad/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "fergrad/serialize.hpp"

namespace fergrad {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int argmax_row(std::span<const float> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

struct Snapshot {
  std::vector<std::vector<float>> values;

  void take(Model<float>& m) {
    values.clear();
    for (auto& nt : m.state()) values.emplace_back(nt.tensor.data().begin(), nt.tensor.data().end());
  }
  void restore(Model<float>& m) const {
    auto state = m.state();
    for (std::size_t i = 0; i < state.size(); ++i)
      std::copy(values[i].begin(), values[i].end(), state[i].tensor.data().begin());
  }
};

}  // namespace

void AdamConfig::validate() const {
  check(lr > 0 && std::isfinite(lr), ErrorCode::kInvalidArgument, "adam: learning rate must be > 0");
  check(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, ErrorCode::kInvalidArgument,
        "adam: betas must lie in [0, 1)");
  check(eps > 0, ErrorCode::kInvalidArgument, "adam: epsilon must be > 0");
}

template <typename T>
AdamMoments<T> AdamMoments<T>::zeros_like(std::span<const Tensor<T>> params) {
  AdamMoments out;
  for (const auto& p : params) {
    out.m.emplace_back(static_cast<std::size_t>(p.numel()), T(0));
    out.v.emplace_back(static_cast<std::size_t>(p.numel()), T(0));
  }
  return out;
}

template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<const std::span<const T>> grads,
               AdamMoments<T>& moments, std::int64_t t, const AdamConfig& cfg) {
  cfg.validate();
  check(t >= 1, ErrorCode::kInvalidArgument, "adam_step: step index must be >= 1");
  check(grads.size() == params.size() && moments.m.size() == params.size() &&
            moments.v.size() == params.size(),
        ErrorCode::kShapeMismatch,
        "adam_step: " + std::to_string(params.size()) + " params, " +
            std::to_string(grads.size()) + " grads, " + std::to_string(moments.m.size()) +
            " moment slots");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    const auto g = grads[i];
    auto& m = moments.m[i];
    auto& v = moments.v[i];
    check(g.empty() || g.size() == p.size(), ErrorCode::kShapeMismatch,
          "adam_step: gradient " + std::to_string(i) + " has " + std::to_string(g.size()) +
              " elements, parameter has " + std::to_string(p.size()));
    check(m.size() == p.size() && v.size() == p.size(), ErrorCode::kShapeMismatch,
          "adam_step: moment size mismatch at parameter " + std::to_string(i));
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g.empty() ? 0.0 : static_cast<double>(g[j]);
      const double mj = cfg.beta1 * static_cast<double>(m[j]) + (1.0 - cfg.beta1) * gj;
      const double vj = cfg.beta2 * static_cast<double>(v[j]) + (1.0 - cfg.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double step = cfg.lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg.eps);
      if (step != 0.0) p[j] = static_cast<T>(static_cast<double>(p[j]) - step);
    }
  }
}

template struct AdamMoments<float>;
template struct AdamMoments<double>;
template void adam_step<float>(std::span<Tensor<float>>, std::span<const std::span<const float>>,
                               AdamMoments<float>&, std::int64_t, const AdamConfig&);
template void adam_step<double>(std::span<Tensor<double>>,
                                std::span<const std::span<const double>>, AdamMoments<double>&,
                                std::int64_t, const AdamConfig&);

void TrainConfig::validate() const {
  adam.validate();
  check(batch >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  check(epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be >= 0");
  check(dataset == "ferplus" || dataset == "kdef" || dataset == "synthetic",
        ErrorCode::kInvalidArgument, "unknown dataset '" + dataset + "'");
}

ArchSpec TrainConfig::arch_spec(int num_classes) const {
  auto spec = arch_by_name(arch, variant, num_classes);
  spec.stl_enabled = stl;
  spec.shared_backbone = shared_backbone && spec.streams.size() > 1;
  spec.bn_momentum = bn_momentum;
  fergrad::validate(spec);
  return spec;
}

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os << "arch=" << arch << ";variant=" << variant_name(variant) << ";stl=" << stl
     << ";shared=" << shared_backbone << ";lr=" << fmt("%.17g", adam.lr)
     << ";beta1=" << fmt("%.17g", adam.beta1) << ";beta2=" << fmt("%.17g", adam.beta2)
     << ";eps=" << fmt("%.17g", adam.eps) << ";batch=" << batch << ";epochs=" << epochs << ";bn_momentum=" << fmt("%.17g", bn_momentum)
     << ";seed=" << seed << ";dataset=" << dataset << ";data=" << data_dir.generic_string();
  return os.str();
}

TrainResult train(const TrainConfig& cfg, const PreparedSet& train_set, const PreparedSet& val_set,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check(train_set.size() > 0, ErrorCode::kInvalidArgument, "train: training split is empty");
  TrainResult result{Model<float>::build(cfg.arch_spec(train_set.num_classes), cfg.seed), {}, 0};
  auto& model = result.model;
  if (cfg.epochs == 0) return result;

  auto params = model.trainable();
  auto moments = AdamMoments<float>::zeros_like(params);
  BatchIterator batches(static_cast<std::size_t>(train_set.size()),
                        static_cast<std::size_t>(cfg.batch), cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  Snapshot best;
  double best_val = -1;
  std::int64_t step = 0;
  std::vector<std::span<const float>> grads(params.size());

  for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    batches.start_epoch();
    double loss_sum = 0;
    std::int64_t n_batches = 0, correct = 0, seen = 0;
    std::span<const std::size_t> idx;
    while (batches.next(idx)) {
      const auto xs = gather(train_set, idx);
      const auto labels = gather_labels(train_set, idx);
      Tape<float> tape;
      auto logits = model.forward(&tape, xs, Mode::kTrain);
      auto loss = softmax_cross_entropy(&tape, logits, std::span<const int>(labels));
      const double lv = loss.item();
      if (!std::isfinite(lv))
        fail(ErrorCode::kNumeric, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                      " batch " + std::to_string(n_batches + 1));
      tape.backward(loss);
      for (std::size_t i = 0; i < params.size(); ++i)
        grads[i] = params[i].has_grad() ? params[i].grad() : std::span<const float>();
      adam_step(std::span<Tensor<float>>(params), std::span<const std::span<const float>>(grads),
                moments, ++step, cfg.adam);
      for (auto& p : params) p.clear_grad();

      const auto k = logits.dim(1);
      for (std::size_t r = 0; r < labels.size(); ++r)
        correct += argmax_row(logits.data().subspan(r * k, k)) == labels[r];
      seen += static_cast<std::int64_t>(labels.size());
      loss_sum += lv;
      ++n_batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n_batches);
    rec.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(seen);
    if (val_set.size() > 0) {
      rec.val_accuracy = evaluate(model, val_set).accuracy;
      if (rec.val_accuracy > best_val) {
        best_val = rec.val_accuracy;
        best.take(model);
        result.best_epoch = epoch;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch && !on_epoch(rec, model)) break;
  }
  if (!best.values.empty()) best.restore(model);
  if (!cfg.checkpoint.empty()) save_model(model, cfg.checkpoint);
  return result;
}

TrainResult train(const TrainConfig& cfg, const DatasetSplit& split, const EpochCallback& on_epoch) {
  cfg.validate();
  check(!split.train.empty(), ErrorCode::kInvalidArgument, "train: training split is empty");
  const auto tr = prepare(split.train, cfg.variant, split.num_classes);
  const auto va = prepare(split.validation, cfg.variant, split.num_classes);
  return train(cfg, tr, va, on_epoch);
}

EvalResult evaluate_logits(const Tensor<float>& logits, std::span<const int> labels, int classes) {
  check(!labels.empty(), ErrorCode::kInvalidArgument, "evaluate: empty sample list");
  check(logits.rank() == 2 && logits.dim(0) == static_cast<std::int64_t>(labels.size()) &&
            logits.dim(1) == classes,
        ErrorCode::kShapeMismatch,
        "evaluate: logits " + shape_str(logits.shape()) + " do not match " +
            std::to_string(labels.size()) + " labels x " + std::to_string(classes) + " classes");
  EvalResult r;
  r.confusion.assign(static_cast<std::size_t>(classes),
                     std::vector<std::int64_t>(static_cast<std::size_t>(classes), 0));
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = argmax_row(logits.data().subspan(i * classes, classes));
    check(labels[i] >= 0 && labels[i] < classes, ErrorCode::kInvalidArgument,
          "evaluate: label out of range");
    ++r.confusion[labels[i]][pred];
    correct += pred == labels[i];
  }
  r.count = static_cast<std::int64_t>(labels.size());
  r.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(r.count);
  return r;
}

EvalResult evaluate(Model<float>& model, const PreparedSet& set, std::int64_t batch) {
  check(set.size() > 0, ErrorCode::kInvalidArgument, "evaluate: empty sample list");
  check(batch >= 1, ErrorCode::kInvalidArgument, "evaluate: batch must be >= 1");
  const auto k = model.spec().num_classes();
  Tensor<float> all(Shape{set.size(), k});
  std::vector<std::size_t> idx;
  for (std::int64_t start = 0; start < set.size(); start += batch) {
    idx.clear();
    for (std::int64_t i = start; i < std::min(set.size(), start + batch); ++i)
      idx.push_back(static_cast<std::size_t>(i));
    auto logits = model.forward(nullptr, gather(set, idx), Mode::kEval);
    std::copy(logits.data().begin(), logits.data().end(), all.data().begin() + start * k);
  }
  return evaluate_logits(all, set.labels, static_cast<int>(k));
}

std::string RunReport::table_header() {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-44s %10s %8s %8s %8s", "Model", "Params", "Avg", "Max", "Min");
  return buf;
}

std::string RunReport::table_row() const {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-44s %10lld %8.2f %8.2f %8.2f", label.c_str(),
                static_cast<long long>(ledger_total), avg, max, min);
  return buf;
}

std::string RunReport::records() const {
  std::ostringstream os;
  os << "# fingerprint " << fingerprint << "\n";
  os << "# label " << label << "\n";
  os << "# ledger_total " << ledger_total << "\n";
  for (std::size_t r = 0; r < accuracies.size(); ++r) {
    if (r < histories.size())
      for (const auto& e : histories[r]) {
        os << r << ' ' << e.epoch << " train loss " << fmt("%.6f", e.train_loss) << "\n";
        os << r << ' ' << e.epoch << " train accuracy " << fmt("%.4f", e.train_accuracy) << "\n";
        if (e.val_accuracy >= 0)
          os << r << ' ' << e.epoch << " val accuracy " << fmt("%.4f", e.val_accuracy) << "\n";
      }
    os << r << " final test accuracy " << fmt("%.4f", accuracies[r]) << "\n";
  }
  os << "all final test avg " << fmt("%.4f", avg) << "\n";
  os << "all final test min " << fmt("%.4f", min) << "\n";
  os << "all final test max " << fmt("%.4f", max) << "\n";
  for (std::size_t i = 0; i < best_confusion.size(); ++i) {
    os << "best final confusion row" << i;
    for (auto v : best_confusion[i]) os << ' ' << v;
    os << "\n";
  }
  return os.str();
}

void RunReport::write_records(const std::filesystem::path& path) const {
  std::ofstream out(path);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << records();
  check(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

std::string config_fingerprint(const TrainConfig& cfg) {
  const auto text = cfg.canonical();
  const auto h = fnv1a64(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string variant_label(const TrainConfig& cfg) {
  std::string label = cfg.arch;
  switch (cfg.variant) {
    case Variant::kPlain: break;
    case Variant::kLaplacianConcat: label += " + Laplacian (input concatenated)"; break;
    case Variant::kSobelConcat: label += " + Sobel (input concatenated)"; break;
    case Variant::kLaplacianParallel: label += " + Laplacian (parallel)"; break;
    case Variant::kSobelParallel: label += " + Sobel (parallel)"; break;
    case Variant::kTripleStream: label += " + Sobel + Laplacian (parallel)"; break;
  }
  if (cfg.stl) label += " + STL";
  if (cfg.shared_backbone) label += " [shared]";
  return label;
}

RunReport multi_run(const TrainConfig& cfg, std::int64_t runs, const Trainer& trainer) {
  check(runs >= 1, ErrorCode::kInvalidArgument, "multi_run: runs must be >= 1");
  check(static_cast<bool>(trainer), ErrorCode::kInvalidArgument, "multi_run: no trainer");
  RunReport rep;
  rep.label = variant_label(cfg);
  rep.fingerprint = config_fingerprint(cfg);
  double best = -1;
  for (std::int64_t r = 0; r < runs; ++r) {
    auto c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    auto out = trainer(c);
    rep.accuracies.push_back(out.test_accuracy);
    rep.histories.push_back(std::move(out.history));
    if (out.test_accuracy > best) {
      best = out.test_accuracy;
      rep.best_confusion = out.test.confusion;
    }
  }
  rep.min = *std::min_element(rep.accuracies.begin(), rep.accuracies.end());
  rep.max = *std::max_element(rep.accuracies.begin(), rep.accuracies.end());
  rep.avg = std::accumulate(rep.accuracies.begin(), rep.accuracies.end(), 0.0) /
            static_cast<double>(runs);
  // Guard against rounding placing the mean a hair outside [min, max].
  rep.avg = std::clamp(rep.avg, rep.min, rep.max);
  const int classes = rep.best_confusion.empty() ? kFerplusClasses
                                                 : static_cast<int>(rep.best_confusion.size());
  rep.ledger_total = count_params(cfg.arch_spec(classes)).total;
  return rep;
}

Trainer split_trainer(const DatasetSplit& split) {
  struct Cache {
    const DatasetSplit* split;
    std::map<Variant, std::array<PreparedSet, 3>> sets;
  };
  auto cache = std::make_shared<Cache>(Cache{&split, {}});
  return [cache](const TrainConfig& cfg) {
    auto it = cache->sets.find(cfg.variant);
    if (it == cache->sets.end()) {
      const auto& s = *cache->split;
      it = cache->sets
               .emplace(cfg.variant,
                        std::array<PreparedSet, 3>{prepare(s.train, cfg.variant, s.num_classes),
                                                   prepare(s.validation, cfg.variant, s.num_classes),
                                                   prepare(s.test, cfg.variant, s.num_classes)})
               .first;
    }
    auto& [tr, va, te] = it->second;
    auto result = train(cfg, tr, va);
    RunOutcome out;
    const auto& eval_set = te.size() > 0 ? te : va;
    out.test = evaluate(result.model, eval_set);
    out.test_accuracy = out.test.accuracy;
    out.history = std::move(result.history);
    return out;
  };
}

}  // namespace fergrad
