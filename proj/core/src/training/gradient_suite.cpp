// SPDX-License-Identifier: Apache-2.0
#include "wsddn/training/gradient_suite.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

#include "wsddn/autodiff/gradcheck.hpp"
#include "wsddn/autodiff/ops.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/common/random.hpp"
#include "wsddn/network/model.hpp"
#include "wsddn/training/losses.hpp"
#include "wsddn/training/trainer.hpp"

namespace wsddn::train {

namespace {

using ad::Graph;
using ad::Tensor;
using ad::Var;

/// One random instance: input tensors (all differentiable) and a function
/// building the op's output from their Vars.
struct Instance {
  std::vector<Tensor> inputs;
  std::function<Var(Graph&, const std::vector<Var>&)> build;
};

using Factory = std::function<Instance(Rng&)>;

Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Values bounded away from zero so relu and clamp kinks stay out of reach.
Tensor away_from_zero(Rng& rng, ad::Shape shape) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

std::vector<Region> random_regions(Rng& rng, int w, int h, std::size_t n) {
  std::vector<Region> out;
  for (std::size_t i = 0; i < n; ++i) {
    Region r;
    r.x0 = rng.range(0, w - 4);
    r.y0 = rng.range(0, h - 4);
    r.x1 = rng.range(r.x0 + 4, w);
    r.y1 = rng.range(r.y0 + 4, h);
    r.objectness = rng.uniform(0.1, 1.0);
    out.push_back(r);
  }
  return out;
}

data::LabelVector random_labels(Rng& rng, std::size_t c) {
  data::LabelVector y(c, -1);
  for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : -1;
  y[rng.below(c)] = 1;
  return y;
}

net::ModelConfig tiny_model(std::size_t classes, net::Architecture arch) {
  net::ModelConfig m;
  m.backbone = {{4, 3, 1, 1, true}, {4, 3, 1, 1, true}};
  m.spp_grid = 2;
  m.fc6 = 6;
  m.fc7 = 6;
  m.num_classes = classes;
  m.architecture = arch;
  return m;
}

/// Parameters for the energy entries; every input is one named parameter.
Instance energy_instance(Rng& rng, net::Architecture arch) {
  const auto model = tiny_model(2, arch);
  auto params = net::initialize_parameters(model, rng.next());
  // Non-zero biases keep relu units away from exact zeros.
  for (auto& e : params) {
    if (e.name.ends_with(".bias")) {
      for (double& v : e.value.data()) v = rng.uniform(0.05, 0.2);
    }
  }
  std::vector<data::ImageSample> batch(2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& s = batch[i];
    s.id = "g" + std::to_string(i);
    s.image = random_tensor(rng, {16, 16, 1}, 0.0, 1.0);
    s.proposals = random_regions(rng, 16, 16, 4);
    // Two heavily overlapping regions so the regulariser gate opens.
    Region a{2, 2, 12, 12, 0.8}, b{3, 3, 12, 12, 0.6};
    s.proposals.push_back(a);
    s.proposals.push_back(b);
    s.labels = random_labels(rng, 2);
  }
  TrainConfig cfg;
  cfg.weight_decay = 1e-2;
  cfg.use_spatial_regularizer = true;
  cfg.reg_weight = 0.5;
  std::vector<std::string> names;
  Instance inst;
  for (const auto& e : params) {
    names.push_back(e.name);
    inst.inputs.push_back(e.value);
  }
  inst.build = [model, cfg, batch, names](Graph& g, const std::vector<Var>& vars) {
    ad::ParameterVars pv;
    ad::ParameterSet shapes;
    for (std::size_t i = 0; i < names.size(); ++i) {
      pv.insert(names[i], vars[i]);
      shapes.add(names[i], vars[i].value());
    }
    auto energy = ad::scale(squared_weight_norm(pv, shapes), cfg.weight_decay / 2.0);
    for (const auto& s : batch) {
      auto fp = net::forward(g, pv, model, s.image, s.proposals);
      energy = ad::add(energy, image_objective(fp, model, cfg, s.proposals, s.labels, batch.size()));
    }
    return energy;
  };
  return inst;
}

std::vector<std::pair<std::string, Factory>> roster() {
  std::vector<std::pair<std::string, Factory>> r;
  r.emplace_back("matmul", [](Rng& rng) {
    const auto m = dim(rng, 1, 4), k = dim(rng, 1, 4), n = dim(rng, 1, 4);
    return Instance{{random_tensor(rng, {m, k}), random_tensor(rng, {k, n})},
                    [](Graph&, const std::vector<Var>& v) { return ad::matmul(v[0], v[1]); }};
  });
  r.emplace_back("transpose", [](Rng& rng) {
    return Instance{{random_tensor(rng, {dim(rng, 1, 5), dim(rng, 1, 5)})},
                    [](Graph&, const std::vector<Var>& v) { return ad::transpose(v[0]); }};
  });
  r.emplace_back("conv2d", [](Rng& rng) {
    const auto cin = dim(rng, 1, 3), cout = dim(rng, 1, 3), k = dim(rng, 1, 3);
    ad::Conv2dOptions o{dim(rng, 1, 2), dim(rng, 0, 1)};
    const auto h = dim(rng, k, 7), w = dim(rng, k, 7);
    return Instance{{random_tensor(rng, {cin, h, w}), random_tensor(rng, {cout, cin, k, k}),
                     random_tensor(rng, {cout})},
                    [o](Graph&, const std::vector<Var>& v) { return ad::conv2d(v[0], v[1], v[2], o); }};
  });
  r.emplace_back("relu", [](Rng& rng) {
    return Instance{{away_from_zero(rng, {dim(rng, 1, 4), dim(rng, 1, 4)})},
                    [](Graph&, const std::vector<Var>& v) { return ad::relu(v[0]); }};
  });
  r.emplace_back("mul", [](Rng& rng) {
    ad::Shape s{dim(rng, 1, 4), dim(rng, 1, 4)};
    return Instance{{random_tensor(rng, s), random_tensor(rng, s)},
                    [](Graph&, const std::vector<Var>& v) { return ad::mul(v[0], v[1]); }};
  });
  r.emplace_back("add", [](Rng& rng) {
    ad::Shape s{dim(rng, 1, 4), dim(rng, 1, 4)};
    return Instance{{random_tensor(rng, s), random_tensor(rng, s)},
                    [](Graph&, const std::vector<Var>& v) { return ad::add(v[0], v[1]); }};
  });
  r.emplace_back("add_bias", [](Rng& rng) {
    const auto n = dim(rng, 1, 4);
    return Instance{{random_tensor(rng, {dim(rng, 1, 4), n}), random_tensor(rng, {n})},
                    [](Graph&, const std::vector<Var>& v) { return ad::add(v[0], v[1]); }};
  });
  r.emplace_back("sum", [](Rng& rng) {
    const auto axis = static_cast<std::size_t>(rng.below(3));
    return Instance{{random_tensor(rng, {dim(rng, 1, 3), dim(rng, 1, 3), dim(rng, 1, 3)})},
                    [axis](Graph&, const std::vector<Var>& v) { return ad::sum(v[0], axis); }};
  });
  r.emplace_back("sum_all", [](Rng& rng) {
    return Instance{{random_tensor(rng, {dim(rng, 1, 4), dim(rng, 1, 4)})},
                    [](Graph&, const std::vector<Var>& v) { return ad::sum_all(v[0]); }};
  });
  r.emplace_back("max_pool2x2", [](Rng& rng) {
    return Instance{{random_tensor(rng, {dim(rng, 1, 3), dim(rng, 2, 7), dim(rng, 2, 7)})},
                    [](Graph&, const std::vector<Var>& v) { return ad::max_pool2x2(v[0]); }};
  });
  r.emplace_back("scale", [](Rng& rng) {
    const double c = rng.uniform(-2.0, 2.0);
    return Instance{{random_tensor(rng, {dim(rng, 1, 4), dim(rng, 1, 4)})},
                    [c](Graph&, const std::vector<Var>& v) { return ad::scale(v[0], c); }};
  });
  r.emplace_back("log", [](Rng& rng) {
    return Instance{{random_tensor(rng, {dim(rng, 1, 4), dim(rng, 1, 4)}, 0.2, 3.0)},
                    [](Graph&, const std::vector<Var>& v) { return ad::log(v[0]); }};
  });
  r.emplace_back("concat", [](Rng& rng) {
    const auto axis = static_cast<std::size_t>(rng.below(2));
    const auto other = dim(rng, 1, 3);
    auto shape = [&](std::size_t along) {
      return axis == 0 ? ad::Shape{along, other} : ad::Shape{other, along};
    };
    return Instance{{random_tensor(rng, shape(dim(rng, 1, 3))), random_tensor(rng, shape(dim(rng, 1, 3)))},
                    [axis](Graph&, const std::vector<Var>& v) {
                      std::vector<Var> xs{v[0], v[1]};
                      return ad::concat(xs, axis);
                    }};
  });
  r.emplace_back("softmax", [](Rng& rng) {
    const auto axis = static_cast<std::size_t>(rng.below(2));
    return Instance{{random_tensor(rng, {dim(rng, 1, 4), dim(rng, 1, 4)}, -3.0, 3.0)},
                    [axis](Graph&, const std::vector<Var>& v) { return ad::softmax(v[0], axis); }};
  });
  r.emplace_back("logsumexp", [](Rng& rng) {
    const auto axis = static_cast<std::size_t>(rng.below(2));
    return Instance{{random_tensor(rng, {dim(rng, 1, 4), dim(rng, 1, 4)}, -3.0, 3.0)},
                    [axis](Graph&, const std::vector<Var>& v) { return ad::logsumexp(v[0], axis); }};
  });
  r.emplace_back("clamp", [](Rng& rng) {
    // Inputs straddle the bounds but stay clear of them.
    Tensor t({dim(rng, 1, 4), dim(rng, 1, 4)}, 0.0);
    for (double& v : t.data()) {
      const double pick = rng.uniform();
      v = pick < 0.25 ? rng.uniform(-1.0, -0.6) : pick < 0.5 ? rng.uniform(0.6, 1.0) : rng.uniform(-0.4, 0.4);
    }
    return Instance{{t}, [](Graph&, const std::vector<Var>& v) { return ad::clamp(v[0], -0.5, 0.5); }};
  });
  r.emplace_back("gather", [](Rng& rng) {
    const auto rows = dim(rng, 1, 4), cols = dim(rng, 1, 4);
    std::vector<std::size_t> idx(dim(rng, 1, 6));
    for (auto& i : idx) i = rng.below(rows * cols);
    return Instance{{random_tensor(rng, {rows, cols})},
                    [idx](Graph&, const std::vector<Var>& v) { return ad::gather(v[0], idx); }};
  });
  r.emplace_back("gather_rows", [](Rng& rng) {
    const auto rows = dim(rng, 1, 4);
    std::vector<std::size_t> idx(dim(rng, 1, 5));
    for (auto& i : idx) i = rng.below(rows);
    return Instance{{random_tensor(rng, {rows, dim(rng, 1, 4)})},
                    [idx](Graph&, const std::vector<Var>& v) { return ad::gather_rows(v[0], idx); }};
  });
  r.emplace_back("roi_spp_pool", [](Rng& rng) {
    const auto c = dim(rng, 1, 3), h = dim(rng, 2, 6), w = dim(rng, 2, 6);
    const std::size_t stride = dim(rng, 1, 4), grid = dim(rng, 1, 3);
    auto regions = random_regions(rng, static_cast<int>(w * stride), static_cast<int>(h * stride), dim(rng, 1, 4));
    return Instance{{random_tensor(rng, {c, h, w})}, [regions, stride, grid](Graph&, const std::vector<Var>& v) {
                      return net::roi_spp_pool(v[0], regions, stride, grid);
                    }};
  });
  r.emplace_back("box_score_scale", [](Rng& rng) {
    const auto n = dim(rng, 1, 4);
    auto regions = random_regions(rng, 16, 16, n);
    return Instance{{random_tensor(rng, {n, dim(rng, 1, 4)})}, [regions](Graph&, const std::vector<Var>& v) {
                      return net::box_score_scale(v[0], regions);
                    }};
  });
  r.emplace_back("classification_stream", [](Rng& rng) {
    const auto r_ = dim(rng, 1, 4), d = dim(rng, 1, 4), c = dim(rng, 2, 4);
    return Instance{{random_tensor(rng, {r_, d}), random_tensor(rng, {d, c}), random_tensor(rng, {c})},
                    [](Graph&, const std::vector<Var>& v) {
                      ad::ParameterVars pv;
                      pv.insert("fc8c.weight", v[1]);
                      pv.insert("fc8c.bias", v[2]);
                      return net::classification_stream(v[0], pv);
                    }};
  });
  r.emplace_back("detection_stream", [](Rng& rng) {
    const auto r_ = dim(rng, 1, 4), d = dim(rng, 1, 4), c = dim(rng, 2, 4);
    return Instance{{random_tensor(rng, {r_, d}), random_tensor(rng, {d, c}), random_tensor(rng, {c})},
                    [](Graph&, const std::vector<Var>& v) {
                      ad::ParameterVars pv;
                      pv.insert("fc8d.weight", v[1]);
                      pv.insert("fc8d.bias", v[2]);
                      return net::detection_stream(v[0], pv);
                    }};
  });
  r.emplace_back("binary_log_loss", [](Rng& rng) {
    const auto c = dim(rng, 1, 5);
    auto labels = random_labels(rng, c);
    return Instance{{random_tensor(rng, {c}, 0.05, 0.95)}, [labels](Graph&, const std::vector<Var>& v) {
                      return binary_log_loss(v[0], labels);
                    }};
  });
  r.emplace_back("spatial_regularizer", [](Rng& rng) {
    const std::size_t c = dim(rng, 1, 3), n = dim(rng, 2, 5), d = dim(rng, 1, 4);
    std::vector<Region> regions;
    for (std::size_t i = 0; i < n; ++i) {
      const int o = static_cast<int>(i % 3);
      regions.push_back({o, o, 10 + o, 10, std::nullopt});
    }
    auto labels = random_labels(rng, c);
    return Instance{{random_tensor(rng, {c, n}, 0.0, 1.0), random_tensor(rng, {n, d})},
                    [regions, labels](Graph&, const std::vector<Var>& v) {
                      return spatial_regularizer(v[0], v[1], regions, labels, 0.6, 2);
                    }};
  });
  r.emplace_back("baseline_loss", [](Rng& rng) {
    const auto c = dim(rng, 1, 5);
    auto labels = random_labels(rng, c);
    // Margins 1 - y s kept away from the hinge.
    Tensor s({c}, 0.0);
    for (std::size_t k = 0; k < c; ++k) s[k] = labels[k] * (rng.bernoulli(0.5) ? rng.uniform(-1, 0.8) : rng.uniform(1.2, 2));
    return Instance{{s}, [labels](Graph&, const std::vector<Var>& v) { return baseline_loss(v[0], labels, 2); }};
  });
  r.emplace_back("wsddn_energy", [](Rng& rng) { return energy_instance(rng, net::Architecture::two_stream); });
  r.emplace_back("baseline_energy", [](Rng& rng) { return energy_instance(rng, net::Architecture::single_stream); });
  return r;
}

/// Scalar loss from an op output: a fixed random projection of every element.
Var project(Graph& g, Var out, const Tensor& weights) {
  if (out.value().size() == 1 && out.shape().empty()) return out;
  return ad::sum_all(ad::mul(out, g.constant(weights)));
}

}  // namespace

std::size_t GradientSuiteReport::instances() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.instances;
  return n;
}

bool GradientSuiteReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const GradientCheckRow& r) { return r.passed; });
}

std::string GradientSuiteReport::format() const {
  std::string out;
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-22s instances %3zu  checked %6zu  skipped %4zu  worst %.3e  %s\n",
                  r.name.c_str(), r.instances, r.checked, r.skipped, r.worst_relative_error,
                  r.passed ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

std::vector<std::string> gradient_roster() {
  std::vector<std::string> names;
  for (const auto& [name, f] : roster()) names.push_back(name);
  return names;
}

GradientSuiteReport run_gradient_suite(const GradientSuiteOptions& opts) {
  const auto entries = roster();
  if (opts.corrupt && std::none_of(entries.begin(), entries.end(),
                                   [&](const auto& e) { return e.first == *opts.corrupt; })) {
    throw UsageError("gradcheck: unknown roster entry '" + *opts.corrupt + "'");
  }
  GradientSuiteReport report;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& [name, factory] = entries[e];
    GradientCheckRow row;
    row.name = name;
    for (std::size_t i = 0; i < opts.instances_per_entry; ++i) {
      Rng rng(mix_seed(mix_seed(opts.seed, e), i));
      const auto inst = factory(rng);

      Tensor weights;
      {
        Graph probe;
        std::vector<Var> vars;
        for (const auto& t : inst.inputs) vars.push_back(probe.constant(t));
        weights = random_tensor(rng, inst.build(probe, vars).shape());
      }
      auto evaluate = [&](const std::vector<Tensor>& inputs) {
        Graph g;
        std::vector<Var> vars;
        for (std::size_t k = 0; k < inputs.size(); ++k) vars.push_back(g.parameter("in" + std::to_string(k), inputs[k]));
        return project(g, inst.build(g, vars), weights).value().item();
      };

      Graph g;
      std::vector<Var> vars;
      for (std::size_t k = 0; k < inst.inputs.size(); ++k) {
        vars.push_back(g.parameter("in" + std::to_string(k), inst.inputs[k]));
      }
      g.backward(project(g, inst.build(g, vars), weights));

      for (std::size_t k = 0; k < inst.inputs.size(); ++k) {
        Tensor analytic = g.gradient(vars[k]);
        if (opts.corrupt && *opts.corrupt == name) {
          for (double& v : analytic.data()) v = v * 1.01 + 1e-3;
        }
        auto inputs = inst.inputs;
        const auto numeric = ad::finite_difference_gradient(
            [&](const Tensor& t) {
              inputs[k] = t;
              return evaluate(inputs);
            },
            inst.inputs[k]);
        const auto cmp = ad::compare_gradients(analytic, numeric);
        row.checked += cmp.checked;
        row.skipped += cmp.skipped;
        row.worst_relative_error = std::max(row.worst_relative_error, cmp.worst_relative_error);
      }
      ++row.instances;
    }
    row.passed = row.checked > 0 && row.worst_relative_error < opts.tolerance;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace wsddn::train
