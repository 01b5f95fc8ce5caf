#include "idscope/cli.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "idscope/dump_io.hpp"
#include "idscope/error.hpp"
#include "idscope/experiments.hpp"
#include "idscope/layer_metrics.hpp"
#include "idscope/neighbors.hpp"
#include "idscope/spectral.hpp"

namespace idscope {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

ManifoldKind kind_from_string(const std::string& s) {
  if (s == "UniformBall") return ManifoldKind::UniformBall;
  if (s == "UnionOfBalls") return ManifoldKind::UnionOfBalls;
  if (s == "FiniteVocabulary") return ManifoldKind::FiniteVocabulary;
  throw Error(ErrorCode::InvalidArgument, "unknown manifold kind '" + s + "'");
}

std::string kind_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::UniformBall: return "UniformBall";
    case ManifoldKind::UnionOfBalls: return "UnionOfBalls";
    case ManifoldKind::FiniteVocabulary: return "FiniteVocabulary";
  }
  return "?";
}

// json::exception -> usage error with a readable message.
template <typename F>
auto json_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid ") + what + ": " + e.what());
  }
}

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << j.dump(2) << '\n';
}

template <typename Writer>
void emit_text(const std::string& path, std::ostream& out, Writer&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  write(f);
}

json stats_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"stderr", s.std_error}, {"count", s.count}};
}

// -- command options ---------------------------------------------------------

struct GenerateOpts {
  std::string spec, out, model = "synthetic";
};

struct EstimateOpts {
  std::string dump, out, method = "twonn", aggregation = "inverse";
  std::size_t layer = 0, k = 20, queries = 50;
  double discard = kDefaultDiscardFraction, d_max = 0.0, support_threshold = kDefaultSupportThreshold;
  bool by_label = false;
  std::uint64_t seed = 0;
};

struct BiasOpts {
  std::vector<std::size_t> dims{2, 5, 10, 20, 50};
  std::size_t n = 5000, reps = 20;
  std::vector<std::string> methods{"twonn", "mle:k=20"};
  std::uint64_t seed = 0;
  std::string out;
};

struct AmbientOpts {
  std::size_t true_dim = 50;
  std::vector<std::size_t> ambient{64, 512, 2048};
  std::size_t n = 5000, reps = 10;
  std::vector<std::string> methods{"twonn", "mle:k=20"};
  bool rotate = true;
  std::uint64_t seed = 0;
  std::string out;
};

struct LayerOpts {
  std::string dump, csv, json_out;
  bool exclude_last = false;
  std::vector<std::size_t> scales = kDefaultGrideScales;
  std::vector<std::size_t> orders{1, 2, 4, 8, 16, 32, 64};
  std::size_t oracle_queries = 50;
  double discard = kDefaultDiscardFraction, d_max = 0.0;
};

struct PushOpts {
  std::string net, ball, dump, out, model = "synthetic";
};

struct AuditOpts {
  std::string dump, net, ball, out, method = "twonn";
  std::size_t k = 20, queries = 50;
  double discard = kDefaultDiscardFraction, d_max = 0.0, tolerance = 0.0, oracle_tolerance = 0.25;
  bool no_oracle = false;
};

EstimatorConfig estimator_from(const std::string& method, std::size_t k, double discard, double d_max,
                               const std::string& aggregation = "inverse") {
  EstimatorConfig cfg = parse_estimator(method);
  if (method.find(':') == std::string::npos) {
    cfg.k = cfg.method == Method::Gride && k == 20 ? 1 : k;
    cfg.discard_fraction = discard;
  }
  cfg.d_max = d_max;
  if (aggregation == "mean") {
    cfg.aggregation = MleAggregation::ArithmeticMean;
  } else if (aggregation != "inverse") {
    throw Error(ErrorCode::InvalidArgument, "aggregation must be inverse or mean");
  }
  return cfg;
}

json estimator_json(const EstimatorConfig& cfg) {
  return {{"method", std::string(to_string(cfg.method))},
          {"label", cfg.label()},
          {"k", cfg.k},
          {"discard_fraction", cfg.discard_fraction},
          {"d_max", cfg.d_max},
          {"aggregation", cfg.aggregation == MleAggregation::InverseMeanInverse ? "inverse" : "mean"}};
}

// -- commands ----------------------------------------------------------------

int cmd_generate(const GenerateOpts& o, std::ostream& out) {
  const ManifoldSpec spec = json_guard("spec", [&] { return manifold_spec_from_json(read_json_file(o.spec)); });
  PointCloud cloud = generate(spec);
  const std::size_t rows = cloud.size(), cols = cloud.dim();
  std::vector<PointCloud> layers{std::move(cloud)};
  write_dump(LayerStack(o.model, std::move(layers), {{"data", 0.0}}), o.out);
  out << json{{"out", o.out}, {"rows", rows}, {"cols", cols}}.dump() << '\n';
  return exit_code::kOk;
}

json estimate_cloud(const PointCloud& cloud, const EstimatorConfig& cfg, const EstimateOpts& o) {
  json result;
  const std::size_t order = std::max<std::size_t>(cfg.required_order(), 1);
  const NeighborTable table = knn_distances(cloud, order, false);
  const SupportDiagnosis diag = diagnose_support(table, o.support_threshold);
  result["points"] = cloud.size();
  result["support"] = {{"duplicate_fraction", diag.duplicate_fraction},
                       {"verdict", std::string(to_string(diag.verdict))},
                       {"threshold", o.support_threshold}};
  if (diag.verdict == SupportVerdict::FiniteSupportSuspected) {
    result["estimate"] = nullptr;
    return result;
  }
  if (cfg.method == Method::PointwiseOracle) {
    const auto queries = interior_points(cloud, o.queries, o.seed);
    result["estimate"] = to_json(pointwise_dimension_mean(cloud, queries));
  } else {
    result["estimate"] = to_json(run_estimator(cfg, table));
  }
  return result;
}

int cmd_estimate(const EstimateOpts& o, std::ostream& out) {
  const EstimatorConfig cfg = estimator_from(o.method, o.k, o.discard, o.d_max, o.aggregation);
  const LayerStack stack = read_dump(o.dump);
  if (o.layer >= stack.num_layers()) throw Error(ErrorCode::InvalidArgument, "layer index out of range");
  const PointCloud& cloud = stack.layer(o.layer);

  json result;
  result["config"] = {{"dump", o.dump},
                      {"layer", o.layer},
                      {"estimator", estimator_json(cfg)},
                      {"oracle_queries", o.queries},
                      {"seed", o.seed},
                      {"by_label", o.by_label}};
  json body = estimate_cloud(cloud, cfg, o);
  result.update(body);
  if (o.by_label) {
    json classes = json::array();
    for (const auto& part : split_by_label(cloud)) {
      json c = estimate_cloud(part.cloud, cfg, o);
      c["label"] = part.label;
      classes.push_back(std::move(c));
    }
    result["classes"] = std::move(classes);
  }
  emit_json(result, o.out, out);
  return exit_code::kOk;
}

std::vector<EstimatorConfig> parse_methods(const std::vector<std::string>& names) {
  std::vector<EstimatorConfig> out;
  for (const auto& n : names) out.push_back(parse_estimator(n));
  return out;
}

int cmd_sweep_bias(const BiasOpts& o, std::ostream& out) {
  BiasSweepConfig cfg;
  cfg.dims = o.dims;
  cfg.n = o.n;
  cfg.reps = o.reps;
  cfg.methods = parse_methods(o.methods);
  cfg.seed = o.seed;
  const auto rows = sweep_bias(cfg);
  emit_text(o.out, out, [&](std::ostream& s) { write_sweep_csv(s, rows); });
  return exit_code::kOk;
}

int cmd_sweep_ambient(const AmbientOpts& o, std::ostream& out) {
  AmbientSweepConfig cfg;
  cfg.true_dim = o.true_dim;
  cfg.ambient = o.ambient;
  cfg.n = o.n;
  cfg.reps = o.reps;
  cfg.rotate = o.rotate;
  cfg.methods = parse_methods(o.methods);
  cfg.seed = o.seed;
  const auto rows = sweep_ambient(cfg);
  emit_text(o.out, out, [&](std::ostream& s) { write_sweep_csv(s, rows); });
  return exit_code::kOk;
}

int cmd_layer_analyze(const LayerOpts& o, std::ostream& out) {
  const LayerStack stack = read_dump(o.dump);
  LayerMetricsConfig cfg;
  cfg.gride_scales = o.scales;
  cfg.knn_orders = o.orders;
  cfg.exclude_last = o.exclude_last;
  cfg.oracle_queries = o.oracle_queries;
  cfg.twonn_discard = o.discard;
  cfg.d_max = o.d_max;
  const auto rows = layer_metrics(stack, cfg);

  emit_text(o.csv, out, [&](std::ostream& s) { write_layer_metrics_csv(s, rows, cfg); });
  if (!o.json_out.empty()) {
    json layers = json::array();
    for (const auto& r : rows) {
      json scales = json::array();
      for (const auto& e : r.gride.per_scale) scales.push_back(e.value);
      json knn = json::object();
      for (const auto& k : r.knn) knn[std::to_string(k.order)] = stats_json(k.stats);
      layers.push_back({{"layer", r.layer},
                        {"name", r.name},
                        {"relative_depth", r.relative_depth},
                        {"gride_mean", r.gride.average},
                        {"gride_scales", scales},
                        {"twonn", r.twonn},
                        {"knn", knn},
                        {"cosine", stats_json(r.cosine)},
                        {"norm", stats_json(r.norm)},
                        {"entropy", r.spectrum.entropy},
                        {"effective_rank", r.spectrum.effective_rank},
                        {"rank", r.spectrum.rank},
                        {"oracle", r.oracle ? json(*r.oracle) : json(nullptr)},
                        {"duplicate_fraction", r.duplicate_fraction}});
    }
    json result{{"config",
                 {{"dump", o.dump},
                  {"model", stack.model()},
                  {"exclude_last", o.exclude_last},
                  {"gride_scales", o.scales},
                  {"knn_orders", o.orders},
                  {"oracle_queries", o.oracle_queries},
                  {"twonn_discard", o.discard},
                  {"d_max", o.d_max}}},
                {"layers", layers}};
    emit_json(result, o.json_out, out);
  }
  return exit_code::kOk;
}

struct NetAndBall {
  LipschitzNetwork net;
  PointCloud ball;
};

NetAndBall load_net_and_input(const std::string& net_path, const std::string& ball_path, const std::string& dump) {
  std::optional<PointCloud> input;
  if (!ball_path.empty()) {
    const ManifoldSpec spec = json_guard("ball spec", [&] { return manifold_spec_from_json(read_json_file(ball_path)); });
    input = generate(spec);
  } else if (!dump.empty()) {
    input = read_dump(dump).layer(0);
  } else {
    throw Error(ErrorCode::InvalidArgument, "need --ball or --dump for the network input");
  }
  LipschitzNetwork net = json_guard("network spec", [&] { return network_from_json(read_json_file(net_path), input->dim()); });
  return {std::move(net), std::move(*input)};
}

int cmd_push(const PushOpts& o, std::ostream& out) {
  auto [net, input] = load_net_and_input(o.net, o.ball, o.dump);
  const LayerStack stack = pushforward(net, input, o.model);
  write_dump(stack, o.out);
  out << json{{"out", o.out}, {"layers", stack.num_layers()}, {"network_bound", net.bound()}}.dump() << '\n';
  return exit_code::kOk;
}

int cmd_audit(const AuditOpts& o, std::ostream& out) {
  AuditConfig cfg;
  cfg.estimator = estimator_from(o.method, o.k, o.discard, o.d_max);
  cfg.tolerance = o.tolerance;
  cfg.oracle_tolerance = o.oracle_tolerance;
  cfg.oracle_queries = o.queries;
  cfg.run_oracle = !o.no_oracle;

  std::optional<LayerStack> stack;
  std::optional<double> bound;
  if (!o.net.empty()) {
    auto [net, input] = load_net_and_input(o.net, o.ball, o.dump);
    stack = pushforward(net, input);
    bound = net.bound();
  } else if (!o.dump.empty()) {
    stack = read_dump(o.dump);
  } else {
    throw Error(ErrorCode::InvalidArgument, "audit needs --dump or --net with --ball");
  }
  AuditReport report = audit_monotonicity(*stack, cfg);
  report.network_bound = bound;

  json result = to_json(report);
  result["config"] = {{"dump", o.dump},
                      {"net", o.net},
                      {"ball", o.ball},
                      {"estimator", estimator_json(cfg.estimator)},
                      {"tolerance", cfg.tolerance},
                      {"oracle", cfg.run_oracle},
                      {"oracle_tolerance", cfg.oracle_tolerance},
                      {"oracle_queries", cfg.oracle_queries}};
  emit_json(result, o.out, out);
  return report.violations.empty() ? exit_code::kOk : exit_code::kViolation;
}

}  // namespace

// -- JSON conversions --------------------------------------------------------

ManifoldSpec manifold_spec_from_json(const json& j) {
  ManifoldSpec spec;
  spec.kind = kind_from_string(j.at("kind").get<std::string>());
  spec.ambient_dim = j.at("ambient_dim").get<std::size_t>();
  if (j.contains("intrinsic_dims")) {
    const auto& d = j["intrinsic_dims"];
    spec.intrinsic_dims = d.is_array() ? d.get<std::vector<std::size_t>>() : std::vector<std::size_t>{d.get<std::size_t>()};
  } else if (spec.kind != ManifoldKind::FiniteVocabulary) {
    throw Error(ErrorCode::InvalidArgument, "spec lacks intrinsic_dims");
  } else {
    spec.intrinsic_dims.clear();
  }
  const auto& n = j.at("n_points");
  spec.n_points = n.is_array() ? n.get<std::vector<std::size_t>>() : std::vector<std::size_t>{n.get<std::size_t>()};
  if (spec.kind != ManifoldKind::FiniteVocabulary && spec.n_points.size() == 1 && spec.intrinsic_dims.size() > 1) {
    spec.n_points.assign(spec.intrinsic_dims.size(), spec.n_points[0]);
  }
  if (j.contains("offsets")) spec.offsets = j["offsets"].get<std::vector<std::vector<double>>>();
  spec.rotate = j.value("rotate", false);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.vocabulary_size = j.value("vocabulary_size", std::size_t{0});
  spec.validate();
  return spec;
}

json to_json(const ManifoldSpec& spec) {
  return {{"kind", kind_name(spec.kind)},       {"intrinsic_dims", spec.intrinsic_dims},
          {"ambient_dim", spec.ambient_dim},    {"n_points", spec.n_points},
          {"offsets", spec.offsets},            {"rotate", spec.rotate},
          {"seed", spec.seed},                  {"vocabulary_size", spec.vocabulary_size}};
}

LayerSpec layer_spec_from_json(const json& j) {
  LayerSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    spec.kind = LayerKind::Linear;
    spec.out = j.value("out", std::size_t{0});
    const std::string init = j.value("init", std::string("gaussian"));
    if (init == "gaussian") spec.init = LinearInit::Gaussian;
    else if (init == "orthogonal") spec.init = LinearInit::Orthogonal;
    else if (init == "identity") spec.init = LinearInit::Identity;
    else throw Error(ErrorCode::InvalidArgument, "unknown init '" + init + "'");
    spec.scale = j.value("scale", 1.0);
    spec.bias_std = j.value("bias_std", 0.0);
  } else if (kind == "relu") {
    spec.kind = LayerKind::Relu;
  } else if (kind == "tanh") {
    spec.kind = LayerKind::Tanh;
  } else if (kind == "rmsnorm") {
    spec.kind = LayerKind::RmsNorm;
    spec.gain = j.value("gain", 1.0);
    spec.eps = j.value("eps", 1.0);
  } else if (kind == "residual") {
    spec.kind = LayerKind::Residual;
    for (const auto& inner : j.at("layers")) spec.inner.push_back(layer_spec_from_json(inner));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown layer kind '" + kind + "'");
  }
  return spec;
}

LipschitzNetwork network_from_json(const json& j, std::size_t default_input_dim) {
  const std::size_t input_dim = j.value("input_dim", default_input_dim);
  std::vector<LayerSpec> specs;
  for (const auto& l : j.at("layers")) specs.push_back(layer_spec_from_json(l));
  return build_random_net(input_dim, specs, j.value("seed", std::uint64_t{0}));
}

json to_json(const IdEstimate& est) {
  json params = json::object();
  for (const auto& [k, v] : est.params) params[k] = v;
  return {{"method", std::string(to_string(est.method))},
          {"value", est.value},
          {"stderr", est.std_error},
          {"used_points", est.used_points},
          {"dropped_duplicates", est.dropped_duplicates},
          {"boundary_hit", est.boundary_hit},
          {"params", params}};
}

json to_json(const AuditReport& report) {
  json layers = json::array();
  for (std::size_t l = 0; l < report.per_layer.size(); ++l) {
    const auto& row = report.per_layer[l];
    layers.push_back({{"layer", l},
                      {"estimate", row.estimate},
                      {"oracle", row.oracle ? json(*row.oracle) : json(nullptr)},
                      {"dropped_duplicates", row.dropped_duplicates}});
  }
  const auto list = [](const std::vector<Violation>& vs) {
    json a = json::array();
    for (const auto& v : vs) a.push_back({{"layer", v.layer}, {"increase", v.increase}});
    return a;
  };
  return {{"per_layer", layers},
          {"violations", list(report.violations)},
          {"oracle_violations", list(report.oracle_violations)},
          {"oracle_violation", report.oracle_violation},
          {"network_bound", report.network_bound ? json(*report.network_bound) : json(nullptr)}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intrinsic-dimension estimators and representation-geometry metrics"};
  app.name("idscope");
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Sample a synthetic dataset into a dump directory");
  g->add_option("--spec", gen.spec, "Manifold spec JSON")->required();
  g->add_option("--out", gen.out, "Output dump directory")->required();
  g->add_option("--model", gen.model, "Model name recorded in the manifest");

  EstimateOpts est;
  auto* e = app.add_subcommand("estimate", "Estimate the intrinsic dimension of one dump layer");
  e->add_option("--dump", est.dump, "Dump directory")->required();
  e->add_option("--layer", est.layer, "Layer index");
  e->add_option("--method", est.method, "mle | twonn | twonn-reg | gride | oracle (options as method:k=..,f=..)");
  e->add_option("--k", est.k, "Neighbors for mle, scale for gride");
  e->add_option("--discard", est.discard, "TwoNN discard fraction");
  e->add_option("--d-max", est.d_max, "Gride search bound (0: 10 x ambient)");
  e->add_option("--aggregation", est.aggregation, "MLE aggregation: inverse | mean");
  e->add_option("--queries", est.queries, "Oracle query points");
  e->add_option("--seed", est.seed, "Seed for choosing oracle query points");
  e->add_option("--support-threshold", est.support_threshold, "Duplicate fraction that flags finite support");
  e->add_flag("--by-label", est.by_label, "Also estimate per class label");
  e->add_option("--out", est.out, "Write JSON here instead of stdout");

  BiasOpts bias;
  auto* b = app.add_subcommand("sweep-bias", "Estimated vs true dimension on uniform balls (CSV)");
  b->add_option("--dims", bias.dims)->delimiter(',');
  b->add_option("--n", bias.n);
  b->add_option("--reps", bias.reps);
  b->add_option("--methods", bias.methods)->delimiter(';');
  b->add_option("--seed", bias.seed);
  b->add_option("--out", bias.out, "CSV path (default stdout)");

  AmbientOpts amb;
  auto* a = app.add_subcommand("sweep-ambient", "Fixed true dimension across ambient sizes (CSV)");
  a->add_option("--true-dim", amb.true_dim);
  a->add_option("--ambient", amb.ambient)->delimiter(',');
  a->add_option("--n", amb.n);
  a->add_option("--reps", amb.reps);
  a->add_option("--methods", amb.methods)->delimiter(';');
  a->add_flag("--rotate,!--no-rotate", amb.rotate, "Random orthogonal embedding (default on)");
  a->add_option("--seed", amb.seed);
  a->add_option("--out", amb.out, "CSV path (default stdout)");

  LayerOpts lay;
  auto* l = app.add_subcommand("layer-analyze", "Per-layer ID, NN-distance, cosine, norm and entropy profiles");
  l->add_option("--dump", lay.dump)->required();
  l->add_flag("--exclude-last", lay.exclude_last);
  l->add_option("--scales", lay.scales)->delimiter(',');
  l->add_option("--orders", lay.orders)->delimiter(',');
  l->add_option("--oracle-queries", lay.oracle_queries, "0 disables the pointwise oracle column");
  l->add_option("--discard", lay.discard);
  l->add_option("--d-max", lay.d_max);
  l->add_option("--csv", lay.csv, "CSV path (default stdout)");
  l->add_option("--json", lay.json_out, "JSON path");

  PushOpts push;
  auto* p = app.add_subcommand("push", "Push a cloud through a Lipschitz network into a dump");
  p->add_option("--net", push.net, "Network spec JSON")->required();
  p->add_option("--ball", push.ball, "Manifold spec JSON for the input");
  p->add_option("--dump", push.dump, "Use layer 0 of this dump as input");
  p->add_option("--out", push.out)->required();
  p->add_option("--model", push.model);

  AuditOpts aud;
  auto* u = app.add_subcommand("audit", "Check that layer-wise estimates do not increase (exit 3 if they do)");
  u->add_option("--dump", aud.dump);
  u->add_option("--net", aud.net);
  u->add_option("--ball", aud.ball);
  u->add_option("--method", aud.method);
  u->add_option("--k", aud.k);
  u->add_option("--discard", aud.discard);
  u->add_option("--d-max", aud.d_max);
  u->add_option("--tolerance", aud.tolerance);
  u->add_option("--oracle-tolerance", aud.oracle_tolerance);
  u->add_option("--queries", aud.queries);
  u->add_flag("--no-oracle", aud.no_oracle);
  u->add_option("--out", aud.out);

  std::vector<const char*> argv{"idscope"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (*g) return cmd_generate(gen, out);
    if (*e) return cmd_estimate(est, out);
    if (*b) return cmd_sweep_bias(bias, out);
    if (*a) return cmd_sweep_ambient(amb, out);
    if (*l) return cmd_layer_analyze(lay, out);
    if (*p) return cmd_push(push, out);
    if (*u) return cmd_audit(aud, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return is_data_error(ex.code()) ? exit_code::kData : exit_code::kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code::kData;
  }
  return exit_code::kUsage;
}

}  // namespace idscope
