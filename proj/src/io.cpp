#include "pdmp/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pdmp/errors.hpp"

namespace pdmp {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

double parse_double(std::string_view field, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw IoError(where + ": cannot parse number '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what,
                bool require_all) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(what + ": unknown key '" + key + "'");
  }
  if (require_all) {
    for (const auto& key : allowed) {
      if (!j.contains(key)) throw ConfigError(what + ": missing key '" + key + "'");
    }
  }
}

template <class T>
T get_field(const json& j, const char* key, const std::string& what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": bad value for '" + key + "': " + e.what());
  }
}

void write_split_csv(const std::string& path, const Split& split) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < split.size(); ++i) {
    out << split.labels[i];
    for (const auto& f : split.features) {
      for (double v : f.row(i)) out << ',' << format_double(v);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

Split read_split_csv(const std::string& path, const DatasetSpec& spec, std::size_t expected) {
  std::ifstream in = open_in(path);
  Split split;
  std::vector<std::vector<double>> cols(spec.modalities.size());
  std::size_t width = 1;
  for (const auto& m : spec.modalities) width += m.dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != width) {
      throw IoError(where + ": expected " + std::to_string(width) + " fields, got " +
                    std::to_string(fields.size()));
    }
    const double label = parse_double(fields[0], where);
    if (label < 0 || label >= spec.num_classes || label != static_cast<int>(label)) {
      throw IoError(where + ": label out of range");
    }
    split.labels.push_back(static_cast<int>(label));
    std::size_t f = 1;
    for (std::size_t m = 0; m < spec.modalities.size(); ++m) {
      for (std::size_t d = 0; d < spec.modalities[m].dim; ++d) cols[m].push_back(parse_double(fields[f++], where));
    }
  }
  if (split.labels.size() != expected) {
    throw IoError(path + ": expected " + std::to_string(expected) + " rows, got " +
                  std::to_string(split.labels.size()));
  }
  for (std::size_t m = 0; m < spec.modalities.size(); ++m) {
    split.features.emplace_back(expected, spec.modalities[m].dim, std::move(cols[m]));
  }
  return split;
}

std::string join_path(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string read_text(const std::string& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

json to_json(const DatasetSpec& spec) {
  json mods = json::array();
  for (const auto& m : spec.modalities) {
    mods.push_back({{"dim", m.dim},
                    {"class_sep", m.class_sep},
                    {"noise_sigma", m.noise_sigma},
                    {"warp_depth", m.warp_depth}});
  }
  return {{"num_classes", spec.num_classes}, {"modalities", mods},     {"n_train", spec.n_train},
          {"n_val", spec.n_val},             {"n_test", spec.n_test}, {"seed", spec.seed}};
}

DatasetSpec dataset_spec_from_json(const json& j) {
  const std::string what = "dataset spec";
  check_keys(j, {"num_classes", "modalities", "n_train", "n_val", "n_test", "seed"}, what, true);
  DatasetSpec s;
  s.num_classes = get_field<int>(j, "num_classes", what);
  s.n_train = get_field<std::size_t>(j, "n_train", what);
  s.n_val = get_field<std::size_t>(j, "n_val", what);
  s.n_test = get_field<std::size_t>(j, "n_test", what);
  s.seed = get_field<std::uint64_t>(j, "seed", what);
  for (const auto& m : j.at("modalities")) {
    check_keys(m, {"dim", "class_sep", "noise_sigma", "warp_depth"}, "modality spec", true);
    s.modalities.push_back({get_field<std::size_t>(m, "dim", what), get_field<double>(m, "class_sep", what),
                            get_field<double>(m, "noise_sigma", what), get_field<int>(m, "warp_depth", what)});
  }
  return s;
}

void write_dataset(const Dataset& data, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const json header = {{"spec", to_json(data.spec)},
                       {"splits", {{"train", data.train.size()}, {"val", data.val.size()}, {"test", data.test.size()}}},
                       {"row_layout", "label, modality-0 features, modality-1 features, ..."}};
  write_text(join_path(dir, "header.json"), header.dump(2) + "\n");
  write_split_csv(join_path(dir, "train.csv"), data.train);
  write_split_csv(join_path(dir, "val.csv"), data.val);
  write_split_csv(join_path(dir, "test.csv"), data.test);
}

Dataset read_dataset(const std::string& dir) {
  json header;
  try {
    header = json::parse(read_text(join_path(dir, "header.json")));
  } catch (const json::parse_error& e) {
    throw IoError(dir + "/header.json: " + e.what());
  }
  Dataset ds;
  try {
    ds.spec = dataset_spec_from_json(header.at("spec"));
    const auto& splits = header.at("splits");
    ds.train = read_split_csv(join_path(dir, "train.csv"), ds.spec, splits.at("train").get<std::size_t>());
    ds.val = read_split_csv(join_path(dir, "val.csv"), ds.spec, splits.at("val").get<std::size_t>());
    ds.test = read_split_csv(join_path(dir, "test.csv"), ds.spec, splits.at("test").get<std::size_t>());
  } catch (const json::exception& e) {
    throw IoError(dir + "/header.json: " + e.what());
  } catch (const ConfigError& e) {
    throw IoError(dir + "/header.json: " + e.what());
  }
  return ds;
}

json to_json(const Strategy& strategy) {
  return std::visit(Overloaded{
                        [](const Vanilla&) { return json{{"kind", "vanilla"}}; },
                        [](const Pdmp& s) { return json{{"kind", "pdmp"}, {"gamma_p", s.gamma_p}}; },
                        [](const Balanced& s) { return json{{"kind", "balanced"}, {"alpha", s.alpha}}; },
                        [](const NaiveLrScale& s) { return json{{"kind", "naive_lr_scale"}, {"k", s.k}}; },
                    },
                    strategy);
}

Strategy strategy_from_json(const json& j) {
  const std::string what = "strategy";
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("strategy must be an object with a 'kind'");
  const auto kind = get_field<std::string>(j, "kind", what);
  if (kind == "vanilla") {
    check_keys(j, {"kind"}, what, true);
    return Vanilla{};
  }
  if (kind == "pdmp") {
    check_keys(j, {"kind", "gamma_p"}, what, true);
    return Pdmp{get_field<double>(j, "gamma_p", what), {}};
  }
  if (kind == "balanced") {
    check_keys(j, {"kind", "alpha"}, what, false);
    return Balanced{j.contains("alpha") ? get_field<double>(j, "alpha", what) : 1.0};
  }
  if (kind == "naive_lr_scale") {
    check_keys(j, {"kind", "k"}, what, true);
    return NaiveLrScale{get_field<double>(j, "k", what)};
  }
  throw ConfigError("unknown strategy kind '" + kind + "'");
}

json to_json(const TrainConfig& c) {
  return {{"dataset", c.dataset},
          {"fusion", to_string(c.fusion)},
          {"encoder_widths", c.encoder_widths},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"strategy", to_json(c.strategy)},
          {"seed", c.seed},
          {"eval_every", c.eval_every},
          {"scale_head_partitions", c.scale_head_partitions}};
}

TrainConfig train_config_from_json(const json& j) {
  const std::string what = "config";
  check_keys(j,
             {"dataset", "fusion", "encoder_widths", "epochs", "batch_size", "learning_rate", "momentum",
              "weight_decay", "strategy", "seed", "eval_every", "scale_head_partitions"},
             what, false);
  TrainConfig c;
  if (j.contains("dataset")) c.dataset = get_field<std::string>(j, "dataset", what);
  if (j.contains("fusion")) {
    try {
      c.fusion = parse_fusion(get_field<std::string>(j, "fusion", what));
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("encoder_widths")) c.encoder_widths = get_field<std::vector<std::size_t>>(j, "encoder_widths", what);
  if (j.contains("epochs")) c.epochs = get_field<int>(j, "epochs", what);
  if (j.contains("batch_size")) c.batch_size = get_field<std::size_t>(j, "batch_size", what);
  if (j.contains("learning_rate")) c.learning_rate = get_field<double>(j, "learning_rate", what);
  if (j.contains("momentum")) c.momentum = get_field<double>(j, "momentum", what);
  if (j.contains("weight_decay")) c.weight_decay = get_field<double>(j, "weight_decay", what);
  if (j.contains("strategy")) c.strategy = strategy_from_json(j.at("strategy"));
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", what);
  if (j.contains("eval_every")) c.eval_every = get_field<int>(j, "eval_every", what);
  if (j.contains("scale_head_partitions")) c.scale_head_partitions = get_field<bool>(j, "scale_head_partitions", what);
  validate(c);
  return c;
}

TrainConfig read_train_config(const std::string& path) {
  try {
    return train_config_from_json(json::parse(read_text(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json to_json(const ModalityProfile& p) {
  return {{"performance_dominant", p.performance_dominant},
          {"optimization_dominant", p.optimization_dominant},
          {"unimodal_final_acc", p.unimodal_final_acc},
          {"unimodal_early_acc", p.unimodal_early_acc},
          {"multimodal_branch_acc", p.multimodal_branch_acc},
          {"method_used", to_string(p.method_used)},
          {"subset_fraction", p.subset_fraction}};
}

ModalityProfile profile_from_json(const json& j) {
  const std::string what = "profile";
  check_keys(j,
             {"performance_dominant", "optimization_dominant", "unimodal_final_acc", "unimodal_early_acc",
              "multimodal_branch_acc", "method_used", "subset_fraction"},
             what, true);
  ModalityProfile p;
  p.performance_dominant = get_field<std::size_t>(j, "performance_dominant", what);
  p.optimization_dominant = get_field<std::size_t>(j, "optimization_dominant", what);
  p.unimodal_final_acc = get_field<std::vector<double>>(j, "unimodal_final_acc", what);
  p.unimodal_early_acc = get_field<std::vector<double>>(j, "unimodal_early_acc", what);
  p.multimodal_branch_acc = get_field<std::vector<double>>(j, "multimodal_branch_acc", what);
  try {
    p.method_used = parse_dominance_method(get_field<std::string>(j, "method_used", what));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  p.subset_fraction = get_field<double>(j, "subset_fraction", what);
  const std::size_t k = p.unimodal_final_acc.size();
  if (k == 0 || p.performance_dominant >= k || p.optimization_dominant >= k) {
    throw ConfigError("profile: dominant indices out of range");
  }
  return p;
}

ModalityProfile read_profile(const std::string& path) {
  try {
    return profile_from_json(json::parse(read_text(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_metrics_csv(std::ostream& out, const MetricsLog& log, std::size_t k) {
  out << "epoch,train_loss,val_acc";
  for (std::size_t i = 0; i < k; ++i) out << ",branch_acc_" << i;
  out << ",w_mean";
  for (std::size_t i = 0; i < k; ++i) out << ",share_" << i;
  out << '\n';
  for (const auto& r : log.records) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_acc);
    for (std::size_t i = 0; i < k; ++i) out << ',' << (i < r.branch_acc.size() ? format_double(r.branch_acc[i]) : "");
    out << ',' << (r.w_mean ? format_double(*r.w_mean) : "");
    for (std::size_t i = 0; i < k; ++i) out << ',' << (i < r.shares.size() ? format_double(r.shares[i]) : "");
    out << '\n';
  }
}

void write_metrics_csv(const std::string& path, const MetricsLog& log, std::size_t k) {
  std::ofstream out = open_out(path);
  write_metrics_csv(out, log, k);
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_curves_csv(const std::string& path, const AnalysisResult& analysis) {
  std::ofstream out = open_out(path);
  const auto& curves = analysis.unimodal_curves;
  out << "epoch";
  for (std::size_t m = 0; m < curves.size(); ++m) out << ",unimodal_acc_" << m;
  out << '\n';
  const std::size_t epochs = curves.empty() ? 0 : curves.front().size();
  for (std::size_t e = 0; e < epochs; ++e) {
    out << e + 1;
    for (const auto& c : curves) out << ',' << format_double(c[e]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_summary_csv(const std::string& path, const ExperimentTable& table) {
  std::ofstream out = open_out(path);
  out << "strategy,gamma_p,mean_acc,std_acc,mean_macro_f1,runs,diverged\n";
  for (const auto& r : table.rows) {
    out << '"' << r.strategy << "\"," << format_double(r.gamma_p) << ',' << format_double(r.mean_acc) << ','
        << format_double(r.std_acc) << ',' << format_double(r.mean_macro_f1) << ',' << r.runs << ',' << r.diverged
        << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_runs_csv(const std::string& path, const ExperimentTable& table) {
  std::ofstream out = open_out(path);
  out << "strategy,gamma_p,seed,test_acc,test_macro_f1,diverged\n";
  for (const auto& r : table.runs) {
    out << '"' << r.strategy << "\"," << format_double(r.gamma_p) << ',' << r.seed << ','
        << format_double(r.log.test_acc) << ',' << format_double(r.log.test_macro_f1) << ','
        << (r.diverged ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_checkpoint(const std::string& stem, const Parameters& params) {
  json blocks = json::array();
  for_each_block(params, [&](const BlockRef& ref, const Matrix& m) {
    blocks.push_back({{"name", ref.name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  json enc = json::array();
  for (const auto& e : params.encoders) {
    json widths = json::array();
    for (const auto& l : e.layers) widths.push_back(l.weight.rows());
    enc.push_back({{"input_dim", e.input_dim()}, {"widths", widths}});
  }
  const json header = {{"fusion", to_string(params.head.fusion)},
                       {"num_modalities", params.num_modalities()},
                       {"num_classes", params.num_classes()},
                       {"encoders", enc},
                       {"blocks", blocks}};
  write_text(stem + ".json", header.dump(2) + "\n");
  std::ofstream out = open_out(stem + ".csv");
  out << "block,row,col,value\n";
  for_each_block(params, [&](const BlockRef& ref, const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) out << ref.name << ',' << r << ',' << c << ',' << format_double(m(r, c)) << '\n';
  });
  if (!out) throw IoError("failed writing '" + stem + ".csv'");
}

Parameters read_checkpoint(const std::string& stem) {
  json header;
  try {
    header = json::parse(read_text(stem + ".json"));
  } catch (const json::parse_error& e) {
    throw IoError(stem + ".json: " + e.what());
  }
  ModelConfig mc;
  std::vector<std::size_t> widths;
  try {
    mc.fusion = parse_fusion(header.at("fusion").get<std::string>());
    mc.num_classes = header.at("num_classes").get<int>();
    for (const auto& e : header.at("encoders")) {
      mc.input_dims.push_back(e.at("input_dim").get<std::size_t>());
      widths = e.at("widths").get<std::vector<std::size_t>>();
    }
  } catch (const std::exception& e) {
    throw IoError(stem + ".json: " + e.what());
  }
  mc.encoder_widths = widths;
  Parameters params = zeros_like(init_model(mc, Rng(0)));
  std::vector<double> values;
  std::ifstream in = open_in(stem + ".csv");
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4) throw IoError(stem + ".csv:" + std::to_string(lineno) + ": expected 4 fields");
    values.push_back(parse_double(fields[3], stem + ".csv:" + std::to_string(lineno)));
  }
  try {
    unflatten(values, params);
  } catch (const DimensionError& e) {
    throw IoError(stem + ".csv: " + e.what());
  }
  return params;
}

}  // namespace pdmp
