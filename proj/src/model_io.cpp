#include "weldpred/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "weldpred/error.hpp"
#include "weldpred/image.hpp"

namespace weldpred {

using nlohmann::json;

const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::mlr: return "mlr";
    case ModelKind::svr: return "svr";
    case ModelKind::mlp: return "mlp";
    default: return "cnn";
  }
}

ModelKind parse_kind(std::string_view name) {
  if (name == "mlr") return ModelKind::mlr;
  if (name == "svr") return ModelKind::svr;
  if (name == "mlp") return ModelKind::mlp;
  if (name == "cnn") return ModelKind::cnn;
  throw Error(Errc::invalid_argument,
              "unknown model kind \"" + std::string(name) + "\" (expected mlr|svr|mlp|cnn)");
}

// ------------------------------------------------------------- config parsing

namespace {

json parse_config(const std::string& text) {
  if (text.empty()) return json::object();
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(Errc::invalid_argument, "model config must be a JSON object");
  return j;
}

// Pulls a numeric field and erases it, so leftovers can be reported.
template <typename T>
void take(json& j, const char* key, T& into) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer())
      throw Error(Errc::invalid_argument, std::string("config key \"") + key + "\" must be an integer");
  } else {
    if (!it->is_number())
      throw Error(Errc::invalid_argument, std::string("config key \"") + key + "\" must be a number");
  }
  into = it->get<T>();
  j.erase(it);
}

void reject_leftovers(const json& j, const char* kind) {
  if (j.empty()) return;
  std::string keys;
  for (auto& [k, v] : j.items()) keys += keys.empty() ? k : ", " + k;
  throw Error(Errc::invalid_argument,
              std::string("unknown ") + kind + " config key(s): " + keys);
}

SvrHyperParams svr_config(json j) {
  SvrHyperParams hp;
  take(j, "c", hp.c);
  take(j, "epsilon", hp.epsilon);
  take(j, "gamma", hp.gamma);
  take(j, "kkt_tol", hp.kkt_tol);
  take(j, "max_passes", hp.max_passes);
  reject_leftovers(j, "svr");
  hp.validate();
  return hp;
}

MlpConfig mlp_config(json j) {
  MlpConfig cfg;
  take(j, "input_width", cfg.input_width);
  take(j, "hidden_width", cfg.hidden_width);
  take(j, "hidden_count", cfg.hidden_count);
  take(j, "learning_rate", cfg.learning_rate);
  take(j, "dropout_p", cfg.dropout_p);
  take(j, "epochs", cfg.epochs);
  take(j, "batch_size", cfg.batch_size);
  reject_leftovers(j, "mlp");
  cfg.validate();
  return cfg;
}

CnnConfig cnn_config(json j) {
  CnnConfig cfg;
  take(j, "conv1_filters", cfg.conv1_filters);
  take(j, "conv2_filters", cfg.conv2_filters);
  take(j, "fc_width", cfg.fc_width);
  take(j, "learning_rate", cfg.learning_rate);
  take(j, "dropout_p", cfg.dropout_p);
  take(j, "epochs", cfg.epochs);
  take(j, "batch_size", cfg.batch_size);
  take(j, "augment_k", cfg.augment_k);
  take(j, "scale_max", cfg.scale_max);
  reject_leftovers(j, "cnn");
  cfg.validate();
  return cfg;
}

}  // namespace

GeneratorParams generator_params_from_json(const std::string& text) {
  json j = parse_config(text);
  GeneratorParams p;
  take(j, "energy_a", p.energy_a);
  take(j, "energy_b", p.energy_b);
  take(j, "amp_a", p.amp_a);
  take(j, "amp_b", p.amp_b);
  take(j, "press_a", p.press_a);
  take(j, "press_b", p.press_b);
  take(j, "noise_energy", p.noise_energy);
  take(j, "noise_amplitude", p.noise_amplitude);
  take(j, "noise_pressure", p.noise_pressure);
  take(j, "min_wires", p.min_wires);
  take(j, "max_wires", p.max_wires);
  if (auto it = j.find("alphabet"); it != j.end()) {
    if (!it->is_array() || it->empty())
      throw Error(Errc::invalid_argument, "config key \"alphabet\" must be a non-empty array");
    p.alphabet.clear();
    for (auto& v : *it) {
      if (!v.is_number())
        throw Error(Errc::invalid_argument, "alphabet entries must be numbers");
      p.alphabet.push_back(v.get<double>());
    }
    j.erase(it);
  }
  reject_leftovers(j, "generator");
  p.validate();
  return p;
}

ModelArtifact train_model(ModelKind kind, const Dataset& train, const std::string& config_json,
                          std::uint64_t seed) {
  json cfg = parse_config(config_json);
  ModelArtifact art;
  art.kind = kind;
  art.seed = seed;
  art.train_fingerprint = dataset_fingerprint(train);
  switch (kind) {
    case ModelKind::mlr:
      reject_leftovers(cfg, "mlr");
      art.model = fit_mlr(train);
      break;
    case ModelKind::svr:
      art.model = fit_svr(train, svr_config(std::move(cfg)));
      break;
    case ModelKind::mlp:
      art.model = train_mlp(train, mlp_config(std::move(cfg)), seed);
      break;
    case ModelKind::cnn:
      art.model = train_cnn(train, cnn_config(std::move(cfg)), seed);
      break;
  }
  return art;
}

// -------------------------------------------------------------- serialization

namespace {

constexpr int kFormatVersion = 1;

template <std::size_t N>
json arr(const std::array<double, N>& a) {
  return json(std::vector<double>(a.begin(), a.end()));
}

template <std::size_t N>
std::array<double, N> to_arr(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw Error(Errc::bad_model, std::string("artifact field ") + what + " has the wrong shape");
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

std::vector<double> to_vec(const json& j, const char* what) {
  if (!j.is_array())
    throw Error(Errc::bad_model, std::string("artifact field ") + what + " must be an array");
  return j.get<std::vector<double>>();
}

json mlr_to_json(const LinearModel& m) {
  return {{"input_mean", arr(m.input_mean)},
          {"input_scale", arr(m.input_scale)},
          {"weights", m.weights.a},
          {"intercept", arr(m.intercept)},
          {"ridge_used", m.ridge_used}};
}

LinearModel mlr_from_json(const json& j) {
  LinearModel m;
  m.input_mean = to_arr<kWireSlots>(j.at("input_mean"), "input_mean");
  m.input_scale = to_arr<kWireSlots>(j.at("input_scale"), "input_scale");
  m.weights = Matrix(kWireSlots, 3);
  m.weights.a = to_vec(j.at("weights"), "weights");
  if (m.weights.a.size() != kWireSlots * 3)
    throw Error(Errc::bad_model, "artifact weights have the wrong shape");
  m.intercept = to_arr<3>(j.at("intercept"), "intercept");
  m.ridge_used = j.at("ridge_used").get<bool>();
  return m;
}

json svr_to_json(const SvrModel& m) {
  json outputs = json::array();
  for (const SvrOutput& o : m.outputs)
    outputs.push_back({{"beta", o.beta},
                       {"bias", o.bias},
                       {"converged", o.converged},
                       {"passes", o.passes},
                       {"kkt_violation", o.kkt_violation}});
  json sv = json::array();
  for (const auto& v : m.sv) sv.push_back(std::vector<double>(v.begin(), v.end()));
  return {{"hyperparams",
           {{"c", m.hp.c},
            {"epsilon", m.hp.epsilon},
            {"gamma", m.hp.gamma},
            {"kkt_tol", m.hp.kkt_tol},
            {"max_passes", m.hp.max_passes}}},
          {"input_mean", arr(m.input_mean)},
          {"input_scale", arr(m.input_scale)},
          {"y_mean", arr(m.y_mean)},
          {"y_scale", arr(m.y_scale)},
          {"support_vectors", sv},
          {"outputs", outputs}};
}

SvrModel svr_from_json(const json& j) {
  SvrModel m;
  const json& hp = j.at("hyperparams");
  m.hp.c = hp.at("c").get<double>();
  m.hp.epsilon = hp.at("epsilon").get<double>();
  m.hp.gamma = hp.at("gamma").get<double>();
  m.hp.kkt_tol = hp.at("kkt_tol").get<double>();
  m.hp.max_passes = hp.at("max_passes").get<int>();
  m.input_mean = to_arr<kWireSlots>(j.at("input_mean"), "input_mean");
  m.input_scale = to_arr<kWireSlots>(j.at("input_scale"), "input_scale");
  m.y_mean = to_arr<3>(j.at("y_mean"), "y_mean");
  m.y_scale = to_arr<3>(j.at("y_scale"), "y_scale");
  for (const json& row : j.at("support_vectors"))
    m.sv.push_back(to_arr<kWireSlots>(row, "support_vectors"));
  const json& outputs = j.at("outputs");
  if (!outputs.is_array() || outputs.size() != 3)
    throw Error(Errc::bad_model, "artifact needs exactly 3 svr outputs");
  for (int k = 0; k < 3; ++k) {
    const json& o = outputs[k];
    m.outputs[k].beta = to_vec(o.at("beta"), "beta");
    if (m.outputs[k].beta.size() != m.sv.size())
      throw Error(Errc::bad_model, "svr beta/support size mismatch");
    m.outputs[k].bias = o.at("bias").get<double>();
    m.outputs[k].converged = o.at("converged").get<bool>();
    m.outputs[k].passes = o.at("passes").get<int>();
    m.outputs[k].kkt_violation = o.at("kkt_violation").get<double>();
  }
  return m;
}

json net_to_json(TrainedNet& net) {
  json cfg;
  if (net.is_cnn()) {
    const CnnConfig& c = std::get<CnnConfig>(net.config);
    cfg = {{"conv1_filters", c.conv1_filters}, {"conv2_filters", c.conv2_filters},
           {"fc_width", c.fc_width},           {"learning_rate", c.learning_rate},
           {"dropout_p", c.dropout_p},         {"epochs", c.epochs},
           {"batch_size", c.batch_size},       {"augment_k", c.augment_k},
           {"scale_max", c.scale_max}};
  } else {
    const MlpConfig& c = std::get<MlpConfig>(net.config);
    cfg = {{"input_width", c.input_width},     {"hidden_width", c.hidden_width},
           {"hidden_count", c.hidden_count},   {"learning_rate", c.learning_rate},
           {"dropout_p", c.dropout_p},         {"epochs", c.epochs},
           {"batch_size", c.batch_size}};
  }
  json params, state;
  for (const ParamRef& p : net.net.params()) params[p.name] = *p.value;
  for (const StateRef& s : net.net.state()) state[s.name] = *s.data;
  return {{"config", cfg},
          {"y_mean", arr(net.y_mean)},
          {"y_scale", arr(net.y_scale)},
          {"loss_history", net.loss_history},
          {"valid_loss_history", net.valid_loss_history},
          {"params", params},
          {"state", state}};
}

TrainedNet net_from_json(const json& j, bool cnn) {
  TrainedNet net;
  const json& cfg = j.at("config");
  if (cnn) {
    CnnConfig c;
    c.conv1_filters = cfg.at("conv1_filters").get<int>();
    c.conv2_filters = cfg.at("conv2_filters").get<int>();
    c.fc_width = cfg.at("fc_width").get<int>();
    c.learning_rate = cfg.at("learning_rate").get<double>();
    c.dropout_p = cfg.at("dropout_p").get<double>();
    c.epochs = cfg.at("epochs").get<int>();
    c.batch_size = cfg.at("batch_size").get<int>();
    c.augment_k = cfg.at("augment_k").get<int>();
    c.scale_max = cfg.at("scale_max").get<double>();
    net.config = c;
    net.net = build_cnn(c, nullptr);
  } else {
    MlpConfig c;
    c.input_width = cfg.at("input_width").get<int>();
    c.hidden_width = cfg.at("hidden_width").get<int>();
    c.hidden_count = cfg.at("hidden_count").get<int>();
    c.learning_rate = cfg.at("learning_rate").get<double>();
    c.dropout_p = cfg.at("dropout_p").get<double>();
    c.epochs = cfg.at("epochs").get<int>();
    c.batch_size = cfg.at("batch_size").get<int>();
    net.config = c;
    net.net = build_mlp(c, nullptr);
  }
  net.y_mean = to_arr<3>(j.at("y_mean"), "y_mean");
  net.y_scale = to_arr<3>(j.at("y_scale"), "y_scale");
  net.loss_history = to_vec(j.at("loss_history"), "loss_history");
  net.valid_loss_history = to_vec(j.at("valid_loss_history"), "valid_loss_history");
  const json& params = j.at("params");
  for (const ParamRef& p : net.net.params()) {
    std::vector<double> v = to_vec(params.at(p.name), p.name.c_str());
    if (v.size() != p.value->size())
      throw Error(Errc::bad_model, "artifact parameter " + p.name + " has the wrong size");
    *p.value = std::move(v);
  }
  const json& state = j.at("state");
  for (const StateRef& s : net.net.state()) {
    std::vector<double> v = to_vec(state.at(s.name), s.name.c_str());
    if (v.size() != s.data->size())
      throw Error(Errc::bad_model, "artifact state " + s.name + " has the wrong size");
    *s.data = std::move(v);
  }
  return net;
}

}  // namespace

void save_model(const ModelArtifact& art, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = kind_name(art.kind);
  doc["seed"] = art.seed;
  doc["train_fingerprint"] = art.train_fingerprint;
  switch (art.kind) {
    case ModelKind::mlr: doc["model"] = mlr_to_json(std::get<LinearModel>(art.model)); break;
    case ModelKind::svr: doc["model"] = svr_to_json(std::get<SvrModel>(art.model)); break;
    default:
      doc["model"] = net_to_json(const_cast<TrainedNet&>(std::get<TrainedNet>(art.model)));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::parse, path.string() + ": not valid JSON");
  try {
    if (!doc.is_object() || doc.at("format_version").get<int>() != kFormatVersion)
      throw Error(Errc::bad_model, path.string() + ": unsupported format_version");
    ModelArtifact art;
    art.kind = parse_kind(doc.at("kind").get<std::string>());
    art.seed = doc.at("seed").get<std::uint64_t>();
    art.train_fingerprint = doc.at("train_fingerprint").get<std::string>();
    const json& m = doc.at("model");
    switch (art.kind) {
      case ModelKind::mlr: art.model = mlr_from_json(m); break;
      case ModelKind::svr: art.model = svr_from_json(m); break;
      case ModelKind::mlp: art.model = net_from_json(m, false); break;
      case ModelKind::cnn: art.model = net_from_json(m, true); break;
    }
    return art;
  } catch (const json::exception& e) {
    throw Error(Errc::bad_model, path.string() + ": malformed artifact (" + e.what() + ")");
  }
}

std::array<double, 3> predict_model(ModelArtifact& art, const WireVector& x) {
  switch (art.kind) {
    case ModelKind::mlr: return std::get<LinearModel>(art.model).predict(x);
    case ModelKind::svr: return std::get<SvrModel>(art.model).predict(x);
    case ModelKind::mlp: return std::get<TrainedNet>(art.model).predict(x.sections);
    default: {
      TrainedNet& net = std::get<TrainedNet>(art.model);
      const double scale_max = std::get<CnnConfig>(net.config).scale_max;
      return net.predict(upscale(encode(x, scale_max)).pixels);
    }
  }
}

Predictor make_predictor(ModelArtifact& art) {
  return [&art](const WireVector& x) { return predict_model(art, x); };
}

std::string training_summary(const ModelArtifact& art) {
  std::ostringstream os;
  os << "kind: " << kind_name(art.kind) << "\nseed: " << art.seed
     << "\ntrain_fingerprint: " << art.train_fingerprint << '\n';
  switch (art.kind) {
    case ModelKind::mlr: {
      const LinearModel& m = std::get<LinearModel>(art.model);
      os << "solver: qr least squares" << (m.ridge_used ? " + ridge fallback" : "") << '\n';
      break;
    }
    case ModelKind::svr: {
      const SvrModel& m = std::get<SvrModel>(art.model);
      for (int k = 0; k < 3; ++k) {
        const SvrOutput& o = m.outputs[k];
        int nsv = 0;
        for (double b : o.beta) nsv += b != 0.0;
        os << param_name(static_cast<Param>(k)) << ": passes " << o.passes << ", kkt violation "
           << o.kkt_violation << ", support vectors " << nsv << '/' << o.beta.size()
           << (o.converged ? ", converged" : ", NOT converged") << '\n';
      }
      break;
    }
    default: {
      const TrainedNet& n = std::get<TrainedNet>(art.model);
      os << "epochs: " << n.loss_history.size();
      if (!n.loss_history.empty())
        os << ", final training mse (standardized): " << n.loss_history.back();
      if (!n.valid_loss_history.empty())
        os << ", final validation mse: " << n.valid_loss_history.back();
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace weldpred
