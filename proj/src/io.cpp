#include "smid/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "smid/error.hpp"

namespace smid {

NLOHMANN_JSON_SERIALIZE_ENUM(Activation, {{Activation::Identity, "identity"},
                                          {Activation::Relu, "relu"},
                                          {Activation::Sigmoid, "sigmoid"}})

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

// JSON has no infinities; they travel as null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from(const Json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

Json numbers(const std::vector<double>& xs) {
  Json arr = Json::array();
  for (double x : xs) arr.push_back(number(x));
  return arr;
}

std::vector<double> numbers_from(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from(x));
  return out;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::uint64_t parse_hex64(std::string_view s) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x, 16);
  if (ec != std::errc{} || ptr != s.data() + s.size()) parse_fail("bad hex value '" + std::string(s) + "'");
  return x;
}

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) parse_fail("bad number '" + std::string(s) + "'");
  return x;
}

template <typename T>
T parse_int(std::string_view s) {
  T x{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) parse_fail("bad integer '" + std::string(s) + "'");
  return x;
}

template <typename T>
void grid_to_json(Json& j, const Grid<T>& m) {
  j = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (T v : m.row(r)) {
      if constexpr (std::is_floating_point_v<T>) {
        row.push_back(number(v));
      } else {
        row.push_back(static_cast<int>(v));
      }
    }
    j.push_back(std::move(row));
  }
}

template <typename T>
void grid_from_json(const Json& j, Grid<T>& m) {
  if (!j.is_array()) parse_fail("matrix must be an array of rows");
  m = Grid<T>{};
  for (const auto& row : j) {
    if (!row.is_array()) parse_fail("matrix row must be an array");
    std::vector<T> values;
    for (const auto& v : row) {
      if constexpr (std::is_floating_point_v<T>) {
        values.push_back(number_from(v));
      } else {
        const int bit = v.get<int>();
        if (bit != 0 && bit != 1) parse_fail("binary matrix entries must be 0 or 1");
        values.push_back(static_cast<T>(bit));
      }
    }
    if (m.rows() > 0 && values.size() != m.cols()) parse_fail("ragged matrix");
    m.append_row(values);
  }
}

template <typename T>
void read_field(const Json& j, const char* key, T& into) {
  if (j.contains(key)) j.at(key).get_to(into);
}

Json histogram_json(const std::map<int, int>& h) {
  Json j = Json::object();
  for (const auto& [k, v] : h) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

void to_json(Json& j, const Matrix& m) { grid_to_json(j, m); }
void from_json(const Json& j, Matrix& m) { grid_from_json(j, m); }
void to_json(Json& j, const BinaryMatrix& m) { grid_to_json(j, m); }
void from_json(const Json& j, BinaryMatrix& m) { grid_from_json(j, m); }

void to_json(Json& j, const StimulationModel& model) {
  j = Json{{"n_cameras", model.n_cameras},   {"n_active", model.n_active},
           {"n_potential", model.n_potential}, {"stim", model.stim},
           {"priors", model.priors},         {"p_detect", model.p_detect},
           {"p_classify", model.p_classify}, {"conf_floor", model.conf_floor},
           {"patience", model.patience},     {"fingerprint", hex64(fingerprint(model))}};
}

void from_json(const Json& j, StimulationModel& model) {
  model = StimulationModel{};
  j.at("stim").get_to(model.stim);
  model.n_active = static_cast<int>(model.stim.rows());
  model.n_cameras = static_cast<int>(model.stim.cols());
  read_field(j, "n_cameras", model.n_cameras);
  read_field(j, "n_active", model.n_active);
  model.n_potential = model.n_active;
  read_field(j, "n_potential", model.n_potential);
  if (j.contains("priors")) {
    j.at("priors").get_to(model.priors);
  } else {
    model.priors.assign(model.stim.rows(), 1.0 / static_cast<double>(model.stim.rows()));
  }
  read_field(j, "p_detect", model.p_detect);
  read_field(j, "p_classify", model.p_classify);
  read_field(j, "conf_floor", model.conf_floor);
  read_field(j, "patience", model.patience);
}

void to_json(Json& j, const GaussianMixture& mix) {
  j = Json{{"weights", numbers(mix.weights)}, {"means", mix.means}, {"variances", mix.variances}};
}

void from_json(const Json& j, GaussianMixture& mix) {
  mix.weights = numbers_from(j.at("weights"));
  j.at("means").get_to(mix.means);
  j.at("variances").get_to(mix.variances);
}

void to_json(Json& j, const NetSpec& spec) {
  j = Json{{"widths", spec.widths},         {"activations", spec.activations}, {"bottleneck", spec.bottleneck},
           {"epochs", spec.epochs},         {"batch_size", spec.batch_size},   {"rho", spec.rho},
           {"epsilon", spec.epsilon}};
}

void from_json(const Json& j, NetSpec& spec) {
  spec = NetSpec{};
  j.at("widths").get_to(spec.widths);
  j.at("activations").get_to(spec.activations);
  j.at("bottleneck").get_to(spec.bottleneck);
  read_field(j, "epochs", spec.epochs);
  read_field(j, "batch_size", spec.batch_size);
  read_field(j, "rho", spec.rho);
  read_field(j, "epsilon", spec.epsilon);
}

void to_json(Json& j, const NeuralNet& net) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.spec.n_layers(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.bias(l);
    layers.push_back(Json{{"weights", std::vector<double>(w.begin(), w.end())},
                          {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  j = Json{{"spec", net.spec},
           {"layers", std::move(layers)},
           {"optimizer", Json{{"grad_sq_avg", net.grad_sq_avg}, {"step_sq_avg", net.step_sq_avg}}}};
}

void from_json(const Json& j, NeuralNet& net) {
  NetSpec spec = j.at("spec").get<NetSpec>();
  check_spec(spec);
  net = init_net(spec, 0);
  const auto& layers = j.at("layers");
  if (layers.size() != spec.n_layers()) parse_fail("layer count does not match the spec");
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const auto w = layers[l].at("weights").get<std::vector<double>>();
    const auto b = layers[l].at("bias").get<std::vector<double>>();
    if (w.size() != net.weights(l).size() || b.size() != net.bias(l).size()) parse_fail("layer shape mismatch");
    std::copy(w.begin(), w.end(), net.params.begin() + static_cast<std::ptrdiff_t>(net.weight_offset[l]));
    std::copy(b.begin(), b.end(), net.params.begin() + static_cast<std::ptrdiff_t>(net.bias_offset[l]));
  }
  if (j.contains("optimizer")) {
    const auto& opt = j.at("optimizer");
    opt.at("grad_sq_avg").get_to(net.grad_sq_avg);
    opt.at("step_sq_avg").get_to(net.step_sq_avg);
    if (net.grad_sq_avg.size() != net.n_params() || net.step_sq_avg.size() != net.n_params()) {
      parse_fail("optimizer state size mismatch");
    }
  }
}

void to_json(Json& j, const FitReport& fit) {
  j = Json{{"log_likelihood", number(fit.log_likelihood)},
           {"iterations", fit.iterations},
           {"converged", fit.converged},
           {"trace", numbers(fit.trace)},
           {"reinitialized", fit.reinitialized},
           {"n_components", fit.n_components}};
}

void from_json(const Json& j, FitReport& fit) {
  fit.log_likelihood = number_from(j.at("log_likelihood"));
  j.at("iterations").get_to(fit.iterations);
  j.at("converged").get_to(fit.converged);
  fit.trace = numbers_from(j.at("trace"));
  j.at("reinitialized").get_to(fit.reinitialized);
  j.at("n_components").get_to(fit.n_components);
}

void to_json(Json& j, const MetricsReport& m) {
  j = Json{{"e_r", m.e_r},
           {"e_r_at", m.e_r_at},
           {"e_r_md", m.e_r_md},
           {"at_unnormalized", m.at_unnormalized},
           {"d_kl", m.d_kl ? Json(*m.d_kl) : Json(nullptr)},
           {"m_hat", m.m_hat},
           {"m_hat_eff", m.m_hat_eff},
           {"detected_count", m.detected_count}};
}

void from_json(const Json& j, MetricsReport& m) {
  j.at("e_r").get_to(m.e_r);
  j.at("e_r_at").get_to(m.e_r_at);
  j.at("e_r_md").get_to(m.e_r_md);
  j.at("at_unnormalized").get_to(m.at_unnormalized);
  m.d_kl = j.at("d_kl").is_null() ? std::nullopt : std::optional<double>(j.at("d_kl").get<double>());
  j.at("m_hat").get_to(m.m_hat);
  j.at("m_hat_eff").get_to(m.m_hat_eff);
  j.at("detected_count").get_to(m.detected_count);
}

void to_json(Json& j, const ObservationDataset& data) {
  j = Json{{"model_fingerprint", hex64(data.model_fingerprint)},
           {"seed", data.seed},
           {"conf_floor", data.conf_floor},
           {"values", data.values},
           {"events", data.events}};
}

void from_json(const Json& j, ObservationDataset& data) {
  data = ObservationDataset{};
  data.model_fingerprint = parse_hex64(j.at("model_fingerprint").get<std::string>());
  j.at("seed").get_to(data.seed);
  j.at("conf_floor").get_to(data.conf_floor);
  j.at("values").get_to(data.values);
  read_field(j, "events", data.events);
  if (data.has_labels() && data.events.size() != data.size()) parse_fail("one event label per row expected");
}

void to_json(Json& j, const ExperimentConfig& c) {
  j = Json{{"n_cameras", c.n_cameras},
           {"n_active", c.n_active},
           {"n_potential", c.n_potential},
           {"n_observations", c.n_observations},
           {"p_detect", c.p_detect},
           {"p_classify", c.p_classify},
           {"conf_floor", c.conf_floor},
           {"patience", c.patience},
           {"priors", c.priors},
           {"stim", c.stim},
           {"methods", c.methods},
           {"encoder_widths", c.encoder_widths},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"train_fraction", c.train_fraction},
           {"origin_rule", c.origin_rule == OriginRule::Drop ? "drop" : "promote"},
           {"kl_reading", c.kl_reading == KlReading::Formula ? "formula" : "detected"},
           {"seed", c.seed}};
}

void from_json(const Json& j, ExperimentConfig& c) {
  if (!j.is_object()) parse_fail("config must be an object");
  static const std::vector<std::string> known{
      "n_cameras", "n_active",       "n_potential", "n_observations", "p_detect",       "p_classify",
      "conf_floor", "patience",      "priors",      "stim",           "methods",        "encoder_widths",
      "epochs",     "batch_size",    "train_fraction", "origin_rule", "kl_reading",     "seed"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) parse_fail("unknown config key '" + key + "'");
  }
  c = ExperimentConfig{};
  read_field(j, "n_cameras", c.n_cameras);
  read_field(j, "n_active", c.n_active);
  read_field(j, "n_potential", c.n_potential);
  read_field(j, "n_observations", c.n_observations);
  read_field(j, "p_detect", c.p_detect);
  read_field(j, "p_classify", c.p_classify);
  read_field(j, "conf_floor", c.conf_floor);
  read_field(j, "patience", c.patience);
  read_field(j, "priors", c.priors);
  read_field(j, "stim", c.stim);
  read_field(j, "methods", c.methods);
  read_field(j, "encoder_widths", c.encoder_widths);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "train_fraction", c.train_fraction);
  read_field(j, "seed", c.seed);
  if (j.contains("origin_rule")) {
    const auto rule = j.at("origin_rule").get<std::string>();
    if (rule != "promote" && rule != "drop") parse_fail("origin_rule must be 'promote' or 'drop'");
    c.origin_rule = rule == "drop" ? OriginRule::Drop : OriginRule::PromoteArgmax;
  }
  if (j.contains("kl_reading")) {
    const auto reading = j.at("kl_reading").get<std::string>();
    if (reading != "detected" && reading != "formula") parse_fail("kl_reading must be 'detected' or 'formula'");
    c.kl_reading = reading == "formula" ? KlReading::Formula : KlReading::Detected;
  }
  if (!c.stim.empty()) {
    c.n_active = static_cast<int>(c.stim.size());
    c.n_cameras = static_cast<int>(c.stim.front().size());
  }
  for (const auto& m : c.methods) method_from_name(m);
}

Json report_json(const IdentificationReport& r, ReportFormat format) {
  Json j{{"method", r.provenance.method},
         {"m_hat", r.m_hat},
         {"m_hat_eff", r.m_hat_eff},
         {"raw", r.raw},
         {"raw_weights", r.raw_weights},
         {"effective", r.effective},
         {"effective_weights", r.effective_weights},
         {"effective_index", r.effective_index},
         {"centroids", r.centroids},
         {"selection", Json{{"candidates", r.selection_candidates}, {"scores", numbers(r.selection_scores)}}},
         {"fit", r.fit},
         {"reducer_loss", numbers(r.reducer_loss)},
         {"seeds", Json{{"master", r.provenance.master_seed},
                        {"split", r.provenance.split_seed},
                        {"reducer", r.provenance.reducer_seed},
                        {"mixture", r.provenance.mixture_seed}}}};
  if (format.timings) {
    j["timings_ms"] = Json{{"reducer", r.provenance.reducer_ms},
                           {"mixture", r.provenance.mixture_ms},
                           {"total", r.provenance.total_ms}};
  }
  return j;
}

IdentificationReport report_from_json(const Json& j) {
  IdentificationReport r;
  j.at("method").get_to(r.provenance.method);
  j.at("m_hat").get_to(r.m_hat);
  j.at("m_hat_eff").get_to(r.m_hat_eff);
  j.at("raw").get_to(r.raw);
  j.at("raw_weights").get_to(r.raw_weights);
  j.at("effective").get_to(r.effective);
  j.at("effective_weights").get_to(r.effective_weights);
  j.at("effective_index").get_to(r.effective_index);
  j.at("centroids").get_to(r.centroids);
  const auto& sel = j.at("selection");
  sel.at("candidates").get_to(r.selection_candidates);
  r.selection_scores = numbers_from(sel.at("scores"));
  j.at("fit").get_to(r.fit);
  r.reducer_loss = numbers_from(j.at("reducer_loss"));
  const auto& seeds = j.at("seeds");
  seeds.at("master").get_to(r.provenance.master_seed);
  seeds.at("split").get_to(r.provenance.split_seed);
  seeds.at("reducer").get_to(r.provenance.reducer_seed);
  seeds.at("mixture").get_to(r.provenance.mixture_seed);
  if (j.contains("timings_ms")) {
    const auto& t = j.at("timings_ms");
    t.at("reducer").get_to(r.provenance.reducer_ms);
    t.at("mixture").get_to(r.provenance.mixture_ms);
    t.at("total").get_to(r.provenance.total_ms);
  }
  if (r.effective.rows() != r.effective_weights.size() || r.raw.rows() != r.raw_weights.size()) {
    parse_fail("report matrices and weights disagree");
  }
  return r;
}

Json single_json(const SingleReport& s, ReportFormat format) {
  Json methods = Json::array();
  for (const auto& o : s.outcomes) {
    methods.push_back(Json{{"method", o.method}, {"report", report_json(o.report, format)}, {"metrics", o.metrics}});
  }
  return Json{{"seed", s.seed},
              {"model_seed", s.model_seed},
              {"data_seed", s.data_seed},
              {"model", s.model},
              {"methods", std::move(methods)}};
}

Json campaign_json(const McCampaign& c, ReportFormat format) {
  Json records = Json::array();
  for (const auto& rec : c.records) {
    Json r{{"index", rec.index}, {"seed", rec.seed}};
    if (rec.result) {
      r["result"] = single_json(*rec.result, format);
    } else {
      r["error"] = rec.error;
    }
    records.push_back(std::move(r));
  }
  Json aggregates = Json::array();
  for (const auto& a : c.aggregates) {
    aggregates.push_back(Json{{"method", a.method},
                              {"m_hat_histogram", histogram_json(a.m_hat_histogram)},
                              {"m_hat_eff_histogram", histogram_json(a.m_hat_eff_histogram)},
                              {"e_r", a.e_r},
                              {"d_kl", a.d_kl},
                              {"median_e_r", a.e_r.empty() ? Json(nullptr) : Json(median(a.e_r))},
                              {"failures", a.failures}});
  }
  return Json{{"config", c.config}, {"runs", c.runs}, {"records", std::move(records)}, {"aggregates", std::move(aggregates)}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_dataset_csv(std::ostream& out, const ObservationDataset& data) {
  out << "#smid-dataset N=" << data.dim() << " D=" << data.size() << " conf_floor=" << shortest(data.conf_floor)
      << " fingerprint=" << hex64(data.model_fingerprint) << " seed=" << data.seed
      << " labels=" << (data.has_labels() ? 1 : 0) << "\n";
  std::string line;
  for (std::size_t d = 0; d < data.size(); ++d) {
    line.clear();
    const auto row = data.values.row(d);
    for (std::size_t n = 0; n < row.size(); ++n) {
      if (n > 0) line += ',';
      line += shortest(row[n]);
    }
    if (data.has_labels()) {
      line += ',';
      line += std::to_string(data.events[d]);
    }
    line += '\n';
    out << line;
  }
}

ObservationDataset read_dataset_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#smid-dataset", 0) != 0) parse_fail("missing dataset header");
  std::map<std::string, std::string> fields;
  std::istringstream hs(header.substr(std::string("#smid-dataset").size()));
  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) parse_fail("bad header field '" + token + "'");
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  for (const char* key : {"N", "D", "conf_floor", "fingerprint", "seed", "labels"}) {
    if (!fields.count(key)) parse_fail(std::string("header lacks ") + key);
  }
  ObservationDataset data;
  const auto n = parse_int<std::size_t>(fields["N"]);
  const auto count = parse_int<std::size_t>(fields["D"]);
  data.conf_floor = parse_double(fields["conf_floor"]);
  data.model_fingerprint = parse_hex64(fields["fingerprint"]);
  data.seed = parse_int<std::uint64_t>(fields["seed"]);
  const bool labels = fields["labels"] == "1";
  data.values = Matrix(count, n);
  if (labels) data.events.resize(count);

  std::string line;
  for (std::size_t d = 0; d < count; ++d) {
    if (!std::getline(in, line)) parse_fail("dataset ends after " + std::to_string(d) + " rows");
    std::string_view rest(line);
    const std::size_t expected = n + (labels ? 1 : 0);
    for (std::size_t c = 0; c < expected; ++c) {
      const auto comma = rest.find(',');
      const bool last = c + 1 == expected;
      if (last != (comma == std::string_view::npos)) parse_fail("row " + std::to_string(d) + " has the wrong width");
      const auto cell = rest.substr(0, comma);
      if (c < n) {
        const double v = parse_double(cell);
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteData, "non-finite value in row " + std::to_string(d));
        data.values(d, c) = v;
      } else {
        data.events[d] = parse_int<int>(cell);
      }
      if (!last) rest.remove_prefix(comma + 1);
    }
  }
  return data;
}

void write_histogram_csv(std::ostream& out, const std::vector<MethodAggregate>& aggregates) {
  out << "method,kind,count,runs\n";
  for (const auto& a : aggregates) {
    for (const auto& [k, v] : a.m_hat_histogram) out << a.method << ",m_hat," << k << ',' << v << '\n';
    for (const auto& [k, v] : a.m_hat_eff_histogram) out << a.method << ",m_hat_eff," << k << ',' << v << '\n';
  }
}

void write_ecdf_csv(std::ostream& out, const std::vector<MethodAggregate>& aggregates) {
  out << "method,metric,threshold,fraction\n";
  for (const auto& a : aggregates) {
    const std::pair<const char*, const std::vector<double>*> metrics[] = {{"e_r", &a.e_r}, {"d_kl", &a.d_kl}};
    for (const auto& [name, samples] : metrics) {
      if (samples->empty()) continue;
      for (const auto& p : ecdf(*samples)) {
        out << a.method << ',' << name << ',' << shortest(p.threshold) << ',' << shortest(p.fraction) << '\n';
      }
    }
  }
}

std::string sig3(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", value);
  return buf;
}

std::string format_table(const SingleReport& s) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "method" << std::right << std::setw(7) << "M_hat" << std::setw(10) << "M_hat_eff"
     << std::setw(11) << "e_r" << std::setw(11) << "D_KL" << '\n';
  for (const auto& o : s.outcomes) {
    os << std::left << std::setw(10) << o.method << std::right << std::setw(7) << o.metrics.m_hat << std::setw(10)
       << o.metrics.m_hat_eff << std::setw(11) << sig3(o.metrics.e_r) << std::setw(11)
       << (o.metrics.d_kl ? sig3(*o.metrics.d_kl) : std::string("/")) << '\n';
  }
  return os.str();
}

std::string format_campaign_table(const McCampaign& c) {
  std::ostringstream os;
  const int m = c.config.stim.empty() ? c.config.n_active : static_cast<int>(c.config.stim.size());
  os << std::left << std::setw(10) << "method" << std::right << std::setw(8) << "runs" << std::setw(13) << "median e_r"
     << std::setw(14) << "P(M_eff = M)" << std::setw(10) << "failed" << '\n';
  for (const auto& a : c.aggregates) {
    os << std::left << std::setw(10) << a.method << std::right << std::setw(8) << a.e_r.size() << std::setw(13)
       << (a.e_r.empty() ? std::string("/") : sig3(median(a.e_r))) << std::setw(14)
       << sig3(fraction_with_count(a, m)) << std::setw(10) << a.failures << '\n';
  }
  return os.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << text;
}

}  // namespace smid
