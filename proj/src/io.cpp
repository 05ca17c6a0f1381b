#include "phaseret/io.hpp"

#include "phaseret/errors.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

namespace phaseret {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view context) {
  if (!j.is_object()) throw std::invalid_argument(std::string(context) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) throw std::invalid_argument(std::string(context) + ": unknown key '" + item.key() + "'");
  }
}

namespace {

Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Json matrix_header(Eigen::Index rows, Eigen::Index cols) {
  return Json{{"rows", rows}, {"cols", cols}, {"layout", "column-major"}};
}

void check_size(const Json& data, Eigen::Index rows, Eigen::Index cols) {
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("matrix data length does not match rows * cols");
  }
}

}  // namespace

Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

Json to_json(const RVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const RMatrix& a) {
  Json out = matrix_header(a.rows(), a.cols());
  Json data = Json::array();
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) data.push_back(a(r, c));
  out["data"] = std::move(data);
  return out;
}

Json to_json(const CMatrix& a) {
  Json out = matrix_header(a.rows(), a.cols());
  Json data = Json::array();
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) data.push_back({a(r, c).real(), a(r, c).imag()});
  out["data"] = std::move(data);
  return out;
}

CVector cvector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("complex vector must be an array of [re, im] pairs");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = complex_from_json(j[i]);
  return v;
}

RVector rvector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("real vector must be an array of numbers");
  RVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

RMatrix rmatrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  check_size(data, rows, cols);
  RMatrix a(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) a(r, c) = data[k++].get<double>();
  return a;
}

CMatrix cmatrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  check_size(data, rows, cols);
  CMatrix a(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) a(r, c) = complex_from_json(data[k++]);
  return a;
}

Json to_json(const MeasurementEnsemble& ensemble) {
  return Json{{"kind", to_string(ensemble.kind())},
              {"seed", ensemble.seed()},
              {"n", ensemble.n()},
              {"m", ensemble.m()},
              {"columns", to_json(ensemble.columns())}};
}

MeasurementEnsemble ensemble_from_json(const Json& j) {
  check_keys(j, {"kind", "seed", "n", "m", "columns"}, "ensemble");
  CMatrix cols = cmatrix_from_json(j.at("columns"));
  if (j.contains("n") && j.at("n").get<Eigen::Index>() != cols.rows()) {
    throw DimensionMismatch("ensemble: n does not match the stored columns");
  }
  if (j.contains("m") && j.at("m").get<Eigen::Index>() != cols.cols()) {
    throw DimensionMismatch("ensemble: m does not match the stored columns");
  }
  const EnsembleKind kind = ensemble_kind_from_string(j.value("kind", std::string("custom")));
  return MeasurementEnsemble(std::move(cols), kind, j.value("seed", std::uint64_t{0}));
}

Json to_json(const ComplexSignal& x) { return Json{{"n", x.size()}, {"values", to_json(x.values())}}; }

ComplexSignal signal_from_json(const Json& j) {
  check_keys(j, {"n", "values"}, "signal");
  ComplexSignal x(cvector_from_json(j.at("values")));
  if (j.contains("n") && j.at("n").get<Eigen::Index>() != x.size()) {
    throw DimensionMismatch("signal: n does not match the stored values");
  }
  return x;
}

Json to_json(const HarmonicModel& model) {
  return Json{{"n", model.n}, {"frequencies", to_json(model.frequencies)}, {"amplitudes", to_json(model.amplitudes)}};
}

HarmonicModel harmonic_from_json(const Json& j) {
  check_keys(j, {"n", "frequencies", "amplitudes"}, "harmonic");
  HarmonicModel model;
  model.n = j.at("n").get<Eigen::Index>();
  model.frequencies = rvector_from_json(j.at("frequencies"));
  model.amplitudes = j.contains("amplitudes") ? cvector_from_json(j.at("amplitudes"))
                                              : CVector(CVector::Ones(model.frequencies.size()));
  model.validate();
  return model;
}

Json to_json(const InstanceFile& file) {
  const RetrievalInstance& inst = file.instance;
  Json j{{"ensemble", to_json(inst.ensemble)}, {"y", to_json(inst.y)}, {"sigma_n", inst.sigma_n}};
  if (file.snr_db) j["snr_db"] = *file.snr_db;
  if (inst.truth) j["truth"] = to_json(*inst.truth);
  if (file.harmonic) j["harmonic"] = to_json(*file.harmonic);
  return j;
}

InstanceFile instance_from_json(const Json& j) {
  check_keys(j, {"ensemble", "y", "sigma_n", "snr_db", "truth", "harmonic"}, "instance");
  std::optional<ComplexSignal> truth;
  if (j.contains("truth")) truth = signal_from_json(j.at("truth"));
  InstanceFile file{RetrievalInstance{ensemble_from_json(j.at("ensemble")), rvector_from_json(j.at("y")),
                                      j.value("sigma_n", 0.0), std::move(truth)},
                    std::nullopt, std::nullopt};
  if (j.contains("snr_db")) file.snr_db = j.at("snr_db").get<double>();
  if (j.contains("harmonic")) file.harmonic = harmonic_from_json(j.at("harmonic"));
  file.instance.validate();
  return file;
}

Json to_json(const FimResult& fim) {
  Json j{{"parametrization", to_string(fim.parametrization)},
         {"sigma_n", fim.sigma_n},
         {"rank", fim.rank},
         {"dimension", fim.fim.rows()},
         {"crb_trace", fim.trace()},
         {"crb_trace_db", to_db(fim.trace())},
         {"eigenvalues", to_json(fim.eigenvalues)},
         {"fim", to_json(fim.fim)},
         {"crb", to_json(fim.crb)},
         {"null_basis", to_json(fim.null_basis)}};
  if (fim.crb_theta) {
    j["crb_theta"] = to_json(*fim.crb_theta);
    j["crb_theta_trace_db"] = to_db(fim.crb_theta->trace());
  }
  if (fim.crb_b) {
    j["crb_b"] = to_json(*fim.crb_b);
    j["crb_b_trace_db"] = to_db(fim.crb_b->trace());
  }
  if (fim.parametrization == Parametrization::amp_phase) j["schur_used_pinv"] = fim.schur_used_pinv;
  return j;
}

Json to_json(const conic::SolverSettings& s) {
  return Json{{"feastol", s.feastol},
              {"abstol", s.abstol},
              {"reltol", s.reltol},
              {"max_iter", s.max_iter},
              {"step_fraction", s.step_fraction}};
}

Json to_json(const FppConfig& c) {
  Json j{{"lambda", c.lambda},
         {"epsilon", c.epsilon ? Json(*c.epsilon) : Json(nullptr)},
         {"lambda1", c.lambda1},
         {"lambda2", c.lambda2},
         {"outer_tol", c.outer_tol},
         {"outer_abs_tol", c.outer_abs_tol},
         {"max_outer", c.max_outer},
         {"init", to_string(c.init)},
         {"init_seed", c.init_seed},
         {"restarts", c.restarts},
         {"inner", to_json(c.inner)}};
  if (c.initial_point) j["initial_point"] = to_json(*c.initial_point);
  return j;
}

Json to_json(const BaselineConfig& c) {
  Json j{{"max_iter", c.max_iter},
         {"tol", c.tol},
         {"mu_max", c.schedule.mu_max},
         {"tau0", c.schedule.tau0},
         {"init", to_string(c.init)},
         {"init_seed", c.init_seed}};
  if (c.initial_point) j["initial_point"] = to_json(*c.initial_point);
  return j;
}

void update_from_json(conic::SolverSettings& s, const Json& j) {
  check_keys(j, {"feastol", "abstol", "reltol", "max_iter", "step_fraction"}, "inner");
  read_if(j, "feastol", s.feastol);
  read_if(j, "abstol", s.abstol);
  read_if(j, "reltol", s.reltol);
  read_if(j, "max_iter", s.max_iter);
  read_if(j, "step_fraction", s.step_fraction);
}

void update_from_json(FppConfig& c, const Json& j) {
  check_keys(j,
             {"lambda", "epsilon", "lambda1", "lambda2", "outer_tol", "outer_abs_tol", "max_outer", "init",
              "init_seed", "restarts", "inner", "initial_point"},
             "fpp");
  read_if(j, "lambda", c.lambda);
  if (j.contains("epsilon")) {
    const Json& e = j.at("epsilon");
    c.epsilon = e.is_null() ? std::nullopt : std::optional<double>(e.get<double>());
  }
  read_if(j, "lambda1", c.lambda1);
  read_if(j, "lambda2", c.lambda2);
  read_if(j, "outer_tol", c.outer_tol);
  read_if(j, "outer_abs_tol", c.outer_abs_tol);
  read_if(j, "max_outer", c.max_outer);
  if (j.contains("init")) c.init = init_kind_from_string(j.at("init").get<std::string>());
  read_if(j, "init_seed", c.init_seed);
  read_if(j, "restarts", c.restarts);
  if (j.contains("inner")) update_from_json(c.inner, j.at("inner"));
  if (j.contains("initial_point")) c.initial_point = cvector_from_json(j.at("initial_point"));
}

void update_from_json(BaselineConfig& c, const Json& j) {
  check_keys(j, {"max_iter", "tol", "mu_max", "tau0", "init", "init_seed", "initial_point"}, "baseline");
  read_if(j, "max_iter", c.max_iter);
  read_if(j, "tol", c.tol);
  read_if(j, "mu_max", c.schedule.mu_max);
  read_if(j, "tau0", c.schedule.tau0);
  if (j.contains("init")) c.init = init_kind_from_string(j.at("init").get<std::string>());
  read_if(j, "init_seed", c.init_seed);
  if (j.contains("initial_point")) c.initial_point = cvector_from_json(j.at("initial_point"));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace phaseret
