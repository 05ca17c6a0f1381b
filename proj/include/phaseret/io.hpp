#pragma once

#include "phaseret/baselines.hpp"
#include "phaseret/core.hpp"
#include "phaseret/crb.hpp"
#include "phaseret/fpp.hpp"
#include "phaseret/measurements.hpp"

#include "json.hpp"

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace phaseret {

using Json = nlohmann::json;

/// Thrown when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument when `j` is not an object or has a key
/// outside `allowed`.
void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view context);

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).template get<T>();
}

// Complex vectors are arrays of [re, im] pairs; matrices add their
// dimensions and store entries column-major.
Json to_json(const CVector& v);
Json to_json(const RVector& v);
Json to_json(const RMatrix& a);
Json to_json(const CMatrix& a);
CVector cvector_from_json(const Json& j);
RVector rvector_from_json(const Json& j);
RMatrix rmatrix_from_json(const Json& j);
CMatrix cmatrix_from_json(const Json& j);

Json to_json(const MeasurementEnsemble& ensemble);
MeasurementEnsemble ensemble_from_json(const Json& j);

Json to_json(const ComplexSignal& x);
ComplexSignal signal_from_json(const Json& j);

Json to_json(const HarmonicModel& model);
HarmonicModel harmonic_from_json(const Json& j);

/// What `gen` writes and `solve` / `crb` read.
struct InstanceFile {
  RetrievalInstance instance;
  std::optional<double> snr_db;
  std::optional<HarmonicModel> harmonic;
};

Json to_json(const InstanceFile& file);
InstanceFile instance_from_json(const Json& j);

Json to_json(const FimResult& fim);

// Config objects. Readers start from defaults and override only the keys
// present, rejecting unknown keys.
Json to_json(const conic::SolverSettings& s);
Json to_json(const FppConfig& c);
Json to_json(const BaselineConfig& c);
void update_from_json(conic::SolverSettings& s, const Json& j);
void update_from_json(FppConfig& c, const Json& j);
void update_from_json(BaselineConfig& c, const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; creates parent directories.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace phaseret
