#pragma once

// File formats. Tensors: JSON {"dims", "layout": "col-major", "data"} or the
// binary "NTDTNSR1" container (u32 order, u32 dims, little-endian doubles).
// Models: JSON {"factors": row arrays, "core": tensor, "ranks", "diagnostics"}.
// Every parse or file failure throws IoError.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "ntd/cone.hpp"
#include "ntd/evaluation.hpp"
#include "ntd/solvers.hpp"
#include "ntd/synth.hpp"

namespace ntd {

using Json = nlohmann::json;

Json tensor_to_json(const DenseTensor& t);
DenseTensor tensor_from_json(const Json& j);

void write_tensor_binary(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor_binary(std::istream& is);

// Binary when `binary`, else JSON.
void write_tensor(const std::string& path, const DenseTensor& t, bool binary = false);
// Detects the format from the leading bytes.
DenseTensor read_tensor(const std::string& path);

Json matrix_to_json(const Mat& m);  // array of rows
Mat matrix_from_json(const Json& j);
// Row arrays, or an order-2 tensor in either tensor format.
Mat read_matrix(const std::string& path);

Json model_to_json(const NtdModel& m);
NtdModel model_from_json(const Json& j);
void write_model(const std::string& path, const NtdModel& m);
NtdModel read_model(const std::string& path);

Json to_json(const AlignmentResult& a);
Json to_json(const AssumptionReport& r);
Json to_json(const SscReport& r);
Json to_json(const RankProfile& p);

// Directory with tensor.json, truth.json and meta.json.
void write_instance(const std::string& dir, const Instance& inst);
Instance read_instance(const std::string& dir);

// "key = value" lines over the SolverConfig fields; '#' starts a comment.
SolverConfig parse_solver_config(std::istream& is, SolverConfig base = {});
SolverConfig read_solver_config(const std::string& path, SolverConfig base = {});

Json read_json(const std::string& path);
// Pretty-printed with a trailing newline.
void write_json(const std::string& path, const Json& j);

}  // namespace ntd
