#include "ntd/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace ntd {

namespace {

constexpr char kMagic[8] = {'N', 'T', 'D', 'T', 'N', 'S', 'R', '1'};

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(b.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  std::array<char, sizeof(T)> b;
  if (!is.read(b.data(), sizeof(T))) throw IoError("truncated binary tensor");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

Dims dims_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("dims must be an array");
  Dims d;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw IoError("dims must be nonnegative integers");
    d.push_back(v.get<Index>());
  }
  return d;
}

double number(const Json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw IoError("expected a number");
  return v.get<double>();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

Json modes_json(const ModeSet& s) { return Json(s.modes()); }

ModeSet modes_from(const Json& j) {
  try {
    return ModeSet(j.get<std::vector<int>>());
  } catch (const PreconditionError& e) {
    throw IoError(e.what());
  } catch (const Json::exception& e) {
    throw IoError(e.what());
  }
}

Verdict verdict_from(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "undetermined") return Verdict::undetermined;
  throw IoError("unknown verdict '" + s + "'");
}

}  // namespace

Json tensor_to_json(const DenseTensor& t) {
  return Json{{"dims", t.dims()},
              {"layout", "col-major"},
              {"data", std::vector<double>(t.data().data(), t.data().data() + t.size())}};
}

DenseTensor tensor_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dims") || !j.contains("data")) throw IoError("tensor JSON needs dims and data");
  if (j.contains("layout") && j["layout"] != "col-major") throw IoError("only the col-major layout is supported");
  const Dims d = dims_from_json(j["dims"]);
  const Json& data = j["data"];
  if (!data.is_array() || static_cast<Index>(data.size()) != dims_product(d))
    throw IoError("tensor data length does not match dims");
  DenseTensor t(d);
  for (Index k = 0; k < t.size(); ++k) t.data()(k) = number(data[static_cast<std::size_t>(k)]);
  return t;
}

void write_tensor_binary(std::ostream& os, const DenseTensor& t) {
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
  for (Index n : t.dims()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  for (Index k = 0; k < t.size(); ++k) put_le<double>(os, t.data()(k));
  if (!os) throw IoError("failed writing binary tensor");
}

DenseTensor read_tensor_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not an NTDTNSR1 tensor");
  const auto order = get_le<std::uint32_t>(is);
  if (order > 64) throw IoError("implausible tensor order");
  Dims d;
  for (std::uint32_t k = 0; k < order; ++k) d.push_back(static_cast<Index>(get_le<std::uint32_t>(is)));
  DenseTensor t(d);
  for (Index k = 0; k < t.size(); ++k) t.data()(k) = get_le<double>(is);
  return t;
}

void write_tensor(const std::string& path, const DenseTensor& t, bool binary) {
  if (binary) {
    auto out = open_out(path);
    write_tensor_binary(out, t);
  } else {
    write_json(path, tensor_to_json(t));
  }
}

DenseTensor read_tensor(const std::string& path) {
  auto in = open_in(path);
  char head[8] = {};
  in.read(head, sizeof(head));
  in.clear();
  in.seekg(0);
  if (std::memcmp(head, kMagic, sizeof(kMagic)) == 0) return read_tensor_binary(in);
  return tensor_from_json(read_json(path));
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const Json& j) {
  if (j.is_object()) {
    const DenseTensor t = tensor_from_json(j);
    if (t.order() != 2) throw IoError("expected an order-2 tensor");
    return Eigen::Map<const Mat>(t.data().data(), t.dim(0), t.dim(1));
  }
  if (!j.is_array()) throw IoError("matrix must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw IoError("ragged matrix rows");
    for (Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

Mat read_matrix(const std::string& path) {
  auto in = open_in(path);
  char head[8] = {};
  in.read(head, sizeof(head));
  in.clear();
  in.seekg(0);
  if (std::memcmp(head, kMagic, sizeof(kMagic)) == 0) {
    const DenseTensor t = read_tensor_binary(in);
    if (t.order() != 2) throw IoError("expected an order-2 tensor");
    return Eigen::Map<const Mat>(t.data().data(), t.dim(0), t.dim(1));
  }
  return matrix_from_json(read_json(path));
}

Json model_to_json(const NtdModel& m) {
  Json factors = Json::array();
  for (const auto& u : m.factors) factors.push_back(matrix_to_json(u));
  Json diag = Json::object();
  for (const auto& [k, v] : m.diagnostics) diag[k] = v;
  return Json{{"factors", factors}, {"core", tensor_to_json(m.core)}, {"ranks", m.core.dims()}, {"diagnostics", diag}};
}

NtdModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("factors") || !j.contains("core")) throw IoError("model JSON needs factors and core");
  NtdModel m;
  for (const auto& f : j["factors"]) m.factors.push_back(matrix_from_json(f));
  m.core = tensor_from_json(j["core"]);
  if (static_cast<int>(m.factors.size()) != m.core.order()) throw IoError("model needs one factor per core mode");
  for (std::size_t k = 0; k < m.factors.size(); ++k)
    if (m.factors[k].cols() != m.core.dim(static_cast<int>(k))) throw IoError("factor and core ranks differ");
  if (j.contains("diagnostics")) {
    for (const auto& [k, v] : j["diagnostics"].items()) {
      std::vector<double> vals;
      for (const auto& x : v) vals.push_back(number(x));
      m.diagnostics[k] = vals;
    }
  }
  return m;
}

void write_model(const std::string& path, const NtdModel& m) { write_json(path, model_to_json(m)); }

NtdModel read_model(const std::string& path) { return model_from_json(read_json(path)); }

Json to_json(const AlignmentResult& a) {
  return Json{{"perms", a.perms},
              {"factor_errors", a.factor_errors},
              {"core_error", a.core_error},
              {"matched", a.matched}};
}

Json to_json(const AssumptionReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name}, {"verdict", to_string(c.verdict)}, {"detail", c.detail}});
  return Json{{"assumption", r.assumption}, {"checks", checks}, {"overall", to_string(r.overall)}};
}

Json to_json(const SscReport& r) {
  const auto opt = [](const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); };
  Json verts = Json::array();
  for (const auto& v : r.dual_vertices) verts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  Json j{{"separable", r.separable},
         {"anchors", r.anchors},
         {"ssc1", opt(r.ssc1)},
         {"ssc2", opt(r.ssc2)},
         {"ssc", opt(r.ssc())},
         {"method", r.method == SscMethod::exact_enumeration ? "exact" : "refutation"},
         {"unbounded", r.unbounded},
         {"max_vertex_norm", r.max_vertex_norm},
         {"dual_vertices", verts}};
  j["refutation"] = r.refutation ? Json(std::vector<double>(r.refutation->data(), r.refutation->data() +
                                                                                      r.refutation->size()))
                                 : Json(nullptr);
  return j;
}

Json to_json(const RankProfile& p) { return Json{{"unfolding", p.unfolding}, {"slices", p.slice_ranks}}; }

void write_instance(const std::string& dir, const Instance& inst) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path p(dir);
  write_tensor((p / "tensor.json").string(), inst.tensor);
  write_model((p / "truth.json").string(), inst.truth);
  Json meta{{"assumption", inst.assumption},
            {"seed", inst.seed},
            {"dims", inst.tensor.dims()},
            {"ranks", inst.truth.core.dims()},
            {"report", to_json(inst.report)}};
  if (inst.modes) meta["modes"] = modes_json(*inst.modes);
  if (inst.partition)
    meta["partition"] = Json{{"I", modes_json(inst.partition->I)},
                             {"J", modes_json(inst.partition->J)},
                             {"K", modes_json(inst.partition->K)}};
  write_json((p / "meta.json").string(), meta);
}

Instance read_instance(const std::string& dir) {
  const std::filesystem::path p(dir);
  Instance inst;
  inst.tensor = read_tensor((p / "tensor.json").string());
  inst.truth = read_model((p / "truth.json").string());
  const Json meta = read_json((p / "meta.json").string());
  try {
    inst.assumption = meta.at("assumption").get<std::string>();
    inst.seed = meta.at("seed").get<std::uint64_t>();
    if (meta.contains("modes")) inst.modes = modes_from(meta["modes"]);
    if (meta.contains("partition")) {
      const Json& q = meta["partition"];
      inst.partition = ModePartition{modes_from(q.at("I")), modes_from(q.at("J")), modes_from(q.at("K"))};
    }
    if (meta.contains("report")) {
      const Json& r = meta["report"];
      inst.report.assumption = r.at("assumption").get<std::string>();
      inst.report.overall = verdict_from(r.at("overall").get<std::string>());
      for (const auto& c : r.at("checks"))
        inst.report.checks.push_back({c.at("name").get<std::string>(), verdict_from(c.at("verdict").get<std::string>()),
                                      c.at("detail").get<std::string>()});
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("bad meta.json: ") + e.what());
  }
  if (inst.tensor.dims() != inst.truth.dims()) throw IoError("tensor and truth dimensions differ");
  return inst;
}

SolverConfig parse_solver_config(std::istream& is, SolverConfig c) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto eq = line.find('=');
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string{};
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw IoError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    try {
      std::size_t used = 0;
      if (key == "max_sweeps") c.max_sweeps = std::stoi(val, &used);
      else if (key == "det_rel_tol") c.det_rel_tol = std::stod(val, &used);
      else if (key == "feas_tol") c.feas_tol = std::stod(val, &used);
      else if (key == "restarts") c.restarts = std::stoi(val, &used);
      else if (key == "seed") c.seed = std::stoull(val, &used);
      else throw IoError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::logic_error&) {
      throw IoError("config line " + std::to_string(lineno) + ": bad value '" + val + "'");
    }
  }
  return c;
}

SolverConfig read_solver_config(const std::string& path, SolverConfig base) {
  auto in = open_in(path);
  return parse_solver_config(in, base);
}

Json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError("cannot parse '" + path + "': " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace ntd
