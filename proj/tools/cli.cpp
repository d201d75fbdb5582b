#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <locale>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ntd/io.hpp"
#include "ntd/procedures.hpp"

namespace ntd::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const std::vector<std::string> kProcedures{"0", "1", "2", "3", "4", "d0", "d1", "d3", "sep-d"};

// "3,4" (1-based) -> {2, 3}.
ModeSet parse_modes(const std::string& s) {
  std::vector<int> modes;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw PreconditionError("bad mode list '" + s + "'");
    }
    if (used != item.size() || v < 1) throw PreconditionError("bad mode list '" + s + "'");
    modes.push_back(v - 1);
  }
  std::sort(modes.begin(), modes.end());
  if (std::adjacent_find(modes.begin(), modes.end()) != modes.end())
    throw PreconditionError("repeated mode in '" + s + "'");
  return ModeSet(modes);
}

// "I|J|K", each a 1-based mode list.
ModePartition parse_partition(const std::string& s) {
  const auto a = s.find('|');
  const auto b = a == std::string::npos ? a : s.find('|', a + 1);
  if (b == std::string::npos || s.find('|', b + 1) != std::string::npos)
    throw PreconditionError("partition must look like I|J|K, e.g. 1|3,4|2");
  return {parse_modes(s.substr(0, a)), parse_modes(s.substr(a + 1, b - a - 1)), parse_modes(s.substr(b + 1))};
}

Json modes_json(const ModeSet& m) {
  Json j = Json::array();
  for (int k : m) j.push_back(k + 1);
  return j;
}

Json partition_json(const ModePartition& p) {
  return Json{{"I", modes_json(p.I)}, {"J", modes_json(p.J)}, {"K", modes_json(p.K)}};
}

Json one_based(const Json& arr) {
  Json out = Json::array();
  for (const auto& v : arr) out.push_back(v.get<Index>() + 1);
  return out;
}

Json alignment_json(const AlignmentResult& a) {
  Json j = to_json(a);
  Json perms = Json::array();
  for (const auto& p : j["perms"]) perms.push_back(one_based(p));
  j["perms"] = perms;
  return j;
}

void print(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

bool is_bundle(const std::string& path) { return fs::is_directory(path); }

struct ProcedureArgs {
  std::vector<Index> slice_index;  // 1-based
  std::optional<ModeSet> modes;
  std::optional<ModePartition> partition;
};

ModePartition default_partition(int order) {
  std::vector<int> j;
  for (int k = 2; k < order; ++k) j.push_back(k);
  return {ModeSet{0}, ModeSet(j), ModeSet{1}};
}

NtdModel run_procedure(const std::string& id, const DenseTensor& t, const Dims& ranks, const SolverConfig& cfg,
                       const ProcedureArgs& a) {
  std::vector<Index> idx;
  for (Index i : a.slice_index) {
    if (i < 1) throw PreconditionError("slice indices are 1-based");
    idx.push_back(i - 1);
  }
  const auto no_index = [&] {
    if (!idx.empty()) throw PreconditionError("procedure " + id + " takes no --slice-index");
  };
  const auto at = [&](std::size_t k) { return idx.size() > k ? std::optional<Index>(idx[k]) : std::nullopt; };

  if (id == "0") return no_index(), procedure0(t, ranks, cfg);
  if (id == "1") {
    if (idx.size() > 2) throw PreconditionError("procedure 1 takes --slice-index i3[,i2]");
    return procedure1(t, ranks, at(1), at(0), cfg);
  }
  if (id == "2") return no_index(), procedure2(t, ranks, cfg);
  if (id == "3") {
    if (idx.size() > 1) throw PreconditionError("procedure 3 takes one slice index");
    return procedure3(t, ranks, at(0), cfg);
  }
  if (id == "4") return no_index(), procedure4(t, ranks, cfg);
  if (id == "d0") {
    no_index();
    if (!a.modes) throw PreconditionError("procedure d0 needs --modes");
    return procedure_d0(t, ranks, *a.modes, cfg);
  }
  if (id == "d1") return no_index(), procedure_d1(t, ranks, {}, cfg);
  if (id == "d3") {
    const ModePartition p = a.partition.value_or(default_partition(t.order()));
    std::optional<std::vector<Index>> i_J;
    if (!idx.empty()) i_J = idx;
    return procedure_d3(t, ranks, p, i_J, cfg);
  }
  if (id == "sep-d") return no_index(), separable_orderd(t, ranks, cfg.feas_tol);
  throw PreconditionError("unknown procedure '" + id + "'");
}

// Locale-independent, 17 significant digits.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct GenOpts {
  std::string assumption, out, modes, partition;
  std::vector<Index> dims, ranks;
  std::uint64_t seed = 0;
};

int cmd_gen(const GenOpts& o, std::ostream& out) {
  std::optional<ModeSet> modes;
  std::optional<ModePartition> part;
  if (!o.modes.empty()) modes = parse_modes(o.modes);
  if (!o.partition.empty()) part = parse_partition(o.partition);
  const Instance inst = gen_instance(o.assumption, o.dims, o.ranks, o.seed, modes, part);
  write_instance(o.out, inst);
  Json j{{"out", o.out}, {"assumption", inst.assumption}, {"seed", inst.seed}, {"report", to_json(inst.report)}};
  if (inst.modes) j["modes"] = modes_json(*inst.modes);
  if (inst.partition) j["partition"] = partition_json(*inst.partition);
  print(out, j);
  return ok;
}

struct CheckOpts {
  std::string file;
  double p = 0, p1 = 0, p2 = 0;
  Index r1 = 0, r2 = 0;
  std::uint64_t seed = 0;
};

int cmd_check(const std::string& what, const CheckOpts& o, std::ostream& out) {
  if (what == "dims-ok") return print(out, Json{{"ok", counterexample_dims_ok(o.r1, o.r2)}}), ok;
  if (what == "kron-sufficient")
    return print(out, Json{{"ok", kron_ssc_sufficient(o.r1, o.p1, o.r2, o.p2)}}), ok;

  const Mat h = read_matrix(o.file);
  if (what == "ssc") {
    SscOptions so;
    so.refute_seed = o.seed;
    Json j = to_json(check_ssc(h, so));
    j["anchors"] = one_based(j["anchors"]);
    return print(out, j), ok;
  }
  if (what == "separable") {
    const SeparableResult s = check_separable(h);
    Json anchors = Json::array();
    for (Index a : s.anchors) anchors.push_back(a + 1);
    return print(out, Json{{"separable", s.separable}, {"anchors", anchors}}), ok;
  }
  if (what == "pssc") return print(out, Json{{"p", o.p}, {"pssc", check_pssc(h, o.p)}}), ok;
  throw PreconditionError("unknown check '" + what + "'");
}

struct DecomposeOpts {
  std::string input, procedure, out, config, modes, partition;
  std::vector<Index> ranks, slice_index;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts, max_sweeps;
  std::optional<double> feas_tol;
  bool timing = false;
};

int cmd_decompose(const DecomposeOpts& o, std::ostream& out) {
  SolverConfig cfg;
  if (!o.config.empty()) cfg = read_solver_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.restarts) cfg.restarts = *o.restarts;
  if (o.max_sweeps) cfg.max_sweeps = *o.max_sweeps;
  if (o.feas_tol) cfg.feas_tol = *o.feas_tol;

  std::optional<Instance> inst;
  DenseTensor t;
  if (is_bundle(o.input)) {
    inst = read_instance(o.input);
    t = inst->tensor;
  } else {
    t = read_tensor(o.input);
  }
  Dims ranks = o.ranks;
  if (ranks.empty()) {
    if (!inst) throw PreconditionError("--ranks is required for a bare tensor file");
    ranks = inst->truth.core.dims();
  }
  ProcedureArgs pa;
  pa.slice_index = o.slice_index;
  if (!o.modes.empty()) pa.modes = parse_modes(o.modes);
  else if (inst) pa.modes = inst->modes;
  if (!o.partition.empty()) pa.partition = parse_partition(o.partition);
  else if (inst) pa.partition = inst->partition;

  const auto t0 = Clock::now();
  const NtdModel m = run_procedure(o.procedure, t, ranks, cfg, pa);
  const double ms = o.timing ? elapsed_ms(t0) : 0.0;
  if (!o.out.empty()) write_model(o.out, m);

  Json rec{{"command", "decompose"},
           {"procedure", o.procedure},
           {"seed", cfg.seed},
           {"ms", ms},
           {"objective", m.diagnostics.count("objective") ? m.diagnostics.at("objective") : std::vector<double>{}},
           {"residual", relative_residual(m, t)}};
  if (inst) {
    const AlignmentResult a = essential_match(m, inst->truth);
    rec["matched"] = a.matched;
    rec["factor_errors"] = a.factor_errors;
    rec["core_error"] = a.core_error;
    rec["assumption"] = inst->assumption;
    rec["assumption_verdict"] = to_string(inst->report.overall);
  }
  print(out, rec);
  return ok;
}

struct EvalOpts {
  std::string model, truth, tensor;
  double tol = 1e-6;
};

NtdModel load_model(const std::string& path) {
  return is_bundle(path) ? read_instance(path).truth : read_model(path);
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  const NtdModel m = load_model(o.model);
  const NtdModel truth = load_model(o.truth);
  bool same = m.factors.size() == truth.factors.size() && m.core.dims() == truth.core.dims();
  for (std::size_t k = 0; same && k < m.factors.size(); ++k)
    same = m.factors[k].rows() == truth.factors[k].rows() && m.factors[k].cols() == truth.factors[k].cols();
  if (!same) throw IoError("model and truth dimensions differ");

  Json j = alignment_json(essential_match(m, truth, o.tol));
  if (!o.tensor.empty()) {
    const DenseTensor t = is_bundle(o.tensor) ? read_instance(o.tensor).tensor : read_tensor(o.tensor);
    const ModelError e = model_error(m, t);
    j["recon_error"] = e.value;
    j["recon_error_absolute"] = e.absolute;
  }
  print(out, j);
  return ok;
}

struct BenchCase {
  std::string assumption;
  Dims dims, ranks;
  std::optional<ModeSet> modes;
  std::optional<ModePartition> partition;
};

std::map<std::string, BenchCase> default_bench_cases() {
  return {
      {"0", {"A4.x-unfold", {6, 5, 40}, {2, 2, 4}, {}, {}}},
      {"1", {"A4.2", {20, 20, 15}, {4, 4, 3}, {}, {}}},
      {"2", {"A4.3", {20, 20, 15}, {4, 4, 3}, {}, {}}},
      {"3", {"A4.4", {18, 18, 20}, {3, 3, 5}, {}, {}}},
      {"4", {"A4.5", {18, 18, 20}, {4, 4, 4}, {}, {}}},
      {"d0", {"A5.2", {6, 6, 6, 6}, {2, 2, 2, 2}, ModeSet{2, 3}, {}}},
      {"d1", {"A5.3", {15, 15, 12, 12}, {3, 3, 2, 2}, {}, {}}},
      {"d3", {"A5.4", {8, 10, 6, 6}, {3, 3, 2, 2}, {}, ModePartition{ModeSet{0}, ModeSet{2, 3}, ModeSet{1}}}},
      {"sep-d", {"A-sep", {25, 20, 15}, {3, 3, 2}, {}, {}}},
  };
}

// {"<procedure>": {"assumption", "dims", "ranks", "modes"?, "partition"?}}
// with 1-based modes; entries override the defaults.
void apply_bench_spec(std::map<std::string, BenchCase>& cases, const Json& spec) {
  if (!spec.is_object()) throw IoError("bench spec must be a JSON object");
  try {
    for (const auto& [id, v] : spec.items()) {
      if (std::find(kProcedures.begin(), kProcedures.end(), id) == kProcedures.end())
        throw IoError("bench spec names unknown procedure '" + id + "'");
      BenchCase& c = cases[id];
      if (v.contains("assumption")) c.assumption = v.at("assumption").get<std::string>();
      if (v.contains("dims")) c.dims = v.at("dims").get<Dims>();
      if (v.contains("ranks")) c.ranks = v.at("ranks").get<Dims>();
      const auto modes_of = [](const Json& a) {
        std::vector<int> m;
        for (const auto& x : a) m.push_back(x.get<int>() - 1);
        return ModeSet(m);
      };
      if (v.contains("modes")) c.modes = modes_of(v.at("modes"));
      if (v.contains("partition")) {
        const Json& p = v.at("partition");
        c.partition = ModePartition{modes_of(p.at("I")), modes_of(p.at("J")), modes_of(p.at("K"))};
      }
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("bad bench spec: ") + e.what());
  }
}

struct BenchRow {
  std::string procedure;
  std::uint64_t seed = 0;
  bool matched = false;
  double max_factor_err = std::numeric_limits<double>::quiet_NaN();
  double core_err = std::numeric_limits<double>::quiet_NaN();
  double recon_err = std::numeric_limits<double>::quiet_NaN();
  double ms = 0;
};

BenchRow bench_one(const std::string& id, const BenchCase& c, std::uint64_t seed, bool timing) {
  BenchRow row{id, seed};
  try {
    const Instance inst = gen_instance(c.assumption, c.dims, c.ranks, seed, c.modes, c.partition);
    SolverConfig cfg;
    cfg.seed = derive_seed(seed, 1);
    ProcedureArgs pa;
    pa.modes = inst.modes;
    pa.partition = inst.partition;
    const auto t0 = Clock::now();
    const NtdModel m = run_procedure(id, inst.tensor, c.ranks, cfg, pa);
    if (timing) row.ms = elapsed_ms(t0);
    const AlignmentResult a = essential_match(m, inst.truth);
    row.matched = a.matched;
    row.max_factor_err = *std::max_element(a.factor_errors.begin(), a.factor_errors.end());
    row.core_err = a.core_error;
    row.recon_err = model_error(m, inst.tensor).value;
  } catch (const Error&) {
    // A failed run stays in the table as unmatched.
  }
  return row;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NTD_NUM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

struct BenchOpts {
  std::vector<std::string> procedures;
  std::uint64_t seeds = 20, seed = 0;
  std::string spec, out;
  bool timing = false;
};

int cmd_bench(const BenchOpts& o, std::ostream& out) {
  auto cases = default_bench_cases();
  if (!o.spec.empty()) apply_bench_spec(cases, read_json(o.spec));
  std::vector<std::string> procs = o.procedures;
  for (const auto& p : procs)
    if (!cases.count(p)) throw PreconditionError("unknown procedure '" + p + "'");
  std::sort(procs.begin(), procs.end());
  procs.erase(std::unique(procs.begin(), procs.end()), procs.end());

  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (const auto& p : procs)
    for (std::uint64_t s = 0; s < o.seeds; ++s) jobs.emplace_back(p, o.seed + s);

  // Each job owns its slot, so rows come out in (procedure, seed) order.
  std::vector<BenchRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < jobs.size();)
      rows[k] = bench_one(jobs[k].first, cases.at(jobs[k].first), jobs[k].second, o.timing);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < worker_count(jobs.size()); ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::ostringstream csv;
  csv.imbue(std::locale::classic());
  csv << "command,procedure,seed,matched,max_factor_err,core_err,recon_err,ms\n";
  for (const auto& r : rows)
    csv << "bench," << r.procedure << ',' << r.seed << ',' << (r.matched ? "true" : "false") << ','
        << num(r.max_factor_err) << ',' << num(r.core_err) << ',' << num(r.recon_err) << ',' << num(r.ms) << '\n';
  if (o.out.empty()) {
    out << csv.str();
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!(f << csv.str())) throw IoError("cannot write '" + o.out + "'");
  }
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identifiable nonnegative Tucker decompositions"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenOpts gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic instance bundle");
  g->add_option("--assumption", gen.assumption, "Assumption id, e.g. A4.2")->required();
  g->add_option("--dims", gen.dims, "Dimensions, comma separated")->required()->delimiter(',');
  g->add_option("--ranks", gen.ranks, "Ranks, comma separated")->required()->delimiter(',');
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Bundle directory")->required();
  g->add_option("--modes", gen.modes, "Unfolding modes for A5.2, e.g. 3,4");
  g->add_option("--partition", gen.partition, "Partition I|J|K for A5.4, e.g. 1|3,4|2");

  CheckOpts chk;
  std::string check_what;
  auto* c = app.add_subcommand("check", "Cone-geometry checks");
  c->require_subcommand(1);
  auto* c_ssc = c->add_subcommand("ssc", "Sufficiently scattered condition of a matrix file");
  c_ssc->add_option("file", chk.file)->required();
  c_ssc->add_option("--seed", chk.seed, "Seed for the refutation search beyond the enumeration cap");
  auto* c_sep = c->add_subcommand("separable", "Separability of a matrix file");
  c_sep->add_option("file", chk.file)->required();
  auto* c_pssc = c->add_subcommand("pssc", "p-SSC of a matrix file");
  c_pssc->add_option("file", chk.file)->required();
  c_pssc->add_option("--p", chk.p)->required();
  auto* c_kron = c->add_subcommand("kron-sufficient", "Sufficient condition for SSC of a Kronecker product");
  c_kron->add_option("r1,--r1", chk.r1)->required();
  c_kron->add_option("p1,--p1", chk.p1)->required();
  c_kron->add_option("r2,--r2", chk.r2)->required();
  c_kron->add_option("p2,--p2", chk.p2)->required();
  auto* c_dims = c->add_subcommand("dims-ok", "Dimension condition of the counterexample construction");
  c_dims->add_option("r1,--r1", chk.r1)->required();
  c_dims->add_option("r2,--r2", chk.r2)->required();
  for (auto* s : {c_ssc, c_sep, c_pssc, c_kron, c_dims})
    s->callback([&check_what, s] { check_what = s->get_name(); });

  DecomposeOpts dec;
  auto* d = app.add_subcommand("decompose", "Run an identification procedure");
  d->add_option("input,--input", dec.input, "Tensor file or instance bundle")->required();
  d->add_option("--procedure", dec.procedure)->required()->check(CLI::IsMember(kProcedures));
  d->add_option("--ranks", dec.ranks, "Ranks, comma separated (default: from the bundle)")->delimiter(',');
  d->add_option("--seed", dec.seed, "Solver seed (overrides the config file)");
  d->add_option("--slice-index", dec.slice_index, "1-based: i3[,i2] for 1, i* for 3, the J tuple for d3")
      ->delimiter(',');
  d->add_option("--modes", dec.modes, "Unfolding modes I for d0, e.g. 3,4");
  d->add_option("--partition", dec.partition, "Partition I|J|K for d3, e.g. 1|3,4|2");
  d->add_option("--solver-config", dec.config, "key = value file of solver settings");
  d->add_option("--restarts", dec.restarts);
  d->add_option("--max-sweeps", dec.max_sweeps);
  d->add_option("--feas-tol", dec.feas_tol);
  d->add_option("--out", dec.out, "Model JSON to write");
  d->add_flag("--timing", dec.timing, "Report wall-clock milliseconds");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Align a model with the ground truth");
  e->add_option("--model", ev.model, "Model JSON or bundle")->required();
  e->add_option("--truth", ev.truth, "Model JSON or bundle")->required();
  e->add_option("--tensor", ev.tensor, "Tensor file or bundle for the reconstruction error");
  e->add_option("--tol", ev.tol, "Match tolerance");

  BenchOpts bench;
  bench.procedures = kProcedures;
  auto* b = app.add_subcommand("bench", "Seed sweep over generated instances, CSV output");
  b->add_option("--procedures", bench.procedures, "Comma separated procedure ids")
      ->delimiter(',')
      ->check(CLI::IsMember(kProcedures));
  b->add_option("--seeds", bench.seeds, "Number of seeds");
  b->add_option("--seed", bench.seed, "First seed");
  b->add_option("--spec", bench.spec, "JSON overrides of the per-procedure instance settings");
  b->add_option("--out", bench.out, "CSV file (default stdout)");
  b->add_flag("--timing", bench.timing, "Fill the ms column");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return usage;
  }

  try {
    if (*g) return cmd_gen(gen, out);
    if (*c) return cmd_check(check_what, chk, out);
    if (*d) return cmd_decompose(dec, out);
    if (*e) return cmd_eval(ev, out);
    if (*b) return cmd_bench(bench, out);
  } catch (const IoError& ex) {
    err << "io error: " << ex.what() << '\n';
    return io;
  } catch (const RankDeficient& ex) {
    err << "assumption failure: " << ex.what() << '\n';
    return solver;
  } catch (const PreconditionError& ex) {
    err << "precondition: " << ex.what() << '\n';
    return usage;
  } catch (const Error& ex) {
    err << "solver failure: " << ex.what() << '\n';
    return solver;
  }
  return usage;
}

}  // namespace ntd::cli
